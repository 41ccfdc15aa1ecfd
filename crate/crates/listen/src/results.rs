use std::collections::BTreeMap;
use std::fmt::Write;

use fieldvoice_core::eval::{cer, tally_preferences, CerProfile, PreferenceItem, PreferenceResponse, PreferenceTally};
use serde::{Deserialize, Serialize};

use crate::campaign::CampaignBody;
use crate::service::{ListenService, StoredAnswer};
use crate::ListenError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptionScore {
    pub item: String,
    pub session: String,
    pub transcription: String,
    pub cer: f64,
    pub cer_lenient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorCer {
    pub session: String,
    pub responses: usize,
    pub mean_cer: f64,
    pub mean_cer_lenient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CampaignResults {
    Preference {
        campaign: String,
        responses: usize,
        tally: PreferenceTally,
        /// Tab-separated table, one row per evaluator session.
        table: String,
    },
    Transcription {
        campaign: String,
        responses: usize,
        /// `None` until someone has answered.
        mean_cer: Option<f64>,
        mean_cer_lenient: Option<f64>,
        scores: Vec<TranscriptionScore>,
        per_evaluator: Vec<EvaluatorCer>,
        table: String,
    },
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl ListenService {
    /// Tally a campaign. Preference answers are mapped back from the A/B
    /// slots to the systems that were presented there.
    pub fn results(&self, campaign: &str) -> Result<CampaignResults, ListenError> {
        let (c, rows) = self.snapshot(campaign)?;
        match &c.body {
            CampaignBody::Preference { items } => {
                let items: Vec<PreferenceItem> = items
                    .iter()
                    .map(|p| PreferenceItem {
                        id: p.id.clone(),
                        systems: [p.a.system.clone(), p.b.system.clone()],
                    })
                    .collect();
                let responses: Vec<PreferenceResponse> = rows
                    .iter()
                    .filter_map(|(t, r)| match r.answer {
                        StoredAnswer::Choice(choice) => Some(PreferenceResponse {
                            evaluator: r.session.clone(),
                            item: r.item.clone(),
                            swapped: t.swapped,
                            choice,
                        }),
                        StoredAnswer::Transcription(_) => None,
                    })
                    .collect();
                let tally = tally_preferences(&items, &responses).map_err(|e| ListenError::Domain(e.to_string()))?;
                Ok(CampaignResults::Preference {
                    campaign: c.id.clone(),
                    responses: responses.len(),
                    table: tally.to_string(),
                    tally,
                })
            }
            CampaignBody::Transcription { items } => {
                let refs: BTreeMap<&str, &str> = items.iter().map(|i| (i.id.as_str(), i.reference.as_str())).collect();
                let (strict, lenient) = (CerProfile::strict(), CerProfile::lenient());
                let mut scores = Vec::new();
                for (_, r) in &rows {
                    let StoredAnswer::Transcription(text) = &r.answer else { continue };
                    let reference = refs[r.item.as_str()];
                    // references are checked non-empty at creation
                    let s = cer(reference, text, &strict).map_err(|e| ListenError::Domain(e.to_string()))?;
                    let l = cer(reference, text, &lenient).map_err(|e| ListenError::Domain(e.to_string()))?;
                    scores.push(TranscriptionScore {
                        item: r.item.clone(),
                        session: r.session.clone(),
                        transcription: text.clone(),
                        cer: s.cer,
                        cer_lenient: l.cer,
                    });
                }
                let mut by_session: BTreeMap<&str, Vec<&TranscriptionScore>> = BTreeMap::new();
                for s in &scores {
                    by_session.entry(s.session.as_str()).or_default().push(s);
                }
                let per_evaluator: Vec<EvaluatorCer> = by_session
                    .into_iter()
                    .map(|(session, list)| EvaluatorCer {
                        session: session.into(),
                        responses: list.len(),
                        mean_cer: mean(list.iter().map(|s| s.cer)).expect("non-empty group"),
                        mean_cer_lenient: mean(list.iter().map(|s| s.cer_lenient)).expect("non-empty group"),
                    })
                    .collect();
                let mean_cer = mean(scores.iter().map(|s| s.cer));
                let mean_cer_lenient = mean(scores.iter().map(|s| s.cer_lenient));
                let mut table = String::from("Evaluator\tResponses\tCER\tLenient CER\n");
                for e in &per_evaluator {
                    let _ = writeln!(
                        table,
                        "{}\t{}\t{:.2}\t{:.2}",
                        e.session,
                        e.responses,
                        e.mean_cer * 100.0,
                        e.mean_cer_lenient * 100.0
                    );
                }
                let pct = |m: Option<f64>| m.map_or("-".to_string(), |v| format!("{:.2}", v * 100.0));
                let _ = writeln!(table, "Total\t{}\t{}\t{}", scores.len(), pct(mean_cer), pct(mean_cer_lenient));
                Ok(CampaignResults::Transcription {
                    campaign: c.id.clone(),
                    responses: scores.len(),
                    mean_cer,
                    mean_cer_lenient,
                    scores,
                    per_evaluator,
                    table,
                })
            }
        }
    }
}
