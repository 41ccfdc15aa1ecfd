use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use fieldvoice_core::eval::{cer as cer_score, mcd_significant, mcd_testset, CerProfile, MCD_SIGNIFICANCE_DB};
use serde::Serialize;

use super::Ctx;
use crate::{InputError, Out};

#[derive(Args)]
pub struct McdArgs {
    /// Manifest of held-out natural recordings.
    #[arg(long, required_unless_present = "self_manifest", requires = "synthesized")]
    pub reference: Option<PathBuf>,
    /// Manifest of the same ids synthesized.
    #[arg(long)]
    pub synthesized: Option<PathBuf>,
    /// Score a manifest against itself (always 0).
    #[arg(long = "self", conflicts_with_all = ["reference", "synthesized"])]
    pub self_manifest: Option<PathBuf>,
    /// MCD of a baseline system; reports whether the difference is significant.
    #[arg(long)]
    pub baseline: Option<f64>,
}

#[derive(Args)]
pub struct CerArgs {
    #[arg(long, requires = "hypothesis", required_unless_present = "pairs")]
    pub reference: Option<String>,
    #[arg(long)]
    pub hypothesis: Option<String>,
    /// `id<TAB>reference<TAB>transcription` lines.
    #[arg(long, conflicts_with_all = ["reference", "hypothesis"])]
    pub pairs: Option<PathBuf>,
}

#[derive(Serialize)]
struct McdSummary {
    mean_mcd: f64,
    frame_pairs: usize,
    utterances: usize,
    missing_synthesized: Vec<String>,
    missing_reference: Vec<String>,
    baseline: Option<f64>,
    significant: Option<bool>,
}

pub fn mcd(ctx: &Ctx, args: &McdArgs, out: &mut Out) -> Result<()> {
    let (reference, synthesized) = match (&args.self_manifest, &args.reference, &args.synthesized) {
        (Some(m), _, _) => (m, m),
        (None, Some(r), Some(s)) => (r, s),
        _ => bail!(InputError("give --reference with --synthesized, or --self".into())),
    };
    let result = mcd_testset(reference, synthesized, &ctx.config.aligner.mfcc)
        .with_context(|| format!("scoring {} against {}", synthesized.display(), reference.display()))?;
    for u in &result.per_utterance {
        out.text(format!("{}\t{:.3}\t{}", u.id, u.mcd, u.frame_pairs))?;
        out.record(u)?;
    }
    if !result.missing_synthesized.is_empty() {
        eprintln!("warning: {} reference utterance(s) have no synthesized counterpart", result.missing_synthesized.len());
    }
    if !result.missing_reference.is_empty() {
        eprintln!("warning: {} synthesized utterance(s) have no reference", result.missing_reference.len());
    }
    let significant = args.baseline.map(|b| mcd_significant(result.mean_mcd, b));
    out.text(format!("MCD\t{:.3} dB over {} frame pairs", result.mean_mcd, result.frame_pairs))?;
    if let (Some(b), Some(sig)) = (args.baseline, significant) {
        out.text(format!(
            "baseline\t{b:.3} dB\tdifference {:+.3} dB {}",
            result.mean_mcd - b,
            if sig {
                format!("(significant, >= {MCD_SIGNIFICANCE_DB})")
            } else {
                format!("(below {MCD_SIGNIFICANCE_DB})")
            }
        ))?;
    }
    out.record(&McdSummary {
        mean_mcd: result.mean_mcd,
        frame_pairs: result.frame_pairs,
        utterances: result.per_utterance.len(),
        missing_synthesized: result.missing_synthesized.clone(),
        missing_reference: result.missing_reference.clone(),
        baseline: args.baseline,
        significant,
    })
}

#[derive(Serialize)]
struct CerRecord {
    id: String,
    cer: f64,
    cer_lenient: f64,
    edits: usize,
    reference_length: usize,
}

fn parse_pairs(path: &PathBuf) -> Result<Vec<(String, String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = vec![];
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            bail!(InputError(format!(
                "{}:{}: expected id<TAB>reference<TAB>transcription",
                path.display(),
                i + 1
            )));
        }
        out.push((cols[0].to_string(), cols[1].to_string(), cols[2].to_string()));
    }
    Ok(out)
}

pub fn cer(args: &CerArgs, out: &mut Out) -> Result<()> {
    let pairs = match (&args.pairs, &args.reference, &args.hypothesis) {
        (Some(p), _, _) => parse_pairs(p)?,
        (None, Some(r), Some(h)) => vec![("pair".into(), r.clone(), h.clone())],
        _ => bail!(InputError("give --reference with --hypothesis, or --pairs".into())),
    };
    let (strict, lenient) = (CerProfile::strict(), CerProfile::lenient());
    let mut sums = (0.0, 0.0);
    for (id, r, h) in &pairs {
        let s = cer_score(r, h, &strict).with_context(|| format!("pair {id}"))?;
        let l = cer_score(r, h, &lenient).with_context(|| format!("pair {id}"))?;
        sums.0 += s.cer;
        sums.1 += l.cer;
        out.text(format!("{id}\t{:.2}\t{:.2}", s.cer * 100.0, l.cer * 100.0))?;
        out.record(&CerRecord {
            id: id.clone(),
            cer: s.cer,
            cer_lenient: l.cer,
            edits: s.distance,
            reference_length: s.reference_length,
        })?;
    }
    let n = pairs.len() as f64;
    if pairs.len() > 1 {
        out.text(format!("mean\t{:.2}\t{:.2}", sums.0 / n * 100.0, sums.1 / n * 100.0))?;
    }
    Ok(())
}
