use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use fieldvoice_core::audio::write_wav;
use fieldvoice_core::corpus::{read_phone_file, Manifest};
use fieldvoice_core::prompts::read_candidates;
use fieldvoice_core::synth::{batch_synthesize, build_unit_index, SynthWeights, Voice};
use serde::Serialize;

use super::corpus::{MANIFEST_FILE, PHONES_FILE};
use super::{Ctx, LanguageArgs, Resources};
use crate::{DataError, InputError, Out};

#[derive(Args)]
pub struct BuildArgs {
    /// Manifest written by `cut` (or any manifest with a phone file).
    pub manifest: PathBuf,
    /// Phone timings; default phones.tsv next to the manifest.
    #[arg(long)]
    pub phones: Option<PathBuf>,
    /// Voice file to write.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct WeightArgs {
    /// Weight of the spectral mismatch at each join.
    #[arg(long)]
    pub join_weight: Option<f64>,
    /// Weight of the duration mismatch of each unit.
    #[arg(long)]
    pub target_weight: Option<f64>,
    #[arg(long)]
    pub crossfade_ms: Option<f64>,
}

impl WeightArgs {
    fn resolve(&self, base: &SynthWeights) -> SynthWeights {
        SynthWeights {
            join: self.join_weight.unwrap_or(base.join),
            target: self.target_weight.unwrap_or(base.target),
            crossfade_ms: self.crossfade_ms.unwrap_or(base.crossfade_ms),
        }
    }
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub voice: PathBuf,
    /// Text to speak; needs --out.
    #[arg(long, requires = "out", conflicts_with = "prompts")]
    pub text: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `id<TAB>text` prompts; needs --out-dir.
    #[arg(long, requires = "out_dir", required_unless_present = "text")]
    pub prompts: Option<PathBuf>,
    /// Receives `<id>.wav` and manifest.tsv.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// License recorded in the output manifest.
    #[arg(long)]
    pub license: Option<String>,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub lang: LanguageArgs,
}

#[derive(Serialize)]
struct BuildRecord {
    voice: String,
    utterances: usize,
    diphone_units: usize,
    diphone_types: usize,
}

pub fn build(ctx: &Ctx, args: &BuildArgs, out: &mut Out) -> Result<()> {
    let manifest = Manifest::read(&args.manifest).with_context(|| format!("reading {}", args.manifest.display()))?;
    let phones_path = args
        .phones
        .clone()
        .unwrap_or_else(|| args.manifest.with_file_name(PHONES_FILE));
    let phones = read_phone_file(&phones_path).with_context(|| format!("reading {}", phones_path.display()))?;
    let index = build_unit_index(&args.manifest, &manifest, &phones, &ctx.config.aligner.mfcc)?;
    if index.is_empty() {
        bail!(DataError(format!("{} yields no units", args.manifest.display())));
    }
    index.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let record = BuildRecord {
        voice: args.out.display().to_string(),
        utterances: index.utterances.len(),
        diphone_units: index.diphone_unit_count(),
        diphone_types: index.diphones.len(),
    };
    out.text(format!(
        "{} utterances, {} diphone units of {} types -> {}",
        record.utterances, record.diphone_units, record.diphone_types, record.voice
    ))?;
    out.record(&record)
}

#[derive(Serialize)]
struct SynthRecord {
    id: String,
    audio: Option<String>,
    seconds: Option<f64>,
    error: Option<String>,
}

pub fn synth(ctx: &Ctx, args: &SynthArgs, out: &mut Out) -> Result<()> {
    let res = Resources::load(ctx, &args.lang)?;
    let weights = args.weights.resolve(&ctx.config.synth);
    weights.validate()?;
    let voice = Voice::open(&args.voice).with_context(|| format!("opening voice {}", args.voice.display()))?;
    if let (Some(text), Some(path)) = (&args.text, &args.out) {
        let normalized = res.normalize(text)?;
        let (audio, plan) = voice.synthesize(&normalized.normalized, &res.table, &weights)?;
        write_wav(path, &audio).with_context(|| format!("writing {}", path.display()))?;
        out.text(format!(
            "{:.2} s, {} units, cost {:.3} -> {}",
            audio.duration_seconds(),
            plan.steps.len(),
            plan.total_cost,
            path.display()
        ))?;
        return out.record(&SynthRecord {
            id: "text".into(),
            audio: Some(path.display().to_string()),
            seconds: Some(audio.duration_seconds()),
            error: None,
        });
    }
    let (Some(prompts_path), Some(out_dir)) = (&args.prompts, &args.out_dir) else {
        bail!(InputError("give --text with --out, or --prompts with --out-dir".into()));
    };
    let lines = read_candidates(prompts_path).with_context(|| format!("reading {}", prompts_path.display()))?;
    let prompts = lines
        .into_iter()
        .map(|(id, t)| {
            let n = res.normalize(&t).with_context(|| format!("{}: prompt {id}", prompts_path.display()))?;
            Ok((id, n.normalized))
        })
        .collect::<Result<Vec<_>>>()?;
    let template = Manifest {
        language: res.language.clone(),
        source: "synthesized".into(),
        license: args.license.clone().or_else(|| ctx.config.license.clone()).unwrap_or_default(),
        utterances: vec![],
    };
    let batch = batch_synthesize(&voice, &prompts, &res.table, &weights, out_dir, &template)?;
    let mpath = out_dir.join(MANIFEST_FILE);
    batch.manifest.write(&mpath).with_context(|| format!("writing {}", mpath.display()))?;
    for u in &batch.manifest.utterances {
        out.record(&SynthRecord {
            id: u.id.clone(),
            audio: Some(out_dir.join(&u.audio).display().to_string()),
            seconds: Some(u.duration()),
            error: None,
        })?;
    }
    for f in &batch.failures {
        eprintln!("{}: {}", f.id, f.reason);
        out.record(&SynthRecord {
            id: f.id.clone(),
            audio: None,
            seconds: None,
            error: Some(f.reason.clone()),
        })?;
    }
    out.text(format!(
        "{} synthesized, {} failed -> {}",
        batch.manifest.utterances.len(),
        batch.failures.len(),
        mpath.display()
    ))?;
    if batch.manifest.utterances.is_empty() {
        bail!(DataError("no prompt could be synthesized".into()));
    }
    Ok(())
}
