use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use fieldvoice_core::aligner::{align_corpus, filter_by_score, read_verses, ChapterAlignment, ChapterInput, Verse};
use fieldvoice_core::audio::load_wav;
use fieldvoice_core::corpus::{
    cut_audio, import_festvox, make_splits, split_file_name, stats as corpus_stats, validate as validate_manifest,
    write_phone_file, CutOptions, Manifest, SplitOrder, SplitSpec,
};
use serde::Serialize;

use super::{Ctx, LanguageArgs, Resources};
use crate::{DataError, InputError, Out};

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const PHONES_FILE: &str = "phones.tsv";

#[derive(Args)]
pub struct AlignArgs {
    /// Chapter recording; repeat once per chapter.
    #[arg(long, required = true)]
    pub audio: Vec<PathBuf>,
    /// Verse file (`verse_id<TAB>text`) for the matching --audio.
    #[arg(long, required = true)]
    pub verses: Vec<PathBuf>,
    /// Where `<chapter>.alignment.json` files go.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Share phone models across chapters (one speaker, many chapters).
    #[arg(long)]
    pub pooled: bool,
    /// Cap on segmental k-means iterations.
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[command(flatten)]
    pub lang: LanguageArgs,
}

#[derive(Args)]
pub struct CutArgs {
    /// Alignment from `align`; repeat with a matching --audio per chapter.
    #[arg(long, required = true)]
    pub alignment: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub audio: Vec<PathBuf>,
    /// Receives the WAVs, manifest.tsv and phones.tsv.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Keep only this fraction of best-scoring verses per chapter.
    #[arg(long, default_value_t = 1.0)]
    pub keep_fraction: f64,
    /// Keep the original levels instead of power-normalizing each file.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long)]
    pub speaker: Option<String>,
    /// Required for a valid manifest, e.g. CC-BY-SA-4.0.
    #[arg(long)]
    pub license: Option<String>,
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub language: Option<String>,
}

#[derive(Args)]
pub struct SplitArgs {
    pub manifest: PathBuf,
    /// Comma-separated increasing targets.
    #[arg(long, value_delimiter = ',', default_value = "25,50,101")]
    pub minutes: Vec<f64>,
    /// Shuffle (with --seed) instead of taking utterances in corpus order.
    #[arg(long)]
    pub random: bool,
    /// Draw each split on its own instead of growing one prefix.
    #[arg(long)]
    pub independent: bool,
    /// Default: next to the manifest.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct ValidateArgs {
    pub manifest: PathBuf,
}

#[derive(Args)]
pub struct StatsArgs {
    #[arg(conflicts_with_all = ["festvox", "wav_dir"], required_unless_present = "festvox")]
    pub manifest: Option<PathBuf>,
    /// Festvox prompt list (`( id "text" )` lines) of a recorded corpus.
    #[arg(long, requires = "wav_dir")]
    pub festvox: Option<PathBuf>,
    #[arg(long)]
    pub wav_dir: Option<PathBuf>,
    /// Also save the imported Festvox corpus as a manifest.
    #[arg(long, requires = "festvox")]
    pub write_manifest: Option<PathBuf>,
    #[arg(long, default_value = "spk1")]
    pub speaker: String,
}

#[derive(Serialize)]
struct AlignRecord {
    audio: String,
    alignment: String,
    utterances: usize,
    iterations: usize,
    converged: bool,
    final_cost: Option<f64>,
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or("chapter".into(), |s| s.to_string_lossy().into_owned())
}

pub fn alignment_file(out_dir: &Path, audio: &Path) -> PathBuf {
    out_dir.join(format!("{}.alignment.json", stem(audio)))
}

pub fn align(ctx: &Ctx, args: &AlignArgs, out: &mut Out) -> Result<()> {
    if args.audio.len() != args.verses.len() {
        bail!(InputError(format!(
            "{} --audio but {} --verses; give one verse file per chapter",
            args.audio.len(),
            args.verses.len()
        )));
    }
    let res = Resources::load(ctx, &args.lang)?;
    let mut config = ctx.config.aligner.clone();
    if let Some(n) = args.max_iterations {
        config.max_iterations = n;
    }
    let mut chapters = Vec::with_capacity(args.audio.len());
    for (audio, verses) in args.audio.iter().zip(&args.verses) {
        let lines = read_verses(verses).with_context(|| format!("reading {}", verses.display()))?;
        let verses_n = lines
            .into_iter()
            .map(|(id, text)| {
                let text = res.normalize(&text).with_context(|| format!("{}: verse {id}", verses.display()))?;
                Ok(Verse { id, text })
            })
            .collect::<Result<Vec<_>>>()?;
        let clip = load_wav(audio).with_context(|| format!("loading {}", audio.display()))?;
        chapters.push(ChapterInput { audio: clip, verses: verses_n });
    }
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    for (result, audio) in align_corpus(&chapters, &config, args.pooled).into_iter().zip(&args.audio) {
        let alignment = result.with_context(|| format!("aligning {}", audio.display()))?;
        let path = alignment_file(&args.out_dir, audio);
        std::fs::write(&path, serde_json::to_string_pretty(&alignment)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        let final_cost = alignment.cost_history.last().copied();
        out.text(format!(
            "{}\t{} verses\t{} iterations{}\t-> {}",
            audio.display(),
            alignment.utterances.len(),
            alignment.iterations,
            if alignment.converged { "" } else { " (not converged)" },
            path.display()
        ))?;
        out.record(&AlignRecord {
            audio: audio.display().to_string(),
            alignment: path.display().to_string(),
            utterances: alignment.utterances.len(),
            iterations: alignment.iterations,
            converged: alignment.converged,
            final_cost,
        })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CutRecord {
    manifest: String,
    phones: String,
    utterances: usize,
    seconds: f64,
    dropped: usize,
}

pub fn cut(ctx: &Ctx, args: &CutArgs, out: &mut Out) -> Result<()> {
    if args.alignment.len() != args.audio.len() {
        bail!(InputError(format!(
            "{} --alignment but {} --audio; give one recording per alignment",
            args.alignment.len(),
            args.audio.len()
        )));
    }
    let cfg = &ctx.config;
    let options = CutOptions {
        speaker: args.speaker.clone().or_else(|| cfg.speaker.clone()).unwrap_or_else(|| "spk1".into()),
        normalize: !args.no_normalize,
        language: args.language.clone().or_else(|| cfg.language.clone()).unwrap_or_default(),
        source: args.source.clone().or_else(|| cfg.source.clone()).unwrap_or_default(),
        license: args.license.clone().or_else(|| cfg.license.clone()).unwrap_or_default(),
        ..CutOptions::default()
    };
    let mut manifest = Manifest {
        language: options.language.clone(),
        source: options.source.clone(),
        license: options.license.clone(),
        utterances: vec![],
    };
    let mut phones = vec![];
    let mut dropped = 0;
    for (align_path, audio_path) in args.alignment.iter().zip(&args.audio) {
        let text = std::fs::read_to_string(align_path).with_context(|| format!("reading {}", align_path.display()))?;
        let alignment: ChapterAlignment =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", align_path.display()))?;
        let kept = filter_by_score(&alignment, args.keep_fraction)?;
        dropped += alignment.utterances.len() - kept.utterances.len();
        let clip = load_wav(audio_path).with_context(|| format!("loading {}", audio_path.display()))?;
        let cut = cut_audio(&kept, &clip, &args.out_dir, &options)
            .with_context(|| format!("cutting {}", audio_path.display()))?;
        manifest.utterances.extend(cut.manifest.utterances);
        phones.extend(cut.phones);
    }
    let mpath = args.out_dir.join(MANIFEST_FILE);
    let ppath = args.out_dir.join(PHONES_FILE);
    manifest.write(&mpath).with_context(|| format!("writing {}", mpath.display()))?;
    write_phone_file(&ppath, &phones).with_context(|| format!("writing {}", ppath.display()))?;
    let seconds = manifest.total_duration();
    out.text(format!(
        "{} utterances, {:.1} s -> {} (dropped {dropped})",
        manifest.utterances.len(),
        seconds,
        mpath.display()
    ))?;
    out.record(&CutRecord {
        manifest: mpath.display().to_string(),
        phones: ppath.display().to_string(),
        utterances: manifest.utterances.len(),
        seconds,
        dropped,
    })
}

#[derive(Serialize)]
struct SplitRecord {
    minutes: f64,
    manifest: String,
    utterances: usize,
    seconds: f64,
}

fn read_manifest(path: &Path) -> Result<Manifest> {
    Ok(Manifest::read(path).with_context(|| format!("reading {}", path.display()))?)
}

pub fn split(ctx: &Ctx, args: &SplitArgs, out: &mut Out) -> Result<()> {
    let manifest = read_manifest(&args.manifest)?;
    let spec = SplitSpec {
        minutes: args.minutes.clone(),
        nested: !args.independent,
        order: if args.random {
            SplitOrder::Random { seed: ctx.cli.seed }
        } else {
            SplitOrder::Corpus
        },
    };
    let splits = make_splits(&manifest, &spec)?;
    let src_dir = args.manifest.parent().unwrap_or(Path::new(""));
    let out_dir = args.out_dir.clone().unwrap_or_else(|| src_dir.to_path_buf());
    std::fs::create_dir_all(if out_dir.as_os_str().is_empty() { Path::new(".") } else { &out_dir })?;
    let relocate = args.out_dir.is_some();
    let base = args.manifest.file_name().map_or("manifest.tsv".into(), |f| f.to_string_lossy().into_owned());
    for (mut m, &minutes) in splits.into_iter().zip(&args.minutes) {
        if relocate {
            // keep audio reachable from the new location
            for u in &mut m.utterances {
                let p = Manifest::resolve_audio(&args.manifest, u);
                u.audio = std::path::absolute(&p).unwrap_or(p).display().to_string();
            }
        }
        let path = out_dir.join(split_file_name(&base, minutes));
        m.write(&path).with_context(|| format!("writing {}", path.display()))?;
        let seconds = m.total_duration();
        out.text(format!(
            "{minutes} min\t{} utterances\t{:.2} min\t{}",
            m.utterances.len(),
            seconds / 60.0,
            path.display()
        ))?;
        out.record(&SplitRecord {
            minutes,
            manifest: path.display().to_string(),
            utterances: m.utterances.len(),
            seconds,
        })?;
    }
    Ok(())
}

pub fn validate(args: &ValidateArgs, out: &mut Out) -> Result<()> {
    let violations = validate_manifest(&args.manifest).with_context(|| format!("reading {}", args.manifest.display()))?;
    for v in &violations {
        out.text(format!("{}: {v}", args.manifest.display()))?;
        out.record(v)?;
    }
    if violations.is_empty() {
        out.text(format!("{}: ok", args.manifest.display()))?;
        Ok(())
    } else {
        bail!(DataError(format!("{} problem(s) in {}", violations.len(), args.manifest.display())))
    }
}

pub fn stats(ctx: &Ctx, args: &StatsArgs, out: &mut Out) -> Result<()> {
    let manifest = match (&args.manifest, &args.festvox, &args.wav_dir) {
        (Some(m), _, _) => read_manifest(m)?,
        (None, Some(prompts), Some(wavs)) => {
            let mut m = import_festvox(prompts, wavs, &args.speaker)
                .with_context(|| format!("importing {}", prompts.display()))?;
            m.language = ctx.config.language.clone().unwrap_or_default();
            m.license = ctx.config.license.clone().unwrap_or_default();
            m.source = ctx.config.source.clone().unwrap_or_else(|| "created".into());
            if let Some(path) = &args.write_manifest {
                m.write(path).with_context(|| format!("writing {}", path.display()))?;
            }
            m
        }
        _ => bail!(InputError("give a manifest, or --festvox with --wav-dir".into())),
    };
    let s = corpus_stats(&manifest);
    out.text(&s)?;
    out.record(&s)
}
