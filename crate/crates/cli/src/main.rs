mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use fieldvoice_core::aligner::AlignError;
use fieldvoice_core::audio::AudioError;
use fieldvoice_core::corpus::CorpusError;
use fieldvoice_core::eval::EvalError;
use fieldvoice_core::prompts::PromptError;
use fieldvoice_core::synth::SynthError;
use fieldvoice_core::textnorm::TextError;
use fieldvoice_listen::ListenError;
use serde::Serialize;

const FLOW: &str = "\
Building a voice from found audio:
  1. normalize       expand numbers and clean the transcript (id<TAB>text lines)
  2. align           segment each chapter recording against its verse file
  3. cut             write one WAV per verse plus manifest.tsv and phones.tsv
  4. validate/stats  check the manifest and report its size
  5. split           duration-targeted training subsets, e.g. --minutes 25,50,101

Building a voice from new recordings:
  1. select-prompts  pick a diphone-rich script from a text pool
  2. record the prompts, one WAV per prompt id
  3. stats --festvox txt.done.data --wav-dir wav/   to import and check them

Then, for either corpus:
  build-voice        unit inventory from manifest + phones
  synth              speak test prompts with the voice
  mcd / cer          objective scores against held-out recordings
  serve              run A/B preference and transcription listening tests

Try everything on generated data first:  fieldvoice fixture --out-dir demo";

const EXIT_CODES: &str = "\
Exit codes: 0 success, 2 usage, 3 malformed input (file and line reported),
4 file system, 5 data failed validation or out of domain, 6 processing failed,
1 anything else.";

#[derive(Parser)]
#[command(name = "fieldvoice", version, about = "Build and evaluate single-speaker TTS corpora", long_about = FLOW, after_help = EXIT_CODES)]
pub struct Cli {
    /// Output style on stdout.
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    pub format: Format,
    /// Worker threads for per-file stages (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for every randomized step.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// TOML file with language resources and stage settings.
    #[arg(long, global = true, env = "FIELDVOICE_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: commands::Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    /// One JSON object per line.
    Records,
}

/// Bad input content, reported with exit code 3.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// Data that parsed but is not acceptable, exit code 5.
#[derive(Debug)]
pub struct DataError(pub String);

impl std::fmt::Display for DataError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

const INPUT: u8 = 3;
const IO: u8 = 4;
const DATA: u8 = 5;
const PROCESSING: u8 = 6;

fn audio_code(e: &AudioError) -> u8 {
    match e {
        AudioError::NotFound(_) | AudioError::Io(_) => IO,
        AudioError::Unsupported { .. } | AudioError::Truncated(_) => INPUT,
        _ => PROCESSING,
    }
}

/// Exit code for the first recognizable error in the chain.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InputError>() || cause.is::<serde_json::Error>() {
            return INPUT;
        }
        if cause.is::<DataError>() {
            return DATA;
        }
        if cause.is::<std::io::Error>() {
            return IO;
        }
        if let Some(e) = cause.downcast_ref::<AudioError>() {
            return audio_code(e);
        }
        if let Some(e) = cause.downcast_ref::<CorpusError>() {
            return match e {
                CorpusError::Parse { .. } => INPUT,
                CorpusError::Io(_) => IO,
                CorpusError::Audio(a) | CorpusError::UtteranceAudio { source: a, .. } => audio_code(a),
                CorpusError::OutOfRange { .. } | CorpusError::InfeasibleSplit(_) => DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<TextError>() {
            return match e {
                TextError::Parse { .. } => INPUT,
                TextError::NumberOutOfRange { .. } => DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<AlignError>() {
            return match e {
                AlignError::Parse { .. } => INPUT,
                AlignError::Io(_) => IO,
                AlignError::Audio(a) => audio_code(a),
                AlignError::Text(TextError::Parse { .. }) => INPUT,
                AlignError::Text(_) | AlignError::EmptyVerse(_) | AlignError::NoVerses => DATA,
                _ => PROCESSING,
            };
        }
        if let Some(e) = cause.downcast_ref::<PromptError>() {
            return match e {
                PromptError::Parse { .. } => INPUT,
                PromptError::Io(_) => IO,
                _ => DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<SynthError>() {
            return match e {
                SynthError::Io(_) => IO,
                SynthError::IndexFormat(_) | SynthError::Json(_) => INPUT,
                SynthError::Corpus(_) | SynthError::Audio(_) => continue,
                SynthError::MissingSegmentation(_) | SynthError::InvalidWeights(_) | SynthError::EmptyText => DATA,
                _ => PROCESSING,
            };
        }
        if let Some(e) = cause.downcast_ref::<EvalError>() {
            return match e {
                EvalError::Audio(_) | EvalError::Corpus(_) | EvalError::Utterance { .. } => continue,
                EvalError::EmptyReference | EvalError::NoOverlap | EvalError::UnknownItem(_) => DATA,
                _ => PROCESSING,
            };
        }
        if let Some(e) = cause.downcast_ref::<ListenError>() {
            return match e {
                ListenError::Io(_) => IO,
                ListenError::CorruptLog { .. } => INPUT,
                _ => DATA,
            };
        }
    }
    1
}

/// Stdout writer for either output style.
pub struct Out {
    format: Format,
    stdout: std::io::Stdout,
}

impl Out {
    pub fn records(&self) -> bool {
        self.format == Format::Records
    }

    /// Human text (skipped in records mode).
    pub fn text(&mut self, s: impl std::fmt::Display) -> anyhow::Result<()> {
        if !self.records() {
            writeln!(self.stdout.lock(), "{s}")?;
        }
        Ok(())
    }

    /// A record (skipped in human mode).
    pub fn record(&mut self, r: &impl Serialize) -> anyhow::Result<()> {
        if self.records() {
            writeln!(self.stdout.lock(), "{}", serde_json::to_string(r)?)?;
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("FIELDVOICE_LOG").unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let mut out = Out {
        format: cli.format,
        stdout: std::io::stdout(),
    };
    match commands::run(&cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
