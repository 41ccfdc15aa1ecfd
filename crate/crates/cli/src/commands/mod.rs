mod corpus;
mod eval;
mod fixture;
mod serve;
mod text;
mod voice;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use fieldvoice_core::textnorm::{CleanProfile, G2pTable, NormalizedText, NumberDictionary};

use crate::config::Config;
use crate::{Cli, InputError, Out};

#[derive(Subcommand)]
pub enum Command {
    /// Expand numbers and clean `id<TAB>text` lines.
    Normalize(text::NormalizeArgs),
    /// Print the phone sequence of each `id<TAB>text` line.
    G2p(text::G2pArgs),
    /// Pick a diphone-rich recording script from a candidate pool.
    SelectPrompts(text::SelectArgs),
    /// Align long chapter recordings (16-bit PCM WAV) to their verse files.
    ///
    /// Convert mp3 or other formats beforehand, e.g.
    /// `ffmpeg -i chapter.mp3 -ac 1 -ar 16000 chapter.wav`.
    Align(corpus::AlignArgs),
    /// Cut an aligned chapter into one WAV per verse.
    Cut(corpus::CutArgs),
    /// Duration-targeted training subsets of a manifest.
    Split(corpus::SplitArgs),
    /// Check a manifest for missing audio, bad ids, digits and more.
    Validate(corpus::ValidateArgs),
    /// Utterance count and hours of a manifest or a Festvox prompt list.
    Stats(corpus::StatsArgs),
    /// Build the unit inventory of a segmented corpus.
    BuildVoice(voice::BuildArgs),
    /// Speak text with a built voice.
    Synth(voice::SynthArgs),
    /// Mel cepstral distortion between two manifests.
    Mcd(eval::McdArgs),
    /// Character error rate of listener transcriptions.
    Cer(eval::CerArgs),
    /// Run the listening-test service.
    Serve(serve::ServeArgs),
    /// Write a synthetic chapter with known phone timings for trying the pipeline.
    Fixture(fixture::FixtureArgs),
}

pub fn run(cli: &Cli, out: &mut Out) -> Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let ctx = Ctx { cli, config };
    match &cli.command {
        Command::Normalize(a) => text::normalize(&ctx, a, out),
        Command::G2p(a) => text::g2p(&ctx, a, out),
        Command::SelectPrompts(a) => text::select(&ctx, a, out),
        Command::Align(a) => corpus::align(&ctx, a, out),
        Command::Cut(a) => corpus::cut(&ctx, a, out),
        Command::Split(a) => corpus::split(&ctx, a, out),
        Command::Validate(a) => corpus::validate(a, out),
        Command::Stats(a) => corpus::stats(&ctx, a, out),
        Command::BuildVoice(a) => voice::build(&ctx, a, out),
        Command::Synth(a) => voice::synth(&ctx, a, out),
        Command::Mcd(a) => eval::mcd(&ctx, a, out),
        Command::Cer(a) => eval::cer(a, out),
        Command::Serve(a) => serve::serve(a, out),
        Command::Fixture(a) => fixture::fixture(&ctx, a, out),
    }
}

pub struct Ctx<'a> {
    pub cli: &'a Cli,
    pub config: Config,
}

/// Language resources; flags win over the config file.
#[derive(Args, Clone, Default)]
pub struct LanguageArgs {
    /// Number dictionary file.
    #[arg(long)]
    pub numbers: Option<PathBuf>,
    /// G2P rule table (default: every letter is its own phone).
    #[arg(long)]
    pub g2p: Option<PathBuf>,
    /// Language name for manifests and the default G2P table.
    #[arg(long)]
    pub language: Option<String>,
    /// Lowercase text during cleanup.
    #[arg(long)]
    pub lowercase: bool,
}

pub struct Resources {
    pub language: String,
    pub numbers: Option<NumberDictionary>,
    pub table: G2pTable,
    pub profile: CleanProfile,
}

impl Resources {
    pub fn load(ctx: &Ctx, args: &LanguageArgs) -> Result<Self> {
        let language = args.language.clone().or_else(|| ctx.config.language.clone()).unwrap_or_default();
        let numbers = match args.numbers.as_ref().or(ctx.config.numbers.as_ref()) {
            Some(p) => Some(parse_file::<NumberDictionary>(p)?),
            None => None,
        };
        let table = match args.g2p.as_ref().or(ctx.config.g2p.as_ref()) {
            Some(p) => parse_file::<G2pTable>(p)?,
            None => G2pTable::identity(language.clone()),
        };
        let profile = CleanProfile {
            lowercase: args.lowercase,
            ..CleanProfile::default()
        };
        Ok(Self {
            language,
            numbers,
            table,
            profile,
        })
    }

    pub fn normalize(&self, text: &str) -> Result<NormalizedText, fieldvoice_core::textnorm::TextError> {
        NormalizedText::new(text, self.numbers.as_ref(), &self.profile, &self.table)
    }
}

fn parse_file<T>(path: &Path) -> Result<T>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse::<T>().map_err(|e| InputError(format!("{}: {e}", path.display())).into())
}

/// Write `contents` to `path`, or stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, contents: &str, out: &mut Out) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(p, contents).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let trimmed = contents.strip_suffix('\n').unwrap_or(contents);
            if out.records() {
                return Ok(());
            }
            out.text(trimmed)
        }
    }
}
