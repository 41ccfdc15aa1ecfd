use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use fieldvoice_core::audio::write_wav;
use fieldvoice_core::synthetic::{synthetic_chapter, SyntheticConfig};
use serde::Serialize;

use super::Ctx;
use crate::Out;

#[derive(Args)]
pub struct FixtureArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// About five minutes of audio instead of a few verses.
    #[arg(long)]
    pub five_minute: bool,
    /// Override the verse count.
    #[arg(long)]
    pub verses: Option<usize>,
    /// Add white noise at this SNR (dB).
    #[arg(long)]
    pub snr: Option<f64>,
}

#[derive(Serialize)]
struct FixtureRecord {
    audio: String,
    verses: String,
    g2p: String,
    truth: String,
    seconds: f64,
    verse_count: usize,
}

pub fn fixture(ctx: &Ctx, args: &FixtureArgs, out: &mut Out) -> Result<()> {
    let mut config = if args.five_minute {
        SyntheticConfig::five_minute()
    } else {
        SyntheticConfig::default()
    };
    if let Some(n) = args.verses {
        config.verses = n.max(1);
    }
    config.snr_db = args.snr;
    let chapter = synthetic_chapter(&config, ctx.cli.seed);
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let audio = dir.join("chapter.wav");
    let verses = dir.join("verses.tsv");
    let g2p = dir.join("g2p.txt");
    let truth = dir.join("truth.tsv");
    write_wav(&audio, &chapter.audio)?;
    std::fs::write(&verses, chapter.verse_file())?;
    std::fs::write(&g2p, chapter.g2p_table().to_file_string())?;
    let mut t = String::from("# verse_id\tphone\tstart\tend\n");
    for v in &chapter.verses {
        t.push_str(&format!("{}\t<verse>\t{:.5}\t{:.5}\n", v.id, v.start, v.end));
        for p in &v.phones {
            t.push_str(&format!("{}\t{}\t{:.5}\t{:.5}\n", v.id, p.phone, p.start, p.end));
        }
    }
    std::fs::write(&truth, t)?;
    let record = FixtureRecord {
        audio: audio.display().to_string(),
        verses: verses.display().to_string(),
        g2p: g2p.display().to_string(),
        truth: truth.display().to_string(),
        seconds: chapter.audio.duration_seconds(),
        verse_count: chapter.verses.len(),
    };
    out.text(format!(
        "{} verses, {:.1} s of audio in {}",
        record.verse_count,
        record.seconds,
        dir.display()
    ))?;
    out.record(&record)
}
