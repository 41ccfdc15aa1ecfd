use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use fieldvoice_core::aligner::read_verses;
use fieldvoice_core::prompts::{
    coverage_report, extract_all, read_candidates, select_prompts, DEFAULT_LENGTH_PENALTY, DEFAULT_TARGET_COUNT,
};
use fieldvoice_core::textnorm::WORD_BOUNDARY;
use serde::Serialize;

use super::{emit, Ctx, LanguageArgs, Resources};
use crate::Out;

#[derive(Args)]
pub struct NormalizeArgs {
    /// `id<TAB>text` file.
    pub input: PathBuf,
    /// Output file (default stdout).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub lang: LanguageArgs,
}

#[derive(Args)]
pub struct G2pArgs {
    /// `id<TAB>text` file.
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub lang: LanguageArgs,
}

#[derive(Args)]
pub struct SelectArgs {
    /// Candidate pool, `id<TAB>text` per line.
    pub pool: PathBuf,
    /// Number of prompts to keep.
    #[arg(long, default_value_t = DEFAULT_TARGET_COUNT)]
    pub count: usize,
    /// Length penalty exponent; 0 ignores length.
    #[arg(long, default_value_t = DEFAULT_LENGTH_PENALTY)]
    pub alpha: f64,
    /// Selected prompts as `id<TAB>text`.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub lang: LanguageArgs,
}

#[derive(Serialize)]
struct NormalizedRecord<'a> {
    id: &'a str,
    original: &'a str,
    normalized: &'a str,
    phones: Vec<&'a str>,
}

fn lines_with_context(path: &PathBuf) -> Result<Vec<(String, String)>> {
    read_verses(path).with_context(|| format!("reading {}", path.display()))
}

pub fn normalize(ctx: &Ctx, args: &NormalizeArgs, out: &mut Out) -> Result<()> {
    let res = Resources::load(ctx, &args.lang)?;
    let mut text = String::new();
    for (id, line) in lines_with_context(&args.input)? {
        let n = res
            .normalize(&line)
            .with_context(|| format!("{}: verse {id}", args.input.display()))?;
        text.push_str(&format!("{id}\t{}\n", n.normalized));
        out.record(&NormalizedRecord {
            id: &id,
            original: &n.original,
            normalized: &n.normalized,
            phones: n.phones.iter().map(String::as_str).collect(),
        })?;
    }
    emit(args.out.as_deref(), &text, out)
}

pub fn g2p(ctx: &Ctx, args: &G2pArgs, out: &mut Out) -> Result<()> {
    let res = Resources::load(ctx, &args.lang)?;
    let mut text = String::new();
    for (id, line) in lines_with_context(&args.input)? {
        let n = res
            .normalize(&line)
            .with_context(|| format!("{}: verse {id}", args.input.display()))?;
        let phones: Vec<&str> = n.phones.iter().map(String::as_str).filter(|p| *p != WORD_BOUNDARY).collect();
        text.push_str(&format!("{id}\t{}\n", phones.join(" ")));
        out.record(&NormalizedRecord {
            id: &id,
            original: &n.original,
            normalized: &n.normalized,
            phones,
        })?;
    }
    emit(args.out.as_deref(), &text, out)
}

pub fn select(ctx: &Ctx, args: &SelectArgs, out: &mut Out) -> Result<()> {
    let res = Resources::load(ctx, &args.lang)?;
    let lines = read_candidates(&args.pool).with_context(|| format!("reading {}", args.pool.display()))?;
    let normalized: Vec<(String, String)> = lines
        .iter()
        .map(|(id, t)| {
            res.normalize(t)
                .map(|n| (id.clone(), n.normalized))
                .with_context(|| format!("{}: candidate {id}", args.pool.display()))
        })
        .collect::<Result<_>>()?;
    let candidates = extract_all(&normalized, &res.table)?;
    let result = select_prompts(&candidates, args.count, args.alpha)?;
    let report = coverage_report(&result.selected, &candidates)?;
    let by_id: std::collections::HashMap<&str, &str> = lines.iter().map(|(i, t)| (i.as_str(), t.as_str())).collect();
    let mut script = String::new();
    for id in &result.selected {
        script.push_str(&format!("{id}\t{}\n", by_id[id.as_str()]));
    }
    match &args.out {
        Some(_) => emit(args.out.as_deref(), &script, out)?,
        None => out.text(script.trim_end())?,
    }
    out.record(&report)?;
    if args.out.is_some() {
        out.text(&report)?;
    } else {
        eprintln!("{report}");
    }
    Ok(())
}
