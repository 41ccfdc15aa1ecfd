//! Optional TOML config with per-language resources and stage settings.
//!
//! ```toml
//! language = "luo"
//! numbers = "luo_numbers.txt"   # relative to this file
//! g2p = "luo.g2p"
//! license = "CC-BY-SA-4.0"
//! source = "found/open.bible"
//!
//! [aligner]
//! max_iterations = 12
//!
//! [synth]
//! join = 1.0
//! target = 0.2
//! ```

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fieldvoice_core::aligner::AlignerConfig;
use fieldvoice_core::synth::SynthWeights;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub language: Option<String>,
    pub numbers: Option<PathBuf>,
    pub g2p: Option<PathBuf>,
    pub license: Option<String>,
    pub source: Option<String>,
    pub speaker: Option<String>,
    #[serde(default)]
    pub aligner: AlignerConfig,
    #[serde(default)]
    pub synth: SynthWeights,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Config = toml::from_str(&text).map_err(|e| crate::InputError(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.numbers, &mut cfg.g2p].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}
