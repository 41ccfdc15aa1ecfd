//! Building blocks for turning found or recorded speech into single-speaker
//! TTS corpora, and for scoring voices built from them.

pub mod aligner;
pub mod audio;
pub mod corpus;
pub mod eval;
pub mod prompts;
pub mod synth;
pub mod synthetic;
pub mod textnorm;
