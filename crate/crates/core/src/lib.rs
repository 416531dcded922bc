//! Arabic pre-training corpus preparation: text normalization, rule-based
//! corpus filtering with deduplication, byte-level BPE, whole-word-masked
//! instance generation, evaluation metrics and experiment bookkeeping.

pub mod cli;
pub mod config;
pub mod error;
pub mod filter;
pub mod harness;
pub mod metrics;
pub mod normalize;
pub mod pretrain;
pub mod stages;
pub mod tokenizer;

pub use error::{Error, Result};
