//! Opinion mining for government e-petition archives.
//!
//! The crate turns a JSONL archive of petitions into topic models, issue
//! prevalence and similarity networks, an entropy-based volatility series,
//! per-constituency issue profiles with k-medoids clusters, and a power-law
//! fit of the signature distribution. Each stage lives in its own module and
//! reads and writes plain files, so the `petitions` binary can run stages
//! separately.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod geo;
pub mod issues;
pub mod lda;
pub mod meta;
pub mod pipeline;
pub mod powerlaw;
pub mod synthetic;
pub mod temporal;
pub mod textprep;

pub use error::{Error, Result};
pub use meta::{derive_seed, OutputMeta};
