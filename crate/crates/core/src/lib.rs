//! Tooling for compact multilingual language-model experiments.
//!
//! The crate covers the data and evaluation side of a monolingual /
//! bilingual / cross-lingual pretraining study:
//!
//! * [`corpus`] builds size-matched pretraining corpora from domain-labeled
//!   sources, with seed-deterministic sampling and an audited manifest.
//! * [`transpose`] projects extractive QA datasets into another language:
//!   translation, span realignment with edit-distance similarity, and
//!   back-translation filtering.
//! * [`eval`] scores model outputs: QA F1/EM, NLI accuracy and minimal-pair
//!   pseudo-log-likelihood accuracy, with seed aggregation.
//! * [`stats`] runs paired bootstrap tests between configurations.
//! * [`orchestrate`] expands experiment matrices, keeps a run registry,
//!   validates interchange files and renders result tables.
//!
//! Model training and inference are not part of this crate; models talk to
//! it through the JSONL interchange formats described in [`eval::io`].

pub mod corpus;
pub mod error;
pub mod eval;
pub mod lang;
pub mod orchestrate;
pub mod stats;
pub mod transpose;

pub use error::{Error, Result};
pub use lang::Language;
