//! Bioconcept type disambiguation.
//!
//! The crate builds a partially labeled corpus of ambiguous biomedical
//! mentions by joining curated repository records (document, concept) with
//! tagger spans in PubTator format, and trains classifiers that pick one of
//! six bioconcept types for a mention given its context:
//!
//! * a priority-order rule baseline ([`models::rule`]),
//! * a maximum-entropy (multinomial logistic regression) baseline
//!   ([`models::maxent`]),
//! * a CNN+LSTM network built on a small fp64 layer library ([`nn`],
//!   [`models::cnnlstm`]).
//!
//! [`eval`] computes confusion matrices and micro/macro precision, recall
//! and F1; [`cli`] wires the pipeline into reproducible subcommands.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod models;
pub mod nn;
pub mod synthetic;

pub use error::{Error, Result};
