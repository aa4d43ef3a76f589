//! Survival-outcome classifiers for acute myeloid leukemia cohorts built on
//! explainable boosting machines, with feature selection, evaluation,
//! additive explanations and what-if therapy recommendation.
//!
//! The pipeline runs cohort ingestion and cleaning ([`cohort`]), feature
//! selection ([`select`]), model training ([`ebm`]), evaluation ([`eval`]),
//! explanation ([`explain`]) and recommendation ([`recommend`]).

pub mod cohort;
pub mod data;
pub mod ebm;
mod error;
pub mod eval;
pub mod explain;
pub mod kv;
pub mod par;
pub mod recommend;
pub mod select;
pub mod synth;

pub use error::{Error, Result};
