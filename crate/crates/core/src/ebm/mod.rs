//! Explainable boosting machine: a binned additive model in logit space.
//!
//! Every feature owns one term, a table of additive scores indexed by bin.
//! A prediction is the intercept plus the looked-up score of each term,
//! summed left to right in schema order; explanations reuse that order so
//! their parts add up to the logit bit for bit.

mod binning;
mod io;
mod train;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{Dataset, Record};
use crate::par::{self, Execution};

pub use binning::{bin_fit, bin_table, BinSpec, FeatureSchema, MISSING_BIN};
pub use io::{FORMAT_TAG, FORMAT_VERSION};
pub use train::{train, TrainConfig};

/// Logits are clamped to this magnitude before the logistic link.
pub const LOGIT_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermFunction {
    pub feature: String,
    /// One score per bin, bin 0 being the missing bin.
    pub scores: Vec<f64>,
    /// Training rows per bin.
    pub bin_counts: Vec<u64>,
}

impl TermFunction {
    /// Count-weighted mean of the scores over the training distribution.
    pub fn weighted_mean(&self) -> f64 {
        weighted(&self.scores, &self.bin_counts, |s| s)
    }

    /// Count-weighted mean absolute score.
    pub fn importance(&self) -> f64 {
        weighted(&self.scores, &self.bin_counts, f64::abs)
    }
}

fn weighted(scores: &[f64], counts: &[u64], f: impl Fn(f64) -> f64) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let s: f64 = scores.iter().zip(counts).map(|(&s, &c)| c as f64 * f(s)).sum();
    s / total as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub living: usize,
    pub deceased: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub config: TrainConfig,
    /// Name of the class predicted as probability 1.
    pub positive_class: String,
    pub training_class_counts: ClassCounts,
    pub training_rows: usize,
    /// Boosting rounds kept by each outer bag.
    pub bag_rounds: Vec<usize>,
    /// Which rows importances and centering were computed on.
    pub importance_basis: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbmModel {
    pub schema: Vec<FeatureSchema>,
    pub terms: Vec<TermFunction>,
    pub intercept: f64,
    pub importances: Vec<f64>,
    pub meta: ModelMeta,
}

pub fn sigmoid(logit: f64) -> f64 {
    let z = logit.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    1.0 / (1.0 + (-z).exp())
}

impl EbmModel {
    /// Assembles a model from hand-set parts; importances come from the
    /// scores and bin counts.
    pub fn from_parts(schema: Vec<FeatureSchema>, terms: Vec<TermFunction>, intercept: f64, meta: ModelMeta) -> Self {
        let importances = terms.iter().map(TermFunction::importance).collect();
        Self { schema, terms, intercept, importances, meta }
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|s| s.name == name)
    }

    /// Bin of `record` for every schema feature.
    pub fn bins(&self, record: &Record) -> Vec<usize> {
        self.schema.iter().map(|s| s.bin_of(record.get(&s.name))).collect()
    }

    /// Per-term score for `record`, in schema order.
    pub fn contributions(&self, record: &Record) -> Vec<f64> {
        self.bins(record).into_iter().zip(&self.terms).map(|(b, t)| t.scores[b]).collect()
    }

    pub fn predict_logit(&self, record: &Record) -> f64 {
        let mut logit = self.intercept;
        for c in self.contributions(record) {
            logit += c;
        }
        logit
    }

    pub fn predict_proba(&self, record: &Record) -> f64 {
        sigmoid(self.predict_logit(record))
    }

    pub fn predict_table(&self, table: &Dataset, exec: Execution) -> Vec<f64> {
        par::map_indexed(exec, table.n_rows(), |r| self.predict_proba(&table.record(r)))
    }

    /// SHA-256 of the canonical serialized model, hex encoded.
    pub fn version_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("model serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
