//! Local and global additive explanations.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::{Record, Value};
use crate::ebm::{sigmoid, EbmModel};
use crate::error::{Error, Result};

pub const DEFAULT_TOP_K: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub feature: String,
    /// Position of the feature in the model schema.
    pub term_index: usize,
    pub value: Option<Value>,
    pub bin: usize,
    pub bin_label: String,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    pub intercept: f64,
    /// Every term, sorted by absolute contribution, largest first; ties by
    /// feature name.
    pub contributions: Vec<Contribution>,
    pub logit: f64,
    pub predicted_proba: f64,
    /// 1 = living.
    pub predicted_class: u8,
}

impl LocalExplanation {
    /// Intercept plus contributions, summed in schema order.
    pub fn reconstructed_logit(&self) -> f64 {
        let mut ordered: Vec<&Contribution> = self.contributions.iter().collect();
        ordered.sort_by_key(|c| c.term_index);
        let mut logit = self.intercept;
        for c in ordered {
            logit += c.contribution;
        }
        logit
    }

    pub fn top_k(&self, k: usize) -> &[Contribution] {
        &self.contributions[..k.min(self.contributions.len())]
    }
}

fn by_magnitude(a: f64, an: &str, b: f64, bn: &str) -> Ordering {
    b.abs().total_cmp(&a.abs()).then_with(|| an.cmp(bn))
}

pub fn explain_local(model: &EbmModel, record: &Record) -> LocalExplanation {
    let bins = model.bins(record);
    let mut contributions: Vec<Contribution> = model
        .schema
        .iter()
        .zip(&model.terms)
        .zip(bins)
        .enumerate()
        .map(|(j, ((s, t), bin))| Contribution {
            feature: s.name.clone(),
            term_index: j,
            value: record.get(&s.name).cloned(),
            bin,
            bin_label: s.bin_label(bin),
            contribution: t.scores[bin],
        })
        .collect();
    let logit = model.predict_logit(record);
    contributions.sort_by(|a, b| by_magnitude(a.contribution, &a.feature, b.contribution, &b.feature));
    let predicted_proba = sigmoid(logit);
    LocalExplanation {
        intercept: model.intercept,
        contributions,
        logit,
        predicted_proba,
        predicted_class: u8::from(predicted_proba >= 0.5),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub importance: f64,
}

/// Importances ranked descending with a name tie-break, computed from the
/// training bin counts stored in the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    pub ranking: Vec<FeatureImportance>,
}

pub fn explain_global(model: &EbmModel) -> GlobalImportance {
    let mut ranking: Vec<FeatureImportance> = model
        .terms
        .iter()
        .map(|t| FeatureImportance { feature: t.feature.clone(), importance: t.importance() })
        .collect();
    ranking.sort_by(|a, b| by_magnitude(a.importance, &a.feature, b.importance, &b.feature));
    GlobalImportance { ranking }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub bin: usize,
    pub label: String,
    pub score: f64,
    pub count: u64,
}

/// The term's full bin-to-score table, missing bin first.
pub fn term_curve(model: &EbmModel, feature: &str) -> Result<Vec<CurvePoint>> {
    let j = model.feature_index(feature).ok_or_else(|| Error::UnknownFeature(feature.to_string()))?;
    let (s, t) = (&model.schema[j], &model.terms[j]);
    Ok((0..s.n_bins())
        .map(|b| CurvePoint { bin: b, label: s.bin_label(b), score: t.scores[b], count: t.bin_counts[b] })
        .collect())
}
