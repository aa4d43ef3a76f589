use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::ebm::EbmModel;

/// Threshold-0.5 classification metrics plus rank AUC. Precision, recall and
/// F1 are support-weighted averages over both classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model_id: String,
    pub partition: String,
    pub n: usize,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub r#fn: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` when only one class is present.
    pub auc: Option<f64>,
}

/// Mann-Whitney AUC with ties credited one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    // Sum of midranks of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * idx[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

pub fn evaluate_scores(model_id: &str, partition: &str, probs: &[f64], labels: &[u8]) -> MetricsReport {
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&p, &l) in probs.iter().zip(labels) {
        match (p >= 0.5, l == 1) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
    }
    let n = labels.len();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    // per class: (precision, recall, support)
    let pos = (ratio(tp, tp + fp), ratio(tp, tp + fn_), tp + fn_);
    let neg = (ratio(tn, tn + fn_), ratio(tn, tn + fp), tn + fp);
    let f1 = |p: f64, r: f64| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    let weighted = |a: f64, b: f64| if n == 0 { 0.0 } else { (a * pos.2 as f64 + b * neg.2 as f64) / n as f64 };
    MetricsReport {
        model_id: model_id.to_string(),
        partition: partition.to_string(),
        n,
        tp,
        tn,
        fp,
        r#fn: fn_,
        accuracy: ratio(tp + tn, n),
        precision: weighted(pos.0, neg.0),
        recall: weighted(pos.1, neg.1),
        f1: weighted(f1(pos.0, pos.1), f1(neg.0, neg.1)),
        auc: auc(probs, labels),
    }
}

pub fn evaluate(model: &EbmModel, table: &Dataset, model_id: &str, partition: &str) -> MetricsReport {
    let probs: Vec<f64> = (0..table.n_rows()).map(|r| model.predict_proba(&table.record(r))).collect();
    evaluate_scores(model_id, partition, &probs, &table.labels)
}
