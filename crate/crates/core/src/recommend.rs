//! What-if therapy recommendation: score one patient under every treatment
//! intensity and keep the one with the highest predicted survival.

use serde::{Deserialize, Serialize};

use crate::cohort::TreatmentIntensity;
use crate::data::{Record, Value, TREATMENT_COLUMN};
use crate::ebm::EbmModel;
use crate::error::{Error, Result};
use crate::explain::{explain_local, LocalExplanation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterfactual {
    pub treatment: TreatmentIntensity,
    /// Predicted probability of the living class.
    pub probability: f64,
    pub explanation: LocalExplanation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TherapyRecommendation {
    /// One entry per intensity, least aggressive first.
    pub counterfactuals: Vec<Counterfactual>,
    pub recommended: TreatmentIntensity,
    /// Probability gap between the recommended and the runner-up option.
    pub margin: f64,
}

/// Ties in probability go to the less aggressive therapy.
pub fn recommend(model: &EbmModel, record: &Record) -> Result<TherapyRecommendation> {
    if model.feature_index(TREATMENT_COLUMN).is_none() {
        return Err(Error::Config {
            location: "model schema".into(),
            message: format!("model has no `{TREATMENT_COLUMN}` feature; cannot compare therapies"),
        });
    }
    let counterfactuals: Vec<Counterfactual> = TreatmentIntensity::BY_INTENSITY
        .iter()
        .map(|&t| {
            let mut r = record.clone();
            r.insert(TREATMENT_COLUMN.to_string(), Value::Text(t.as_str().to_string()));
            let explanation = explain_local(model, &r);
            Counterfactual { treatment: t, probability: explanation.predicted_proba, explanation }
        })
        .collect();
    // BY_INTENSITY order plus strict comparison keeps the first maximum.
    let mut best = 0;
    for (i, c) in counterfactuals.iter().enumerate().skip(1) {
        if c.probability > counterfactuals[best].probability {
            best = i;
        }
    }
    let runner_up = counterfactuals
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, c)| c.probability)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(TherapyRecommendation {
        recommended: counterfactuals[best].treatment,
        margin: counterfactuals[best].probability - runner_up,
        counterfactuals,
    })
}
