//! Response bodies shared by the CLI's `--json` output and the HTTP API, so
//! both report identical numbers for identical inputs.

use ebm_aml::data::{DECEASED, LIVING};
use ebm_aml::ebm::EbmModel;
use ebm_aml::explain::{explain_global, explain_local, Contribution, CurvePoint, FeatureImportance, LocalExplanation, DEFAULT_TOP_K};
use ebm_aml::recommend::TherapyRecommendation;
use serde::{Deserialize, Serialize};

use crate::patient::Warning;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionPayload {
    pub model_id: String,
    pub version_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_id: Option<String>,
    /// Probability of the living class.
    pub probability: f64,
    pub predicted_class: String,
    /// The largest contributions by magnitude.
    pub top_contributions: Vec<Contribution>,
    pub explanation: LocalExplanation,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationPayload {
    pub model_id: String,
    pub version_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_id: Option<String>,
    pub recommendation: TherapyRecommendation,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportancePayload {
    pub model_id: String,
    pub version_hash: String,
    pub ranking: Vec<FeatureImportance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermPayload {
    pub model_id: String,
    pub version_hash: String,
    pub feature: String,
    pub kind: String,
    pub points: Vec<CurvePoint>,
}

pub fn class_name(class: u8) -> &'static str {
    if class == 1 {
        LIVING
    } else {
        DECEASED
    }
}

pub fn prediction(
    model_id: &str,
    version_hash: &str,
    model: &EbmModel,
    sample_id: Option<String>,
    record: &ebm_aml::data::Record,
    warnings: Vec<Warning>,
) -> PredictionPayload {
    let explanation = explain_local(model, record);
    PredictionPayload {
        model_id: model_id.to_string(),
        version_hash: version_hash.to_string(),
        sample_id,
        probability: explanation.predicted_proba,
        predicted_class: class_name(explanation.predicted_class).to_string(),
        top_contributions: explanation.top_k(DEFAULT_TOP_K).to_vec(),
        explanation,
        warnings,
    }
}

pub fn importance(model_id: &str, version_hash: &str, model: &EbmModel) -> ImportancePayload {
    ImportancePayload {
        model_id: model_id.to_string(),
        version_hash: version_hash.to_string(),
        ranking: explain_global(model).ranking,
    }
}
