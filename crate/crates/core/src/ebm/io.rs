use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BinSpec, EbmModel, ModelMeta, TermFunction};
use crate::ebm::FeatureSchema;
use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "ebm-aml-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Deserialize)]
struct Header {
    format: String,
    version: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    schema: Vec<FeatureSchema>,
    terms: Vec<TermFunction>,
    intercept: f64,
    importances: Vec<f64>,
    meta: ModelMeta,
}

impl EbmModel {
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            schema: self.schema.clone(),
            terms: self.terms.clone(),
            intercept: self.intercept,
            importances: self.importances.clone(),
            meta: self.meta.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let header: Header = serde_json::from_str(text).map_err(|e| Error::ModelCorrupt(e.to_string()))?;
        if header.format != FORMAT_TAG {
            return Err(Error::ModelCorrupt(format!("format tag `{}` is not `{FORMAT_TAG}`", header.format)));
        }
        if header.version.as_u64() != Some(u64::from(FORMAT_VERSION)) {
            return Err(Error::ModelVersion { found: header.version.to_string(), expected: FORMAT_VERSION });
        }
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::ModelCorrupt(e.to_string()))?;
        let model = EbmModel {
            schema: file.schema,
            terms: file.terms,
            intercept: file.intercept,
            importances: file.importances,
            meta: file.meta,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Structural checks: one term per feature with matching names and bin
    /// counts, finite scores, ascending cuts.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ModelCorrupt(m));
        if self.terms.len() != self.schema.len() || self.importances.len() != self.terms.len() {
            return bad(format!(
                "{} features, {} terms, {} importances",
                self.schema.len(),
                self.terms.len(),
                self.importances.len()
            ));
        }
        if !self.intercept.is_finite() {
            return bad("non-finite intercept".into());
        }
        for (s, t) in self.schema.iter().zip(&self.terms) {
            if s.name != t.feature {
                return bad(format!("term `{}` does not match feature `{}`", t.feature, s.name));
            }
            if t.scores.len() != s.n_bins() || t.bin_counts.len() != s.n_bins() {
                return bad(format!("term `{}` has {} scores for {} bins", t.feature, t.scores.len(), s.n_bins()));
            }
            if t.scores.iter().any(|x| !x.is_finite()) {
                return bad(format!("term `{}` has non-finite scores", t.feature));
            }
            match &s.bins {
                BinSpec::Continuous { cuts, .. } if cuts.windows(2).any(|w| !(w[0] < w[1])) => {
                    return bad(format!("cuts of `{}` are not strictly ascending", s.name));
                }
                BinSpec::Categorical { categories } if categories.windows(2).any(|w| w[0] >= w[1]) => {
                    return bad(format!("categories of `{}` are not sorted and unique", s.name));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
