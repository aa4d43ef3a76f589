//! Patient records from CSV rows or JSON payloads, checked against a model
//! schema.
//!
//! Values are validated per feature kind. Numeric clinical fields also have
//! plausibility ranges. Missing features and categories never seen in
//! training are scored with the missing bin and reported as warnings rather
//! than errors.

use std::path::Path;

use ebm_aml::cohort::TreatmentIntensity;
use ebm_aml::data::{is_missing_marker, Record, Value, SAMPLE_ID, TREATMENT_COLUMN};
use ebm_aml::ebm::{BinSpec, EbmModel, FeatureSchema, MISSING_BIN};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A value as supplied, before checking it against the schema.
#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Null,
    Bool(bool),
    Num(f64),
    Text(String),
}

impl RawValue {
    /// CSV cell: missing markers become `Null`, numbers `Num`.
    pub fn from_cell(cell: &str) -> Self {
        if is_missing_marker(cell) {
            return RawValue::Null;
        }
        let t = cell.trim();
        match t.parse::<f64>() {
            Ok(x) => RawValue::Num(x),
            Err(_) => RawValue::Text(t.to_string()),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Option<Self> {
        match v {
            serde_json::Value::Null => Some(RawValue::Null),
            serde_json::Value::Bool(b) => Some(RawValue::Bool(*b)),
            serde_json::Value::Number(n) => n.as_f64().map(RawValue::Num),
            serde_json::Value::String(s) => Some(RawValue::Text(s.clone())),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum PatientError {
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("{}", fields_message(.0))]
    Fields(Vec<FieldError>),
}

fn fields_message(errors: &[FieldError]) -> String {
    errors.iter().map(|e| format!("`{}`: {}", e.field, e.message)).collect::<Vec<_>>().join("; ")
}

/// A checked record plus what was filled in with the missing bin.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub id: Option<String>,
    pub record: Record,
    pub warnings: Vec<Warning>,
}

/// Inclusive bounds for numeric clinical inputs.
fn range_for(feature: &str) -> Option<(f64, f64)> {
    match feature {
        "diagnosis_age" => Some((18.0, 120.0)),
        "bm_blast_pct" | "pb_blast_pct" => Some((0.0, 100.0)),
        "mutation_count" | "wbc" => Some((0.0, f64::INFINITY)),
        _ => None,
    }
}

fn check_value(schema: &FeatureSchema, raw: &RawValue) -> Result<Option<Value>, String> {
    match (&schema.bins, raw) {
        (_, RawValue::Null) => Ok(None),
        (BinSpec::Continuous { .. }, RawValue::Num(x)) => {
            if !x.is_finite() {
                return Err("must be a finite number".into());
            }
            if let Some((lo, hi)) = range_for(&schema.name) {
                if *x < lo || *x > hi {
                    return Err(if hi.is_finite() {
                        format!("{x} is outside [{lo}, {hi}]")
                    } else {
                        format!("{x} is below {lo}")
                    });
                }
            }
            Ok(Some(Value::Num(*x)))
        }
        (BinSpec::Continuous { .. }, _) => Err("expected a number".into()),
        (BinSpec::Binary, RawValue::Bool(b)) => Ok(Some(Value::Num(f64::from(u8::from(*b))))),
        (BinSpec::Binary, RawValue::Num(x)) if *x == 0.0 || *x == 1.0 => Ok(Some(Value::Num(*x))),
        (BinSpec::Binary, RawValue::Text(s)) if matches!(s.as_str(), "true" | "false") => {
            Ok(Some(Value::Num(if s == "true" { 1.0 } else { 0.0 })))
        }
        (BinSpec::Binary, _) => Err("expected 0, 1, true or false".into()),
        (BinSpec::Categorical { .. }, RawValue::Bool(_)) => Err("expected a category name".into()),
        (BinSpec::Categorical { .. }, RawValue::Num(x)) if schema.name != TREATMENT_COLUMN => Ok(Some(Value::Num(*x))),
        (BinSpec::Categorical { .. }, raw) => {
            let text = match raw {
                RawValue::Text(s) => s.clone(),
                RawValue::Num(x) => Value::Num(*x).category_code(),
                _ => unreachable!(),
            };
            if schema.name == TREATMENT_COLUMN {
                let t: TreatmentIntensity = text.parse().map_err(|_| {
                    let names: Vec<&str> = TreatmentIntensity::BY_INTENSITY.iter().map(|t| t.as_str()).collect();
                    format!("`{text}` is not one of {}", names.join(", "))
                })?;
                return Ok(Some(Value::Text(t.as_str().to_string())));
            }
            Ok(Some(Value::Text(text)))
        }
    }
}

/// Checks named values against `model`'s schema. Unknown names and invalid
/// values are collected into one error listing every offending field.
pub fn build_record<I>(model: &EbmModel, values: I) -> Result<(Record, Vec<Warning>), Vec<FieldError>>
where
    I: IntoIterator<Item = (String, RawValue)>,
{
    let mut record = Record::new();
    let mut errors = Vec::new();
    for (name, raw) in values {
        let Some(j) = model.feature_index(&name) else {
            errors.push(FieldError { field: name, message: "not a feature of this model".into() });
            continue;
        };
        match check_value(&model.schema[j], &raw) {
            Ok(Some(v)) => {
                record.insert(name, v);
            }
            Ok(None) => {}
            Err(message) => errors.push(FieldError { field: name, message }),
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let mut warnings = Vec::new();
    for s in &model.schema {
        match record.get(&s.name) {
            None => warnings.push(Warning { field: s.name.clone(), message: "missing; scored with the missing bin".into() }),
            Some(v) if s.bin_of(Some(v)) == MISSING_BIN => warnings.push(Warning {
                field: s.name.clone(),
                message: format!("value `{v}` was not seen in training; scored with the missing bin"),
            }),
            Some(_) => {}
        }
    }
    Ok((record, warnings))
}

/// Reads a patient CSV: a header of feature names and one patient per row.
/// An optional `sample_id` column labels the rows.
pub fn read_csv(path: &Path, model: &EbmModel) -> Result<Vec<PatientRecord>, PatientError> {
    let file_err = |message: String| PatientError::File { path: path.display().to_string(), message };
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_path(path).map_err(|e| file_err(e.to_string()))?;
    let headers: Vec<String> = rdr.headers().map_err(|e| file_err(e.to_string()))?.iter().map(|h| h.trim().to_string()).collect();
    let id_col = headers.iter().position(|h| h == SAMPLE_ID);
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| file_err(e.to_string()))?;
        let values = headers
            .iter()
            .zip(row.iter())
            .enumerate()
            .filter(|(c, _)| Some(*c) != id_col)
            .map(|(_, (h, cell))| (h.clone(), RawValue::from_cell(cell)));
        let (record, warnings) = build_record(model, values).map_err(|errs| {
            file_err(format!("row {}: {}", i + 2, fields_message(&errs)))
        })?;
        let id = id_col.and_then(|c| row.get(c)).map(|s| s.trim().to_string());
        out.push(PatientRecord { id, record, warnings });
    }
    if out.is_empty() {
        return Err(file_err("no patient rows".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ebm_aml::data::FeatureKind;
    use ebm_aml::ebm::{ClassCounts, ModelMeta, TermFunction, TrainConfig};

    pub(crate) fn model() -> EbmModel {
        let schema = vec![
            FeatureSchema {
                name: "diagnosis_age".into(),
                kind: FeatureKind::Continuous,
                bins: BinSpec::Continuous { cuts: vec![40.0, 60.0], min: 18.0, max: 90.0 },
            },
            FeatureSchema { name: "TP53".into(), kind: FeatureKind::Binary, bins: BinSpec::Binary },
            FeatureSchema {
                name: TREATMENT_COLUMN.into(),
                kind: FeatureKind::Categorical,
                bins: BinSpec::Categorical { categories: vec!["high-intensity".into(), "low-intensity".into()] },
            },
        ];
        let terms = schema
            .iter()
            .map(|s| TermFunction { feature: s.name.clone(), scores: vec![0.0; s.n_bins()], bin_counts: vec![1; s.n_bins()] })
            .collect();
        let meta = ModelMeta {
            config: TrainConfig::default(),
            positive_class: "living".into(),
            training_class_counts: ClassCounts { living: 1, deceased: 1 },
            training_rows: 2,
            bag_rounds: vec![],
            importance_basis: "training".into(),
        };
        EbmModel::from_parts(schema, terms, 0.0, meta)
    }

    fn vals(pairs: &[(&str, RawValue)]) -> Vec<(String, RawValue)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn valid_record_with_missing_and_unseen() {
        let m = model();
        let (rec, warnings) = build_record(
            &m,
            vals(&[("diagnosis_age", RawValue::Num(70.0)), (TREATMENT_COLUMN, RawValue::Text("Target".into()))]),
        )
        .unwrap();
        assert_eq!(rec[TREATMENT_COLUMN], Value::Text("target".into()));
        let fields: Vec<&str> = warnings.iter().map(|w| w.field.as_str()).collect();
        assert_eq!(fields, ["TP53", TREATMENT_COLUMN]);
    }

    #[test]
    fn collects_every_field_error() {
        let errs = build_record(
            &model(),
            vals(&[
                ("diagnosis_age", RawValue::Num(17.0)),
                ("TP53", RawValue::Num(2.0)),
                ("nope", RawValue::Num(1.0)),
                (TREATMENT_COLUMN, RawValue::Text("chemo".into())),
            ]),
        )
        .unwrap_err();
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, ["diagnosis_age", "TP53", "nope", TREATMENT_COLUMN]);
        assert!(errs[0].message.contains("outside [18, 120]"));
    }

    #[test]
    fn csv_cells() {
        assert_eq!(RawValue::from_cell(" NA "), RawValue::Null);
        assert_eq!(RawValue::from_cell("3.5"), RawValue::Num(3.5));
        assert_eq!(RawValue::from_cell("male"), RawValue::Text("male".into()));
        assert_eq!(RawValue::from_json(&serde_json::json!([1])), None);
        assert_eq!(RawValue::from_json(&serde_json::json!(true)), Some(RawValue::Bool(true)));
    }

    #[test]
    fn reads_patient_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        std::fs::write(&p, "sample_id,diagnosis_age,TP53\npt1,65,1\npt2,NA,0\n").unwrap();
        let rows = read_csv(&p, &model()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].id.as_deref(), Some("pt1"));
        assert_eq!(rows[1].warnings.len(), 2);
        std::fs::write(&p, "diagnosis_age\n200\n").unwrap();
        let err = read_csv(&p, &model()).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("diagnosis_age"), "{err}");
    }
}
