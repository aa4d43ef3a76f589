//! Two-cohort ingestion, cleaning, imputation, treatment grouping and export
//! of the final CLIN / MUT / EXP tables.

mod clean;
mod export;
mod impute;
mod ingest;
mod treatment;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::Value;

pub use clean::{clean, CleanOptions, DuplicateKey};
pub use export::{export_final, FinalTables, CLIN_FEATURES};
pub use impute::impute_knn;
pub use ingest::{ingest, ColumnSpec, IngestPaths};
pub use treatment::{categorize_treatment, TreatmentIntensity, TreatmentMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClinicalField {
    DiagnosisAge,
    BmBlastPct,
    MutationCount,
    PbBlastPct,
    Wbc,
    Gender,
    Race,
    CytogeneticInfo,
    ElnRisk,
    /// Raw therapy name as exported, before grouping into intensities.
    Treatment,
}

impl ClinicalField {
    pub const ALL: [ClinicalField; 10] = [
        ClinicalField::DiagnosisAge,
        ClinicalField::BmBlastPct,
        ClinicalField::MutationCount,
        ClinicalField::PbBlastPct,
        ClinicalField::Wbc,
        ClinicalField::Gender,
        ClinicalField::Race,
        ClinicalField::CytogeneticInfo,
        ClinicalField::ElnRisk,
        ClinicalField::Treatment,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ClinicalField::DiagnosisAge => "diagnosis_age",
            ClinicalField::BmBlastPct => "bm_blast_pct",
            ClinicalField::MutationCount => "mutation_count",
            ClinicalField::PbBlastPct => "pb_blast_pct",
            ClinicalField::Wbc => "wbc",
            ClinicalField::Gender => "gender",
            ClinicalField::Race => "race",
            ClinicalField::CytogeneticInfo => "cytogenetic_info",
            ClinicalField::ElnRisk => "eln_risk",
            ClinicalField::Treatment => "treatment",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.key() == key)
    }

    pub fn is_continuous(self) -> bool {
        matches!(
            self,
            ClinicalField::DiagnosisAge
                | ClinicalField::BmBlastPct
                | ClinicalField::MutationCount
                | ClinicalField::PbBlastPct
                | ClinicalField::Wbc
        )
    }

    /// Parses a raw (non-missing) cell; unparseable cells yield `None`.
    pub fn parse(self, cell: &str) -> Option<Value> {
        let t = cell.trim();
        if self.is_continuous() {
            return t.parse::<f64>().ok().filter(|x| x.is_finite()).map(Value::Num);
        }
        let lower = t.to_ascii_lowercase();
        let norm = match self {
            ClinicalField::Gender => match lower.as_str() {
                "f" | "female" => "female".to_string(),
                "m" | "male" => "male".to_string(),
                _ => lower,
            },
            ClinicalField::Race => {
                let non = lower.contains("non") || lower.contains("not");
                if lower.contains("white") && !non { "white" } else { "not_white" }.to_string()
            }
            ClinicalField::ElnRisk => {
                if lower.starts_with("fav") {
                    "favorable".into()
                } else if lower.starts_with("int") {
                    "intermediate".into()
                } else if lower.starts_with("adv") || lower.starts_with("poor") {
                    "adverse".into()
                } else {
                    return None;
                }
            }
            _ => t.to_string(),
        };
        Some(Value::Text(norm))
    }
}

impl fmt::Display for ClinicalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurvivalStatus {
    Living,
    Deceased,
}

impl SurvivalStatus {
    pub fn label(self) -> u8 {
        match self {
            SurvivalStatus::Living => 1,
            SurvivalStatus::Deceased => 0,
        }
    }

    pub fn parse(cell: &str) -> Option<Self> {
        match crate::data::parse_label(cell)? {
            1 => Some(SurvivalStatus::Living),
            _ => Some(SurvivalStatus::Deceased),
        }
    }
}

/// One patient sample. Mutation and expression vectors are aligned with the
/// owning cohort's gene panels; `None` means the sample had no column in
/// that omics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub sample_id: String,
    #[serde(default)]
    pub patient_id: Option<String>,
    pub source_id: String,
    pub clinical: BTreeMap<ClinicalField, Value>,
    #[serde(default)]
    pub treatment_intensity: Option<TreatmentIntensity>,
    pub survival_status: Option<SurvivalStatus>,
    pub mutations: Option<Vec<u8>>,
    /// NaN marks a missing expression value.
    pub expressions: Option<Vec<f64>>,
}

impl PatientRecord {
    pub fn num(&self, field: ClinicalField) -> Option<f64> {
        self.clinical.get(&field).and_then(Value::as_f64)
    }
}

/// Ingested cohort before cleaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCohort {
    pub source_id: String,
    /// Clinical fields with a column in this cohort's export.
    pub clinical_fields: Vec<ClinicalField>,
    pub mutation_genes: Vec<String>,
    pub expression_genes: Vec<String>,
    pub records: Vec<PatientRecord>,
    /// Omics sample columns with no clinical row; dropped at ingestion.
    #[serde(default)]
    pub unmatched_mutation_samples: usize,
    #[serde(default)]
    pub unmatched_expression_samples: usize,
}

/// Cleaned, merged cohort. Every record has survival status and both omics
/// vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub clinical_fields: Vec<ClinicalField>,
    pub mutation_genes: Vec<String>,
    pub expression_genes: Vec<String>,
    pub records: Vec<PatientRecord>,
}

impl Cohort {
    pub fn mutation_index(&self, gene: &str) -> Option<usize> {
        self.mutation_genes.iter().position(|g| g == gene)
    }

    pub fn expression_index(&self, gene: &str) -> Option<usize> {
        self.expression_genes.iter().position(|g| g == gene)
    }

    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.survival_status.map_or(0, SurvivalStatus::label)).collect()
    }

    /// Re-wraps the cohort as a single raw cohort so it can be cleaned again.
    pub fn into_raw(self, source_id: &str) -> RawCohort {
        RawCohort {
            source_id: source_id.to_string(),
            clinical_fields: self.clinical_fields,
            mutation_genes: self.mutation_genes,
            expression_genes: self.expression_genes,
            records: self.records,
            unmatched_mutation_samples: 0,
            unmatched_expression_samples: 0,
        }
    }

    pub fn read_json(path: &std::path::Path) -> crate::Result<Self> {
        read_json(path)
    }

    pub fn write_json(&self, path: &std::path::Path) -> crate::Result<()> {
        write_json(self, path)
    }
}

impl RawCohort {
    pub fn read_json(path: &std::path::Path) -> crate::Result<Self> {
        read_json(path)
    }

    pub fn write_json(&self, path: &std::path::Path) -> crate::Result<()> {
        write_json(self, path)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> crate::Result<T> {
    let file = std::fs::File::open(path).map_err(|e| crate::Error::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| crate::Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(value: &T, path: &std::path::Path) -> crate::Result<()> {
    let file = std::fs::File::create(path).map_err(|e| crate::Error::io(path, e))?;
    serde_json::to_writer(std::io::BufWriter::new(file), value)
        .map_err(|e| crate::Error::InvalidInput(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedFeature {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub living: usize,
    pub deceased: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CleanReport {
    pub input_samples: usize,
    pub removed_underage: usize,
    pub removed_low_blast: usize,
    pub removed_no_survival: usize,
    pub removed_missing_omics: usize,
    pub removed_duplicates: usize,
    pub dropped_features: Vec<DroppedFeature>,
    pub retained_samples: usize,
    pub class_counts: ClassCounts,
    pub unmatched_omics_samples: usize,
}

impl CleanReport {
    pub fn total_removed(&self) -> usize {
        self.removed_underage
            + self.removed_low_blast
            + self.removed_no_survival
            + self.removed_missing_omics
            + self.removed_duplicates
    }

    /// `input = retained + removals` and class counts sum to retained.
    pub fn balances(&self) -> bool {
        self.input_samples == self.retained_samples + self.total_removed()
            && self.class_counts.living + self.class_counts.deceased == self.retained_samples
    }
}

impl fmt::Display for CleanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input samples:            {}", self.input_samples)?;
        writeln!(f, "removed (age < 18):       {}", self.removed_underage)?;
        writeln!(f, "removed (BM blast < 20%): {}", self.removed_low_blast)?;
        writeln!(f, "removed (no survival):    {}", self.removed_no_survival)?;
        writeln!(f, "removed (missing omics):  {}", self.removed_missing_omics)?;
        writeln!(f, "removed (duplicates):     {}", self.removed_duplicates)?;
        writeln!(f, "retained samples:         {}", self.retained_samples)?;
        writeln!(f, "  living:                 {}", self.class_counts.living)?;
        writeln!(f, "  deceased:               {}", self.class_counts.deceased)?;
        writeln!(f, "unmatched omics samples:  {}", self.unmatched_omics_samples)?;
        let mut by_reason: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for d in &self.dropped_features {
            by_reason.entry(d.reason.as_str()).or_default().push(d.name.as_str());
        }
        writeln!(f, "dropped features:         {}", self.dropped_features.len())?;
        for (reason, names) in by_reason {
            let shown: Vec<&str> = names.iter().take(10).copied().collect();
            let more = if names.len() > 10 { format!(", ... (+{})", names.len() - 10) } else { String::new() };
            writeln!(f, "  {reason}: {} [{}{more}]", names.len(), shown.join(", "))?;
        }
        Ok(())
    }
}
