use std::path::Path;

use super::{ClinicalField, Cohort};
use crate::data::{Column, Dataset, FeatureKind, TREATMENT_COLUMN};
use crate::error::{Error, Result};

/// CLIN feature columns in export order; with the class column these are the
/// 11 clinical attributes.
pub const CLIN_FEATURES: [&str; 10] = [
    "diagnosis_age",
    "bm_blast_pct",
    "mutation_count",
    "pb_blast_pct",
    "wbc",
    "gender",
    "race_white",
    "cytogenetic_info",
    "eln_risk",
    TREATMENT_COLUMN,
];

/// Row-aligned CLIN, MUT and EXP tables keyed by sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalTables {
    pub clin: Dataset,
    pub mutation: Dataset,
    pub expression: Dataset,
}

impl FinalTables {
    pub const CLIN_FILE: &'static str = "CLIN.csv";
    pub const MUT_FILE: &'static str = "MUT.csv";
    pub const EXP_FILE: &'static str = "EXP.csv";

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.clin.write_csv(&dir.join(Self::CLIN_FILE))?;
        self.mutation.write_csv(&dir.join(Self::MUT_FILE))?;
        self.expression.write_csv(&dir.join(Self::EXP_FILE))
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let tables = Self {
            clin: Dataset::read_csv(&dir.join(Self::CLIN_FILE))?,
            mutation: Dataset::read_csv(&dir.join(Self::MUT_FILE))?,
            expression: Dataset::read_csv(&dir.join(Self::EXP_FILE))?,
        };
        tables.check_aligned()?;
        Ok(tables)
    }

    pub fn check_aligned(&self) -> Result<()> {
        Dataset::union(&[&self.clin, &self.mutation, &self.expression]).map(|_| ())
    }
}

/// Builds the final tables: CLIN with the fixed clinical columns, MUT and
/// EXP with the requested genes plus the treatment column. Every table
/// carries the class label and the same rows in cohort order.
pub fn export_final<M: AsRef<str>, E: AsRef<str>>(cohort: &Cohort, mutation_genes: &[M], expression_genes: &[E]) -> Result<FinalTables> {
    let recs = &cohort.records;
    let ids: Vec<String> = recs.iter().map(|r| r.sample_id.clone()).collect();
    let labels = cohort.labels();
    if let Some(r) = recs.iter().find(|r| r.survival_status.is_none()) {
        return Err(Error::InvalidInput(format!("sample `{}` has no survival status", r.sample_id)));
    }
    if let Some(r) = recs.iter().find(|r| r.treatment_intensity.is_none()) {
        return Err(Error::InvalidInput(format!("sample `{}` has no treatment intensity; categorize first", r.sample_id)));
    }
    let treatment = Column::categorical(TREATMENT_COLUMN, recs.iter().map(|r| r.treatment_intensity.map(|t| t.as_str())));

    let mut clin_cols = Vec::new();
    for field in ClinicalField::ALL.into_iter().filter(|f| *f != ClinicalField::Treatment) {
        if !cohort.clinical_fields.contains(&field) {
            return Err(Error::UnknownFeature(field.key().into()));
        }
        let values = recs.iter().map(|r| r.clinical.get(&field));
        clin_cols.push(match field {
            f if f.is_continuous() => Column::numeric(f.key(), FeatureKind::Continuous, values.map(|v| v.and_then(|v| v.as_f64()))),
            ClinicalField::Race => Column::numeric(
                "race_white",
                FeatureKind::Binary,
                values.map(|v| v.map(|v| if v.category_code() == "white" { 1.0 } else { 0.0 })),
            ),
            f => Column::categorical(f.key(), values.map(|v| v.map(|v| v.category_code()))),
        });
    }
    clin_cols.push(treatment.clone());
    debug_assert_eq!(clin_cols.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), CLIN_FEATURES);

    let mut mut_cols = Vec::new();
    for g in mutation_genes {
        let g = g.as_ref();
        let idx = cohort.mutation_index(g).ok_or_else(|| Error::UnknownFeature(g.into()))?;
        mut_cols.push(Column::numeric(
            g,
            FeatureKind::Binary,
            recs.iter().map(|r| r.mutations.as_ref().map(|m| f64::from(m[idx]))),
        ));
    }
    mut_cols.push(treatment.clone());

    let mut exp_cols = Vec::new();
    for g in expression_genes {
        let g = g.as_ref();
        let idx = cohort.expression_index(g).ok_or_else(|| Error::UnknownFeature(g.into()))?;
        exp_cols.push(Column::numeric(
            g,
            FeatureKind::Continuous,
            recs.iter().map(|r| r.expressions.as_ref().map(|e| e[idx]).filter(|x| x.is_finite())),
        ));
    }
    exp_cols.push(treatment);

    Ok(FinalTables {
        clin: Dataset::new(ids.clone(), clin_cols, labels.clone())?,
        mutation: Dataset::new(ids.clone(), mut_cols, labels.clone())?,
        expression: Dataset::new(ids, exp_cols, labels)?,
    })
}
