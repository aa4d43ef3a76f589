//! Feature selection on train+validation rows: chi-squared screening of
//! mutation flags and an L1-regularized linear classifier path over
//! expression values.

mod chi2;
mod l1;

use std::path::Path;

use serde::Serialize;

use crate::cohort::Cohort;
use crate::data::{Dataset, FeatureKind};
use crate::error::{Error, Result};

pub use chi2::{chi2_select, chi2_sf, chi2_statistic, contingency, ln_gamma, Chi2Result};
pub use l1::{fit_l1_svm, l1_select, L1Config, L1Fit, L1Path};

/// Mutation genes reported as established AML markers.
pub const LITERATURE_GENES: [&str; 14] = [
    "FLT3", "NPM1", "DNMT3A", "IDH1", "IDH2", "TET2", "ASXL1", "RUNX1", "CEBPA", "NRAS", "KRAS", "SF3B1", "U2AF1", "SRSF2",
];

pub fn literature_genes() -> Vec<String> {
    LITERATURE_GENES.iter().map(|g| g.to_string()).collect()
}

/// Literature genes followed by any extra picks not already listed.
pub fn union_with_literature<S: AsRef<str>>(picks: &[S]) -> Vec<String> {
    let mut out = literature_genes();
    for p in picks {
        if !out.iter().any(|g| g == p.as_ref()) {
            out.push(p.as_ref().to_string());
        }
    }
    out
}

/// Named 0/1 columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMatrix {
    pub names: Vec<String>,
    pub columns: Vec<Vec<u8>>,
}

/// Named real columns; NaN marks missing.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl BinaryMatrix {
    pub fn from_cohort(cohort: &Cohort) -> Self {
        let columns = (0..cohort.mutation_genes.len())
            .map(|g| cohort.records.iter().map(|r| r.mutations.as_ref().map_or(0, |m| m[g])).collect())
            .collect();
        Self { names: cohort.mutation_genes.clone(), columns }
    }

    /// Binary columns of a dataset; missing cells count as 0.
    pub fn from_dataset(ds: &Dataset) -> Self {
        let (names, columns) = ds
            .columns
            .iter()
            .filter(|c| c.kind == FeatureKind::Binary)
            .map(|c| (c.name.clone(), c.as_f64().iter().map(|&x| u8::from(x == 1.0)).collect()))
            .unzip();
        Self { names, columns }
    }
}

impl RealMatrix {
    pub fn from_cohort(cohort: &Cohort) -> Self {
        let columns = (0..cohort.expression_genes.len())
            .map(|g| cohort.records.iter().map(|r| r.expressions.as_ref().map_or(f64::NAN, |e| e[g])).collect())
            .collect();
        Self { names: cohort.expression_genes.clone(), columns }
    }

    pub fn from_dataset(ds: &Dataset) -> Self {
        let (names, columns) =
            ds.columns.iter().filter(|c| c.kind == FeatureKind::Continuous).map(|c| (c.name.clone(), c.as_f64())).unzip();
        Self { names, columns }
    }
}

/// One line of the exported selection report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionRow {
    pub method: &'static str,
    pub feature: String,
    /// Chi-squared statistic, or the coefficient at the chosen strength.
    pub score: f64,
    /// P-value, or the chosen regularization strength.
    pub parameter: f64,
    pub selected: bool,
}

pub fn selection_rows(chi2: &[Chi2Result], l1: Option<&L1Path>) -> Vec<SelectionRow> {
    let mut rows: Vec<SelectionRow> = chi2
        .iter()
        .map(|c| SelectionRow {
            method: "chi2",
            feature: c.feature.clone(),
            score: c.statistic,
            parameter: c.p_value,
            selected: c.selected,
        })
        .collect();
    if let Some(path) = l1 {
        let coefs = &path.coefficients[path.chosen];
        rows.extend(path.features.iter().zip(coefs).map(|(f, &w)| SelectionRow {
            method: "l1",
            feature: f.clone(),
            score: w,
            parameter: path.chosen_strength,
            selected: w != 0.0,
        }));
    }
    rows
}

pub fn write_selection_csv(rows: &[SelectionRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
