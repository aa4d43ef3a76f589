//! The seven-model experiment grid over repeated stratified holdouts.

use std::fmt::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, MetricsReport};
use super::split::{stratified_split, SplitIndices};
use crate::cohort::{export_final, Cohort, FinalTables};
use crate::data::{Dataset, TREATMENT_COLUMN};
use crate::ebm::{train, TrainConfig};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::select::{chi2_select, l1_select, literature_genes, union_with_literature, BinaryMatrix, L1Config, RealMatrix, LITERATURE_GENES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelSet {
    #[serde(rename = "CLIN")]
    Clin,
    #[serde(rename = "MUT")]
    Mut,
    #[serde(rename = "EXP")]
    Exp,
    #[serde(rename = "CLIN+MUT")]
    ClinMut,
    #[serde(rename = "CLIN+EXP")]
    ClinExp,
    #[serde(rename = "MUT+EXP")]
    MutExp,
    #[serde(rename = "CLIN+MUT+EXP")]
    ClinMutExp,
}

impl ModelSet {
    pub const ALL: [ModelSet; 7] = [
        ModelSet::Clin,
        ModelSet::Mut,
        ModelSet::Exp,
        ModelSet::ClinMut,
        ModelSet::ClinExp,
        ModelSet::MutExp,
        ModelSet::ClinMutExp,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ModelSet::Clin => "CLIN",
            ModelSet::Mut => "MUT",
            ModelSet::Exp => "EXP",
            ModelSet::ClinMut => "CLIN+MUT",
            ModelSet::ClinExp => "CLIN+EXP",
            ModelSet::MutExp => "MUT+EXP",
            ModelSet::ClinMutExp => "CLIN+MUT+EXP",
        }
    }

    /// Accepts `CLIN+MUT` as well as `clin_mut` style ids.
    pub fn parse(s: &str) -> Option<Self> {
        let norm = s.trim().to_ascii_uppercase().replace(['_', '-', ' '], "+");
        Self::ALL.into_iter().find(|m| m.id() == norm)
    }

    /// Which of (CLIN, MUT, EXP) the set draws columns from.
    pub fn parts(self) -> [bool; 3] {
        let id = self.id();
        ["CLIN", "MUT", "EXP"].map(|p| id.split('+').any(|x| x == p))
    }

    /// Column union of the chosen tables; shared columns appear once.
    pub fn table(self, tables: &FinalTables) -> Result<Dataset> {
        let picked: Vec<&Dataset> = [&tables.clin, &tables.mutation, &tables.expression]
            .into_iter()
            .zip(self.parts())
            .filter_map(|(t, on)| on.then_some(t))
            .collect();
        Dataset::union(&picked)
    }
}

impl fmt::Display for ModelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationSelection {
    /// Literature genes plus genes passing the chi-squared screen.
    #[default]
    LiteraturePlusChi2,
    /// Literature genes only.
    LiteratureOnly,
}

#[derive(Debug, Clone)]
pub struct GridConfig {
    pub seeds: Vec<u64>,
    pub fractions: (f64, f64, f64),
    pub train: TrainConfig,
    pub models: Vec<ModelSet>,
    pub mutation_selection: MutationSelection,
    pub chi2_alpha: f64,
    pub l1: L1Config,
    pub execution: Execution,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            seeds: (0..20).collect(),
            fractions: (0.8, 0.1, 0.1),
            train: TrainConfig::default(),
            models: ModelSet::ALL.to_vec(),
            mutation_selection: MutationSelection::default(),
            chi2_alpha: 0.05,
            l1: L1Config::default(),
            execution: Execution::default(),
        }
    }
}

pub enum GridInput<'a> {
    /// Final tables with their feature columns already fixed; only the
    /// mutation-selection toggle narrows the MUT table.
    Tables(&'a FinalTables),
    /// A cleaned, imputed and categorized cohort; feature selection is
    /// re-run for every seed on that seed's train and validation rows.
    Cohort(&'a Cohort),
}

/// Genes chosen for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSelection {
    pub seed: u64,
    pub mutation_genes: Vec<String>,
    pub expression_genes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub model: ModelSet,
    pub seed: u64,
    pub n_features: usize,
    pub metrics: MetricsReport,
}

/// Median over seeds of each metric for one model set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianRow {
    pub model: ModelSet,
    pub seeds: usize,
    pub f1: f64,
    pub auc: Option<f64>,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    /// Test-partition metrics per (model, seed), ordered by model then seed.
    pub rows: Vec<GridRow>,
    pub medians: Vec<MedianRow>,
    pub selections: Vec<SeedSelection>,
}

struct SeedPlan {
    split: SplitIndices,
    tables: FinalTables,
    selection: SeedSelection,
}

pub fn run_grid(input: GridInput<'_>, config: &GridConfig) -> Result<GridReport> {
    if config.seeds.is_empty() || config.models.is_empty() {
        return Err(Error::InvalidInput("grid needs at least one seed and one model set".into()));
    }
    let plans: Vec<SeedPlan> = par::map_slice(config.execution, &config.seeds, |&seed| plan_seed(&input, config, seed))
        .into_iter()
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, ModelSet)> =
        config.models.iter().flat_map(|&m| (0..plans.len()).map(move |p| (p, m))).collect();
    let rows: Vec<GridRow> = par::map_slice(config.execution, &cells, |&(p, m)| run_cell(&plans[p], m, config))
        .into_iter()
        .collect::<Result<_>>()?;

    let medians = config.models.iter().map(|&m| median_row(m, &rows)).collect();
    Ok(GridReport { rows, medians, selections: plans.into_iter().map(|p| p.selection).collect() })
}

fn plan_seed(input: &GridInput<'_>, config: &GridConfig, seed: u64) -> Result<SeedPlan> {
    match input {
        GridInput::Tables(t) => {
            t.check_aligned()?;
            let split = stratified_split(&t.clin.labels, config.fractions, seed)?;
            let mut tables = (*t).clone();
            if config.mutation_selection == MutationSelection::LiteratureOnly {
                let keep: Vec<&str> = tables
                    .mutation
                    .feature_names()
                    .into_iter()
                    .filter(|n| *n == TREATMENT_COLUMN || LITERATURE_GENES.contains(n))
                    .collect();
                tables.mutation = tables.mutation.select_columns(&keep)?;
            }
            let genes = |d: &Dataset| d.feature_names().into_iter().filter(|n| *n != TREATMENT_COLUMN).map(String::from).collect();
            let selection = SeedSelection { seed, mutation_genes: genes(&tables.mutation), expression_genes: genes(&tables.expression) };
            Ok(SeedPlan { split, tables, selection })
        }
        GridInput::Cohort(c) => {
            let labels = c.labels();
            let split = stratified_split(&labels, config.fractions, seed)?;
            let fit = split.fit_rows();
            let present = |g: &String| c.mutation_index(g).is_some();
            let mutation_genes: Vec<String> = match config.mutation_selection {
                MutationSelection::LiteratureOnly => literature_genes().into_iter().filter(present).collect(),
                MutationSelection::LiteraturePlusChi2 => {
                    let chi = chi2_select(&BinaryMatrix::from_cohort(c), &labels, &fit, config.chi2_alpha, Execution::Sequential);
                    let picks: Vec<&str> = chi.iter().filter(|r| r.selected).map(|r| r.feature.as_str()).collect();
                    union_with_literature(&picks).into_iter().filter(present).collect()
                }
            };
            let expression_genes = if c.expression_genes.is_empty() {
                Vec::new()
            } else {
                l1_select(&RealMatrix::from_cohort(c), &labels, &fit, &config.l1)?.selected_features
            };
            let tables = export_final(c, &mutation_genes, &expression_genes)?;
            Ok(SeedPlan { split, tables, selection: SeedSelection { seed, mutation_genes, expression_genes } })
        }
    }
}

fn run_cell(plan: &SeedPlan, model: ModelSet, config: &GridConfig) -> Result<GridRow> {
    let table = model.table(&plan.tables)?;
    let train_cfg = TrainConfig { seed: plan.split.seed, execution: Execution::Sequential, ..config.train.clone() };
    let fitted = train(&table.subset_rows(&plan.split.train), &train_cfg)?;
    let metrics = evaluate(&fitted, &table.subset_rows(&plan.split.test), model.id(), "test");
    log::info!("{} seed {}: test auc {:?}", model, plan.split.seed, metrics.auc);
    Ok(GridRow { model, seed: plan.split.seed, n_features: table.columns.len(), metrics })
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 })
}

fn median_row(model: ModelSet, rows: &[GridRow]) -> MedianRow {
    let mine: Vec<&MetricsReport> = rows.iter().filter(|r| r.model == model).map(|r| &r.metrics).collect();
    let med = |f: &dyn Fn(&MetricsReport) -> f64| median(&mut mine.iter().map(|m| f(m)).collect::<Vec<_>>()).unwrap_or(f64::NAN);
    MedianRow {
        model,
        seeds: mine.len(),
        f1: med(&|m| m.f1),
        auc: median(&mut mine.iter().filter_map(|m| m.auc).collect::<Vec<_>>()),
        accuracy: med(&|m| m.accuracy),
        precision: med(&|m| m.precision),
        recall: med(&|m| m.recall),
    }
}

impl GridReport {
    /// Median of each model set by id.
    pub fn median_for(&self, model: ModelSet) -> Option<&MedianRow> {
        self.medians.iter().find(|m| m.model == model)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record([
            "model", "seed", "partition", "n", "n_features", "tp", "tn", "fp", "fn", "f1", "auc", "accuracy", "precision", "recall",
        ])
        .map_err(|e| Error::csv(path, e))?;
        for r in &self.rows {
            let m = &r.metrics;
            w.write_record([
                r.model.id().to_string(),
                r.seed.to_string(),
                m.partition.clone(),
                m.n.to_string(),
                r.n_features.to_string(),
                m.tp.to_string(),
                m.tn.to_string(),
                m.fp.to_string(),
                m.r#fn.to_string(),
                m.f1.to_string(),
                m.auc.map_or_else(|| "NA".into(), |a| a.to_string()),
                m.accuracy.to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Median table with columns Model, F1-Score, AUC, Accuracy, Precision,
    /// Recall.
    pub fn median_table(&self) -> String {
        let mut out = format!("{:<14}{:>10}{:>8}{:>10}{:>11}{:>8}\n", "Model", "F1-Score", "AUC", "Accuracy", "Precision", "Recall");
        for m in &self.medians {
            let auc = m.auc.map_or_else(|| "NA".into(), |a| format!("{a:.2}"));
            let _ = writeln!(
                out,
                "{:<14}{:>10.2}{:>8}{:>10.2}{:>11.2}{:>8.2}",
                m.model.id(),
                m.f1,
                auc,
                m.accuracy,
                m.precision,
                m.recall
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_set_ids_and_parts() {
        assert_eq!(ModelSet::ALL.len(), 7);
        assert_eq!(ModelSet::parse("clin_mut"), Some(ModelSet::ClinMut));
        assert_eq!(ModelSet::parse("CLIN+MUT+EXP"), Some(ModelSet::ClinMutExp));
        assert_eq!(ModelSet::MutExp.parts(), [false, true, true]);
        assert_eq!(ModelSet::parse("ALL"), None);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }
}
