use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{ClassCounts, ClinicalField, CleanReport, Cohort, DroppedFeature, PatientRecord, RawCohort, SurvivalStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicateKey {
    #[default]
    SampleId,
    /// Falls back to the sample id for records without a patient id.
    PatientId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanOptions {
    pub min_age: f64,
    pub min_bm_blast_pct: f64,
    pub duplicate_key: DuplicateKey,
}

impl Default for CleanOptions {
    fn default() -> Self {
        Self { min_age: 18.0, min_bm_blast_pct: 20.0, duplicate_key: DuplicateKey::SampleId }
    }
}

/// Applies the cohort rules in order, attributing each removed sample to the
/// first rule it fails: age, bone-marrow blasts, survival status, omics
/// coverage, duplicate key (first occurrence in cohort/file order is kept).
///
/// Missing age or blast values do not fail the threshold rules; they are left
/// for imputation. Features are then intersected across cohorts, and mutation
/// genes with no mutated retained sample are dropped.
pub fn clean(cohorts: &[RawCohort], opts: &CleanOptions) -> Result<(Cohort, CleanReport)> {
    let mut report = CleanReport {
        input_samples: cohorts.iter().map(|c| c.records.len()).sum(),
        unmatched_omics_samples: cohorts
            .iter()
            .map(|c| c.unmatched_mutation_samples + c.unmatched_expression_samples)
            .sum(),
        ..CleanReport::default()
    };

    // Rule 4: features present in every cohort. Gene panels are sorted so the
    // result does not depend on cohort order.
    let clinical_fields: Vec<ClinicalField> = ClinicalField::ALL
        .into_iter()
        .filter(|f| cohorts.iter().all(|c| c.clinical_fields.contains(f)))
        .collect();
    for f in ClinicalField::ALL {
        if !clinical_fields.contains(&f) && cohorts.iter().any(|c| c.clinical_fields.contains(&f)) {
            report.dropped_features.push(DroppedFeature { name: f.key().into(), reason: "not in every cohort".into() });
        }
    }
    let (mutation_genes, dropped_mut) = intersect(cohorts.iter().map(|c| &c.mutation_genes));
    let (expression_genes, dropped_exp) = intersect(cohorts.iter().map(|c| &c.expression_genes));
    report.dropped_features.extend(
        dropped_mut.into_iter().map(|g| DroppedFeature { name: g, reason: "mutation gene not in every cohort".into() }),
    );
    report.dropped_features.extend(
        dropped_exp.into_iter().map(|g| DroppedFeature { name: g, reason: "expression gene not in every cohort".into() }),
    );

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for cohort in cohorts {
        let mut_pos = positions(&cohort.mutation_genes, &mutation_genes);
        let exp_pos = positions(&cohort.expression_genes, &expression_genes);
        for r in &cohort.records {
            if r.num(ClinicalField::DiagnosisAge).is_some_and(|a| a < opts.min_age) {
                report.removed_underage += 1;
            } else if r.num(ClinicalField::BmBlastPct).is_some_and(|b| b < opts.min_bm_blast_pct) {
                report.removed_low_blast += 1;
            } else if r.survival_status.is_none() {
                report.removed_no_survival += 1;
            } else if r.mutations.is_none() || r.expressions.is_none() {
                report.removed_missing_omics += 1;
            } else if !seen.insert(duplicate_key(r, opts.duplicate_key)) {
                report.removed_duplicates += 1;
            } else {
                let mut kept = r.clone();
                kept.clinical.retain(|f, _| clinical_fields.contains(f));
                let muts = r.mutations.as_deref().unwrap_or_default();
                kept.mutations = Some(mut_pos.iter().map(|&i| muts[i]).collect());
                let exps = r.expressions.as_deref().unwrap_or_default();
                kept.expressions = Some(exp_pos.iter().map(|&i| exps[i]).collect());
                records.push(kept);
            }
        }
    }

    // Mutation genes never mutated in the retained samples carry no signal.
    let mutated: Vec<bool> = (0..mutation_genes.len())
        .map(|g| records.iter().any(|r| r.mutations.as_ref().is_some_and(|m| m[g] != 0)))
        .collect();
    let mut kept_genes = Vec::new();
    for (g, name) in mutation_genes.into_iter().enumerate() {
        if mutated[g] {
            kept_genes.push(name);
        } else {
            report.dropped_features.push(DroppedFeature { name, reason: "no mutations in retained samples".into() });
        }
    }
    if kept_genes.len() != mutated.len() {
        for r in &mut records {
            if let Some(m) = r.mutations.as_mut() {
                *m = m.iter().zip(&mutated).filter(|(_, keep)| **keep).map(|(v, _)| *v).collect();
            }
        }
    }

    report.retained_samples = records.len();
    report.class_counts = ClassCounts {
        living: records.iter().filter(|r| r.survival_status == Some(SurvivalStatus::Living)).count(),
        deceased: records.iter().filter(|r| r.survival_status == Some(SurvivalStatus::Deceased)).count(),
    };
    debug_assert!(report.balances());
    if records.is_empty() {
        return Err(Error::EmptyCohort { report: Box::new(report) });
    }
    Ok((Cohort { clinical_fields, mutation_genes: kept_genes, expression_genes, records }, report))
}

fn duplicate_key(r: &PatientRecord, key: DuplicateKey) -> String {
    match key {
        DuplicateKey::SampleId => r.sample_id.clone(),
        DuplicateKey::PatientId => r.patient_id.clone().unwrap_or_else(|| r.sample_id.clone()),
    }
}

/// Sorted intersection of several gene panels, plus the sorted names that
/// appear in some but not all.
fn intersect<'a>(panels: impl Iterator<Item = &'a Vec<String>>) -> (Vec<String>, Vec<String>) {
    let sets: Vec<BTreeSet<&str>> = panels.map(|p| p.iter().map(String::as_str).collect()).collect();
    let Some(first) = sets.first() else {
        return (Vec::new(), Vec::new());
    };
    let all: BTreeSet<&str> = sets.iter().flatten().copied().collect();
    let common: BTreeSet<&str> = first.iter().copied().filter(|g| sets.iter().all(|s| s.contains(g))).collect();
    let dropped = all.difference(&common).map(|s| s.to_string()).collect();
    (common.into_iter().map(str::to_string).collect(), dropped)
}

fn positions(panel: &[String], wanted: &[String]) -> Vec<usize> {
    let index: HashMap<&str, usize> = panel.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
    wanted.iter().map(|g| index[g.as_str()]).collect()
}
