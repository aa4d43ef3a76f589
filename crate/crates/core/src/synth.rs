//! Seeded synthetic data for tests, benchmarks and demos.
//!
//! Nothing here resembles real patients; the generators only reproduce the
//! shape of the cohort tables and plant known signal.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cohort::{ClinicalField, Cohort, PatientRecord, SurvivalStatus, TreatmentIntensity};
use crate::data::{Column, Dataset, FeatureKind, Value};
use crate::ebm::sigmoid;
use crate::select::LITERATURE_GENES;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// True shape of the first feature in [`additive_dataset`].
pub fn additive_shape(x1: f64) -> f64 {
    2.0 * x1.sin()
}

/// Two continuous features with `logit = 2 sin(x1) + 1[x2 > 0] + noise`,
/// `x1 ~ U(-3, 3)`, `x2 ~ N(0, 1)`, noise `N(0, 0.25^2)`; labels are drawn
/// from the resulting probabilities.
pub fn additive_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.gen_range(-3.0..3.0);
        let b = normal(&mut rng);
        let logit = additive_shape(a) + if b > 0.0 { 1.0 } else { 0.0 } + 0.25 * normal(&mut rng);
        labels.push(u8::from(rng.gen::<f64>() < sigmoid(logit)));
        x1.push(Some(a));
        x2.push(Some(b));
    }
    Dataset::new(
        (0..n).map(|i| format!("row{i:05}")).collect(),
        vec![Column::numeric("x1", FeatureKind::Continuous, x1), Column::numeric("x2", FeatureKind::Continuous, x2)],
        labels,
    )
    .expect("generated columns are aligned")
}

/// Genes of the synthetic mutation panel: the literature genes, the two
/// planted markers and filler genes.
pub fn mutation_panel() -> Vec<String> {
    let mut g: Vec<String> = LITERATURE_GENES.iter().map(|s| s.to_string()).collect();
    g.extend(["PHF6", "TP53"].map(String::from));
    g.extend((1..=14).map(|i| format!("MUTX{i:02}")));
    g
}

pub const INFORMATIVE_EXPRESSION: usize = 8;

/// A cleaned, imputed, categorized cohort of `n` samples.
///
/// Survival depends weakly on age and treatment, moderately on TP53/PHF6
/// mutations and strongly on the first [`INFORMATIVE_EXPRESSION`] of
/// `n_expression` expression genes.
pub fn synthetic_cohort(n: usize, n_expression: usize, seed: u64) -> Cohort {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mutation_genes = mutation_panel();
    let tp53 = mutation_genes.iter().position(|g| g == "TP53").unwrap();
    let phf6 = mutation_genes.iter().position(|g| g == "PHF6").unwrap();
    let expression_genes: Vec<String> = (1..=n_expression).map(|i| format!("EXPG{i:03}")).collect();
    let eln = ["favorable", "intermediate", "adverse"];
    let cyto = ["normal", "complex", "t(8;21)", "inv(16)"];

    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let age: f64 = rng.gen_range(18.0..88.0f64).round();
        let treatment = TreatmentIntensity::ALL[rng.gen_range(0..4)];
        let eln_i = rng.gen_range(0..3);
        let mutations: Vec<u8> = (0..mutation_genes.len()).map(|_| u8::from(rng.gen_bool(0.12))).collect();
        let expressions: Vec<f64> = (0..n_expression).map(|_| normal(&mut rng)).collect();

        let treat_effect = match treatment {
            TreatmentIntensity::HighIntensity => 0.3,
            TreatmentIntensity::Regular => 0.1,
            TreatmentIntensity::Target => 0.0,
            TreatmentIntensity::LowIntensity => -0.3,
        };
        let mut logit = -0.6 - 0.015 * (age - 55.0) + treat_effect - 0.2 * (eln_i as f64 - 1.0);
        logit += -1.2 * f64::from(mutations[tp53]) - 0.9 * f64::from(mutations[phf6]);
        for (k, x) in expressions.iter().take(INFORMATIVE_EXPRESSION).enumerate() {
            let w = if k % 2 == 0 { 0.9 } else { -0.9 };
            logit += w * x;
        }
        let living = rng.gen::<f64>() < sigmoid(logit);

        let mut clinical = BTreeMap::new();
        clinical.insert(ClinicalField::DiagnosisAge, Value::Num(age));
        clinical.insert(ClinicalField::BmBlastPct, Value::Num(rng.gen_range(20.0..100.0f64).round()));
        clinical.insert(ClinicalField::MutationCount, Value::Num(f64::from(mutations.iter().map(|&m| u32::from(m)).sum::<u32>())));
        clinical.insert(ClinicalField::PbBlastPct, Value::Num(rng.gen_range(0.0..100.0f64).round()));
        clinical.insert(ClinicalField::Wbc, Value::Num((rng.gen_range(0.5..150.0f64) * 10.0).round() / 10.0));
        clinical.insert(ClinicalField::Gender, Value::Text(if rng.gen_bool(0.5) { "female" } else { "male" }.into()));
        clinical.insert(ClinicalField::Race, Value::Text(if rng.gen_bool(0.8) { "white" } else { "not_white" }.into()));
        clinical.insert(ClinicalField::CytogeneticInfo, Value::Text(cyto[rng.gen_range(0..cyto.len())].into()));
        clinical.insert(ClinicalField::ElnRisk, Value::Text(eln[eln_i].into()));
        clinical.insert(ClinicalField::Treatment, Value::Text(format!("{treatment} regimen")));

        records.push(PatientRecord {
            sample_id: format!("SYN-{i:04}"),
            patient_id: Some(format!("P{i:04}")),
            source_id: "synthetic".into(),
            clinical,
            treatment_intensity: Some(treatment),
            survival_status: Some(if living { SurvivalStatus::Living } else { SurvivalStatus::Deceased }),
            mutations: Some(mutations),
            expressions: Some(expressions),
        });
    }
    Cohort { clinical_fields: ClinicalField::ALL.to_vec(), mutation_genes, expression_genes, records }
}
