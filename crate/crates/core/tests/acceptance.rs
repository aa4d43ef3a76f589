//! Acceptance suite. Prints one PASS / FAIL / NOT RUN line per criterion and
//! exits nonzero if any criterion fails.
//!
//! Data-dependent criteria need `EBM_AML_DATA_DIR` pointing at a directory
//! with `cohort.json` (cleaned, imputed, categorized cohort as written by the
//! `impute` command) and/or the final tables `CLIN.csv`, `MUT.csv`,
//! `EXP.csv`.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ebm_aml::cohort::{export_final, Cohort, FinalTables, TreatmentIntensity, CLIN_FEATURES};
use ebm_aml::data::{FeatureKind, Record, Value, LIVING, TREATMENT_COLUMN};
use ebm_aml::ebm::{train, BinSpec, ClassCounts, EbmModel, FeatureSchema, ModelMeta, TermFunction, TrainConfig};
use ebm_aml::eval::{
    auc, evaluate_scores, run_grid, stratified_split, GridConfig, GridInput, ModelSet,
};
use ebm_aml::explain::explain_local;
use ebm_aml::recommend::recommend;
use ebm_aml::select::{
    chi2_select, chi2_sf, chi2_statistic, l1_select, union_with_literature, BinaryMatrix, L1Config, RealMatrix,
};
use ebm_aml::synth;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    NotRun(String),
}

type Check = fn() -> Outcome;

fn main() -> ExitCode {
    let checks: [(&str, Check); 9] = [
        ("additivity", additivity),
        ("centering", centering),
        ("metric-oracles", metric_oracles),
        ("chi2-oracle", chi2_oracle),
        ("synthetic-recovery", synthetic_recovery),
        ("pipeline-reproduction", pipeline_reproduction),
        ("grid-reproduction", grid_reproduction),
        ("recommendation-contract", recommendation_contract),
        ("serialization-round-trip", serialization_round_trip),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::NotRun(d) => ("NOT RUN", d),
        };
        println!("{tag:<8} {name:<26} [{secs:7.2}s] {detail}");
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn quick_config(seed: u64) -> TrainConfig {
    TrainConfig { outer_bags: 4, max_rounds: 1500, seed, ..TrainConfig::default() }
}

/// One trained model per feature-set combination, plus the additive task.
fn trained_zoo() -> Vec<EbmModel> {
    let cohort = synth::synthetic_cohort(240, 30, 3);
    let tables = export_final(&cohort, &["TP53", "PHF6", "FLT3", "NPM1"], &cohort.expression_genes[..10]).unwrap();
    let mut zoo: Vec<EbmModel> =
        ModelSet::ALL.iter().map(|m| train(&m.table(&tables).unwrap(), &quick_config(7)).unwrap()).collect();
    zoo.push(train(&synth::additive_dataset(1000, 4), &quick_config(1)).unwrap());
    zoo
}

/// Trained models plus randomly built ones covering every bin kind.
fn model_zoo() -> Vec<EbmModel> {
    let mut zoo = trained_zoo();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..5 {
        zoo.push(random_model(&mut rng));
    }
    zoo
}

fn hand_meta() -> ModelMeta {
    ModelMeta {
        config: TrainConfig::default(),
        positive_class: LIVING.into(),
        training_class_counts: ClassCounts { living: 1, deceased: 1 },
        training_rows: 2,
        bag_rounds: vec![],
        importance_basis: "hand-built".into(),
    }
}

fn random_model(rng: &mut ChaCha8Rng) -> EbmModel {
    let mut schema = Vec::new();
    let mut terms = Vec::new();
    for j in 0..rng.gen_range(1..12) {
        let name = format!("f{j:02}");
        let (kind, bins) = match rng.gen_range(0..3) {
            0 => {
                let mut cuts: Vec<f64> = (0..rng.gen_range(1..40)).map(|_| rng.gen_range(-50.0..50.0)).collect();
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                (FeatureKind::Continuous, BinSpec::Continuous { min: cuts[0] - 1.0, max: cuts[cuts.len() - 1] + 1.0, cuts })
            }
            1 => (
                FeatureKind::Categorical,
                BinSpec::Categorical { categories: (0..rng.gen_range(1..6)).map(|c| format!("c{c}")).collect() },
            ),
            _ => (FeatureKind::Binary, BinSpec::Binary),
        };
        let s = FeatureSchema { name: name.clone(), kind, bins };
        let k = s.n_bins();
        terms.push(TermFunction {
            feature: name,
            scores: (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect(),
            bin_counts: (0..k).map(|_| rng.gen_range(0..20)).collect(),
        });
        schema.push(s);
    }
    EbmModel::from_parts(schema, terms, rng.gen_range(-2.0..2.0), hand_meta())
}

fn random_record(model: &EbmModel, rng: &mut ChaCha8Rng) -> Record {
    let mut r = Record::new();
    for s in &model.schema {
        if rng.gen_bool(0.1) {
            continue;
        }
        let v = match &s.bins {
            BinSpec::Continuous { min, max, .. } => Value::Num(rng.gen_range(min - 5.0..max + 5.0)),
            BinSpec::Categorical { categories } => {
                if rng.gen_bool(0.1) {
                    Value::Text("never-seen".into())
                } else {
                    Value::Text(categories[rng.gen_range(0..categories.len())].clone())
                }
            }
            BinSpec::Binary => Value::Num(f64::from(rng.gen_range(0..2u8))),
        };
        r.insert(s.name.clone(), v);
    }
    r
}

/// Independent lookup: linear scans instead of the model's binary searches.
fn oracle_logit(model: &EbmModel, record: &Record) -> f64 {
    let mut logit = model.intercept;
    for (s, t) in model.schema.iter().zip(&model.terms) {
        let bin = match (record.get(&s.name), &s.bins) {
            (None, _) => 0,
            (Some(v), BinSpec::Continuous { cuts, .. }) => {
                let x = v.as_f64().unwrap();
                1 + cuts.iter().filter(|&&c| c <= x).count()
            }
            (Some(v), BinSpec::Categorical { categories }) => {
                let code = v.category_code();
                categories.iter().position(|c| *c == code).map_or(0, |i| i + 1)
            }
            (Some(v), BinSpec::Binary) => match v.as_f64() {
                Some(x) if x == 0.0 => 1,
                Some(x) if x == 1.0 => 2,
                _ => 0,
            },
        };
        logit += t.scores[bin];
    }
    logit
}

fn additivity() -> Outcome {
    let zoo = model_zoo();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let start = Instant::now();
    let mut mismatches = 0;
    for i in 0..1000 {
        let model = &zoo[i % zoo.len()];
        let record = random_record(model, &mut rng);
        let logit = model.predict_logit(&record);
        let explanation = explain_local(model, &record);
        if explanation.reconstructed_logit().to_bits() != logit.to_bits()
            || oracle_logit(model, &record).to_bits() != logit.to_bits()
            || explanation.contributions.len() != model.terms.len()
        {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("1000 pairs over {} models, {mismatches} bitwise mismatches, {:.3}s (< 10s)", zoo.len(), elapsed.as_secs_f64()),
    )
}

fn centering() -> Outcome {
    let zoo = trained_zoo();
    let mut worst = 0.0f64;
    let mut n_terms = 0;
    for m in &zoo {
        for t in &m.terms {
            worst = worst.max(t.weighted_mean().abs());
            n_terms += 1;
        }
    }
    verdict(worst < 1e-9, format!("{n_terms} trained terms in {} models, max |weighted mean| = {worst:.3e} (< 1e-9)", zoo.len()))
}

/// Exact rational AUC by pair counting: (2 wins + ties) / (2 P N).
fn pair_auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let (mut twice, mut pairs) = (0u64, 0u64);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1;
                twice += if scores[i] > scores[j] { 2 } else if scores[i] == scores[j] { 1 } else { 0 };
            }
        }
    }
    (pairs > 0).then(|| twice as f64 / (2 * pairs) as f64)
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let (mut count_err, mut auc_err, mut worst) = (0, 0, 0.0f64);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=20);
        // coarse scores force ties
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..11u8)) / 10.0).collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let m = evaluate_scores("m", "test", &scores, &labels);

        // confusion matrix by brute force over (predicted, actual)
        let mut cm = [[0usize; 2]; 2];
        for (s, &l) in scores.iter().zip(&labels) {
            cm[usize::from(*s >= 0.5)][usize::from(l)] += 1;
        }
        if (m.tp, m.tn, m.fp, m.r#fn) != (cm[1][1], cm[0][0], cm[1][0], cm[0][1]) {
            count_err += 1;
        }
        let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
        for c in 0..2 {
            let predicted = cm[c][0] + cm[c][1];
            let support = cm[0][c] + cm[1][c];
            let pc = if predicted == 0 { 0.0 } else { cm[c][c] as f64 / predicted as f64 };
            let rc = if support == 0 { 0.0 } else { cm[c][c] as f64 / support as f64 };
            let fc = if pc + rc == 0.0 { 0.0 } else { 2.0 * pc * rc / (pc + rc) };
            let w = support as f64 / n as f64;
            p += w * pc;
            r += w * rc;
            f += w * fc;
        }
        let acc = (cm[0][0] + cm[1][1]) as f64 / n as f64;
        if m.accuracy != acc {
            count_err += 1;
        }
        worst = worst.max((m.precision - p).abs()).max((m.recall - r).abs()).max((m.f1 - f).abs());
        let want = pair_auc(&scores, &labels);
        if m.auc != want || auc(&scores, &labels) != want {
            auc_err += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        count_err == 0 && auc_err == 0 && worst <= 1e-12 && elapsed < Duration::from_secs(10),
        format!(
            "1000 sets (n <= 20): counts/accuracy mismatches {count_err}, AUC mismatches {auc_err} (bitwise), \
             weighted P/R/F1 max diff {worst:.1e} (float rounding only), {:.3}s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Upper tail of chi-squared(1) by Simpson's rule after substituting
/// t = u^2: integral from sqrt(x) of 2 phi(u) du, truncated at sqrt(x) + 40.
fn chi2_sf_dof1_numeric(x: f64) -> f64 {
    let (a, b) = (x.sqrt(), x.sqrt() + 40.0);
    let n = 200_000;
    let h = (b - a) / n as f64;
    let f = |u: f64| 2.0 * (-u * u / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn chi2_oracle() -> Outcome {
    let mut tables = 0u64;
    let mut worst = 0.0f64;
    for a in 0..=30u64 {
        for b in 0..=30 - a {
            for c in 0..=30 - a {
                for d in 0..=(30 - c).min(30 - b) {
                    tables += 1;
                    let o = [[a, b], [c, d]].map(|r| r.map(|x| x as f64));
                    let n = (a + b + c + d) as f64;
                    let rows = [o[0][0] + o[0][1], o[1][0] + o[1][1]];
                    let cols = [o[0][0] + o[1][0], o[0][1] + o[1][1]];
                    let mut want = 0.0;
                    if rows.iter().chain(&cols).all(|&m| m > 0.0) {
                        for i in 0..2 {
                            for j in 0..2 {
                                let e = rows[i] * cols[j] / n;
                                want += (o[i][j] - e).powi(2) / e;
                            }
                        }
                    }
                    let got = chi2_statistic([[a, b], [c, d]]);
                    worst = worst.max((got - want).abs());
                }
            }
        }
    }
    let sf = chi2_sf(3.841, 1.0).unwrap();
    let numeric = chi2_sf_dof1_numeric(3.841);
    let ok = worst <= 1e-9 && (sf - numeric).abs() < 1e-8 && (sf - 0.05).abs() <= 1e-3;
    verdict(
        ok,
        format!(
            "{tables} tables with margins <= 30, max |diff| {worst:.1e} (<= 1e-9); sf(3.841, 1) = {sf:.6} vs integration {numeric:.6} (0.0500 +- 1e-3)"
        ),
    )
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for k in i..=j {
                r[idx[k]] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn synthetic_recovery() -> Outcome {
    let data = synth::additive_dataset(2000, 42);
    let start = Instant::now();
    let model = train(&data, &TrainConfig { seed: 42, ..TrainConfig::default() }).unwrap();
    let elapsed = start.elapsed();
    let s = &model.schema[0];
    let (mut learned, mut truth) = (Vec::new(), Vec::new());
    for b in 1..s.n_bins() {
        learned.push(model.terms[0].scores[b]);
        truth.push(synth::additive_shape(s.bin_center(b).unwrap()));
    }
    let rho = spearman(&learned, &truth);
    verdict(
        rho >= 0.9 && elapsed < Duration::from_secs(60),
        format!("Spearman {rho:.4} over {} bins (>= 0.9), training {:.2}s (< 60s)", learned.len(), elapsed.as_secs_f64()),
    )
}

fn data_dir() -> Option<PathBuf> {
    std::env::var_os("EBM_AML_DATA_DIR").map(PathBuf::from)
}

/// Mutation genes of the published MUT table.
const PUBLISHED_MUT: [&str; 16] = [
    "FLT3", "NPM1", "DNMT3A", "IDH1", "IDH2", "TET2", "ASXL1", "RUNX1", "CEBPA", "NRAS", "KRAS", "SF3B1", "U2AF1", "SRSF2",
    "PHF6", "TP53",
];

/// Expression genes of the published EXP table.
const PUBLISHED_EXP: [&str; 22] = [
    "CCDC144A", "CPNE8", "CYP2E1", "CYTL1", "HAS1", "KIAA0141", "KIAA1549", "LAMA2", "LTK", "MICALL2", "MX1", "PPM1H",
    "PTH2R", "PTP4A3", "RAD21", "RGS9BP", "SLC29A2", "TMED4", "TNFSF11", "TNK1", "TSKS", "XIST",
];

fn genes(table: &ebm_aml::data::Dataset) -> BTreeSet<String> {
    table.feature_names().into_iter().filter(|n| *n != TREATMENT_COLUMN).map(str::to_string).collect()
}

/// Row count and column sets of exported tables: CLIN must hold exactly the
/// clinical features, MUT and EXP their genes plus the treatment column.
fn table_shape(t: &FinalTables) -> (bool, bool, String) {
    let clin_ok = t.clin.feature_names() == CLIN_FEATURES;
    let treat_ok = [&t.mutation, &t.expression].iter().all(|d| d.column(TREATMENT_COLUMN).is_some());
    let mut_set: BTreeSet<String> = PUBLISHED_MUT.iter().map(|s| s.to_string()).collect();
    let exp_set: BTreeSet<String> = PUBLISHED_EXP.iter().map(|s| s.to_string()).collect();
    let (m, e) = (genes(&t.mutation), genes(&t.expression));
    let rows = t.clin.n_rows();
    let shape_ok = rows == 272 && clin_ok && treat_ok;
    let sets_ok = m == mut_set && e == exp_set;
    let detail = format!(
        "rows {rows} (272); CLIN features match: {clin_ok}; MUT genes {} ({} of 16 published); EXP genes {} ({} of 22 published)",
        m.len(),
        m.intersection(&mut_set).count(),
        e.len(),
        e.intersection(&exp_set).count()
    );
    (shape_ok, sets_ok, detail)
}

fn pipeline_reproduction() -> Outcome {
    let Some(dir) = data_dir() else {
        return Outcome::NotRun("EBM_AML_DATA_DIR not set; needs the published cohort".into());
    };
    let path = dir.join("cohort.json");
    if !path.exists() {
        if !dir.join(FinalTables::CLIN_FILE).exists() {
            return Outcome::NotRun(format!("no cohort.json or final tables in {}", dir.display()));
        }
        return match FinalTables::read_dir(&dir) {
            Ok(t) => {
                let (shape_ok, sets_ok, detail) = table_shape(&t);
                if shape_ok && sets_ok {
                    Outcome::NotRun(format!("final tables only: {detail}; selection needs cohort.json"))
                } else {
                    Outcome::Fail(format!("final tables: {detail}"))
                }
            }
            Err(e) => Outcome::Fail(e.to_string()),
        };
    }
    let cohort = match Cohort::read_json(&path) {
        Ok(c) => c,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let labels = cohort.labels();
    let split = stratified_split(&labels, (0.8, 0.1, 0.1), 0).unwrap();
    let fit = split.fit_rows();
    let chi = chi2_select(&BinaryMatrix::from_cohort(&cohort), &labels, &fit, 0.05, Default::default());
    let picked: Vec<&str> = chi.iter().filter(|r| r.selected).map(|r| r.feature.as_str()).collect();
    let l1 = match l1_select(&RealMatrix::from_cohort(&cohort), &labels, &fit, &L1Config::default()) {
        Ok(p) => p,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let mut_genes: Vec<String> =
        union_with_literature(&picked).into_iter().filter(|g| cohort.mutation_index(g).is_some()).collect();
    let tables = match export_final(&cohort, &mut_genes, &l1.selected_features) {
        Ok(t) => t,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    // The expression genes depend on the split, so only their count is held
    // to the published table; overlap is reported.
    let (shape_ok, _, detail) = table_shape(&tables);
    let chi_ok = picked.contains(&"TP53") && picked.contains(&"PHF6");
    let l1_ok = (18..=26).contains(&l1.selected_features.len());
    verdict(
        shape_ok && chi_ok && l1_ok,
        format!("{detail}; chi2 picks {picked:?} (need TP53, PHF6); L1 count {} (18..=26)", l1.selected_features.len()),
    )
}

fn grid_reproduction() -> Outcome {
    let Some(dir) = data_dir() else {
        return Outcome::NotRun("EBM_AML_DATA_DIR not set; needs the published final tables or cohort".into());
    };
    let cohort_path = dir.join("cohort.json");
    let config = GridConfig { models: vec![ModelSet::Clin, ModelSet::Mut, ModelSet::Exp], ..GridConfig::default() };
    let start = Instant::now();
    let report = if cohort_path.exists() {
        Cohort::read_json(&cohort_path).and_then(|c| run_grid(GridInput::Cohort(&c), &config))
    } else if dir.join(FinalTables::CLIN_FILE).exists() {
        FinalTables::read_dir(&dir).and_then(|t| run_grid(GridInput::Tables(&t), &config))
    } else {
        return Outcome::NotRun(format!("no cohort.json or final tables in {}", dir.display()));
    };
    let report = match report {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let elapsed = start.elapsed();
    let med = |m| report.median_for(m).and_then(|r| r.auc).unwrap_or(f64::NAN);
    let (clin, mt, exp) = (med(ModelSet::Clin), med(ModelSet::Mut), med(ModelSet::Exp));
    verdict(
        exp > mt && mt >= clin && exp >= 0.70 && clin <= 0.65 && elapsed < Duration::from_secs(15 * 60),
        format!(
            "median AUC over 20 seeds EXP {exp:.3} > MUT {mt:.3} >= CLIN {clin:.3}; EXP >= 0.70, CLIN <= 0.65; {:.1}s (< 15 min)",
            elapsed.as_secs_f64()
        ),
    )
}

fn treatment_model(scores: [f64; 4]) -> EbmModel {
    let mut categories: Vec<String> = TreatmentIntensity::ALL.iter().map(|t| t.as_str().to_string()).collect();
    categories.sort();
    let schema = vec![FeatureSchema {
        name: TREATMENT_COLUMN.into(),
        kind: FeatureKind::Categorical,
        bins: BinSpec::Categorical { categories },
    }];
    let mut s = vec![0.0];
    s.extend(scores);
    let terms = vec![TermFunction { feature: TREATMENT_COLUMN.into(), scores: s, bin_counts: vec![0, 1, 1, 1, 1] }];
    EbmModel::from_parts(schema, terms, -0.3, hand_meta())
}

fn recommendation_contract() -> Outcome {
    let mut problems = Vec::new();
    let tie = recommend(&treatment_model([0.0; 4]), &Record::new()).unwrap();
    if tie.recommended != TreatmentIntensity::LowIntensity {
        problems.push(format!("all-zero term recommended {}", tie.recommended));
    }
    let cohort = synth::synthetic_cohort(200, 20, 8);
    let tables = export_final(&cohort, &["TP53", "PHF6"], &cohort.expression_genes[..5]).unwrap();
    let model = train(&ModelSet::ClinMut.table(&tables).unwrap(), &quick_config(3)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let record = random_record(&model, &mut rng);
        let a = recommend(&model, &record).unwrap();
        let b = recommend(&model, &record).unwrap();
        let mut seen: Vec<TreatmentIntensity> = a.counterfactuals.iter().map(|c| c.treatment).collect();
        seen.sort();
        seen.dedup();
        let best = a.counterfactuals.iter().map(|c| c.probability).fold(f64::NEG_INFINITY, f64::max);
        let first_best = a.counterfactuals.iter().find(|c| c.probability == best).unwrap().treatment;
        if a.counterfactuals.len() != 4 || seen.len() != 4 || a != b || a.recommended != first_best {
            problems.push("counterfactual set, determinism or argmax violated".into());
            break;
        }
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            "4 unique counterfactuals, deterministic argmax on 50 records; all-zero term ties to low-intensity".into()
        } else {
            problems.join("; ")
        },
    )
}

fn serialization_round_trip() -> Outcome {
    let cohort = synth::synthetic_cohort(200, 20, 9);
    let tables = export_final(&cohort, &["TP53", "PHF6", "FLT3"], &cohort.expression_genes[..8]).unwrap();
    let model = train(&ModelSet::ClinMutExp.table(&tables).unwrap(), &quick_config(4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let loaded = EbmModel::load(&path).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut diffs = 0;
    for _ in 0..100 {
        let r = random_record(&model, &mut rng);
        if model.predict_logit(&r).to_bits() != loaded.predict_logit(&r).to_bits()
            || model.predict_proba(&r).to_bits() != loaded.predict_proba(&r).to_bits()
        {
            diffs += 1;
        }
    }
    let same_hash = model.version_hash() == loaded.version_hash();
    verdict(diffs == 0 && same_hash, format!("100 records, {diffs} bitwise differences; version hash preserved: {same_hash}"))
}
