use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ebm_aml::cohort::{
    categorize_treatment, clean, export_final, impute_knn, ingest, CleanOptions, Cohort, ColumnSpec, DuplicateKey,
    FinalTables, IngestPaths, RawCohort, TreatmentMap,
};
use ebm_aml::data::Dataset;
use ebm_aml::ebm::{train, EbmModel, TrainConfig};
use ebm_aml::eval::{evaluate, run_grid, stratified_split, GridConfig, GridInput, ModelSet, MutationSelection, SplitIndices};
use ebm_aml::explain::DEFAULT_TOP_K;
use ebm_aml::par::Execution;
use ebm_aml::recommend::recommend;
use ebm_aml::select::{
    chi2_select, l1_select, literature_genes, selection_rows, union_with_literature, write_selection_csv, BinaryMatrix, L1Config,
    RealMatrix,
};
use ebm_aml_cli::config::{ServiceConfig, LOG_ENV};
use ebm_aml_cli::patient::{self, PatientRecord};
use ebm_aml_cli::payload::{self, RecommendationPayload};
use ebm_aml_cli::service;

const SPLIT: (f64, f64, f64) = (0.8, 0.1, 0.1);

#[derive(Parser)]
#[command(name = "ebm-aml", version, about = "Survival-outcome models and therapy recommendation for AML cohorts")]
struct Cli {
    /// Log filter (error, warn, info, debug); overrides EBM_AML_LOG.
    #[arg(long, global = true)]
    log_level: Option<String>,
    /// Run every stage on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read one cohort's clinical, mutation and expression exports.
    Ingest(IngestArgs),
    /// Apply the cohort rules to one or more ingested cohorts and merge them.
    Clean(CleanArgs),
    /// Group treatments into intensities and fill missing clinical values.
    Impute(ImputeArgs),
    /// Run the mutation and expression screens and write the final tables.
    SelectFeatures(SelectArgs),
    /// Train a model on the training partition of a split.
    Train(TrainArgs),
    /// Score a model on one partition of a split.
    Evaluate(EvaluateArgs),
    /// Seven feature sets over many seeded splits.
    Grid(GridArgs),
    /// Per-patient probability and additive explanation.
    Explain(PatientArgs),
    /// Score each patient under all four treatment intensities.
    Recommend(PatientArgs),
    /// Start the HTTP API.
    Serve(ServeArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    clinical: PathBuf,
    #[arg(long)]
    mutations: Option<PathBuf>,
    #[arg(long)]
    expression: Option<PathBuf>,
    /// Cohort label stored on every record.
    #[arg(long)]
    source: String,
    /// Header mapping file; canonical headers when omitted.
    #[arg(long)]
    columns: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DupKey {
    SampleId,
    PatientId,
}

#[derive(Args)]
struct CleanArgs {
    /// Ingested cohort files, in priority order for duplicates.
    #[arg(long = "raw", required = true)]
    raw: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "sample-id")]
    duplicate_key: DupKey,
    #[arg(long, default_value_t = 18.0)]
    min_age: f64,
    #[arg(long, default_value_t = 20.0)]
    min_bm_blast: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the cleaning report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ImputeArgs {
    #[arg(long)]
    cohort: PathBuf,
    /// `raw therapy name = intensity` lines.
    #[arg(long)]
    treatment_map: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    cohort: PathBuf,
    /// Split seed; selection reads only its train and validation rows.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Target number of expression genes.
    #[arg(long, default_value_t = 22)]
    target: usize,
    /// Keep only the literature mutation genes.
    #[arg(long)]
    literature_only: bool,
    /// Directory for selection.csv, split.json and the final tables.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory with CLIN.csv, MUT.csv and EXP.csv.
    #[arg(long)]
    tables: PathBuf,
    /// Feature set, e.g. CLIN, MUT+EXP, clin_mut.
    #[arg(long, value_parser = parse_model_set)]
    model_set: ModelSet,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    outer_bags: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_rounds: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Partition {
    Train,
    Validation,
    Test,
    All,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    tables: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "test")]
    partition: Partition,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GridArgs {
    /// Cleaned, imputed cohort; selection is re-run per seed.
    #[arg(long, conflicts_with = "tables", required_unless_present = "tables")]
    cohort: Option<PathBuf>,
    /// Final tables with fixed feature columns.
    #[arg(long)]
    tables: Option<PathBuf>,
    /// Number of seeds, 0..N.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Comma-separated feature sets; all seven when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_model_set)]
    models: Vec<ModelSet>,
    #[arg(long)]
    literature_only: bool,
    #[arg(long)]
    outer_bags: Option<usize>,
    /// Per-seed metrics CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write the median table here.
    #[arg(long)]
    medians: Option<PathBuf>,
}

#[derive(Args)]
struct PatientArgs {
    /// Model file, or a model id registered in the service config.
    #[arg(long)]
    model: String,
    #[arg(long, env = "EBM_AML_CONFIG")]
    config: Option<PathBuf>,
    /// CSV with one patient per row and feature names as headers.
    #[arg(long)]
    patient: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top: usize,
    /// Print the API payloads instead of tables.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "EBM_AML_CONFIG")]
    config: PathBuf,
}

fn parse_model_set(s: &str) -> std::result::Result<ModelSet, String> {
    ModelSet::parse(s).ok_or_else(|| format!("`{s}` is not a feature set (CLIN, MUT, EXP or a `+` combination)"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let level = cli.log_level.clone().or_else(|| std::env::var(LOG_ENV).ok());
    let result = match cli.command {
        Command::Serve(args) => run_serve(args, cli.log_level),
        command => {
            init_logging(level.as_deref(), "warn");
            run(command, exec)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

fn init_logging(level: Option<&str>, default: &str) {
    env_logger::Builder::new().parse_filters(level.unwrap_or(default)).format_timestamp(None).init();
}

fn run(command: Command, exec: Execution) -> Result<()> {
    match command {
        Command::Ingest(a) => run_ingest(a),
        Command::Clean(a) => run_clean(a),
        Command::Impute(a) => run_impute(a, exec),
        Command::SelectFeatures(a) => run_select(a, exec),
        Command::Train(a) => run_train(a, exec),
        Command::Evaluate(a) => run_evaluate(a, exec),
        Command::Grid(a) => run_grid_cmd(a, exec),
        Command::Explain(a) => run_explain(a),
        Command::Recommend(a) => run_recommend(a),
        Command::Serve(_) => unreachable!("handled in main"),
    }
}

fn run_ingest(a: IngestArgs) -> Result<()> {
    let spec = match &a.columns {
        Some(p) => ColumnSpec::read(p)?,
        None => ColumnSpec::canonical(),
    };
    let paths = IngestPaths { clinical: a.clinical, mutation: a.mutations, expression: a.expression };
    let raw = ingest(&paths, &a.source, &spec)?;
    raw.write_json(&a.out)?;
    println!(
        "{}: {} samples, {} clinical fields, {} mutation genes, {} expression genes -> {}",
        a.source,
        raw.records.len(),
        raw.clinical_fields.len(),
        raw.mutation_genes.len(),
        raw.expression_genes.len(),
        a.out.display()
    );
    Ok(())
}

fn run_clean(a: CleanArgs) -> Result<()> {
    let raws = a.raw.iter().map(|p| RawCohort::read_json(p)).collect::<ebm_aml::Result<Vec<_>>>()?;
    let opts = CleanOptions {
        min_age: a.min_age,
        min_bm_blast_pct: a.min_bm_blast,
        duplicate_key: match a.duplicate_key {
            DupKey::SampleId => DuplicateKey::SampleId,
            DupKey::PatientId => DuplicateKey::PatientId,
        },
    };
    let (cohort, report) = clean(&raws, &opts)?;
    cohort.write_json(&a.out)?;
    if let Some(p) = &a.report {
        write_json(p, &report)?;
    }
    print!("{report}");
    Ok(())
}

fn run_impute(a: ImputeArgs, exec: Execution) -> Result<()> {
    let cohort = Cohort::read_json(&a.cohort)?;
    let map = TreatmentMap::read(&a.treatment_map)?;
    let records = categorize_treatment(cohort.records, &map)?;
    let missing: usize = records.iter().map(|r| cohort.clinical_fields.len() - r.clinical.len()).sum();
    let records = impute_knn(&records, &cohort.clinical_fields, a.k, exec)?;
    let cohort = Cohort { records, ..cohort };
    cohort.write_json(&a.out)?;
    println!("{} samples, {missing} clinical values imputed -> {}", cohort.records.len(), a.out.display());
    Ok(())
}

fn run_select(a: SelectArgs, exec: Execution) -> Result<()> {
    let cohort = Cohort::read_json(&a.cohort)?;
    let labels = cohort.labels();
    let split = stratified_split(&labels, SPLIT, a.seed)?;
    let fit = split.fit_rows();
    let chi = chi2_select(&BinaryMatrix::from_cohort(&cohort), &labels, &fit, a.alpha, exec);
    let picks: Vec<&str> = chi.iter().filter(|r| r.selected).map(|r| r.feature.as_str()).collect();
    let genes = if a.literature_only { literature_genes() } else { union_with_literature(&picks) };
    let mutation_genes: Vec<String> = genes.into_iter().filter(|g| cohort.mutation_index(g).is_some()).collect();
    let l1 = l1_select(&RealMatrix::from_cohort(&cohort), &labels, &fit, &L1Config { target_count: a.target, ..L1Config::default() })?;
    let tables = export_final(&cohort, &mutation_genes, &l1.selected_features)?;

    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_selection_csv(&selection_rows(&chi, Some(&l1)), &a.out.join("selection.csv"))?;
    write_json(&a.out.join("split.json"), &split)?;
    tables.write_dir(&a.out)?;
    println!("chi2 picks (p < {}): {}", a.alpha, if picks.is_empty() { "none".to_string() } else { picks.join(", ") });
    println!("mutation genes: {}", mutation_genes.len());
    println!("expression genes: {} at strength {:.4e}", l1.selected_features.len(), l1.chosen_strength);
    println!("tables -> {}", a.out.display());
    Ok(())
}

fn split_for(table: &Dataset, seed: u64) -> Result<SplitIndices> {
    Ok(stratified_split(&table.labels, SPLIT, seed)?)
}

fn run_train(a: TrainArgs, exec: Execution) -> Result<()> {
    let tables = FinalTables::read_dir(&a.tables)?;
    let data = a.model_set.table(&tables)?;
    let split = split_for(&data, a.seed)?;
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        seed: a.seed,
        outer_bags: a.outer_bags.unwrap_or(defaults.outer_bags),
        learning_rate: a.learning_rate.unwrap_or(defaults.learning_rate),
        max_rounds: a.max_rounds.unwrap_or(defaults.max_rounds),
        execution: exec,
        ..defaults
    };
    let model = train(&data.subset_rows(&split.train), &cfg)?;
    model.save(&a.out)?;
    let val = evaluate(&model, &data.subset_rows(&split.validation), a.model_set.id(), "validation");
    println!(
        "{}: {} features, {} training rows, validation AUC {} -> {} ({})",
        a.model_set.id(),
        model.schema.len(),
        split.train.len(),
        val.auc.map_or("NA".into(), |x| format!("{x:.4}")),
        a.out.display(),
        &model.version_hash()[..12]
    );
    Ok(())
}

fn run_evaluate(a: EvaluateArgs, exec: Execution) -> Result<()> {
    let model = EbmModel::load(&a.model)?;
    let tables = FinalTables::read_dir(&a.tables)?;
    let all = Dataset::union(&[&tables.clin, &tables.mutation, &tables.expression])?;
    let names: Vec<&str> = model.schema.iter().map(|s| s.name.as_str()).collect();
    let data = all.select_columns(&names)?;
    let split = split_for(&data, a.seed)?;
    let (name, rows): (&str, Vec<usize>) = match a.partition {
        Partition::Train => ("train", split.train),
        Partition::Validation => ("validation", split.validation),
        Partition::Test => ("test", split.test),
        Partition::All => ("all", (0..data.n_rows()).collect()),
    };
    let part = data.subset_rows(&rows);
    let probs = model.predict_table(&part, exec);
    let id = a.model.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
    let report = ebm_aml::eval::evaluate_scores(&id, name, &probs, &part.labels);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("model {id}, partition {name}, n = {}", report.n);
        println!("tp {}  tn {}  fp {}  fn {}", report.tp, report.tn, report.fp, report.r#fn);
        println!(
            "F1 {:.4}  AUC {}  accuracy {:.4}  precision {:.4}  recall {:.4}",
            report.f1,
            report.auc.map_or("NA".into(), |x| format!("{x:.4}")),
            report.accuracy,
            report.precision,
            report.recall
        );
    }
    Ok(())
}

fn run_grid_cmd(a: GridArgs, exec: Execution) -> Result<()> {
    if a.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let mut config = GridConfig {
        seeds: (0..a.seeds).collect(),
        mutation_selection: if a.literature_only { MutationSelection::LiteratureOnly } else { MutationSelection::LiteraturePlusChi2 },
        execution: exec,
        ..GridConfig::default()
    };
    if !a.models.is_empty() {
        config.models = a.models;
    }
    if let Some(b) = a.outer_bags {
        config.train.outer_bags = b;
    }
    let report = match (&a.cohort, &a.tables) {
        (Some(c), _) => run_grid(GridInput::Cohort(&Cohort::read_json(c)?), &config)?,
        (None, Some(t)) => run_grid(GridInput::Tables(&FinalTables::read_dir(t)?), &config)?,
        (None, None) => bail!("one of --cohort or --tables is required"),
    };
    report.write_csv(&a.out)?;
    let table = report.median_table();
    if let Some(p) = &a.medians {
        std::fs::write(p, &table).with_context(|| format!("writing {}", p.display()))?;
    }
    print!("{table}");
    println!("{} rows -> {}", report.rows.len(), a.out.display());
    Ok(())
}

/// Resolves `--model` as a file path first, then as a registered id.
fn load_model(spec: &str, config: Option<&Path>) -> Result<(String, EbmModel)> {
    let path = Path::new(spec);
    if path.is_file() {
        let id = path.file_stem().map_or(spec.to_string(), |s| s.to_string_lossy().into_owned());
        return Ok((id, EbmModel::load(path)?));
    }
    let Some(config) = config else {
        bail!("`{spec}` is not a model file; pass --config to look it up as a model id");
    };
    let config = ServiceConfig::read(config)?;
    let Some(path) = config.models.get(spec) else {
        bail!("model id `{spec}` is not registered in {}", config.source.as_deref().unwrap_or(Path::new("?")).display());
    };
    Ok((spec.to_string(), EbmModel::load(path)?))
}

fn label(p: &PatientRecord, i: usize) -> String {
    p.id.clone().unwrap_or_else(|| format!("row {}", i + 1))
}

fn run_explain(a: PatientArgs) -> Result<()> {
    let (id, model) = load_model(&a.model, a.config.as_deref())?;
    let hash = model.version_hash();
    let patients = patient::read_csv(&a.patient, &model)?;
    let payloads: Vec<_> = patients
        .iter()
        .map(|p| payload::prediction(&id, &hash, &model, p.id.clone(), &p.record, p.warnings.clone()))
        .collect();
    if a.json {
        println!("{}", serde_json::to_string_pretty(&payloads)?);
        return Ok(());
    }
    println!("model {id} ({})", &hash[..12]);
    for (i, (p, out)) in patients.iter().zip(&payloads).enumerate() {
        let e = &out.explanation;
        println!("\n{}: P(living) = {:.4} ({}), logit {:.4}", label(p, i), out.probability, out.predicted_class, e.logit);
        println!("  {:<44} {:>9.4}", "intercept", e.intercept);
        for c in e.top_k(a.top) {
            let value = c.value.as_ref().map_or("missing".to_string(), |v| v.to_string());
            println!("  {:<44} {:>+9.4}", format!("{} = {value} {}", c.feature, c.bin_label), c.contribution);
        }
        if e.contributions.len() > a.top {
            println!("  ({} more terms)", e.contributions.len() - a.top);
        }
        for w in &out.warnings {
            println!("  warning: {}: {}", w.field, w.message);
        }
    }
    Ok(())
}

fn run_recommend(a: PatientArgs) -> Result<()> {
    let (id, model) = load_model(&a.model, a.config.as_deref())?;
    let hash = model.version_hash();
    let patients = patient::read_csv(&a.patient, &model)?;
    let mut payloads = Vec::with_capacity(patients.len());
    for p in &patients {
        let recommendation = recommend(&model, &p.record)?;
        let warnings = p.warnings.iter().filter(|w| w.field != ebm_aml::data::TREATMENT_COLUMN).cloned().collect();
        payloads.push(RecommendationPayload {
            model_id: id.clone(),
            version_hash: hash.clone(),
            sample_id: p.id.clone(),
            recommendation,
            warnings,
        });
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&payloads)?);
        return Ok(());
    }
    println!("model {id} ({})", &hash[..12]);
    for (i, (p, out)) in patients.iter().zip(&payloads).enumerate() {
        let r = &out.recommendation;
        println!("\n{}", label(p, i));
        println!("  {:<16} {:>9}", "treatment", "P(living)");
        for c in &r.counterfactuals {
            let mark = if c.treatment == r.recommended { "  <- recommended" } else { "" };
            println!("  {:<16} {:>9.4}{mark}", c.treatment.as_str(), c.probability);
        }
        println!("  margin {:.4}", r.margin);
        for w in &out.warnings {
            println!("  warning: {}: {}", w.field, w.message);
        }
    }
    Ok(())
}

fn run_serve(a: ServeArgs, cli_level: Option<String>) -> Result<()> {
    let config = ServiceConfig::read(&a.config)?.with_env_overrides();
    init_logging(Some(cli_level.as_deref().unwrap_or(&config.log_level)), "info");
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(service::serve(config))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
