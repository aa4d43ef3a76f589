use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use log::{info, warn};

use super::{ClinicalField, PatientRecord, RawCohort, SurvivalStatus};
use crate::data::{check_unique_headers, is_missing_marker};
use crate::error::{Error, Result};
use crate::kv::KvFile;

/// Maps export headers onto canonical fields.
///
/// ```text
/// sample_id = Sample ID
/// patient_id = Patient ID            # optional
/// clinical.diagnosis_age = Diagnosis Age
/// clinical.survival_status = Overall Survival Status
/// gene_id = Hugo_Symbol              # gene tables: genes are rows
/// gene_skip = Entrez_Gene_Id         # optional, comma-separated
/// ```
///
/// Clinical keys are the [`ClinicalField`] keys plus `survival_status`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSpec {
    pub sample_id: String,
    pub patient_id: Option<String>,
    pub clinical: Vec<(ClinicalField, String)>,
    pub survival_status: String,
    pub gene_id: String,
    pub gene_skip: Vec<String>,
}

impl ColumnSpec {
    pub fn from_kv(kv: &KvFile, origin: &str) -> Result<Self> {
        let required = |key: &str| {
            kv.get(key).map(str::to_string).ok_or_else(|| Error::Config {
                location: origin.to_string(),
                message: format!("missing required key `{key}`"),
            })
        };
        let mut clinical = Vec::new();
        let mut survival = None;
        for (key, header) in kv.with_prefix("clinical.") {
            if key == "survival_status" {
                survival = Some(header.to_string());
                continue;
            }
            let field = ClinicalField::from_key(key).ok_or_else(|| Error::Config {
                location: origin.to_string(),
                message: format!("unknown clinical field `{key}`"),
            })?;
            clinical.push((field, header.to_string()));
        }
        Ok(Self {
            sample_id: required("sample_id")?,
            patient_id: kv.get("patient_id").map(str::to_string),
            clinical,
            survival_status: survival.ok_or_else(|| Error::Config {
                location: origin.to_string(),
                message: "missing required key `clinical.survival_status`".into(),
            })?,
            gene_id: kv.get("gene_id").unwrap_or("Hugo_Symbol").to_string(),
            gene_skip: kv
                .get("gene_skip")
                .map(|s| s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
                .unwrap_or_default(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_kv(&KvFile::read(path)?, &path.display().to_string())
    }

    /// Canonical headers, identical to the field keys.
    pub fn canonical() -> Self {
        Self {
            sample_id: "sample_id".into(),
            patient_id: None,
            clinical: ClinicalField::ALL.iter().map(|f| (*f, f.key().to_string())).collect(),
            survival_status: "survival_status".into(),
            gene_id: "gene".into(),
            gene_skip: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestPaths {
    pub clinical: PathBuf,
    pub mutation: Option<PathBuf>,
    pub expression: Option<PathBuf>,
}

struct GeneTable {
    genes: Vec<String>,
    samples: Vec<String>,
    /// `values[sample][gene]`
    values: Vec<Vec<f64>>,
}

/// Reads one cohort's clinical table and (optionally) its gene-by-sample
/// mutation and expression tables, joining omics columns onto clinical rows
/// by sample id.
pub fn ingest(paths: &IngestPaths, source_id: &str, spec: &ColumnSpec) -> Result<RawCohort> {
    let (clinical_fields, mut records) = read_clinical(&paths.clinical, source_id, spec)?;

    let mut unmatched_mutation_samples = 0;
    let mut unmatched_expression_samples = 0;
    let mut mutation_genes = Vec::new();
    let mut expression_genes = Vec::new();

    if let Some(path) = &paths.mutation {
        let table = read_gene_table(path, spec, true)?;
        unmatched_mutation_samples = attach(&mut records, &table, |r, v| {
            r.mutations = Some(v.iter().map(|&x| u8::from(x != 0.0)).collect());
        });
        if unmatched_mutation_samples > 0 {
            info!("{}: dropped {unmatched_mutation_samples} mutation samples with no clinical row", path.display());
        }
        mutation_genes = table.genes;
    } else {
        records.iter_mut().for_each(|r| r.mutations = Some(Vec::new()));
    }
    if let Some(path) = &paths.expression {
        let table = read_gene_table(path, spec, false)?;
        unmatched_expression_samples = attach(&mut records, &table, |r, v| r.expressions = Some(v.to_vec()));
        if unmatched_expression_samples > 0 {
            info!("{}: dropped {unmatched_expression_samples} expression samples with no clinical row", path.display());
        }
        expression_genes = table.genes;
    } else {
        records.iter_mut().for_each(|r| r.expressions = Some(Vec::new()));
    }

    Ok(RawCohort {
        source_id: source_id.to_string(),
        clinical_fields,
        mutation_genes,
        expression_genes,
        records,
        unmatched_mutation_samples,
        unmatched_expression_samples,
    })
}

fn attach(records: &mut [PatientRecord], table: &GeneTable, mut set: impl FnMut(&mut PatientRecord, &[f64])) -> usize {
    let index: HashMap<&str, usize> = table.samples.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut matched = vec![false; table.samples.len()];
    for r in records.iter_mut() {
        if let Some(&i) = index.get(r.sample_id.as_str()) {
            set(r, &table.values[i]);
            matched[i] = true;
        }
    }
    matched.iter().filter(|m| !**m).count()
}

fn open_csv(path: &Path) -> Result<(csv::Reader<std::fs::File>, Vec<String>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(file);
    let headers: Vec<String> = rdr.headers().map_err(|e| Error::csv(path, e))?.iter().map(|h| h.trim().to_string()).collect();
    check_unique_headers(&headers, path)?;
    Ok((rdr, headers))
}

fn cell(rec: &csv::StringRecord, c: usize) -> Option<&str> {
    rec.get(c).filter(|s| !is_missing_marker(s)).map(str::trim)
}

fn read_clinical(path: &Path, source_id: &str, spec: &ColumnSpec) -> Result<(Vec<ClinicalField>, Vec<PatientRecord>)> {
    let (mut rdr, headers) = open_csv(path)?;
    let position = |h: &str| headers.iter().position(|x| x == h);
    let id_col = position(&spec.sample_id).ok_or_else(|| Error::Ingest {
        path: path.to_path_buf(),
        message: format!("missing sample-id column `{}`", spec.sample_id),
    })?;
    let patient_col = spec.patient_id.as_deref().and_then(position);
    let survival_col = position(&spec.survival_status);
    if survival_col.is_none() {
        warn!("{}: no survival column `{}`; every row will lack survival status", path.display(), spec.survival_status);
    }
    let mut fields = Vec::new();
    let mut field_cols = Vec::new();
    for (field, header) in &spec.clinical {
        match position(header) {
            Some(c) => {
                fields.push(*field);
                field_cols.push((*field, c));
            }
            None => warn!("{}: clinical column `{header}` ({field}) not present", path.display()),
        }
    }
    fields.sort();

    let mut records = Vec::new();
    for (rowno, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let Some(sample_id) = cell(&rec, id_col) else {
            warn!("{}: row {} has no sample id; skipped", path.display(), rowno + 2);
            continue;
        };
        let mut clinical = BTreeMap::new();
        for &(field, c) in &field_cols {
            if let Some(v) = cell(&rec, c).and_then(|s| field.parse(s)) {
                clinical.insert(field, v);
            }
        }
        records.push(PatientRecord {
            sample_id: sample_id.to_string(),
            patient_id: patient_col.and_then(|c| cell(&rec, c)).map(str::to_string),
            source_id: source_id.to_string(),
            clinical,
            treatment_intensity: None,
            survival_status: survival_col.and_then(|c| cell(&rec, c)).and_then(SurvivalStatus::parse),
            mutations: None,
            expressions: None,
        });
    }
    Ok((fields, records))
}

fn read_gene_table(path: &Path, spec: &ColumnSpec, binary: bool) -> Result<GeneTable> {
    let (mut rdr, headers) = open_csv(path)?;
    let gene_col = headers.iter().position(|h| *h == spec.gene_id).ok_or_else(|| Error::Ingest {
        path: path.to_path_buf(),
        message: format!("missing gene-id column `{}`", spec.gene_id),
    })?;
    let sample_cols: Vec<usize> =
        (0..headers.len()).filter(|&i| i != gene_col && !spec.gene_skip.contains(&headers[i])).collect();
    let samples: Vec<String> = sample_cols.iter().map(|&i| headers[i].clone()).collect();
    let mut genes = Vec::new();
    let mut seen = HashMap::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); samples.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let gene = rec.get(gene_col).unwrap_or("").trim();
        if is_missing_marker(gene) {
            continue;
        }
        if seen.insert(gene.to_string(), ()).is_some() {
            warn!("{}: duplicate gene row `{gene}`; keeping the first", path.display());
            continue;
        }
        genes.push(gene.to_string());
        for (slot, &c) in values.iter_mut().zip(&sample_cols) {
            let raw = rec.get(c).unwrap_or("");
            slot.push(parse_gene_cell(raw, binary));
        }
    }
    Ok(GeneTable { genes, samples, values })
}

/// Mutation cells: numeric values are flags (non-zero = mutated), other
/// text is a mutation call, missing means not mutated. Expression cells:
/// numeric or NaN.
fn parse_gene_cell(raw: &str, binary: bool) -> f64 {
    let missing = is_missing_marker(raw);
    let parsed = raw.trim().parse::<f64>().ok().filter(|x| x.is_finite());
    if binary {
        match (missing, parsed) {
            (true, _) => 0.0,
            (false, Some(x)) => f64::from(u8::from(x != 0.0)),
            (false, None) => 1.0,
        }
    } else if missing {
        f64::NAN
    } else {
        parsed.unwrap_or(f64::NAN)
    }
}
