//! Tabular feature data shared by selection, training and evaluation.
//!
//! A [`Dataset`] is column-major: one [`Column`] per feature plus a binary
//! label vector (1 = living, 0 = deceased) and the sample ids that key rows.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SAMPLE_ID: &str = "sample_id";
pub const CLASS_COLUMN: &str = "overall_survival_status";
pub const TREATMENT_COLUMN: &str = "treatment_intensity";

pub const LIVING: &str = "living";
pub const DECEASED: &str = "deceased";

/// Clinical columns that are categorical even when their codes look numeric.
pub const CATEGORICAL_COLUMNS: &[&str] = &["gender", "cytogenetic_info", "eln_risk", TREATMENT_COLUMN];

/// A single non-missing cell. Missing cells are `None` wherever an
/// `Option<Value>` appears.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Text(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Text(s) => s.trim().parse().ok(),
        }
    }

    /// Category code for this value; integral numbers render without a
    /// fractional part so `1.0` and `"1"` name the same category.
    pub fn category_code(&self) -> String {
        match self {
            Value::Text(s) => s.trim().to_string(),
            Value::Num(x) => format_number(*x),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => f.write_str(&format_number(*x)),
            Value::Text(s) => f.write_str(s),
        }
    }
}

pub(crate) fn format_number(x: f64) -> String {
    if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// Recognizes the missing-cell markers: empty, `NA`, `NaN` (any case).
pub fn is_missing_marker(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan")
}

/// A patient record keyed by feature name. Absent keys are missing values.
pub type Record = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    Categorical,
    Binary,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Continuous => "continuous",
            FeatureKind::Categorical => "categorical",
            FeatureKind::Binary => "binary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: FeatureKind,
    pub values: Vec<Option<Value>>,
}

impl Column {
    pub fn numeric(name: impl Into<String>, kind: FeatureKind, values: impl IntoIterator<Item = Option<f64>>) -> Self {
        Self { name: name.into(), kind, values: values.into_iter().map(|v| v.map(Value::Num)).collect() }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, values: impl IntoIterator<Item = Option<S>>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical,
            values: values.into_iter().map(|v| v.map(|s| Value::Text(s.into()))).collect(),
        }
    }

    /// Numeric view; non-numeric and missing cells become NaN.
    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.as_ref().and_then(Value::as_f64).unwrap_or(f64::NAN)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub sample_ids: Vec<String>,
    pub columns: Vec<Column>,
    /// 1 = living (positive class), 0 = deceased.
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(sample_ids: Vec<String>, columns: Vec<Column>, labels: Vec<u8>) -> Result<Self> {
        let n = sample_ids.len();
        if labels.len() != n {
            return Err(Error::InvalidInput(format!("{} labels for {n} rows", labels.len())));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if c.values.len() != n {
                return Err(Error::InvalidInput(format!("column `{}` has {} values for {n} rows", c.name, c.values.len())));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate column `{}`", c.name)));
            }
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidInput(format!("label {bad} is not binary")));
        }
        Ok(Self { sample_ids, columns, labels })
    }

    pub fn n_rows(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn record(&self, row: usize) -> Record {
        self.columns
            .iter()
            .filter_map(|c| c.values[row].clone().map(|v| (c.name.clone(), v)))
            .collect()
    }

    pub fn subset_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            sample_ids: rows.iter().map(|&r| self.sample_ids[r].clone()).collect(),
            columns: self
                .columns
                .iter()
                .map(|c| Column { name: c.name.clone(), kind: c.kind, values: rows.iter().map(|&r| c.values[r].clone()).collect() })
                .collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    /// Keeps the named columns, in the order given.
    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let columns = names
            .iter()
            .map(|n| self.column(n.as_ref()).cloned().ok_or_else(|| Error::UnknownFeature(n.as_ref().to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { sample_ids: self.sample_ids.clone(), columns, labels: self.labels.clone() })
    }

    /// Column union of row-aligned tables. Columns already present (the
    /// shared treatment column, typically) are kept once, from the first
    /// table that has them. Tables must list the same samples in the same
    /// order with identical labels.
    pub fn union(tables: &[&Dataset]) -> Result<Dataset> {
        let Some(first) = tables.first() else {
            return Err(Error::InvalidInput("no tables to combine".into()));
        };
        let mut columns: Vec<Column> = Vec::new();
        for t in tables {
            if t.sample_ids != first.sample_ids {
                return Err(Error::InvalidInput("tables are not row-aligned by sample_id".into()));
            }
            if t.labels != first.labels {
                return Err(Error::InvalidInput("tables disagree on class labels".into()));
            }
            for c in &t.columns {
                if !columns.iter().any(|e| e.name == c.name) {
                    columns.push(c.clone());
                }
            }
        }
        Dataset::new(first.sample_ids.clone(), columns, first.labels.clone())
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let living = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - living, living]
    }

    /// Reads a final-table CSV: `sample_id`, feature columns, and
    /// `overall_survival_status` (`living`/`deceased`, or 1/0).
    pub fn read_csv(path: &Path) -> Result<Dataset> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, path)
    }

    pub fn from_reader<R: std::io::Read>(reader: R, origin: &Path) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers: Vec<String> =
            rdr.headers().map_err(|e| Error::csv(origin, e))?.iter().map(|h| h.trim().to_string()).collect();
        check_unique_headers(&headers, origin)?;
        let id_col = headers.iter().position(|h| h == SAMPLE_ID).ok_or_else(|| Error::Ingest {
            path: origin.to_path_buf(),
            message: format!("missing `{SAMPLE_ID}` column"),
        })?;
        let class_col = headers.iter().position(|h| h == CLASS_COLUMN).ok_or_else(|| Error::Ingest {
            path: origin.to_path_buf(),
            message: format!("missing `{CLASS_COLUMN}` column"),
        })?;
        let feature_cols: Vec<usize> = (0..headers.len()).filter(|&i| i != id_col && i != class_col).collect();
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        let mut raw: Vec<Vec<Option<String>>> = vec![Vec::new(); feature_cols.len()];
        for (rowno, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::csv(origin, e))?;
            ids.push(rec.get(id_col).unwrap_or("").trim().to_string());
            let class = rec.get(class_col).unwrap_or("");
            labels.push(parse_label(class).ok_or_else(|| Error::Ingest {
                path: origin.to_path_buf(),
                message: format!("row {}: unrecognized class `{class}`", rowno + 2),
            })?);
            for (slot, &ci) in raw.iter_mut().zip(&feature_cols) {
                let cell = rec.get(ci).unwrap_or("");
                slot.push((!is_missing_marker(cell)).then(|| cell.trim().to_string()));
            }
        }
        let columns = feature_cols.iter().zip(raw).map(|(&ci, cells)| typed_column(&headers[ci], cells)).collect();
        Dataset::new(ids, columns, labels)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_writer(file).map_err(|e| Error::csv(path, e))
    }

    pub fn to_writer<W: std::io::Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![SAMPLE_ID.to_string()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        header.push(CLASS_COLUMN.to_string());
        w.write_record(&header)?;
        for r in 0..self.n_rows() {
            let mut row = vec![self.sample_ids[r].clone()];
            row.extend(self.columns.iter().map(|c| c.values[r].as_ref().map(|v| v.to_string()).unwrap_or_default()));
            row.push(if self.labels[r] == 1 { LIVING } else { DECEASED }.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn parse_label(cell: &str) -> Option<u8> {
    let t = cell.trim().to_ascii_lowercase();
    if t == "1" || t.contains("living") || t == "alive" {
        Some(1)
    } else if t == "0" || t.contains("deceased") || t == "dead" {
        Some(0)
    } else {
        None
    }
}

pub(crate) fn check_unique_headers(headers: &[String], origin: &Path) -> Result<()> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for h in headers {
        *seen.entry(h.as_str()).or_default() += 1;
    }
    let mut dups: Vec<&str> = seen.into_iter().filter(|(_, n)| *n > 1).map(|(h, _)| h).collect();
    if dups.is_empty() {
        return Ok(());
    }
    dups.sort_unstable();
    Err(Error::Ingest { path: origin.to_path_buf(), message: format!("duplicated header names: {}", dups.join(", ")) })
}

/// Infers a column's kind from its name and cells: known clinical
/// categoricals stay categorical; all-numeric columns drawn from {0,1} are
/// binary; other numeric columns are continuous; anything else is
/// categorical.
pub fn typed_column(name: &str, cells: Vec<Option<String>>) -> Column {
    let numeric: Option<Vec<Option<f64>>> = if CATEGORICAL_COLUMNS.contains(&name) {
        None
    } else {
        cells.iter().map(|c| match c { None => Some(None), Some(s) => s.parse::<f64>().ok().map(Some) }).collect()
    };
    match numeric {
        Some(nums) if nums.iter().any(Option::is_some) => {
            let binary = nums.iter().flatten().all(|&x| x == 0.0 || x == 1.0);
            let kind = if binary { FeatureKind::Binary } else { FeatureKind::Continuous };
            Column::numeric(name, kind, nums)
        }
        _ => Column::categorical(name, cells),
    }
}
