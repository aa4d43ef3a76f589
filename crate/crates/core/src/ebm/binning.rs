use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::{format_number, Column, Dataset, FeatureKind, Value};
use crate::error::{Error, Result};

pub const MISSING_BIN: usize = 0;

/// How raw values map onto bins. Bin 0 is always the missing/unseen bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BinSpec {
    /// Data bin `k` (1-based) covers `[cuts[k-2], cuts[k-1])`, with open
    /// ends below the first cut and above the last. `min`/`max` are the
    /// observed training range, used for labels and bin centers.
    Continuous { cuts: Vec<f64>, min: f64, max: f64 },
    /// Data bin `k` is `categories[k-1]`; codes sorted ascending.
    Categorical { categories: Vec<String> },
    /// Bins 1 and 2 hold 0 and 1.
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub name: String,
    pub kind: FeatureKind,
    pub bins: BinSpec,
}

impl FeatureSchema {
    /// Total bins including the missing bin.
    pub fn n_bins(&self) -> usize {
        1 + match &self.bins {
            BinSpec::Continuous { cuts, .. } => cuts.len() + 1,
            BinSpec::Categorical { categories } => categories.len(),
            BinSpec::Binary => 2,
        }
    }

    pub fn bin_of(&self, value: Option<&Value>) -> usize {
        let Some(v) = value else {
            return MISSING_BIN;
        };
        match &self.bins {
            BinSpec::Continuous { cuts, .. } => match v.as_f64() {
                Some(x) if x.is_finite() => 1 + cuts.partition_point(|&c| c <= x),
                _ => MISSING_BIN,
            },
            BinSpec::Categorical { categories } => {
                let code = v.category_code();
                categories.binary_search(&code).map_or(MISSING_BIN, |i| i + 1)
            }
            BinSpec::Binary => match v.as_f64() {
                Some(x) if x == 0.0 => 1,
                Some(x) if x == 1.0 => 2,
                _ => match v.category_code().to_ascii_lowercase().as_str() {
                    "true" => 2,
                    "false" => 1,
                    _ => MISSING_BIN,
                },
            },
        }
    }

    /// Human-readable bin label: `missing`, a category code, or a half-open
    /// interval with 4 significant digits.
    pub fn bin_label(&self, bin: usize) -> String {
        if bin == MISSING_BIN {
            return "missing".into();
        }
        match &self.bins {
            BinSpec::Continuous { cuts, .. } => {
                let lo = if bin == 1 { "-inf".to_string() } else { sig4(cuts[bin - 2]) };
                let hi = if bin == cuts.len() + 1 { "+inf".to_string() } else { sig4(cuts[bin - 1]) };
                format!("[{lo}, {hi})")
            }
            BinSpec::Categorical { categories } => categories[bin - 1].clone(),
            BinSpec::Binary => (bin - 1).to_string(),
        }
    }

    /// Representative value of a continuous data bin: the midpoint of its
    /// interval, with the open ends clipped to the observed range.
    pub fn bin_center(&self, bin: usize) -> Option<f64> {
        let BinSpec::Continuous { cuts, min, max } = &self.bins else {
            return None;
        };
        if bin == MISSING_BIN || bin > cuts.len() + 1 {
            return None;
        }
        let lo = if bin == 1 { *min } else { cuts[bin - 2] };
        let hi = if bin == cuts.len() + 1 { *max } else { cuts[bin - 1] };
        Some((lo + hi) / 2.0)
    }
}

fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format_number(x);
    }
    let digits = 4 - 1 - x.abs().log10().floor() as i32;
    if digits >= 0 {
        let s = format!("{:.*}", digits as usize, x);
        if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s }
    } else {
        let p = 10f64.powi(-digits);
        format_number((x / p).round() * p)
    }
}

/// Fits bin layouts on training rows.
///
/// Continuous columns get equal-frequency cuts taken at data values, at most
/// `max_bins` data bins, duplicate cuts collapsed; a column with no more than
/// `max_bins` distinct values gets one bin per value. Categorical columns get
/// one bin per observed code.
pub fn bin_fit(table: &Dataset, max_bins: usize) -> Result<Vec<FeatureSchema>> {
    table.columns.iter().map(|c| fit_column(c, max_bins.max(2))).collect()
}

fn fit_column(col: &Column, max_bins: usize) -> Result<FeatureSchema> {
    if col.values.iter().all(Option::is_none) {
        return Err(Error::Training(format!("feature `{}` has no observed values", col.name)));
    }
    let bins = match col.kind {
        FeatureKind::Binary => BinSpec::Binary,
        FeatureKind::Categorical => BinSpec::Categorical {
            categories: col.values.iter().flatten().map(Value::category_code).collect::<BTreeSet<_>>().into_iter().collect(),
        },
        FeatureKind::Continuous => {
            let mut xs: Vec<f64> = col.values.iter().flatten().filter_map(Value::as_f64).filter(|x| x.is_finite()).collect();
            if xs.is_empty() {
                return Err(Error::Training(format!("feature `{}` has no numeric values", col.name)));
            }
            xs.sort_by(f64::total_cmp);
            let mut distinct = xs.clone();
            distinct.dedup();
            let cuts = if distinct.len() <= max_bins {
                distinct[1..].to_vec()
            } else {
                let n = xs.len();
                let mut cuts: Vec<f64> = Vec::with_capacity(max_bins - 1);
                for b in 1..max_bins {
                    let c = xs[b * n / max_bins];
                    if c > xs[0] && cuts.last().is_none_or(|&last| c > last) {
                        cuts.push(c);
                    }
                }
                cuts
            };
            BinSpec::Continuous { cuts, min: xs[0], max: xs[xs.len() - 1] }
        }
    };
    Ok(FeatureSchema { name: col.name.clone(), kind: col.kind, bins })
}

/// Bin indices for every row of `table`, one vector per schema feature.
/// Columns absent from the table bin as missing.
pub fn bin_table(schema: &[FeatureSchema], table: &Dataset) -> Vec<Vec<u16>> {
    schema
        .iter()
        .map(|s| match table.column(&s.name) {
            Some(c) => c.values.iter().map(|v| s.bin_of(v.as_ref()) as u16).collect(),
            None => vec![MISSING_BIN as u16; table.n_rows()],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(cols: Vec<Column>) -> Dataset {
        let n = cols[0].values.len();
        Dataset::new((0..n).map(|i| i.to_string()).collect(), cols, vec![0; n]).unwrap()
    }

    #[test]
    fn constant_column_single_data_bin() {
        let s = bin_fit(&ds(vec![Column::numeric("x", FeatureKind::Continuous, vec![Some(3.0); 10])]), 256).unwrap();
        assert_eq!(s[0].n_bins(), 2);
        assert_eq!(s[0].bin_of(Some(&Value::Num(3.0))), 1);
        assert_eq!(s[0].bin_of(None), 0);
    }

    #[test]
    fn equal_frequency_on_distinct_values() {
        // 272 distinct values into 256 bins: each bin holds ceil(272/256) = 2
        // rows, give or take one.
        let values: Vec<Option<f64>> = (0..272).map(|i| Some(18.0 + i as f64 * 0.26)).collect();
        let table = ds(vec![Column::numeric("age", FeatureKind::Continuous, values.clone())]);
        let s = &bin_fit(&table, 256).unwrap()[0];
        assert!(s.n_bins() - 1 <= 256);
        let mut counts = vec![0usize; s.n_bins()];
        for v in &values {
            counts[s.bin_of(v.map(Value::Num).as_ref())] += 1;
        }
        assert_eq!(counts[0], 0);
        let expected = 272usize.div_ceil(256);
        for (b, &c) in counts.iter().enumerate().skip(1) {
            assert!(c.abs_diff(expected) <= 1, "bin {b} holds {c}");
        }
    }

    #[test]
    fn few_distinct_values_get_own_bins() {
        let vals = [5.0, 1.0, 3.0, 3.0, 1.0, 9.0];
        let table = ds(vec![Column::numeric("x", FeatureKind::Continuous, vals.iter().map(|v| Some(*v)))]);
        let s = &bin_fit(&table, 256).unwrap()[0];
        assert_eq!(s.bins, BinSpec::Continuous { cuts: vec![3.0, 5.0, 9.0], min: 1.0, max: 9.0 });
        assert_eq!(s.bin_of(Some(&Value::Num(1.0))), 1);
        assert_eq!(s.bin_of(Some(&Value::Num(4.0))), 2);
        assert_eq!(s.bin_of(Some(&Value::Num(100.0))), 4);
        assert_eq!(s.bin_of(Some(&Value::Num(-100.0))), 1);
        assert_eq!(s.bin_label(2), "[3, 5)");
        assert_eq!(s.bin_label(1), "[-inf, 3)");
        assert_eq!(s.bin_center(1), Some(2.0));
    }

    #[test]
    fn categorical_and_binary() {
        let table = ds(vec![
            Column::categorical("eln_risk", ["adverse", "favorable", "intermediate", "adverse"].map(Some)),
            Column::numeric("TP53", FeatureKind::Binary, [Some(0.0), Some(1.0), None, Some(0.0)]),
        ]);
        let s = bin_fit(&table, 256).unwrap();
        assert_eq!(s[0].n_bins(), 4);
        assert_eq!(s[0].bin_of(Some(&Value::Text("unseen".into()))), MISSING_BIN);
        assert_eq!(s[0].bin_label(2), "favorable");
        assert_eq!(s[1].n_bins(), 3);
        assert_eq!(s[1].bin_of(Some(&Value::Num(1.0))), 2);
        assert_eq!(s[1].bin_label(1), "0");
    }

    #[test]
    fn all_missing_is_an_error_naming_the_feature() {
        let table = ds(vec![Column::numeric("ghost", FeatureKind::Continuous, vec![None; 3])]);
        assert!(bin_fit(&table, 256).unwrap_err().to_string().contains("ghost"));
    }

    #[test]
    fn four_significant_digits() {
        assert_eq!(sig4(1234.567), "1235");
        assert_eq!(sig4(0.012345), "0.01235");
        assert_eq!(sig4(123456.0), "123500");
        assert_eq!(sig4(-2.5), "-2.5");
    }
}
