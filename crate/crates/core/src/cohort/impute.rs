use std::collections::BTreeMap;

use super::{ClinicalField, PatientRecord};
use crate::data::Value;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// k-nearest-neighbour fill of missing clinical fields.
///
/// Distances between two records use every other field present in both:
/// squared difference of z-scores for continuous fields, 0/1 mismatch for
/// categorical ones, divided by the number of fields compared. Neighbours are
/// drawn from records where the target field is observed, ranked by
/// `(distance, sample_id)`. Continuous targets take the neighbour mean;
/// categorical targets take the mode, ties going to the smallest code.
///
/// Only observed values feed the distances, so the result does not depend on
/// record order.
pub fn impute_knn(records: &[PatientRecord], fields: &[ClinicalField], k: usize, exec: Execution) -> Result<Vec<PatientRecord>> {
    if k == 0 {
        return Err(Error::Impute("k must be at least 1".into()));
    }
    let scales: BTreeMap<ClinicalField, (f64, f64)> =
        fields.iter().filter(|f| f.is_continuous()).map(|&f| (f, mean_sd(records, f))).collect();

    let filled = par::map_slice(exec, records, |r| -> Result<PatientRecord> {
        let missing: Vec<ClinicalField> = fields.iter().copied().filter(|f| !r.clinical.contains_key(f)).collect();
        if missing.is_empty() {
            return Ok(r.clone());
        }
        if missing.len() == fields.len() {
            return Err(Error::Impute(format!("sample `{}` has no observed clinical field", r.sample_id)));
        }
        let mut out = r.clone();
        for &target in &missing {
            let mut neighbours: Vec<(f64, &PatientRecord)> = records
                .iter()
                .filter(|c| !std::ptr::eq(*c, r) && c.clinical.contains_key(&target))
                .filter_map(|c| distance(r, c, fields, target, &scales).map(|d| (d, c)))
                .collect();
            if neighbours.len() < k {
                return Err(Error::Impute(format!(
                    "field `{target}` of sample `{}`: only {} comparable donors for k = {k}",
                    r.sample_id,
                    neighbours.len()
                )));
            }
            neighbours.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.sample_id.cmp(&b.1.sample_id)));
            let donors: Vec<&Value> = neighbours[..k].iter().map(|(_, c)| &c.clinical[&target]).collect();
            out.clinical.insert(target, fill_value(target, &donors));
        }
        Ok(out)
    });
    filled.into_iter().collect()
}

fn mean_sd(records: &[PatientRecord], field: ClinicalField) -> (f64, f64) {
    let xs: Vec<f64> = records.iter().filter_map(|r| r.num(field)).collect();
    if xs.is_empty() {
        return (0.0, 1.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 0.0 { sd } else { 1.0 })
}

fn distance(
    a: &PatientRecord,
    b: &PatientRecord,
    fields: &[ClinicalField],
    target: ClinicalField,
    scales: &BTreeMap<ClinicalField, (f64, f64)>,
) -> Option<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for &f in fields {
        if f == target {
            continue;
        }
        let (Some(x), Some(y)) = (a.clinical.get(&f), b.clinical.get(&f)) else {
            continue;
        };
        total += match scales.get(&f) {
            Some(&(_, sd)) => match (x.as_f64(), y.as_f64()) {
                (Some(x), Some(y)) => ((x - y) / sd).powi(2),
                _ => continue,
            },
            None => f64::from(u8::from(x.category_code() != y.category_code())),
        };
        count += 1;
    }
    (count > 0).then(|| total / count as f64)
}

fn fill_value(target: ClinicalField, donors: &[&Value]) -> Value {
    if target.is_continuous() {
        let xs: Vec<f64> = donors.iter().filter_map(|v| v.as_f64()).collect();
        return Value::Num(xs.iter().sum::<f64>() / xs.len() as f64);
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for v in donors {
        *counts.entry(v.category_code()).or_default() += 1;
    }
    // BTreeMap iterates codes ascending; keep the first maximum.
    let mut best: Option<(&String, usize)> = None;
    for (code, &n) in &counts {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((code, n));
        }
    }
    Value::Text(best.map(|(c, _)| c.clone()).unwrap_or_default())
}
