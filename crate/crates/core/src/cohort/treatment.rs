use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ClinicalField, PatientRecord};
use crate::error::{Error, Result};
use crate::kv::KvFile;

/// Therapy intensity groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TreatmentIntensity {
    #[serde(rename = "target")]
    Target,
    #[serde(rename = "regular")]
    Regular,
    #[serde(rename = "low-intensity")]
    LowIntensity,
    #[serde(rename = "high-intensity")]
    HighIntensity,
}

impl TreatmentIntensity {
    pub const ALL: [TreatmentIntensity; 4] = [
        TreatmentIntensity::Target,
        TreatmentIntensity::Regular,
        TreatmentIntensity::LowIntensity,
        TreatmentIntensity::HighIntensity,
    ];

    /// Least to most aggressive; used to break probability ties.
    pub const BY_INTENSITY: [TreatmentIntensity; 4] = [
        TreatmentIntensity::LowIntensity,
        TreatmentIntensity::Target,
        TreatmentIntensity::Regular,
        TreatmentIntensity::HighIntensity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TreatmentIntensity::Target => "target",
            TreatmentIntensity::Regular => "regular",
            TreatmentIntensity::LowIntensity => "low-intensity",
            TreatmentIntensity::HighIntensity => "high-intensity",
        }
    }

    /// Position in [`Self::BY_INTENSITY`].
    pub fn aggressiveness(self) -> usize {
        Self::BY_INTENSITY.iter().position(|&t| t == self).unwrap_or(usize::MAX)
    }
}

impl fmt::Display for TreatmentIntensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TreatmentIntensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        match t.as_str() {
            "target" | "target-therapy" => Ok(TreatmentIntensity::Target),
            "regular" | "regular-therapy" => Ok(TreatmentIntensity::Regular),
            "low-intensity" | "low" => Ok(TreatmentIntensity::LowIntensity),
            "high-intensity" | "high" => Ok(TreatmentIntensity::HighIntensity),
            _ => Err(Error::InvalidInput(format!("`{s}` is not a treatment intensity"))),
        }
    }
}

/// Raw therapy name to intensity group, as supplied by domain specialists.
///
/// File format: one `raw therapy name = category` per line, where category is
/// `target`, `regular`, `low-intensity` or `high-intensity`. Lookups try the
/// exact trimmed name first, then a case-insensitive match.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TreatmentMap {
    entries: Vec<(String, TreatmentIntensity)>,
}

impl TreatmentMap {
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let entries = kv
            .iter()
            .map(|(raw, cat)| Ok((raw.to_string(), cat.parse::<TreatmentIntensity>()?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_kv(&KvFile::read(path)?)
    }

    pub fn insert(&mut self, raw: impl Into<String>, category: TreatmentIntensity) {
        self.entries.push((raw.into(), category));
    }

    pub fn lookup(&self, raw: &str) -> Option<TreatmentIntensity> {
        let raw = raw.trim();
        self.entries
            .iter()
            .find(|(k, _)| k == raw)
            .or_else(|| self.entries.iter().find(|(k, _)| k.eq_ignore_ascii_case(raw)))
            .map(|(_, c)| *c)
            .or_else(|| raw.parse().ok())
    }
}

/// Sets each record's intensity group from its raw treatment name. Values
/// that already name a group map to themselves. Fails listing every
/// unmapped name.
pub fn categorize_treatment(mut records: Vec<PatientRecord>, map: &TreatmentMap) -> Result<Vec<PatientRecord>> {
    let mut unmapped = BTreeSet::new();
    for r in &mut records {
        match r.clinical.get(&ClinicalField::Treatment).map(|v| v.category_code()) {
            Some(raw) => match map.lookup(&raw) {
                Some(cat) => r.treatment_intensity = Some(cat),
                None => {
                    unmapped.insert(raw);
                }
            },
            None if r.treatment_intensity.is_some() => {}
            None => {
                unmapped.insert(format!("<missing treatment: {}>", r.sample_id));
            }
        }
    }
    if unmapped.is_empty() {
        Ok(records)
    } else {
        Err(Error::UnmappedTreatments(unmapped.into_iter().collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Value;
    use std::collections::BTreeMap;

    fn rec(id: &str, treatment: &str) -> PatientRecord {
        let mut clinical = BTreeMap::new();
        clinical.insert(ClinicalField::Treatment, Value::Text(treatment.into()));
        PatientRecord {
            sample_id: id.into(),
            patient_id: None,
            source_id: "T".into(),
            clinical,
            treatment_intensity: None,
            survival_status: None,
            mutations: None,
            expressions: None,
        }
    }

    #[test]
    fn maps_named_therapies() {
        let kv = KvFile::parse("chemo + allogeneic HSCT = high-intensity\nazacitidine = low-intensity", "map").unwrap();
        let map = TreatmentMap::from_kv(&kv).unwrap();
        let out = categorize_treatment(vec![rec("a", "chemo + allogeneic HSCT"), rec("b", "AZACITIDINE")], &map).unwrap();
        assert_eq!(out[0].treatment_intensity, Some(TreatmentIntensity::HighIntensity));
        assert_eq!(out[1].treatment_intensity, Some(TreatmentIntensity::LowIntensity));
    }

    #[test]
    fn categories_map_to_themselves() {
        let out = categorize_treatment(vec![rec("a", "regular"), rec("b", "Target")], &TreatmentMap::default()).unwrap();
        assert_eq!(out[0].treatment_intensity, Some(TreatmentIntensity::Regular));
        assert_eq!(out[1].treatment_intensity, Some(TreatmentIntensity::Target));
    }

    #[test]
    fn unmapped_names_are_all_listed() {
        let mut map = TreatmentMap::default();
        map.insert("7+3", TreatmentIntensity::Regular);
        let err = categorize_treatment(vec![rec("a", "7+3"), rec("b", "mystery"), rec("c", "7+3")], &map).unwrap_err();
        match err {
            Error::UnmappedTreatments(names) => assert_eq!(names, vec!["mystery".to_string()]),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn bad_category_in_map_file() {
        let kv = KvFile::parse("x = medium", "map").unwrap();
        assert!(TreatmentMap::from_kv(&kv).is_err());
    }

    #[test]
    fn aggressiveness_order() {
        let mut all = TreatmentIntensity::ALL;
        all.sort_by_key(|t| t.aggressiveness());
        assert_eq!(all, TreatmentIntensity::BY_INTENSITY);
        assert_eq!(TreatmentIntensity::LowIntensity.aggressiveness(), 0);
    }
}
