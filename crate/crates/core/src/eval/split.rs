use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl SplitIndices {
    /// Train and validation rows, the only rows feature selection may read.
    pub fn fit_rows(&self) -> FitRows {
        let mut rows: Vec<usize> = self.train.iter().chain(&self.validation).copied().collect();
        rows.sort_unstable();
        FitRows { rows, excluded: self.test.iter().copied().collect() }
    }
}

/// Row indices a selection procedure may read, carried together with the
/// held-out rows they were checked against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FitRows {
    rows: Vec<usize>,
    excluded: BTreeSet<usize>,
}

impl FitRows {
    pub fn new(rows: Vec<usize>, held_out: &[usize]) -> Result<Self> {
        let excluded: BTreeSet<usize> = held_out.iter().copied().collect();
        if let Some(r) = rows.iter().find(|r| excluded.contains(r)) {
            return Err(Error::InvalidInput(format!("row {r} is both a fit row and a held-out row")));
        }
        Ok(Self { rows, excluded })
    }

    /// Every row of an `n`-row table, nothing held out.
    pub fn all(n: usize) -> Self {
        Self { rows: (0..n).collect(), excluded: BTreeSet::new() }
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn held_out(&self) -> &BTreeSet<usize> {
        &self.excluded
    }
}

/// Per class: shuffle with a seeded ChaCha8 generator, give each partition
/// `floor(fraction * class_size)` rows, then hand out the remainder one row
/// at a time to train, then validation, then test.
pub fn stratified_split(labels: &[u8], fractions: (f64, f64, f64), seed: u64) -> Result<SplitIndices> {
    let (ft, fv, fs) = fractions;
    if [ft, fv, fs].iter().any(|f| !(0.0..=1.0).contains(f)) || ((ft + fv + fs) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("split fractions {fractions:?} must be in [0,1] and sum to 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SplitIndices { train: Vec::new(), validation: Vec::new(), test: Vec::new(), seed };
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < 3 {
            return Err(Error::InvalidInput(format!("class {class} has {} members; need at least 3", members.len())));
        }
        members.shuffle(&mut rng);
        let n = members.len();
        let mut counts = [ft, fv, fs].map(|f| (f * n as f64 + 1e-9).floor() as usize);
        let mut remainder = n - counts.iter().sum::<usize>();
        let mut slot = 0;
        while remainder > 0 {
            counts[slot % 3] += 1;
            remainder -= 1;
            slot += 1;
        }
        let (tr, rest) = members.split_at(counts[0]);
        let (va, te) = rest.split_at(counts[1]);
        out.train.extend_from_slice(tr);
        out.validation.extend_from_slice(va);
        out.test.extend_from_slice(te);
    }
    out.train.sort_unstable();
    out.validation.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}
