use serde::{Deserialize, Serialize};

use super::BinaryMatrix;
use crate::error::{Error, Result};
use crate::eval::FitRows;
use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chi2Result {
    pub feature: String,
    pub statistic: f64,
    pub p_value: f64,
    pub selected: bool,
}

/// `table[feature][label]` counts over the given rows.
pub fn contingency(feature: &[u8], labels: &[u8], rows: &[usize]) -> [[u64; 2]; 2] {
    let mut t = [[0u64; 2]; 2];
    for &r in rows {
        t[usize::from(feature[r] != 0)][usize::from(labels[r] != 0)] += 1;
    }
    t
}

/// Pearson statistic without continuity correction, via the 2x2 shortcut
/// `N (ad - bc)^2 / (r1 r2 c1 c2)`. A zero margin gives 0.
pub fn chi2_statistic(t: [[u64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = t.map(|r| r.map(|x| x as f64));
    let (r1, r2, c1, c2) = (a + b, c + d, a + c, b + d);
    let denom = r1 * r2 * c1 * c2;
    if denom == 0.0 {
        return 0.0;
    }
    let n = r1 + r2;
    let det = a * d - b * c;
    n * det * det / denom
}

/// Upper-tail probability of the chi-squared distribution,
/// `Q(dof / 2, x / 2)`.
pub fn chi2_sf(x: f64, dof: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("chi-squared statistic must be >= 0, got {x}")));
    }
    if !(dof > 0.0) {
        return Err(Error::Domain(format!("degrees of freedom must be > 0, got {dof}")));
    }
    Ok(gamma_q(dof / 2.0, x / 2.0))
}

/// Tests every column against the labels on the fit rows and marks
/// `p < alpha` as selected.
pub fn chi2_select(matrix: &BinaryMatrix, labels: &[u8], rows: &FitRows, alpha: f64, exec: Execution) -> Vec<Chi2Result> {
    let idx: Vec<usize> = (0..matrix.names.len()).collect();
    par::map_slice(exec, &idx, |&j| {
        let statistic = chi2_statistic(contingency(&matrix.columns[j], labels, rows.rows()));
        let p_value = gamma_q(0.5, statistic / 2.0);
        Chi2Result { feature: matrix.names[j].clone(), statistic, p_value, selected: p_value < alpha }
    })
}

/// Lanczos approximation (g = 7, 9 terms), relative error ~1e-15.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized upper incomplete gamma `Q(a, x)`: series for `x < a + 1`,
/// Lentz continued fraction otherwise.
fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_fraction(a, x)
    }
}

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}
