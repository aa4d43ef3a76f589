//! L1-penalized linear SVM (squared hinge loss) fit by exact cyclic
//! coordinate descent, swept over a descending geometric strength grid.
//!
//! Objective for strength `lambda`, labels `y` in {-1, +1}:
//!
//! ```text
//! (1/n) sum_i max(0, 1 - y_i (x_i . w + b))^2 + lambda * |w|_1
//! ```
//!
//! Each coordinate step minimizes the objective exactly along that
//! coordinate: the loss restricted to one coordinate is a convex piecewise
//! quadratic, so its subgradient is piecewise linear and the root can be
//! found by walking the sorted hinge breakpoints.

use log::warn;
use serde::{Deserialize, Serialize};

use super::RealMatrix;
use crate::error::{Error, Result};
use crate::eval::FitRows;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Config {
    pub target_count: usize,
    /// Number of grid strengths (at least 30).
    pub n_strengths: usize,
    /// Smallest strength as a fraction of the strength that zeroes every
    /// coefficient.
    pub min_ratio: f64,
    /// Stop once a full sweep changes no coefficient by more than this.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for L1Config {
    fn default() -> Self {
        Self { target_count: 22, n_strengths: 50, min_ratio: 1e-3, tolerance: 1e-4, max_sweeps: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Fit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub sweeps: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Path {
    pub features: Vec<String>,
    /// Descending.
    pub strengths: Vec<f64>,
    pub coefficients: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    pub nonzero_counts: Vec<usize>,
    pub chosen: usize,
    pub chosen_strength: f64,
    pub selected_features: Vec<String>,
    /// Largest drop in nonzero count seen when moving to a weaker penalty.
    pub max_monotonicity_violation: usize,
}

/// Z-scores the expression columns on the fit rows, fits the warm-started
/// path from strongest to weakest penalty, and picks the strength whose
/// support size is closest to `target_count` (ties go to the stronger
/// penalty).
pub fn l1_select(matrix: &RealMatrix, labels: &[u8], rows: &FitRows, cfg: &L1Config) -> Result<L1Path> {
    let rows = rows.rows();
    if rows.is_empty() {
        return Err(Error::Selection("no fit rows".into()));
    }
    let y: Vec<f64> = rows.iter().map(|&r| if labels[r] == 1 { 1.0 } else { -1.0 }).collect();
    let x: Vec<Vec<f64>> = matrix.columns.iter().map(|col| zscore(rows.iter().map(|&r| col[r]))).collect();
    let n_strengths = cfg.n_strengths.max(30);

    let lambda_max = max_strength(&x, &y);
    if !(lambda_max > 0.0) {
        return Err(Error::Selection("no feature has a nonzero gradient at zero weights".into()));
    }
    let lambda_min = lambda_max * cfg.min_ratio;
    let strengths: Vec<f64> = (0..n_strengths)
        .map(|k| lambda_max * (cfg.min_ratio.ln() * k as f64 / (n_strengths - 1) as f64).exp())
        .collect();

    let mut coefficients = Vec::with_capacity(n_strengths);
    let mut intercepts = Vec::with_capacity(n_strengths);
    let mut warm: Option<(Vec<f64>, f64)> = None;
    for &lambda in &strengths {
        let fit = fit_l1_svm(&x, &y, lambda, warm.as_ref().map(|(w, b)| (w.as_slice(), *b)), cfg);
        if !fit.converged {
            warn!("l1 path: strength {lambda:.3e} stopped after {} sweeps without converging", fit.sweeps);
        }
        warm = Some((fit.weights.clone(), fit.intercept));
        coefficients.push(fit.weights);
        intercepts.push(fit.intercept);
    }
    let nonzero_counts: Vec<usize> = coefficients.iter().map(|w| w.iter().filter(|v| **v != 0.0).count()).collect();
    let max_monotonicity_violation =
        nonzero_counts.windows(2).map(|p| p[0].saturating_sub(p[1])).max().unwrap_or(0);
    if max_monotonicity_violation > 0 {
        warn!("l1 path: support shrank by {max_monotonicity_violation} when weakening the penalty");
    }
    if nonzero_counts.iter().all(|&c| c == 0) {
        return Err(Error::Selection(format!(
            "no strength in [{lambda_min:.3e}, {lambda_max:.3e}] yields a nonzero coefficient"
        )));
    }
    // strengths descend, so the first minimum is the strongest penalty
    let chosen = (0..n_strengths)
        .filter(|&k| nonzero_counts[k] > 0)
        .min_by_key(|&k| (nonzero_counts[k].abs_diff(cfg.target_count), k))
        .unwrap_or(0);
    let selected_features = matrix
        .names
        .iter()
        .zip(&coefficients[chosen])
        .filter(|(_, w)| **w != 0.0)
        .map(|(n, _)| n.clone())
        .collect();
    Ok(L1Path {
        features: matrix.names.clone(),
        chosen_strength: strengths[chosen],
        strengths,
        coefficients,
        intercepts,
        nonzero_counts,
        chosen,
        selected_features,
        max_monotonicity_violation,
    })
}

/// Standardizes with the population standard deviation; missing values
/// become 0 (the column mean) and constant columns become all zeros.
fn zscore(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let v: Vec<f64> = values.collect();
    let present: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    if present.is_empty() {
        return vec![0.0; v.len()];
    }
    let n = present.len() as f64;
    let mean = present.iter().sum::<f64>() / n;
    let sd = (present.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    v.iter().map(|&x| if x.is_finite() && sd > 0.0 { (x - mean) / sd } else { 0.0 }).collect()
}

/// Smallest strength at which all weights are zero: the largest absolute
/// loss gradient over features at `w = 0` with the intercept optimized.
pub(crate) fn max_strength(x: &[Vec<f64>], y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let b = minimize_coordinate(&vec![1.0; y.len()], y, 0.0, y.len());
    x.iter()
        .map(|col| {
            let g: f64 = col.iter().zip(y).map(|(xi, yi)| yi * xi * (1.0 - yi * b).max(0.0)).sum();
            (2.0 / n * g).abs()
        })
        .fold(0.0, f64::max)
}

/// Fits one strength. `x` is column-major over the fit rows; `y` is ±1.
pub fn fit_l1_svm(x: &[Vec<f64>], y: &[f64], lambda: f64, warm: Option<(&[f64], f64)>, cfg: &L1Config) -> L1Fit {
    let n = y.len();
    let p = x.len();
    let (mut w, mut b) = match warm {
        Some((w, b)) => (w.to_vec(), b),
        None => (vec![0.0; p], 0.0),
    };
    let mut f: Vec<f64> = (0..n).map(|i| b + (0..p).filter(|&j| w[j] != 0.0).map(|j| x[j][i] * w[j]).sum::<f64>()).collect();
    let mut c = vec![0.0; n];
    let mut a = vec![0.0; n];

    let mut sweeps = 0;
    let mut full_sweep = true;
    loop {
        if sweeps >= cfg.max_sweeps {
            return L1Fit { weights: w, intercept: b, sweeps, converged: false };
        }
        sweeps += 1;
        let mut max_change: f64 = 0.0;

        // intercept, unpenalized
        for i in 0..n {
            c[i] = 1.0 - y[i] * (f[i] - b);
        }
        let nb = minimize_coordinate(&c, y, 0.0, n);
        if nb != b {
            for fi in f.iter_mut() {
                *fi += nb - b;
            }
            max_change = max_change.max((nb - b).abs());
            b = nb;
        }

        for j in 0..p {
            if !full_sweep && w[j] == 0.0 {
                continue;
            }
            let col = &x[j];
            for i in 0..n {
                a[i] = y[i] * col[i];
                c[i] = 1.0 - y[i] * f[i] + a[i] * w[j];
            }
            let nw = minimize_coordinate(&c, &a, lambda, n);
            if nw != w[j] {
                let d = nw - w[j];
                for i in 0..n {
                    f[i] += col[i] * d;
                }
                max_change = max_change.max(d.abs());
                w[j] = nw;
            }
        }

        if max_change < cfg.tolerance {
            if full_sweep {
                return L1Fit { weights: w, intercept: b, sweeps, converged: true };
            }
            full_sweep = true;
        } else {
            full_sweep = false;
        }
    }
}

/// `argmin_t (1/n) sum_i max(0, c_i - a_i t)^2 + lambda |t|`.
pub(crate) fn minimize_coordinate(c: &[f64], a: &[f64], lambda: f64, n: usize) -> f64 {
    let scale = 2.0 / n as f64;
    // smooth part's derivative at 0 (squared hinge is C^1)
    let g0: f64 = -scale * c.iter().zip(a).map(|(ci, ai)| ai * ci.max(0.0)).sum::<f64>();
    if g0.abs() <= lambda {
        return 0.0;
    }
    if g0 < 0.0 {
        positive_root(c, a, lambda, scale)
    } else {
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        -positive_root(c, &neg, lambda, scale)
    }
}

/// Root on t > 0 of `-scale * sum_{active} a_i (c_i - a_i t) + lambda`,
/// where active means `c_i - a_i t > 0`.
fn positive_root(c: &[f64], a: &[f64], lambda: f64, scale: f64) -> f64 {
    let mut s1 = 0.0; // sum a_i c_i over active
    let mut s2 = 0.0; // sum a_i^2 over active
    let mut events: Vec<(f64, usize)> = Vec::new();
    for i in 0..c.len() {
        let (ci, ai) = (c[i], a[i]);
        let active_at_zero = ci > 0.0 || (ci == 0.0 && ai < 0.0);
        if active_at_zero {
            s1 += ai * ci;
            s2 += ai * ai;
        }
        if ai != 0.0 {
            let t = ci / ai;
            // status flips at t: positive-a rows leave, negative-a rows enter
            if t > 0.0 && ((ai > 0.0) == active_at_zero) {
                events.push((t, i));
            }
        }
    }
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    let target = lambda / scale;
    let mut lo = 0.0;
    for &(t_event, i) in &events {
        if s2 > 0.0 {
            let root = (s1 - target) / s2;
            if root <= t_event {
                return root.max(lo);
            }
        }
        let ai = a[i];
        if ai > 0.0 {
            s1 -= ai * c[i];
            s2 -= ai * ai;
        } else {
            s1 += ai * c[i];
            s2 += ai * ai;
        }
        lo = t_event;
    }
    if s2 > 0.0 {
        ((s1 - target) / s2).max(lo)
    } else {
        lo
    }
}
