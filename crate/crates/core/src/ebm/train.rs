use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::binning::{bin_fit, bin_table, FeatureSchema, MISSING_BIN};
use super::{ClassCounts, EbmModel, ModelMeta, TermFunction};
use crate::data::{Dataset, FeatureKind, Value, LIVING};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub outer_bags: usize,
    pub max_rounds: usize,
    pub early_stopping_rounds: usize,
    /// Validation loss must drop by more than this to count as progress.
    pub early_stopping_tolerance: f64,
    pub validation_fraction: f64,
    pub max_bins: usize,
    /// Minimum bootstrap weight a leaf must carry.
    pub min_samples_leaf: f64,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            max_leaves: 3,
            outer_bags: 8,
            max_rounds: 5000,
            early_stopping_rounds: 50,
            early_stopping_tolerance: 1e-5,
            validation_fraction: 0.15,
            max_bins: 256,
            min_samples_leaf: 2.0,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl TrainConfig {
    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Training(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.max_leaves < 2 {
            return bad("max_leaves must be at least 2");
        }
        if self.outer_bags == 0 {
            return bad("outer_bags must be at least 1");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must be in [0, 1)");
        }
        if self.max_bins < 2 || self.max_bins > u16::MAX as usize {
            return bad("max_bins must be in [2, 65535]");
        }
        Ok(())
    }
}

/// Training rows after binning, ordered by sample id so that the input row
/// order cannot influence sampling or summation.
struct Binned {
    bins: Vec<Vec<u16>>,
    n_bins: Vec<usize>,
    labels: Vec<f64>,
    kinds: Vec<FeatureKind>,
}

struct BagResult {
    scores: Vec<Vec<f64>>,
    intercept: f64,
    rounds: usize,
}

/// Fits an additive logistic model by cyclic boosting with outer bagging.
///
/// Each bag holds out a stratified validation slice, bootstraps the rest
/// (as integer weights), and boosts one feature at a time with shallow
/// splits over that feature's bins until validation loss stops improving.
/// Bags are averaged in index order, then every term is re-centered to a
/// training-count-weighted mean of zero with the offset moved into the
/// intercept. Bins never seen in training score zero.
pub fn train(table: &Dataset, config: &TrainConfig) -> Result<EbmModel> {
    config.check()?;
    let n = table.n_rows();
    if table.labels.iter().any(|&l| l > 1) {
        return Err(Error::Training("labels must be 0 or 1".into()));
    }
    let [deceased, living] = table.class_counts();
    if living == 0 || deceased == 0 {
        return Err(Error::Training(format!("single-class labels ({living} living, {deceased} deceased)")));
    }
    if table.columns.is_empty() {
        return Err(Error::Training("no feature columns".into()));
    }
    for col in &table.columns {
        if col.kind == FeatureKind::Categorical {
            continue;
        }
        for (r, v) in col.values.iter().enumerate() {
            if let Some(Value::Num(x)) = v {
                if !x.is_finite() {
                    return Err(Error::Training(format!(
                        "non-finite value {x} in feature `{}` at sample `{}`",
                        col.name, table.sample_ids[r]
                    )));
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| table.sample_ids[a].cmp(&table.sample_ids[b]));
    let sorted = table.subset_rows(&order);
    let schema = bin_fit(&sorted, config.max_bins)?;
    let data = Binned {
        bins: bin_table(&schema, &sorted),
        n_bins: schema.iter().map(FeatureSchema::n_bins).collect(),
        labels: sorted.labels.iter().map(|&l| f64::from(l)).collect(),
        kinds: schema.iter().map(|s| s.kind).collect(),
    };

    let bags = par::map_indexed(config.execution, config.outer_bags, |b| train_bag(&data, config, b));

    let nb = bags.len() as f64;
    let mut scores: Vec<Vec<f64>> = data.n_bins.iter().map(|&k| vec![0.0; k]).collect();
    let mut intercept = 0.0;
    for bag in &bags {
        intercept += bag.intercept;
        for (acc, s) in scores.iter_mut().zip(&bag.scores) {
            for (a, x) in acc.iter_mut().zip(s) {
                *a += x;
            }
        }
    }
    intercept /= nb;
    for s in scores.iter_mut().flatten() {
        *s /= nb;
    }

    let mut terms = Vec::with_capacity(schema.len());
    for (j, s) in schema.iter().enumerate() {
        let mut counts = vec![0u64; data.n_bins[j]];
        for &b in &data.bins[j] {
            counts[b as usize] += 1;
        }
        let mut term = TermFunction { feature: s.name.clone(), scores: std::mem::take(&mut scores[j]), bin_counts: counts };
        let mean = term.weighted_mean();
        intercept += mean;
        for (x, &c) in term.scores.iter_mut().zip(&term.bin_counts) {
            *x = if c == 0 { 0.0 } else { *x - mean };
        }
        terms.push(term);
    }

    let meta = ModelMeta {
        config: config.clone(),
        positive_class: LIVING.into(),
        training_class_counts: ClassCounts { living, deceased },
        training_rows: n,
        bag_rounds: bags.iter().map(|b| b.rounds).collect(),
        importance_basis: "training".into(),
    };
    log::debug!("trained {} terms over {} bags, rounds {:?}", terms.len(), bags.len(), meta.bag_rounds);
    Ok(EbmModel::from_parts(schema, terms, intercept, meta))
}

fn bag_rng(seed: u64, bag: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(bag as u64 + 1);
    rng
}

fn log_loss(f: f64, y: f64) -> f64 {
    // log(1 + e^f) - y f, stable for large |f|
    let softplus = if f > 0.0 { f + (-f).exp().ln_1p() } else { f.exp().ln_1p() };
    softplus - y * f
}

fn train_bag(data: &Binned, cfg: &TrainConfig, bag: usize) -> BagResult {
    let n = data.labels.len();
    let mut rng = bag_rng(cfg.seed, bag);

    // Stratified internal validation slice.
    let mut is_val = vec![false; n];
    for class in [0.0, 1.0] {
        let mut members: Vec<usize> = (0..n).filter(|&i| data.labels[i] == class).collect();
        members.shuffle(&mut rng);
        let k = (cfg.validation_fraction * members.len() as f64).round() as usize;
        let k = k.min(members.len().saturating_sub(1));
        for &i in &members[..k] {
            is_val[i] = true;
        }
    }
    let fit_rows: Vec<usize> = (0..n).filter(|&i| !is_val[i]).collect();
    let val_rows: Vec<usize> = (0..n).filter(|&i| is_val[i]).collect();

    // Bootstrap of the fit rows as integer weights.
    let mut weight = vec![0.0f64; n];
    for _ in 0..fit_rows.len() {
        weight[fit_rows[rng.gen_range(0..fit_rows.len())]] += 1.0;
    }
    let w_total: f64 = weight.iter().sum();
    let w_pos: f64 = weight.iter().zip(&data.labels).map(|(w, y)| w * y).sum();
    let rate = (w_pos / w_total).clamp(1e-6, 1.0 - 1e-6);
    let intercept = (rate / (1.0 - rate)).ln();

    let n_feat = data.bins.len();
    let mut scores: Vec<Vec<f64>> = data.n_bins.iter().map(|&k| vec![0.0; k]).collect();
    let mut logit = vec![intercept; n];
    let mut best_scores = scores.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_round = 0;
    let mut rounds = 0;
    let mut g_hist = Vec::new();
    let mut h_hist = Vec::new();
    let mut w_hist = Vec::new();

    for round in 1..=cfg.max_rounds {
        for j in 0..n_feat {
            let k = data.n_bins[j];
            g_hist.clear();
            g_hist.resize(k, 0.0);
            h_hist.clear();
            h_hist.resize(k, 0.0);
            w_hist.clear();
            w_hist.resize(k, 0.0);
            for &i in &fit_rows {
                let w = weight[i];
                if w == 0.0 {
                    continue;
                }
                let p = super::sigmoid(logit[i]);
                let b = data.bins[j][i] as usize;
                g_hist[b] += w * (p - data.labels[i]);
                h_hist[b] += w * p * (1.0 - p);
                w_hist[b] += w;
            }
            let Some(update) = fit_split(&g_hist, &h_hist, &w_hist, data.kinds[j], cfg) else {
                continue;
            };
            for (s, u) in scores[j].iter_mut().zip(&update) {
                *s += u;
            }
            for (i, f) in logit.iter_mut().enumerate() {
                *f += update[data.bins[j][i] as usize];
            }
        }
        rounds = round;
        if val_rows.is_empty() {
            continue;
        }
        let loss: f64 = val_rows.iter().map(|&i| log_loss(logit[i], data.labels[i])).sum::<f64>() / val_rows.len() as f64;
        if loss < best_loss - cfg.early_stopping_tolerance {
            best_loss = loss;
            best_round = round;
            best_scores.clone_from(&scores);
        } else if round - best_round >= cfg.early_stopping_rounds {
            break;
        }
    }
    if val_rows.is_empty() {
        return BagResult { scores, intercept, rounds };
    }
    log::trace!("bag {bag}: best round {best_round} of {rounds}, validation loss {best_loss:.6}");
    BagResult { scores: best_scores, intercept, rounds: best_round }
}

#[derive(Clone, Copy, Default)]
struct Stats {
    g: f64,
    h: f64,
    w: f64,
}

impl Stats {
    fn gain(self) -> f64 {
        if self.h <= 0.0 {
            0.0
        } else {
            self.g * self.g / self.h
        }
    }

    fn sub(self, o: Stats) -> Stats {
        Stats { g: self.g - o.g, h: self.h - o.h, w: self.w - o.w }
    }
}

/// Grows up to `max_leaves` contiguous leaves over the feature's ordered
/// bins by greedy best-gain splitting and returns the per-bin additive
/// update (`learning_rate * -G/H` of the bin's leaf). Ordered features keep
/// bin order with the missing bin first; categorical bins are ordered by
/// `G/H`. Bins without weight in this bag are left unchanged.
fn fit_split(g: &[f64], h: &[f64], w: &[f64], kind: FeatureKind, cfg: &TrainConfig) -> Option<Vec<f64>> {
    let present: Vec<usize> = (0..g.len()).filter(|&b| w[b] > 0.0).collect();
    let ordered: Vec<usize> = match kind {
        FeatureKind::Categorical => {
            let mut o = present.clone();
            o.sort_by(|&a, &b| (g[a] / h[a]).total_cmp(&(g[b] / h[b])).then(a.cmp(&b)));
            o
        }
        _ => {
            // data bins as contiguous index ranges; missing bin stands alone in front
            let mut o: Vec<usize> = Vec::with_capacity(g.len());
            if w[MISSING_BIN] > 0.0 {
                o.push(MISSING_BIN);
            }
            let first = present.iter().copied().find(|&b| b != MISSING_BIN)?;
            let last = *present.last()?;
            o.extend(first..=last);
            o
        }
    };
    if ordered.len() < 2 {
        return None;
    }
    // prefix[i] = stats of ordered[..i]
    let mut prefix = vec![Stats::default(); ordered.len() + 1];
    for (i, &b) in ordered.iter().enumerate() {
        let p = prefix[i];
        prefix[i + 1] = Stats { g: p.g + g[b], h: p.h + h[b], w: p.w + w[b] };
    }
    let range = |lo: usize, hi: usize| prefix[hi].sub(prefix[lo]);
    let best_cut = |lo: usize, hi: usize| -> Option<(usize, f64)> {
        let parent = range(lo, hi).gain();
        let mut best: Option<(usize, f64)> = None;
        for c in lo + 1..hi {
            let (l, r) = (range(lo, c), range(c, hi));
            if l.w < cfg.min_samples_leaf || r.w < cfg.min_samples_leaf || l.h <= 0.0 || r.h <= 0.0 {
                continue;
            }
            let gain = l.gain() + r.gain() - parent;
            if gain > 1e-12 && best.is_none_or(|(_, bg)| gain > bg) {
                best = Some((c, gain));
            }
        }
        best
    };

    let mut cuts = vec![best_cut(0, ordered.len())?.0];
    while cuts.len() + 1 < cfg.max_leaves {
        let mut bounds = vec![0];
        bounds.extend(&cuts);
        bounds.push(ordered.len());
        let next = bounds
            .windows(2)
            .filter_map(|s| best_cut(s[0], s[1]))
            .fold(None, |acc: Option<(usize, f64)>, c| if acc.is_none_or(|a| c.1 > a.1) { Some(c) } else { acc });
        let Some((c, _)) = next else { break };
        cuts.push(c);
        cuts.sort_unstable();
    }

    let mut update = vec![0.0; g.len()];
    let mut bounds = vec![0];
    bounds.extend(&cuts);
    bounds.push(ordered.len());
    for s in bounds.windows(2) {
        let leaf = range(s[0], s[1]);
        if leaf.h <= 0.0 {
            continue;
        }
        let value = -cfg.learning_rate * leaf.g / leaf.h;
        for &b in &ordered[s[0]..s[1]] {
            update[b] = value;
        }
    }
    Some(update)
}
