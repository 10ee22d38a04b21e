//! RBF-kernel SVM trained with sequential minimal optimization, plus the
//! model-selection protocol around it: stratified k-fold grid search over
//! `(gamma, C)`, single-feature ranking and forward feature combination.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Curvature floor for non-positive-definite pairs.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "TT")]
    TopTier,
    #[serde(rename = "NTT")]
    NonTopTier,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::TopTier => 1.0,
            Label::NonTopTier => -1.0,
        }
    }

    /// Non-negative decision values map to top-tier.
    pub fn from_decision(value: f64) -> Self {
        if value >= 0.0 {
            Label::TopTier
        } else {
            Label::NonTopTier
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::TopTier => Label::NonTopTier,
            Label::NonTopTier => Label::TopTier,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::TopTier => "TT",
            Label::NonTopTier => "NTT",
        })
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "TT" | "TOP" | "TOP-TIER" => Ok(Label::TopTier),
            "NTT" | "NONTOP" | "NON-TOP-TIER" => Ok(Label::NonTopTier),
            other => Err(Error::Dataset(format!("unknown label `{other}` (expected TT or NTT)"))),
        }
    }
}

/// Per-feature affine map to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Standardizer {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Fits on `rows`; constant columns keep scale 1.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut scale = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in scale.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        for s in &mut scale {
            let sd = (*s / n).sqrt();
            *s = if sd > 1e-12 { sd } else { 1.0 };
        }
        Standardizer { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Feature rows with binary labels. `feature_subset` records which columns
/// of the original `input_dim`-wide vectors the rows hold.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub feature_subset: Vec<usize>,
    pub input_dim: usize,
}

impl LabeledDataset {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        if rows.len() != labels.len() || rows.len() != ids.len() {
            return Err(Error::Dataset(format!(
                "{} ids, {} rows and {} labels",
                ids.len(),
                rows.len(),
                labels.len()
            )));
        }
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(LabeledDataset {
            ids,
            rows,
            labels,
            feature_subset: (0..dim).collect(),
            input_dim: dim,
        })
    }

    /// Anonymous rows, ids are row numbers.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(ids, rows, labels)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_subset.len()
    }

    /// `(top-tier, non-top-tier)` counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let tt = self.labels.iter().filter(|&&l| l == Label::TopTier).count();
        (tt, self.labels.len() - tt)
    }

    /// Keeps the given columns (indices relative to the current rows).
    pub fn project(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.dim()) {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: bad + 1,
            });
        }
        Ok(LabeledDataset {
            ids: self.ids.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| columns.iter().map(|&c| r[c]).collect())
                .collect(),
            labels: self.labels.clone(),
            feature_subset: columns.iter().map(|&c| self.feature_subset[c]).collect(),
            input_dim: self.input_dim,
        })
    }

    /// Keeps the given rows.
    pub fn select(&self, rows: &[usize]) -> Self {
        LabeledDataset {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            feature_subset: self.feature_subset.clone(),
            input_dim: self.input_dim,
        }
    }

    pub fn with_flipped_labels(&self) -> Self {
        let mut d = self.clone();
        for l in &mut d.labels {
            *l = l.flipped();
        }
        d
    }
}

pub fn rbf_kernel(x: &[f64], z: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: z.len(),
        });
    }
    Ok(rbf_unchecked(x, z, gamma))
}

fn rbf_unchecked(x: &[f64], z: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub gamma: f64,
    pub c: f64,
    /// Stop once the maximal KKT violation falls below this.
    pub tol: f64,
    /// Iteration budget in units of `n^2` pair updates (`n` sweeps of `n`).
    pub max_passes: usize,
    pub standardize: bool,
}

impl SvmParams {
    pub fn new(gamma: f64, c: f64) -> Self {
        SvmParams {
            gamma,
            c,
            tol: 1e-3,
            max_passes: 10,
            standardize: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// A labeled training row kept for nearest-neighbour explanations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub id: String,
    pub label: Label,
    /// Standardized, subset-projected features.
    pub row: Vec<f64>,
}

/// Trained classifier. Support vectors live in standardized space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub format_version: u32,
    pub gamma: f64,
    pub c: f64,
    pub input_dim: usize,
    pub feature_subset: Vec<usize>,
    pub standardizer: Standardizer,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub dual_coefficients: Vec<f64>,
    /// Training-row index of each support vector.
    pub support_indices: Vec<usize>,
    pub bias: f64,
    pub iterations: usize,
    pub exemplars: Vec<Exemplar>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub decision: f64,
}

impl SvmModel {
    /// Decision value for a row already in standardized subset space.
    pub fn decision_standardized(&self, row: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefficients)
            .map(|(sv, coef)| coef * rbf_unchecked(sv, row, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    /// Maps a full input row into the model's standardized subset space.
    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                got: row.len(),
            });
        }
        let projected: Vec<f64> = self.feature_subset.iter().map(|&i| row[i]).collect();
        Ok(self.standardizer.apply(&projected))
    }

    /// Classifies a row of the original input width.
    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        let x = self.transform(row)?;
        let decision = self.decision_standardized(&x);
        Ok(Prediction {
            label: Label::from_decision(decision),
            decision,
        })
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.dual_coefficients.iter().map(|c| c.abs()).collect()
    }

    /// Dual objective `sum(alpha) - 1/2 sum_ij a_i a_j y_i y_j k(x_i, x_j)`.
    pub fn dual_objective(&self) -> f64 {
        let linear: f64 = self.dual_coefficients.iter().map(|c| c.abs()).sum();
        let mut quad = 0.0;
        for (i, (si, ci)) in self.support_vectors.iter().zip(&self.dual_coefficients).enumerate() {
            for (sj, cj) in self.support_vectors[i..].iter().zip(&self.dual_coefficients[i..]) {
                let k = rbf_unchecked(si, sj, self.gamma);
                let term = ci * cj * k;
                quad += if std::ptr::eq(si, sj) { term } else { 2.0 * term };
            }
        }
        linear - 0.5 * quad
    }

    /// The `k` exemplars nearest to `row` (original input width) by
    /// Euclidean distance in standardized space.
    pub fn nearest_exemplars(&self, row: &[f64], k: usize) -> Result<Vec<(&Exemplar, f64)>> {
        let x = self.transform(row)?;
        let mut scored: Vec<(&Exemplar, f64)> = self
            .exemplars
            .iter()
            .map(|e| {
                let d = e.row.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                (e, d)
            })
            .collect();
        scored.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.id.cmp(&b.0.id)));
        scored.truncate(k);
        Ok(scored)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a model file; leading `#` header lines are skipped.
    pub fn from_json(text: &str) -> Result<Self> {
        let body: String = text
            .lines()
            .skip_while(|l| l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n");
        let model: SvmModel = serde_json::from_str(&body)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format version {} (expected {MODEL_FORMAT_VERSION})",
                model.format_version
            )));
        }
        if model.support_vectors.len() != model.dual_coefficients.len() {
            return Err(Error::Model("support vector and coefficient counts differ".into()));
        }
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Final state of the dual solver over the training rows.
#[derive(Debug, Clone)]
struct DualSolution {
    alpha: Vec<f64>,
    bias: f64,
    iterations: usize,
}

/// Solves `min 1/2 a'Qa - e'a` s.t. `y'a = 0`, `0 <= a <= C`, with
/// `Q_ij = y_i y_j K_ij`, choosing the maximal-violating first index and a
/// second-order second index each step.
fn solve_dual(kernel: &[Vec<f64>], y: &[f64], params: &SvmParams) -> Result<DualSolution> {
    let n = y.len();
    let c = params.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = (params.max_passes.max(1) * n * n).max(100_000);
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i][j];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                let v = y[t] * grad[t];
                if v >= gmax2 {
                    gmax2 = v;
                }
                let b = gmax + v;
                if b > 0.0 {
                    let mut a = kernel[i][i] + kernel[t][t] - 2.0 * kernel[i][t];
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let obj = -(b * b) / a;
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let gap = gmax + gmax2;
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if gap >= params.tol => (i, j),
            _ => break,
        };
        if iterations >= max_iter {
            return Err(Error::NotConverged {
                iterations,
                gap,
                tol: params.tol,
            });
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = kernel[i][i] + kernel[j][j] - 2.0 * kernel[i][j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = kernel[i][i] + kernel[j][j] - 2.0 * kernel[i][j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        alpha[i] = alpha[i].clamp(0.0, c);
        alpha[j] = alpha[j].clamp(0.0, c);

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (k, g) in grad.iter_mut().enumerate() {
            *g += q(k, i) * di + q(k, j) * dj;
        }
    }

    // bias from free vectors, or the midpoint of the feasible interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };
    Ok(DualSolution {
        alpha,
        bias: -rho,
        iterations,
    })
}

/// Trains an RBF SVM on every row of `data`.
pub fn train_smo(data: &LabeledDataset, params: &SvmParams) -> Result<SvmModel> {
    params.validate()?;
    if data.len() < 2 {
        return Err(Error::Dataset(format!("need at least 2 rows, got {}", data.len())));
    }
    let (tt, ntt) = data.class_counts();
    if tt == 0 || ntt == 0 {
        return Err(Error::Dataset("training data contains a single class".into()));
    }
    let standardizer = if params.standardize {
        Standardizer::fit(&data.rows)
    } else {
        Standardizer::identity(data.dim())
    };
    let x: Vec<Vec<f64>> = data.rows.iter().map(|r| standardizer.apply(r)).collect();
    let y: Vec<f64> = data.labels.iter().map(|l| l.sign()).collect();
    let kernel: Vec<Vec<f64>> = x
        .iter()
        .map(|a| x.iter().map(|b| rbf_unchecked(a, b, params.gamma)).collect())
        .collect();

    let sol = solve_dual(&kernel, &y, params)?;

    let support_indices: Vec<usize> = (0..data.len()).filter(|&i| sol.alpha[i] > 0.0).collect();
    Ok(SvmModel {
        format_version: MODEL_FORMAT_VERSION,
        gamma: params.gamma,
        c: params.c,
        input_dim: data.input_dim,
        feature_subset: data.feature_subset.clone(),
        standardizer,
        support_vectors: support_indices.iter().map(|&i| x[i].clone()).collect(),
        dual_coefficients: support_indices.iter().map(|&i| sol.alpha[i] * y[i]).collect(),
        support_indices,
        bias: sol.bias,
        iterations: sol.iterations,
        exemplars: data
            .ids
            .iter()
            .zip(&data.labels)
            .zip(&x)
            .map(|((id, &label), row)| Exemplar {
                id: id.clone(),
                label,
                row: row.clone(),
            })
            .collect(),
    })
}

/// Fraction of rows of `data` (same column layout as the training data)
/// that `model` labels correctly.
pub fn accuracy(model: &SvmModel, data: &LabeledDataset) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let correct = data
        .rows
        .iter()
        .zip(&data.labels)
        .filter(|(r, &l)| {
            let x = model.standardizer.apply(r);
            Label::from_decision(model.decision_standardized(&x)) == l
        })
        .count();
    correct as f64 / data.len() as f64
}

/// Fold index per row; each class is shuffled and dealt round-robin, so
/// class counts per fold differ by at most one.
pub fn stratified_folds(labels: &[Label], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if labels.len() < folds {
        return Err(Error::Dataset(format!("{} rows cannot fill {folds} folds", labels.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for class in [Label::TopTier, Label::NonTopTier] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < folds {
            return Err(Error::Dataset(format!(
                "class {class} has {} members, fewer than {folds} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for m in members {
            assignment[m] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}

/// Stratified train/validation split; returns `(train rows, validation rows)`.
pub fn stratified_split(labels: &[Label], validation_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&validation_fraction) {
        return Err(Error::Config(format!(
            "validation fraction must lie in [0, 1), got {validation_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for class in [Label::TopTier, Label::NonTopTier] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let k = (members.len() as f64 * validation_fraction).round() as usize;
        validation.extend_from_slice(&members[..k]);
        train.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    validation.sort_unstable();
    Ok((train, validation))
}

/// Decades `10^lo ..= 10^hi`.
pub fn log_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 10f64.powi(e)).collect()
}

/// Reference operating point reported for the original benchmark.
pub const REFERENCE_GAMMA: f64 = 9.99e-8;
pub const REFERENCE_C: f64 = 1e8;

pub fn default_gamma_grid() -> Vec<f64> {
    let mut g = log_grid(-9, 1);
    g.push(REFERENCE_GAMMA);
    g.sort_by(f64::total_cmp);
    g
}

pub fn default_c_grid() -> Vec<f64> {
    let mut c = log_grid(-2, 8);
    if !c.contains(&REFERENCE_C) {
        c.push(REFERENCE_C);
        c.sort_by(f64::total_cmp);
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchConfig {
    pub folds: usize,
    pub gamma_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
    pub seed: u64,
    pub standardize: bool,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for GridSearchConfig {
    fn default() -> Self {
        GridSearchConfig {
            folds: 10,
            gamma_grid: default_gamma_grid(),
            c_grid: default_c_grid(),
            seed: 0,
            standardize: true,
            tol: 1e-3,
            max_passes: 10,
        }
    }
}

impl GridSearchConfig {
    pub fn params(&self, gamma: f64, c: f64) -> SvmParams {
        SvmParams {
            gamma,
            c,
            tol: self.tol,
            max_passes: self.max_passes,
            standardize: self.standardize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub gamma: f64,
    pub c: f64,
    /// `None` when some fold failed to train.
    pub mean_accuracy: Option<f64>,
    pub fold_accuracies: Vec<f64>,
    pub failed_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchReport {
    pub cells: Vec<GridCell>,
    pub best_gamma: f64,
    pub best_c: f64,
    pub best_accuracy: f64,
    pub fold_assignment: Vec<usize>,
    pub seed: u64,
}

fn cv_cell(data: &LabeledDataset, folds: &[usize], k: usize, params: &SvmParams) -> GridCell {
    let mut accs = Vec::with_capacity(k);
    let mut failed = 0;
    for f in 0..k {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] != f).collect();
        let test_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] == f).collect();
        match train_smo(&data.select(&train_idx), params) {
            Ok(model) => accs.push(accuracy(&model, &data.select(&test_idx))),
            Err(_) => failed += 1,
        }
    }
    let mean_accuracy = (failed == 0).then(|| accs.iter().sum::<f64>() / k as f64);
    GridCell {
        gamma: params.gamma,
        c: params.c,
        mean_accuracy,
        fold_accuracies: accs,
        failed_folds: failed,
    }
}

/// Stratified k-fold accuracy for every `(gamma, C)` pair. The best cell has
/// maximal mean accuracy; ties go to the smallest C, then the smallest gamma.
pub fn grid_search(data: &LabeledDataset, config: &GridSearchConfig) -> Result<GridSearchReport> {
    if config.gamma_grid.is_empty() || config.c_grid.is_empty() {
        return Err(Error::Config("empty parameter grid".into()));
    }
    let folds = stratified_folds(&data.labels, config.folds, config.seed)?;
    let pairs: Vec<(f64, f64)> = config
        .gamma_grid
        .iter()
        .flat_map(|&g| config.c_grid.iter().map(move |&c| (g, c)))
        .collect();
    let cells: Vec<GridCell> = pairs
        .par_iter()
        .map(|&(g, c)| cv_cell(data, &folds, config.folds, &config.params(g, c)))
        .collect();

    let best = cells
        .iter()
        .filter_map(|cell| cell.mean_accuracy.map(|a| (a, cell)))
        .max_by(|(a1, c1), (a2, c2)| {
            a1.total_cmp(a2)
                .then_with(|| c2.c.total_cmp(&c1.c))
                .then_with(|| c2.gamma.total_cmp(&c1.gamma))
        })
        .map(|(a, cell)| (a, cell.gamma, cell.c))
        .ok_or_else(|| Error::Dataset("no grid point trained successfully on every fold".into()))?;

    Ok(GridSearchReport {
        best_gamma: best.1,
        best_c: best.2,
        best_accuracy: best.0,
        cells,
        fold_assignment: folds,
        seed: config.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: usize,
    pub accuracy: f64,
}

/// Validation accuracy of a single-feature model for every column, best
/// first; ties keep column order.
pub fn rank_features(train: &LabeledDataset, validate: &LabeledDataset, params: &SvmParams) -> Result<Vec<FeatureScore>> {
    if train.is_empty() || validate.is_empty() {
        return Err(Error::Dataset("ranking needs non-empty train and validation sets".into()));
    }
    if train.dim() != validate.dim() {
        return Err(Error::Dimension {
            expected: train.dim(),
            got: validate.dim(),
        });
    }
    let mut scores: Vec<FeatureScore> = (0..train.dim())
        .into_par_iter()
        .map(|f| {
            let model = train_smo(&train.project(&[f])?, params)?;
            Ok(FeatureScore {
                feature: f,
                accuracy: accuracy(&model, &validate.project(&[f])?),
            })
        })
        .collect::<Result<_>>()?;
    scores.sort_by(|a, b| b.accuracy.total_cmp(&a.accuracy));
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardSelection {
    /// Validation accuracy using the first `k + 1` ranked features.
    pub curve: Vec<f64>,
    pub best_prefix: usize,
    pub best_accuracy: f64,
    /// Best prefix minus redundant columns, in rank order.
    pub selected: Vec<usize>,
    pub dropped: Vec<usize>,
    pub final_accuracy: f64,
}

/// Adds ranked features one at a time, keeps the best prefix, then drops any
/// feature whose |correlation| with an earlier kept feature exceeds
/// `corr_threshold`.
pub fn forward_combine(
    ranking: &[usize],
    train: &LabeledDataset,
    validate: &LabeledDataset,
    correlation: &[Vec<f64>],
    corr_threshold: f64,
    params: &SvmParams,
) -> Result<ForwardSelection> {
    if ranking.is_empty() {
        return Err(Error::Dataset("empty feature ranking".into()));
    }
    let eval = |cols: &[usize]| -> Result<f64> {
        let model = train_smo(&train.project(cols)?, params)?;
        Ok(accuracy(&model, &validate.project(cols)?))
    };
    let curve: Vec<f64> = (1..=ranking.len())
        .into_par_iter()
        .map(|k| eval(&ranking[..k]))
        .collect::<Result<_>>()?;
    let (best_idx, &best_accuracy) = curve
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.total_cmp(b).then_with(|| j.cmp(i)))
        .unwrap();
    let best_prefix = best_idx + 1;

    let mut selected: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    for &f in &ranking[..best_prefix] {
        let redundant = selected.iter().any(|&s| {
            correlation
                .get(f)
                .and_then(|row| row.get(s))
                .is_some_and(|r| r.abs() > corr_threshold)
        });
        if redundant {
            dropped.push(f);
        } else {
            selected.push(f);
        }
    }
    let final_accuracy = if dropped.is_empty() {
        best_accuracy
    } else {
        eval(&selected)?
    };
    Ok(ForwardSelection {
        curve,
        best_prefix,
        best_accuracy,
        selected,
        dropped,
        final_accuracy,
    })
}
