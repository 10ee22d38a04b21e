//! Two-sample t-test, Pearson correlation, PCA over the correlation matrix,
//! Cohen's kappa and the two-year impact factor.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Two-tailed.
    pub p: f64,
    pub df: f64,
}

impl TTest {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p < alpha
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Student's two-sample t-test with pooled variance.
pub fn t_test_two_sample(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Stats(format!(
            "t-test needs at least 2 values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let ss = |xs: &[f64], m: f64| xs.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    let df = na + nb - 2.0;
    let pooled = (ss(a, ma) + ss(b, mb)) / df;
    let diff = ma - mb;
    if pooled <= 0.0 {
        return Ok(if diff == 0.0 {
            TTest { t: 0.0, p: 1.0, df }
        } else {
            TTest {
                t: diff.signum() * f64::INFINITY,
                p: 0.0,
                df,
            }
        });
    }
    let t = diff / (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Stats(e.to_string()))?;
    let p = (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0);
    Ok(TTest { t, p, df })
}

/// Pearson r, or `None` when either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    /// Signed coefficients.
    pub values: Vec<Vec<f64>>,
    /// Columns with zero variance; their off-diagonal entries are 0.
    pub constant_columns: Vec<usize>,
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    /// `|r|`, the heatmap scale.
    pub fn absolute(&self) -> Vec<Vec<f64>> {
        self.values.iter().map(|r| r.iter().map(|v| v.abs()).collect()).collect()
    }

    /// Pairs `(i, j)`, `i < j`, with `|r| > threshold`.
    pub fn strong_pairs(&self, threshold: f64) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.dim() {
            for j in i + 1..self.dim() {
                if self.values[i][j].abs() > threshold {
                    out.push((i, j, self.values[i][j]));
                }
            }
        }
        out
    }
}

/// Column-wise Pearson matrix of `rows` (observations by features).
pub fn pearson_matrix(rows: &[Vec<f64>], labels: &[String]) -> Result<CorrelationMatrix> {
    if rows.len() < 2 {
        return Err(Error::Stats(format!("correlation needs at least 2 rows, got {}", rows.len())));
    }
    let dim = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            got: bad.len(),
        });
    }
    if labels.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: labels.len(),
        });
    }
    let cols: Vec<Vec<f64>> = (0..dim).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let constant_columns: Vec<usize> = (0..dim)
        .filter(|&j| cols[j].iter().all(|&v| v == cols[j][0]))
        .collect();
    let mut values = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        values[i][i] = 1.0;
        for j in i + 1..dim {
            let r = pearson(&cols[i], &cols[j]).unwrap_or(0.0);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        labels: labels.to_vec(),
        values,
        constant_columns,
    })
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues and the matching unit eigenvectors (as rows), unsorted.
pub fn symmetric_eigen(matrix: &[Vec<f64>], tol: f64, max_sweeps: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = matrix.len();
    if matrix.iter().any(|r| r.len() != n) {
        return Err(Error::Stats("matrix is not square".into()));
    }
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let off = |a: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off(&a) >= tol {
        if sweeps >= max_sweeps {
            return Err(Error::Stats(format!(
                "Jacobi did not converge in {max_sweeps} sweeps (off-diagonal norm {:.3e})",
                off(&a)
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i][i]).collect();
    let vectors = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    Ok((values, vectors))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaFactor {
    /// 1-based.
    pub rank: usize,
    pub eigenvalue: f64,
    pub variance_fraction: f64,
    pub cumulative_fraction: f64,
    /// `(feature index, signed loading)`, largest |loading| first.
    pub top_loadings: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaReport {
    pub labels: Vec<String>,
    /// Non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Unit loading vector per eigenvalue.
    pub loadings: Vec<Vec<f64>>,
    pub factors: Vec<PcaFactor>,
    /// Smallest factor count whose cumulative variance reaches the cut.
    pub retained: usize,
    pub variance_cut: f64,
    pub warnings: Vec<String>,
}

impl PcaReport {
    /// `sum_k lambda_k v_k v_k'`.
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let n = self.eigenvalues.len();
        let mut m = vec![vec![0.0; n]; n];
        for (lambda, v) in self.eigenvalues.iter().zip(&self.loadings) {
            for i in 0..n {
                for j in 0..n {
                    m[i][j] += lambda * v[i] * v[j];
                }
            }
        }
        m
    }
}

pub const DEFAULT_VARIANCE_CUT: f64 = 0.95;

/// Principal components of the correlation matrix of `rows`. Constant
/// columns contribute a zero row and column, so the trace equals the number
/// of non-constant features.
pub fn pca_factors(rows: &[Vec<f64>], labels: &[String], n_report: usize, top_k: usize) -> Result<PcaReport> {
    let corr = pearson_matrix(rows, labels)?;
    pca_from_correlation(&corr, n_report, top_k, DEFAULT_VARIANCE_CUT)
}

pub fn pca_from_correlation(corr: &CorrelationMatrix, n_report: usize, top_k: usize, variance_cut: f64) -> Result<PcaReport> {
    let n = corr.dim();
    let mut m = corr.values.clone();
    for &c in &corr.constant_columns {
        for k in 0..n {
            m[c][k] = 0.0;
            m[k][c] = 0.0;
        }
    }
    let mut warnings = Vec::new();
    for &c in &corr.constant_columns {
        warnings.push(format!("feature `{}` is constant and carries no variance", corr.labels[c]));
    }
    let (values, vectors) = symmetric_eigen(&m, 1e-10, 200)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let loadings: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| {
            let mut v = vectors[i].clone();
            let lead = v
                .iter()
                .enumerate()
                .max_by(|(a, x), (b, y)| x.abs().total_cmp(&y.abs()).then(b.cmp(a)))
                .map(|(k, _)| k)
                .unwrap_or(0);
            if v.get(lead).is_some_and(|&x| x < 0.0) {
                for x in &mut v {
                    *x = -*x;
                }
            }
            v
        })
        .collect();

    for k in 1..eigenvalues.len() {
        if eigenvalues[k - 1] > 1e-12 && (eigenvalues[k - 1] - eigenvalues[k]).abs() < 1e-8 {
            warnings.push(format!(
                "factors {} and {} share eigenvalue {:.6}; their loadings are not unique",
                k,
                k + 1,
                eigenvalues[k]
            ));
        }
    }

    let total: f64 = eigenvalues.iter().filter(|&&l| l > 0.0).sum();
    if total <= 0.0 {
        warnings.push("correlation matrix has no positive eigenvalue".into());
    }
    let mut factors = Vec::new();
    let mut cumulative = 0.0;
    let mut retained = 0;
    for (k, (&lambda, v)) in eigenvalues.iter().zip(&loadings).enumerate() {
        if lambda <= 1e-12 || total <= 0.0 {
            break;
        }
        let fraction = lambda / total;
        cumulative += fraction;
        if retained == 0 && cumulative >= variance_cut - 1e-12 {
            retained = k + 1;
        }
        if k < n_report {
            let mut top: Vec<(usize, f64)> = v.iter().copied().enumerate().collect();
            top.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
            top.truncate(top_k);
            factors.push(PcaFactor {
                rank: k + 1,
                eigenvalue: lambda,
                variance_fraction: fraction,
                cumulative_fraction: cumulative,
                top_loadings: top,
            });
        }
    }
    Ok(PcaReport {
        labels: corr.labels.clone(),
        eigenvalues,
        loadings,
        factors,
        retained,
        variance_cut,
        warnings,
    })
}

/// Cohen's kappa between two raters over the same items.
pub fn cohens_kappa<T: Ord>(rater_a: &[T], rater_b: &[T]) -> Result<f64> {
    if rater_a.len() != rater_b.len() {
        return Err(Error::Stats(format!(
            "raters labeled {} and {} items",
            rater_a.len(),
            rater_b.len()
        )));
    }
    if rater_a.is_empty() {
        return Err(Error::Stats("kappa needs at least one item".into()));
    }
    let n = rater_a.len() as f64;
    let mut marg_a: BTreeMap<&T, usize> = BTreeMap::new();
    let mut marg_b: BTreeMap<&T, usize> = BTreeMap::new();
    let mut agree = 0usize;
    for (a, b) in rater_a.iter().zip(rater_b) {
        *marg_a.entry(a).or_default() += 1;
        *marg_b.entry(b).or_default() += 1;
        if a == b {
            agree += 1;
        }
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = marg_a
        .iter()
        .map(|(k, &ca)| ca as f64 * marg_b.get(k).copied().unwrap_or(0) as f64)
        .sum::<f64>()
        / (n * n);
    if (1.0 - p_e).abs() < 1e-15 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Mean of kappa over all rater pairs.
pub fn mean_pairwise_kappa<T: Ord>(raters: &[Vec<T>]) -> Result<f64> {
    if raters.len() < 2 {
        return Err(Error::Stats("pairwise kappa needs at least two raters".into()));
    }
    let mut sum = 0.0;
    let mut pairs = 0;
    for i in 0..raters.len() {
        for j in i + 1..raters.len() {
            sum += cohens_kappa(&raters[i], &raters[j])?;
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

/// Citations made in `year` to the venue's papers of the two previous
/// years, per such paper. Each citing/cited pair counts once.
pub fn impact_factor(corpus: &Corpus, venue: &str, year: i32) -> Result<f64> {
    let targets: BTreeSet<&str> = corpus
        .venue_papers(venue)?
        .filter(|p| p.year == year - 1 || p.year == year - 2)
        .map(|p| p.paper_id.as_str())
        .collect();
    if targets.is_empty() {
        return Err(Error::UndefinedImpactFactor {
            venue: venue.to_string(),
            year,
        });
    }
    let citations: usize = corpus
        .papers()
        .iter()
        .filter(|p| p.year == year)
        .map(|p| {
            p.reference_ids
                .iter()
                .map(String::as_str)
                .filter(|r| targets.contains(r))
                .collect::<BTreeSet<&str>>()
                .len()
        })
        .sum();
    Ok(citations as f64 / targets.len() as f64)
}
