//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use venuetier::classifier::Label;
use venuetier::corpus::{Corpus, LoadConfig, PaperRecord};
use venuetier::graph::{induce, InducedSubgraph, WeightedGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `log2 N - (1/N) sum c log2 c`, skipping zero counts.
pub fn entropy_oracle(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let n = n as f64;
    let s: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| c as f64 * (c as f64).log2())
        .sum();
    n.log2() - s / n
}

pub fn node_name(i: usize) -> String {
    format!("n{i:02}")
}

/// Erdos-Renyi style graph with random positive weights.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize, u32)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < p {
                edges.push((a, b, rng.random_range(1..5)));
            }
        }
    }
    edges
}

pub fn to_subgraph(n: usize, edges: &[(usize, usize, u32)]) -> InducedSubgraph {
    let mut g = WeightedGraph::new();
    for i in 0..n {
        g.add_node(&node_name(i));
    }
    for &(a, b, w) in edges {
        g.add_edge_weight(&node_name(a), &node_name(b), w);
    }
    let names: Vec<String> = (0..n).map(node_name).collect();
    induce(&g, names.iter().map(String::as_str))
}

fn all_shortest_paths(adj: &[Vec<usize>], dist: &[Vec<usize>], s: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![(s, vec![s])];
    while let Some((v, path)) = stack.pop() {
        if v == t {
            out.push(path);
            continue;
        }
        for &w in &adj[v] {
            if dist[s][w] == dist[s][v] + 1 && dist[w][t] + dist[s][w] == dist[s][t] {
                let mut p = path.clone();
                p.push(w);
                stack.push((w, p));
            }
        }
    }
    out
}

/// Hop-distance closeness and unordered-pair betweenness by explicit
/// shortest-path enumeration. Indices follow `node_name` order.
pub fn brute_force_centralities(n: usize, edges: &[(usize, usize, u32)]) -> (Vec<f64>, Vec<f64>) {
    const INF: usize = usize::MAX / 4;
    let mut dist = vec![vec![INF; n]; n];
    let mut adj = vec![Vec::new(); n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b, _) in edges {
        dist[a][b] = 1;
        dist[b][a] = 1;
        adj[a].push(b);
        adj[b].push(a);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if dist[i][k] + dist[k][j] < dist[i][j] {
                    dist[i][j] = dist[i][k] + dist[k][j];
                }
            }
        }
    }
    let closeness = (0..n)
        .map(|v| {
            let s: usize = (0..n).filter(|&t| t != v && dist[v][t] < INF).map(|t| dist[v][t]).sum();
            if s == 0 {
                0.0
            } else {
                1.0 / s as f64
            }
        })
        .collect();
    let mut betweenness = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            if dist[s][t] >= INF {
                continue;
            }
            let paths = all_shortest_paths(&adj, &dist, s, t);
            let total = paths.len() as f64;
            for (v, b) in betweenness.iter_mut().enumerate() {
                if v == s || v == t {
                    continue;
                }
                let through = paths.iter().filter(|p| p.contains(&v)).count() as f64;
                *b += through / total;
            }
        }
    }
    (closeness, betweenness)
}

/// Gaussian elimination with partial pivoting; `None` if singular.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub fn dual_objective(kernel: &[Vec<f64>], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Maximum of the SVM dual over all assignments of each variable to
/// {lower bound, free, upper bound}, solving the KKT system on the free set.
pub fn dual_brute_force(kernel: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
    let n = y.len();
    let mut best = f64::NEG_INFINITY;
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut state = vec![0u8; n];
        let mut k = code;
        for s in state.iter_mut() {
            *s = (k % 3) as u8;
            k /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 1).collect();
        let upper: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha = vec![0.0; n];
        for &u in &upper {
            alpha[u] = c;
        }
        if free.is_empty() {
            let s: f64 = (0..n).map(|i| alpha[i] * y[i]).sum();
            if s.abs() > 1e-9 {
                continue;
            }
        } else {
            // rows: Q_FF a_F + b y_F = 1 - Q_FU C ; y_F' a_F = -y_U' C
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut rhs = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    a[r][cc] = y[i] * y[j] * kernel[i][j];
                }
                a[r][m] = y[i];
                a[m][r] = y[i];
                rhs[r] = 1.0 - upper.iter().map(|&u| y[i] * y[u] * kernel[i][u] * c).sum::<f64>();
            }
            rhs[m] = -upper.iter().map(|&u| y[u] * c).sum::<f64>();
            let Some(x) = gauss_solve(a, rhs) else { continue };
            if x[..m].iter().any(|&v| v < -1e-12 || v > c + 1e-12) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = x[r].clamp(0.0, c);
            }
        }
        best = best.max(dual_objective(kernel, y, &alpha));
    }
    best
}

/// Unnormalized Student t density.
fn t_kernel(x: f64, df: f64) -> f64 {
    (1.0 + x * x / df).powf(-(df + 1.0) / 2.0)
}

/// Integral of `f` over `[t, inf)` by Simpson's rule after `x = t + u/(1-u)`.
fn tail_integral(t: f64, df: f64, steps: usize) -> f64 {
    let g = |u: f64| {
        if u >= 1.0 {
            0.0
        } else {
            let x = t + u / (1.0 - u);
            t_kernel(x, df) / ((1.0 - u) * (1.0 - u))
        }
    };
    let h = 1.0 / steps as f64;
    let mut s = g(0.0) + g(1.0);
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(k as f64 * h);
    }
    s * h / 3.0
}

/// Two-tailed p-value of a t statistic by numerical integration.
pub fn t_p_value_oracle(t: f64, df: f64) -> f64 {
    let steps = 200_000;
    tail_integral(t.abs(), df, steps) / tail_integral(0.0, df, steps)
}

/// Two 2D clusters separated by the line x = 0 with margin >= 1.
pub fn two_blobs(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 { Label::TopTier } else { Label::NonTopTier };
        let cx: f64 = if label == Label::TopTier { 2.5 } else { -2.5 };
        loop {
            let x: f64 = cx + r.random_range(-2.0..2.0);
            let y: f64 = r.random_range(-2.0..2.0);
            if x.abs() >= 0.5 && (x - cx).powi(2) + y * y <= 4.0 {
                rows.push(vec![x, y]);
                labels.push(label);
                break;
            }
        }
    }
    (rows, labels)
}

/// Margin of the separator `x = 0`: smallest signed distance, positive when
/// every point lies on its label's side.
pub fn linear_margin(rows: &[Vec<f64>], labels: &[Label]) -> f64 {
    rows.iter()
        .zip(labels)
        .map(|(r, l)| r[0] * l.sign())
        .fold(f64::INFINITY, f64::min)
}

pub fn record(id: &str, venue: &str, year: i32, authors: &[&str], refs: &[&str]) -> PaperRecord {
    PaperRecord {
        paper_id: id.into(),
        venue_id: venue.into(),
        year,
        author_ids: authors.iter().map(|s| s.to_string()).collect(),
        subfields: vec!["ML".into()],
        keywords: vec!["svm".into()],
        reference_ids: refs.iter().map(|s| s.to_string()).collect(),
    }
}

pub fn corpus(records: Vec<PaperRecord>) -> Corpus {
    Corpus::from_records(records, &LoadConfig::default()).expect("valid corpus")
}

/// Two venue papers in 2008-09 cited four times from 2010.
pub fn impact_factor_corpus() -> Corpus {
    corpus(vec![
        record("v08", "V", 2008, &["a"], &[]),
        record("v09", "V", 2009, &["b"], &[]),
        record("w10a", "W", 2010, &["c"], &["v08", "v09"]),
        record("w10b", "W", 2010, &["d"], &["v08"]),
        record("v10", "V", 2010, &["a", "b"], &["v09"]),
        record("w07", "W", 2007, &["e"], &[]),
    ])
}

/// Citations from `year` into the venue's two previous years, per paper, by
/// direct enumeration.
pub fn impact_factor_oracle(corpus: &Corpus, venue: &str, year: i32) -> f64 {
    let papers = corpus.papers();
    let targets: Vec<&str> = papers
        .iter()
        .filter(|p| p.venue_id == venue && (p.year == year - 1 || p.year == year - 2))
        .map(|p| p.paper_id.as_str())
        .collect();
    let mut citations = 0;
    for p in papers.iter().filter(|p| p.year == year) {
        for t in &targets {
            if p.reference_ids.iter().any(|r| r == t) {
                citations += 1;
            }
        }
    }
    citations as f64 / targets.len() as f64
}
