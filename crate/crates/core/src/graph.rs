//! Co-authorship graphs, induced subgraphs and centralities.
//!
//! Edge weights count co-authored papers. Distances used by closeness and
//! betweenness are hop counts; weights only feed degree and edge-strength
//! quantities.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::io::Write;

use rayon::prelude::*;

use crate::corpus::{Corpus, PaperRecord};
use crate::error::{Error, Result};

/// Sources per parallel work unit. Fixed so float accumulation order does not
/// depend on the number of worker threads.
const SOURCE_CHUNK: usize = 32;

/// Undirected co-authorship graph without self-loops.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightedGraph {
    adj: BTreeMap<String, BTreeMap<String, u32>>,
}

impl WeightedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: &str) {
        if !self.adj.contains_key(node) {
            self.adj.insert(node.to_string(), BTreeMap::new());
        }
    }

    /// Adds `weight` to the edge between `a` and `b`. Self-loops and zero
    /// weights are ignored.
    pub fn add_edge_weight(&mut self, a: &str, b: &str, weight: u32) {
        self.add_node(a);
        self.add_node(b);
        if a == b || weight == 0 {
            return;
        }
        *self.adj.get_mut(a).unwrap().entry(b.to_string()).or_insert(0) += weight;
        *self.adj.get_mut(b).unwrap().entry(a.to_string()).or_insert(0) += weight;
    }

    /// Registers one paper: every author pair gains one co-authorship.
    pub fn add_paper(&mut self, paper: &PaperRecord) {
        let authors = &paper.author_ids;
        for a in authors {
            self.add_node(a);
        }
        for (i, a) in authors.iter().enumerate() {
            for b in &authors[i + 1..] {
                self.add_edge_weight(a, b, 1);
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(BTreeMap::len).sum::<usize>() / 2
    }

    pub fn contains(&self, node: &str) -> bool {
        self.adj.contains_key(node)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.adj.keys().map(String::as_str)
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<u32> {
        self.adj.get(a).and_then(|n| n.get(b)).copied()
    }

    pub fn neighbors(&self, node: &str) -> impl Iterator<Item = (&str, u32)> {
        self.adj
            .get(node)
            .into_iter()
            .flat_map(|n| n.iter().map(|(k, &w)| (k.as_str(), w)))
    }

    /// Edges as `(a, b, weight)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u32)> {
        self.adj.iter().flat_map(|(a, nbrs)| {
            nbrs.iter()
                .filter(move |(b, _)| a.as_str() < b.as_str())
                .map(move |(b, &w)| (a.as_str(), b.as_str(), w))
        })
    }

    /// Tab-separated `author_a\tauthor_b\tweight` lines, sorted.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (a, b, w) in self.edges() {
            writeln!(out, "{a}\t{b}\t{w}")?;
        }
        Ok(())
    }
}

/// Global co-authorship graph over papers published in
/// `[corpus min year, year)`.
pub fn build_global_graph(corpus: &Corpus, year: i32) -> WeightedGraph {
    let mut builder = GlobalGraphBuilder::new(corpus);
    builder.advance_to(year);
    builder.into_graph()
}

/// Grows the global graph year by year so a sequence of yearly graphs can be
/// visited without rebuilding from scratch.
#[derive(Debug)]
pub struct GlobalGraphBuilder<'a> {
    by_year: BTreeMap<i32, Vec<&'a PaperRecord>>,
    graph: WeightedGraph,
    /// Papers with year strictly below this value are included.
    upto: i32,
}

impl<'a> GlobalGraphBuilder<'a> {
    pub fn new(corpus: &'a Corpus) -> Self {
        let mut by_year: BTreeMap<i32, Vec<&PaperRecord>> = BTreeMap::new();
        for p in corpus.papers() {
            by_year.entry(p.year).or_default().push(p);
        }
        GlobalGraphBuilder {
            by_year,
            graph: WeightedGraph::new(),
            upto: corpus.year_range().0,
        }
    }

    /// Extends the graph to cover all papers with year `< year`. Going
    /// backwards is a no-op.
    pub fn advance_to(&mut self, year: i32) -> &WeightedGraph {
        if year > self.upto {
            for (_, papers) in self.by_year.range(self.upto..year) {
                for p in papers {
                    self.graph.add_paper(p);
                }
            }
            self.upto = year;
        }
        &self.graph
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn into_graph(self) -> WeightedGraph {
        self.graph
    }
}

/// Restriction of a graph to a node subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InducedSubgraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    adj: Vec<Vec<(usize, u32)>>,
}

/// Induced subgraph on `authors`. Authors absent from `graph` become
/// isolated nodes.
pub fn induce<'s, I>(graph: &WeightedGraph, authors: I) -> InducedSubgraph
where
    I: IntoIterator<Item = &'s str>,
{
    let nodes: Vec<String> = authors
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    let index: HashMap<String, usize> = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    let adj = nodes
        .iter()
        .map(|u| {
            let mut row: Vec<(usize, u32)> = graph
                .neighbors(u)
                .filter_map(|(v, w)| index.get(v).map(|&j| (j, w)))
                .collect();
            row.sort_unstable();
            row
        })
        .collect();
    InducedSubgraph { nodes, index, adj }
}

impl InducedSubgraph {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn contains(&self, node: &str) -> bool {
        self.index.contains_key(node)
    }

    /// Edges as node-index triples with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .filter(move |(j, _)| *j > i)
                .map(move |&(j, w)| (i, j, w))
        })
    }

    pub fn edge_weights(&self) -> Vec<u32> {
        self.edges().map(|(_, _, w)| w).collect()
    }

    /// Sum of incident edge weights.
    pub fn weighted_degree(&self, node: &str) -> Result<u64> {
        let &i = self
            .index
            .get(node)
            .ok_or_else(|| Error::UnknownNode(node.to_string()))?;
        Ok(self.degree_at(i))
    }

    fn degree_at(&self, i: usize) -> u64 {
        self.adj[i].iter().map(|&(_, w)| u64::from(w)).sum()
    }

    /// Weighted degrees in node order.
    pub fn weighted_degrees(&self) -> Vec<u64> {
        (0..self.nodes.len()).map(|i| self.degree_at(i)).collect()
    }

    pub fn as_graph(&self) -> WeightedGraph {
        let mut g = WeightedGraph::new();
        for n in &self.nodes {
            g.add_node(n);
        }
        for (i, j, w) in self.edges() {
            g.add_edge_weight(&self.nodes[i], &self.nodes[j], w);
        }
        g
    }

    fn label(&self, values: Vec<f64>) -> BTreeMap<String, f64> {
        self.nodes.iter().cloned().zip(values).collect()
    }

    /// Closeness per node index: inverse of the summed hop distance to every
    /// reachable node, 0 when nothing is reachable.
    pub fn closeness_values(&self) -> Vec<f64> {
        (0..self.nodes.len())
            .into_par_iter()
            .with_min_len(SOURCE_CHUNK)
            .map(|s| {
                let dist = self.bfs_distances(s);
                let farness: u64 = dist.iter().filter_map(|d| *d).map(u64::from).sum();
                if farness == 0 {
                    0.0
                } else {
                    1.0 / farness as f64
                }
            })
            .collect()
    }

    /// Unnormalized betweenness per node index, each unordered pair counted
    /// once (Brandes accumulation over unweighted shortest paths).
    pub fn betweenness_values(&self) -> Vec<f64> {
        let n = self.nodes.len();
        let sources: Vec<usize> = (0..n).collect();
        let partials: Vec<Vec<f64>> = sources
            .par_chunks(SOURCE_CHUNK)
            .map(|chunk| {
                let mut acc = vec![0.0; n];
                let mut work = BrandesWork::new(n);
                for &s in chunk {
                    work.accumulate(self, s, &mut acc);
                }
                acc
            })
            .collect();
        let mut total = vec![0.0; n];
        for part in partials {
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
        }
        for t in &mut total {
            *t /= 2.0;
        }
        total
    }

    fn bfs_distances(&self, s: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.nodes.len()];
        dist[s] = Some(0);
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v].unwrap();
            for &(w, _) in &self.adj[v] {
                if dist[w].is_none() {
                    dist[w] = Some(dv + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

struct BrandesWork {
    stack: Vec<usize>,
    preds: Vec<Vec<usize>>,
    sigma: Vec<f64>,
    dist: Vec<i64>,
    delta: Vec<f64>,
    queue: VecDeque<usize>,
}

impl BrandesWork {
    fn new(n: usize) -> Self {
        BrandesWork {
            stack: Vec::with_capacity(n),
            preds: vec![Vec::new(); n],
            sigma: vec![0.0; n],
            dist: vec![-1; n],
            delta: vec![0.0; n],
            queue: VecDeque::with_capacity(n),
        }
    }

    fn accumulate(&mut self, g: &InducedSubgraph, s: usize, acc: &mut [f64]) {
        for v in 0..g.nodes.len() {
            self.preds[v].clear();
        }
        self.sigma.fill(0.0);
        self.dist.fill(-1);
        self.delta.fill(0.0);
        self.stack.clear();

        self.sigma[s] = 1.0;
        self.dist[s] = 0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.stack.push(v);
            for &(w, _) in &g.adj[v] {
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                }
            }
        }
        while let Some(w) = self.stack.pop() {
            for &v in &self.preds[w] {
                self.delta[v] += self.sigma[v] / self.sigma[w] * (1.0 + self.delta[w]);
            }
            if w != s {
                acc[w] += self.delta[w];
            }
        }
    }
}

pub fn closeness_centrality(g: &InducedSubgraph) -> BTreeMap<String, f64> {
    g.label(g.closeness_values())
}

pub fn betweenness_centrality(g: &InducedSubgraph) -> BTreeMap<String, f64> {
    g.label(g.betweenness_values())
}

/// Mean over strictly positive values; 0 when none qualifies.
pub fn average_centrality<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (sum, n) = values
        .into_iter()
        .filter(|v| *v > 0.0)
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::paper;
    use crate::corpus::LoadConfig;

    fn graph(edges: &[(&str, &str, u32)]) -> WeightedGraph {
        let mut g = WeightedGraph::new();
        for &(a, b, w) in edges {
            g.add_edge_weight(a, b, w);
        }
        g
    }

    fn full(g: &WeightedGraph) -> InducedSubgraph {
        let nodes: Vec<String> = g.nodes().map(str::to_string).collect();
        induce(g, nodes.iter().map(String::as_str))
    }

    #[test]
    fn global_graph_counts_prior_coauthorships() {
        let corpus = Corpus::from_records(
            vec![
                paper("p1", "V", 2000, &["a", "b"]),
                paper("p2", "V", 2000, &["a", "b"]),
                paper("p3", "V", 2001, &["a", "b", "c"]),
                paper("p4", "V", 2002, &["a", "b"]),
            ],
            &LoadConfig::default(),
        )
        .unwrap();
        let g = build_global_graph(&corpus, 2001);
        assert_eq!(g.nodes().collect::<Vec<_>>(), vec!["a", "b"]);
        assert_eq!(g.weight("a", "b"), Some(2));
        let g = build_global_graph(&corpus, 2002);
        assert_eq!(g.weight("a", "b"), Some(3));
        assert_eq!(g.weight("b", "c"), Some(1));
        assert_eq!(build_global_graph(&corpus, 2000).node_count(), 0);
    }

    #[test]
    fn induce_keeps_only_internal_edges() {
        let g = graph(&[("a", "b", 2), ("b", "c", 1)]);
        let sub = induce(&g, ["a", "b"]);
        assert_eq!(sub.edges().collect::<Vec<_>>(), vec![(0, 1, 2)]);

        let disjoint = induce(&g, ["x", "y"]);
        assert_eq!(disjoint.node_count(), 2);
        assert_eq!(disjoint.edge_count(), 0);

        assert_eq!(full(&g).as_graph(), g);
    }

    #[test]
    fn weighted_degrees() {
        let star = graph(&[("x", "a", 1), ("x", "b", 1), ("x", "c", 1), ("a", "m", 2), ("a", "n", 5)]);
        let mut sub = full(&star);
        assert_eq!(sub.weighted_degree("x").unwrap(), 3);
        assert_eq!(sub.weighted_degree("a").unwrap(), 1 + 2 + 5);
        sub = induce(&star, ["x", "lonely"]);
        assert_eq!(sub.weighted_degree("lonely").unwrap(), 0);
        assert!(matches!(sub.weighted_degree("zzz"), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn path_centralities() {
        let sub = full(&graph(&[("a", "b", 1), ("b", "c", 1)]));
        let cc = closeness_centrality(&sub);
        assert!((cc["b"] - 0.5).abs() < 1e-12);
        assert!((cc["a"] - 1.0 / 3.0).abs() < 1e-12);
        let bc = betweenness_centrality(&sub);
        assert_eq!(bc["b"], 1.0);
        assert_eq!(bc["a"], 0.0);
    }

    #[test]
    fn star_and_complete_betweenness() {
        let star = full(&graph(&[("x", "a", 1), ("x", "b", 1), ("x", "c", 1)]));
        assert_eq!(betweenness_centrality(&star)["x"], 3.0);

        let names = ["a", "b", "c", "d"];
        let mut k4 = WeightedGraph::new();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                k4.add_edge_weight(a, b, 1);
            }
        }
        assert!(betweenness_centrality(&full(&k4)).values().all(|&v| v == 0.0));
    }

    #[test]
    fn isolated_node_has_zero_closeness() {
        let g = graph(&[("a", "b", 1)]);
        let sub = induce(&g, ["a", "b", "z"]);
        assert_eq!(closeness_centrality(&sub)["z"], 0.0);
    }

    #[test]
    fn average_ignores_zeros() {
        assert_eq!(average_centrality([0.5, 0.0, 0.5]), 0.5);
        assert_eq!(average_centrality([0.0, 0.0]), 0.0);
        assert_eq!(average_centrality([1.0, 3.0]), 2.0);
    }

    #[test]
    fn edge_list_export_is_sorted() {
        let g = graph(&[("c", "a", 2), ("b", "a", 1)]);
        let mut out = Vec::new();
        g.write_edge_list(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "a\tb\t1\na\tc\t2\n");
    }
}
