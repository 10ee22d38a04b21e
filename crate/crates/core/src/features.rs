//! Yearly diversity quantities, their consecutive-year deltas and the
//! 27-dimensional stability feature vector.
//!
//! Every quantity is computed for one venue-year. The nine quantities are,
//! in feature order: subfield entropy (CRDI), keyword entropy (CKDI), mean
//! author subfield entropy (CADI), share of all-new-author papers (PNA),
//! author publication-age entropy (CAAI), co-authorship degree entropy
//! (DDI), edge-strength entropy (EDI), average closeness (ACC) and average
//! betweenness (ABC). Each contributes the mean, median and sample standard
//! deviation of its absolute year-to-year changes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AuthorIndex, Corpus, VenueYearSlice};
use crate::error::{Error, Result};
use crate::graph::{average_centrality, induce, GlobalGraphBuilder, InducedSubgraph};

pub const QUANTITY_COUNT: usize = 9;
pub const FEATURE_COUNT: usize = 27;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quantity {
    Crdi,
    Ckdi,
    Cadi,
    Pna,
    Caai,
    Ddi,
    Edi,
    Acc,
    Abc,
}

impl Quantity {
    pub const ALL: [Quantity; QUANTITY_COUNT] = [
        Quantity::Crdi,
        Quantity::Ckdi,
        Quantity::Cadi,
        Quantity::Pna,
        Quantity::Caai,
        Quantity::Ddi,
        Quantity::Edi,
        Quantity::Acc,
        Quantity::Abc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Crdi => "CRDI",
            Quantity::Ckdi => "CKDI",
            Quantity::Cadi => "CADI",
            Quantity::Pna => "PNA",
            Quantity::Caai => "CAAI",
            Quantity::Ddi => "DDI",
            Quantity::Edi => "EDI",
            Quantity::Acc => "ACC",
            Quantity::Abc => "ABC",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column index of this quantity's `stat` in the feature vector.
    pub fn feature_index(self, stat: Statistic) -> usize {
        self.index() * 3 + stat as usize
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statistic {
    Mean,
    Median,
    Stddev,
}

impl Statistic {
    pub const ALL: [Statistic; 3] = [Statistic::Mean, Statistic::Median, Statistic::Stddev];

    fn key(self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::Median => "median",
            Statistic::Stddev => "stddev",
        }
    }
}

/// CSV column names in feature order (`crdi_mean`, `crdi_median`, ...).
pub fn feature_names() -> Vec<String> {
    Quantity::ALL
        .iter()
        .flat_map(|q| {
            Statistic::ALL
                .iter()
                .map(move |s| format!("{}_{}", q.name().to_lowercase(), s.key()))
        })
        .collect()
}

/// Human-readable label for a feature column, e.g. "CRDI mean".
pub fn feature_label(index: usize) -> String {
    let q = Quantity::ALL[index / 3];
    format!("{} {}", q.name(), Statistic::ALL[index % 3].key())
}

/// Base-2 Shannon entropy of a count distribution. Zero counts contribute
/// nothing.
pub fn shannon_entropy<I: IntoIterator<Item = u64>>(counts: I) -> Result<f64> {
    let counts: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::NoMass);
    }
    let total = total as f64;
    let h = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// `-Σ p log2 p` over given probabilities, without renormalizing.
fn raw_entropy<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

fn tally<'a, I: IntoIterator<Item = &'a str>>(items: I) -> BTreeMap<&'a str, u64> {
    let mut counts = BTreeMap::new();
    for it in items {
        *counts.entry(it).or_insert(0) += 1;
    }
    counts
}

/// Denominator of the new-author proportion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PnaDenominator {
    /// Fraction of the slice's papers (stays in [0, 1]).
    #[default]
    Papers,
    /// Number of unique authors in the slice.
    Authors,
}

/// Binning convention for the degree and edge-strength entropies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeNorm {
    /// `p_n = n * count(n) / total mass`.
    #[default]
    Mass,
    /// `p_n = count(n) / number of items`.
    Count,
    /// `p_n = count(n) / total mass`, not renormalized.
    Literal,
}

macro_rules! impl_from_str {
    ($ty:ty, $($s:literal => $v:expr),+) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($v),)+
                    other => Err(Error::Config(format!("unknown {} `{other}`", stringify!($ty)))),
                }
            }
        }
    };
}

impl_from_str!(PnaDenominator, "papers" => PnaDenominator::Papers, "authors" => PnaDenominator::Authors);
impl_from_str!(DegreeNorm, "mass" => DegreeNorm::Mass, "count" => DegreeNorm::Count, "literal" => DegreeNorm::Literal);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub pna_denominator: PnaDenominator,
    pub degree_norm: DegreeNorm,
    /// Minimum run of consecutive years with papers for a venue to be eligible.
    pub min_years: usize,
    /// Inclusive analysis window; the corpus range when `None`.
    pub window: Option<(i32, i32)>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            pna_denominator: PnaDenominator::Papers,
            degree_norm: DegreeNorm::Mass,
            min_years: 5,
            window: None,
        }
    }
}

/// Subfield entropy of a venue-year; `None` when no paper carries a tag.
pub fn crdi(slice: &VenueYearSlice<'_>) -> Option<f64> {
    let counts = tally(
        slice
            .papers
            .iter()
            .flat_map(|p| p.subfields.iter().map(String::as_str)),
    );
    shannon_entropy(counts.into_values()).ok()
}

/// Keyword-occurrence entropy of a venue-year.
pub fn ckdi(slice: &VenueYearSlice<'_>) -> Option<f64> {
    let counts = tally(
        slice
            .papers
            .iter()
            .flat_map(|p| p.keywords.iter().map(String::as_str)),
    );
    shannon_entropy(counts.into_values()).ok()
}

/// Subfield entropy of one author's papers in `[year - 4, year]`, 0 when the
/// window holds no tagged paper.
pub fn author_diversity(index: &AuthorIndex, author: &str, year: i32) -> f64 {
    let counts = tally(
        index
            .window(author, year - 4, year)
            .iter()
            .flat_map(|p| p.subfields.iter().map(String::as_str)),
    );
    shannon_entropy(counts.into_values()).unwrap_or(0.0)
}

/// Mean author diversity over the slice's authors.
pub fn cadi(slice: &VenueYearSlice<'_>, index: &AuthorIndex) -> Option<f64> {
    if slice.author_set.is_empty() {
        return None;
    }
    let sum: f64 = slice
        .author_set
        .iter()
        .map(|a| author_diversity(index, a, slice.year))
        .sum();
    Some(sum / slice.author_set.len() as f64)
}

/// Share of papers whose authors all lack a paper in this venue during the
/// five previous years.
pub fn pna(slice: &VenueYearSlice<'_>, index: &AuthorIndex, denominator: PnaDenominator) -> Option<f64> {
    if slice.is_empty() {
        return None;
    }
    let (from, to) = (slice.year - 5, slice.year - 1);
    let new_papers = slice
        .papers
        .iter()
        .filter(|p| {
            p.author_ids
                .iter()
                .all(|a| !index.published_in(a, slice.venue_id, from, to))
        })
        .count();
    let denom = match denominator {
        PnaDenominator::Papers => slice.paper_count(),
        PnaDenominator::Authors => slice.author_set.len(),
    };
    Some(new_papers as f64 / denom as f64)
}

/// Publication age: years since the author's first corpus paper, 0 unless
/// that first paper is strictly earlier.
pub fn author_age(index: &AuthorIndex, author: &str, year: i32) -> i32 {
    match index.first_pub_year(author) {
        Some(first) if first < year => year - first,
        _ => 0,
    }
}

/// Entropy of the slice authors' publication-age distribution.
pub fn caai(slice: &VenueYearSlice<'_>, index: &AuthorIndex) -> Option<f64> {
    if slice.author_set.is_empty() {
        return None;
    }
    let mut bins: BTreeMap<i32, u64> = BTreeMap::new();
    for a in &slice.author_set {
        *bins.entry(author_age(index, a, slice.year)).or_insert(0) += 1;
    }
    shannon_entropy(bins.into_values()).ok()
}

fn binned_entropy(values: &[u64], norm: DegreeNorm) -> Option<f64> {
    let positive: Vec<u64> = values.iter().copied().filter(|&v| v > 0).collect();
    if positive.is_empty() {
        return None;
    }
    let mut bins: BTreeMap<u64, u64> = BTreeMap::new();
    for v in &positive {
        *bins.entry(*v).or_insert(0) += 1;
    }
    let mass: u64 = positive.iter().sum();
    match norm {
        DegreeNorm::Mass => shannon_entropy(bins.iter().map(|(&n, &c)| n * c)).ok(),
        DegreeNorm::Count => shannon_entropy(bins.values().copied()).ok(),
        DegreeNorm::Literal => Some(raw_entropy(bins.values().map(|&c| c as f64 / mass as f64))),
    }
}

/// Weighted-degree entropy over nodes with positive degree; `None` when every
/// node is isolated.
pub fn ddi(sub: &InducedSubgraph, norm: DegreeNorm) -> Option<f64> {
    binned_entropy(&sub.weighted_degrees(), norm)
}

/// Edge-weight entropy; `None` for an edgeless subgraph.
pub fn edi(sub: &InducedSubgraph, norm: DegreeNorm) -> Option<f64> {
    let weights: Vec<u64> = sub.edge_weights().into_iter().map(u64::from).collect();
    binned_entropy(&weights, norm)
}

pub fn acc_feature(sub: &InducedSubgraph) -> f64 {
    average_centrality(sub.closeness_values())
}

pub fn abc_feature(sub: &InducedSubgraph) -> f64 {
    average_centrality(sub.betweenness_values())
}

/// All nine quantities of one venue-year. An empty slice yields all `None`.
pub fn year_quantities(
    slice: &VenueYearSlice<'_>,
    sub: &InducedSubgraph,
    index: &AuthorIndex,
    config: &FeatureConfig,
) -> [Option<f64>; QUANTITY_COUNT] {
    if slice.is_empty() {
        return [None; QUANTITY_COUNT];
    }
    [
        crdi(slice),
        ckdi(slice),
        cadi(slice, index),
        pna(slice, index, config.pna_denominator),
        caai(slice, index),
        ddi(sub, config.degree_norm),
        edi(sub, config.degree_norm),
        Some(acc_feature(sub)),
        Some(abc_feature(sub)),
    ]
}

/// Yearly values of one quantity; `None` marks a missing year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearSeries {
    pub venue_id: String,
    pub quantity: Quantity,
    pub values: Vec<(i32, Option<f64>)>,
}

impl YearSeries {
    pub fn present_years(&self) -> usize {
        self.values.iter().filter(|(_, v)| v.is_some()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearDelta {
    /// First year of the consecutive pair `(from_year, from_year + 1)`.
    pub from_year: i32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSeries {
    pub venue_id: String,
    pub quantity: Quantity,
    pub deltas: Vec<YearDelta>,
}

impl DeltaSeries {
    pub fn values(&self) -> Vec<f64> {
        self.deltas.iter().map(|d| d.value).collect()
    }
}

/// Absolute differences between consecutive present years. Pairs that span
/// a missing year are skipped.
pub fn delta_series(series: &YearSeries) -> Result<DeltaSeries> {
    let short = || Error::ShortSeries {
        venue: series.venue_id.clone(),
        quantity: series.quantity.name().to_string(),
    };
    if series.present_years() < 2 {
        return Err(short());
    }
    let deltas: Vec<YearDelta> = series
        .values
        .windows(2)
        .filter_map(|w| match (w[0], w[1]) {
            ((y0, Some(a)), (y1, Some(b))) if y1 == y0 + 1 => Some(YearDelta {
                from_year: y0,
                value: (a - b).abs(),
            }),
            _ => None,
        })
        .collect();
    if deltas.is_empty() {
        return Err(short());
    }
    Ok(DeltaSeries {
        venue_id: series.venue_id.clone(),
        quantity: series.quantity,
        deltas,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n - 1 divisor); 0 for a single value.
    pub stddev: f64,
}

pub fn aggregate(values: &[f64]) -> Result<Aggregate> {
    if values.is_empty() {
        return Err(Error::EmptyDeltas);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let stddev = if n > 1 {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Aggregate { mean, median, stddev })
}

/// The 27 aggregated delta features of one venue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub venue_id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, q: Quantity, stat: Statistic) -> f64 {
        self.values[q.feature_index(stat)]
    }
}

/// Everything computed for one venue: raw series, deltas and features.
#[derive(Debug, Clone, PartialEq)]
pub struct VenueProfile {
    pub venue_id: String,
    pub series: Vec<YearSeries>,
    pub deltas: Vec<DeltaSeries>,
    pub features: FeatureVector,
    /// Mean number of papers over the years with papers in the window.
    pub mean_paper_count: f64,
}

fn coverage_string(years: &[i32]) -> String {
    if years.is_empty() {
        return "none".into();
    }
    years.iter().map(i32::to_string).collect::<Vec<_>>().join(",")
}

fn longest_run(years: &[i32]) -> usize {
    let mut best = 0;
    let mut run = 0;
    let mut prev: Option<i32> = None;
    for &y in years {
        run = match prev {
            Some(p) if y == p + 1 => run + 1,
            _ => 1,
        };
        best = best.max(run);
        prev = Some(y);
    }
    best
}

fn window_of(corpus: &Corpus, config: &FeatureConfig) -> (i32, i32) {
    config.window.unwrap_or_else(|| corpus.year_range())
}

/// Checks the consecutive-years eligibility rule for a venue.
pub fn check_eligibility(corpus: &Corpus, venue: &str, config: &FeatureConfig) -> Result<()> {
    let (lo, hi) = window_of(corpus, config);
    let years: Vec<i32> = corpus
        .venue_year_counts(venue)?
        .into_keys()
        .filter(|y| (lo..=hi).contains(y))
        .collect();
    let run = longest_run(&years);
    if run < config.min_years.max(2) {
        return Err(Error::Ineligible {
            venue: venue.to_string(),
            reason: format!(
                "needs at least {} consecutive years of publications, found {run}",
                config.min_years
            ),
            coverage: coverage_string(&years),
        });
    }
    Ok(())
}

fn assemble(
    venue: &str,
    years: &[i32],
    rows: Vec<[Option<f64>; QUANTITY_COUNT]>,
    mean_paper_count: f64,
) -> Result<VenueProfile> {
    let mut series = Vec::with_capacity(QUANTITY_COUNT);
    let mut deltas = Vec::with_capacity(QUANTITY_COUNT);
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    for q in Quantity::ALL {
        let s = YearSeries {
            venue_id: venue.to_string(),
            quantity: q,
            values: years
                .iter()
                .zip(&rows)
                .map(|(&y, row)| (y, row[q.index()]))
                .collect(),
        };
        let d = delta_series(&s).map_err(|e| Error::Ineligible {
            venue: venue.to_string(),
            reason: e.to_string(),
            coverage: coverage_string(
                &s.values.iter().filter(|(_, v)| v.is_some()).map(|(y, _)| *y).collect::<Vec<_>>(),
            ),
        })?;
        let agg = aggregate(&d.values())?;
        values.extend([agg.mean, agg.median, agg.stddev]);
        series.push(s);
        deltas.push(d);
    }
    Ok(VenueProfile {
        venue_id: venue.to_string(),
        series,
        deltas,
        features: FeatureVector {
            venue_id: venue.to_string(),
            values,
        },
        mean_paper_count,
    })
}

type YearRow = [Option<f64>; QUANTITY_COUNT];

/// Profiles for several venues in one pass over the years. The global graph
/// grows incrementally; results come back in input order.
pub fn extract_profiles(
    corpus: &Corpus,
    index: &AuthorIndex,
    venues: &[&str],
    config: &FeatureConfig,
) -> Vec<(String, Result<VenueProfile>)> {
    let (lo, hi) = window_of(corpus, config);
    let years: Vec<i32> = (lo..=hi).collect();

    let mut status: Vec<Result<()>> = venues
        .iter()
        .map(|v| check_eligibility(corpus, v, config))
        .collect();
    let active: Vec<usize> = (0..venues.len()).filter(|&i| status[i].is_ok()).collect();

    let mut rows: HashMap<usize, Vec<[Option<f64>; QUANTITY_COUNT]>> =
        active.iter().map(|&i| (i, Vec::with_capacity(years.len()))).collect();
    let mut counts: HashMap<usize, Vec<usize>> = active.iter().map(|&i| (i, Vec::new())).collect();

    let mut builder = GlobalGraphBuilder::new(corpus);
    for &year in &years {
        let graph = builder.advance_to(year);
        let year_rows: Vec<(usize, Result<(YearRow, usize)>)> = active
            .par_iter()
            .map(|&i| {
                let r = corpus.slice(venues[i], year).map(|slice| {
                    let sub = induce(graph, slice.author_set.iter().copied());
                    (year_quantities(&slice, &sub, index, config), slice.paper_count())
                });
                (i, r)
            })
            .collect();
        for (i, r) in year_rows {
            match r {
                Ok((row, n)) => {
                    rows.get_mut(&i).unwrap().push(row);
                    if n > 0 {
                        counts.get_mut(&i).unwrap().push(n);
                    }
                }
                Err(e) => status[i] = Err(e),
            }
        }
    }

    venues
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let result = match std::mem::replace(&mut status[i], Ok(())) {
                Err(e) => Err(e),
                Ok(()) => {
                    let c = &counts[&i];
                    let mean = c.iter().sum::<usize>() as f64 / c.len().max(1) as f64;
                    assemble(v, &years, rows.remove(&i).unwrap(), mean)
                }
            };
            (v.to_string(), result)
        })
        .collect()
}

pub fn venue_profile(
    corpus: &Corpus,
    index: &AuthorIndex,
    venue: &str,
    config: &FeatureConfig,
) -> Result<VenueProfile> {
    if !corpus.has_venue(venue) {
        return Err(Error::UnknownVenue(venue.to_string()));
    }
    extract_profiles(corpus, index, &[venue], config)
        .pop()
        .map(|(_, r)| r)
        .expect("one venue in, one result out")
}

pub fn feature_vector(
    corpus: &Corpus,
    index: &AuthorIndex,
    venue: &str,
    config: &FeatureConfig,
) -> Result<FeatureVector> {
    venue_profile(corpus, index, venue, config).map(|p| p.features)
}
