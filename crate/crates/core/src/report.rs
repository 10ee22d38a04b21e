//! Plot-ready summaries: per-year group deltas, bucket averages, group
//! feature comparison, raw-value trends between venue pairs and
//! publication-count buckets.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::Serialize;

use crate::classifier::Label;
use crate::features::{feature_names, DeltaSeries, FeatureVector, Quantity, YearSeries, FEATURE_COUNT};
use crate::stats::{t_test_two_sample, TTest};

/// Benchmark figures from the original labeled corpus, kept for side-by-side
/// reporting; they are not reproducible without that corpus.
pub const REFERENCE_VALUES: &[(&str, f64)] = &[
    ("benchmark_accuracy", 0.8518),
    ("benchmark_best_prefix_features", 8.0),
    ("benchmark_best_single_feature_accuracy", 0.81),
    ("benchmark_crdi_p_value", 0.024),
    ("benchmark_ddi_p_value", 0.002),
    ("benchmark_gamma", 9.99e-8),
    ("benchmark_c", 1e8),
    ("benchmark_kappa_a", 0.23),
    ("benchmark_kappa_b", 0.052),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for one value.
    pub stddev: f64,
}

pub fn summarize(values: &[f64]) -> Option<GroupSummary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let stddev = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(GroupSummary { n, mean, stddev })
}

#[derive(Debug, Clone, Default)]
struct Split {
    top: Vec<f64>,
    non_top: Vec<f64>,
}

impl Split {
    fn push(&mut self, label: Label, v: f64) {
        match label {
            Label::TopTier => self.top.push(v),
            Label::NonTopTier => self.non_top.push(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearDeltaRow {
    pub quantity: Quantity,
    pub from_year: i32,
    pub top: Option<GroupSummary>,
    pub non_top: Option<GroupSummary>,
}

/// Mean and spread of each year-pair delta per group. Unlabeled venues are
/// ignored.
pub fn yearly_group_deltas(deltas: &[DeltaSeries], labels: &BTreeMap<String, Label>) -> Vec<YearDeltaRow> {
    let mut cells: BTreeMap<(usize, i32), Split> = BTreeMap::new();
    for d in deltas {
        let Some(&label) = labels.get(&d.venue_id) else { continue };
        for yd in &d.deltas {
            cells
                .entry((d.quantity.index(), yd.from_year))
                .or_default()
                .push(label, yd.value);
        }
    }
    cells
        .into_iter()
        .map(|((q, from_year), s)| YearDeltaRow {
            quantity: Quantity::ALL[q],
            from_year,
            top: summarize(&s.top),
            non_top: summarize(&s.non_top),
        })
        .collect()
}

/// Feature index ranges of the three display buckets.
pub const FEATURE_BUCKETS: [Range<usize>; 3] = [0..9, 9..18, 18..27];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketAverages {
    pub venue_id: String,
    pub label: Option<Label>,
    pub values: [f64; 3],
}

pub fn bucket_averages(features: &[FeatureVector], labels: &BTreeMap<String, Label>) -> Vec<BucketAverages> {
    features
        .iter()
        .map(|fv| {
            let mut values = [0.0; 3];
            for (slot, range) in values.iter_mut().zip(FEATURE_BUCKETS) {
                let n = range.len() as f64;
                *slot = fv.values[range].iter().sum::<f64>() / n;
            }
            BucketAverages {
                venue_id: fv.venue_id.clone(),
                label: labels.get(&fv.venue_id).copied(),
                values,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupFeatureRow {
    pub feature: usize,
    pub name: String,
    pub top: Option<GroupSummary>,
    pub non_top: Option<GroupSummary>,
    /// Top-tier minus non-top-tier; `None` with fewer than two per group.
    pub t_test: Option<TTest>,
}

/// Per-feature group means with a two-sample t-test.
pub fn group_feature_comparison(features: &[FeatureVector], labels: &BTreeMap<String, Label>) -> Vec<GroupFeatureRow> {
    let names = feature_names();
    (0..FEATURE_COUNT)
        .map(|f| {
            let mut s = Split::default();
            for fv in features {
                if let Some(&l) = labels.get(&fv.venue_id) {
                    s.push(l, fv.values[f]);
                }
            }
            GroupFeatureRow {
                feature: f,
                name: names[f].clone(),
                top: summarize(&s.top),
                non_top: summarize(&s.non_top),
                t_test: t_test_two_sample(&s.top, &s.non_top).ok(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawTrendRow {
    pub quantity: Quantity,
    pub min_years: usize,
    pub pairs: usize,
    /// Fraction of pairs where the top-tier venue is higher in at least
    /// `min_years` common years.
    pub top_higher: f64,
    pub top_lower: f64,
}

/// Year-by-year raw comparison over every (top-tier, non-top-tier) venue
/// pair.
pub fn raw_trends(series: &[YearSeries], labels: &BTreeMap<String, Label>, thresholds: &[usize]) -> Vec<RawTrendRow> {
    let mut by_q: BTreeMap<usize, (Vec<&YearSeries>, Vec<&YearSeries>)> = BTreeMap::new();
    for s in series {
        match labels.get(&s.venue_id) {
            Some(Label::TopTier) => by_q.entry(s.quantity.index()).or_default().0.push(s),
            Some(Label::NonTopTier) => by_q.entry(s.quantity.index()).or_default().1.push(s),
            None => {}
        }
    }
    let mut rows = Vec::new();
    for (q, (tops, others)) in by_q {
        let mut counts = Vec::new();
        for t in &tops {
            let tv: BTreeMap<i32, f64> = t.values.iter().filter_map(|&(y, v)| v.map(|v| (y, v))).collect();
            for o in &others {
                let (mut hi, mut lo) = (0, 0);
                for &(y, v) in &o.values {
                    if let (Some(v), Some(&tvy)) = (v, tv.get(&y)) {
                        if tvy > v {
                            hi += 1;
                        } else if tvy < v {
                            lo += 1;
                        }
                    }
                }
                counts.push((hi, lo));
            }
        }
        let pairs = counts.len();
        for &k in thresholds {
            let frac = |pick: fn(&(usize, usize)) -> usize| {
                if pairs == 0 {
                    0.0
                } else {
                    counts.iter().filter(|c| pick(c) >= k).count() as f64 / pairs as f64
                }
            };
            rows.push(RawTrendRow {
                quantity: Quantity::ALL[q],
                min_years: k,
                pairs,
                top_higher: frac(|c| c.0),
                top_lower: frac(|c| c.1),
            });
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum PublicationBucket {
    Small,
    Medium,
    Large,
}

impl PublicationBucket {
    /// `< 35`, `35..=150`, `> 150` papers per year on average.
    pub fn of(mean_papers: f64) -> Self {
        if mean_papers < 35.0 {
            PublicationBucket::Small
        } else if mean_papers <= 150.0 {
            PublicationBucket::Medium
        } else {
            PublicationBucket::Large
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PublicationBucket::Small => "<35",
            PublicationBucket::Medium => "35-150",
            PublicationBucket::Large => ">150",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PublicationBucketRow {
    pub bucket: PublicationBucket,
    pub label: Label,
    pub venues: usize,
    pub feature_means: Vec<f64>,
}

/// Feature means per (publication bucket, label); empty cells are omitted.
pub fn publication_buckets(
    features: &[FeatureVector],
    mean_paper_counts: &BTreeMap<String, f64>,
    labels: &BTreeMap<String, Label>,
) -> Vec<PublicationBucketRow> {
    let mut cells: BTreeMap<(PublicationBucket, Label), Vec<&FeatureVector>> = BTreeMap::new();
    for fv in features {
        if let (Some(&l), Some(&m)) = (labels.get(&fv.venue_id), mean_paper_counts.get(&fv.venue_id)) {
            cells.entry((PublicationBucket::of(m), l)).or_default().push(fv);
        }
    }
    cells
        .into_iter()
        .map(|((bucket, label), fvs)| {
            let n = fvs.len() as f64;
            PublicationBucketRow {
                bucket,
                label,
                venues: fvs.len(),
                feature_means: (0..FEATURE_COUNT)
                    .map(|f| fvs.iter().map(|v| v.values[f]).sum::<f64>() / n)
                    .collect(),
            }
        })
        .collect()
}
