//! Seeded synthetic corpora with controllable venue stability.
//!
//! Each venue owns a community of research groups and base weights over
//! subfields, keywords and group activity. Every year those weights are
//! perturbed around their base as `normalize(base * exp(drift * z))` with
//! fresh standard-normal `z`, and groups or single members are replaced by
//! newcomers at a churn rate perturbed the same way. Papers pick a group,
//! a team from it, subfields and keywords from the year's weights, and a
//! few references to the venue's recent papers.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classifier::Label;
use crate::corpus::{Corpus, LoadConfig, PaperRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityProfile {
    /// Log-scale amplitude of the yearly perturbation of topic, keyword and
    /// group-activity weights, and of the churn rates.
    pub drift: f64,
    /// Yearly probability that a whole group is replaced by newcomers.
    pub group_churn: f64,
    /// Yearly probability that a single member is replaced.
    pub member_churn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_venues_stable: usize,
    pub n_venues_unstable: usize,
    pub start_year: i32,
    pub end_year: i32,
    /// Years generated before `start_year` so authors have history.
    pub warmup_years: i32,
    pub papers_per_year: usize,
    pub n_subfields: usize,
    pub n_keywords: usize,
    pub subfields_per_paper: usize,
    pub keywords_per_paper: usize,
    /// Active researchers per venue.
    pub author_pool_size: usize,
    pub group_size: usize,
    pub max_team_size: usize,
    /// Chance that a team recruits one member from another group.
    pub cross_group_rate: f64,
    pub refs_per_paper: usize,
    pub stable: StabilityProfile,
    pub unstable: StabilityProfile,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_venues_stable: 30,
            n_venues_unstable: 30,
            start_year: 2000,
            end_year: 2011,
            warmup_years: 5,
            papers_per_year: 100,
            n_subfields: 12,
            n_keywords: 60,
            subfields_per_paper: 2,
            keywords_per_paper: 3,
            author_pool_size: 160,
            group_size: 8,
            max_team_size: 4,
            cross_group_rate: 0.15,
            refs_per_paper: 2,
            stable: StabilityProfile {
                drift: 0.05,
                group_churn: 0.02,
                member_churn: 0.05,
            },
            unstable: StabilityProfile {
                drift: 0.5,
                group_churn: 0.10,
                member_churn: 0.15,
            },
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SynthConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Years over which features should be measured.
    pub fn analysis_window(&self) -> (i32, i32) {
        (self.start_year, self.end_year)
    }

    pub fn first_generated_year(&self) -> i32 {
        self.start_year - self.warmup_years
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_venues_stable + self.n_venues_unstable == 0 {
            return bad("at least one venue is required".into());
        }
        if self.end_year < self.start_year {
            return bad(format!("end year {} precedes start year {}", self.end_year, self.start_year));
        }
        if self.warmup_years < 0 {
            return bad("warmup years must be non-negative".into());
        }
        if self.first_generated_year() < 1000 || self.end_year > 9999 {
            return bad("generated years must have four digits".into());
        }
        for (name, v) in [
            ("papers_per_year", self.papers_per_year),
            ("n_subfields", self.n_subfields),
            ("n_keywords", self.n_keywords),
            ("subfields_per_paper", self.subfields_per_paper),
            ("keywords_per_paper", self.keywords_per_paper),
            ("author_pool_size", self.author_pool_size),
            ("group_size", self.group_size),
            ("max_team_size", self.max_team_size),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.subfields_per_paper > self.n_subfields {
            return bad(format!(
                "subfields_per_paper {} exceeds n_subfields {}",
                self.subfields_per_paper, self.n_subfields
            ));
        }
        if self.keywords_per_paper > self.n_keywords {
            return bad(format!(
                "keywords_per_paper {} exceeds n_keywords {}",
                self.keywords_per_paper, self.n_keywords
            ));
        }
        if self.group_size > self.author_pool_size {
            return bad(format!(
                "group_size {} exceeds author_pool_size {}",
                self.group_size, self.author_pool_size
            ));
        }
        if self.max_team_size > self.group_size {
            return bad(format!(
                "max_team_size {} exceeds group_size {}",
                self.max_team_size, self.group_size
            ));
        }
        if !(0.0..=1.0).contains(&self.cross_group_rate) {
            return bad("cross_group_rate must lie in [0, 1]".into());
        }
        for (name, p) in [("stable", &self.stable), ("unstable", &self.unstable)] {
            if !(p.drift >= 0.0 && p.drift.is_finite()) {
                return bad(format!("{name} drift must be a non-negative number"));
            }
            if !(0.0..=1.0).contains(&p.group_churn) || !(0.0..=1.0).contains(&p.member_churn) {
                return bad(format!("{name} churn rates must lie in [0, 1]"));
            }
        }
        if self.n_venues_stable > 0 && self.n_venues_unstable > 0 && self.stable.drift >= self.unstable.drift {
            return bad(format!(
                "stable drift {} must be below unstable drift {}",
                self.stable.drift, self.unstable.drift
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub corpus: Corpus,
    pub labels: BTreeMap<String, Label>,
    pub analysis_window: (i32, i32),
}

impl SynthOutput {
    pub fn venues_with(&self, label: Label) -> Vec<&str> {
        self.labels
            .iter()
            .filter(|(_, &l)| l == label)
            .map(|(v, _)| v.as_str())
            .collect()
    }
}

/// Random streams per venue.
const STREAM_DRIFT: u64 = 0;
const STREAM_SAMPLE: u64 = 1;
const STREAM_CHURN: u64 = 2;
const STREAM_BASE: u64 = 3;

fn stream(seed: u64, venue: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(venue as u64 * 4 + purpose);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn normalize(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    for x in w {
        *x /= s;
    }
}

/// Log-normal base weights, always positive.
fn base_weights(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| (spread * normal(rng)).exp()).collect();
    normalize(&mut w);
    w
}

fn perturbed(base: &[f64], drift: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut w: Vec<f64> = base.iter().map(|b| b * (drift * normal(rng)).exp()).collect();
    normalize(&mut w);
    w
}

/// `k` distinct indices drawn by weight, consuming one uniform per item.
fn weighted_subset(weights: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut keys: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            (if w > 0.0 { u.ln() / w } else { f64::NEG_INFINITY }, i)
        })
        .collect();
    keys.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<usize> = keys.into_iter().take(k).map(|(_, i)| i).collect();
    out.sort_unstable();
    out
}

fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

struct Community {
    groups: Vec<Vec<String>>,
    next_author: usize,
    prefix: String,
}

impl Community {
    fn fresh_id(&mut self) -> String {
        let id = format!("{}-a{:05}", self.prefix, self.next_author);
        self.next_author += 1;
        id
    }

    fn new(prefix: String, n_groups: usize, group_size: usize) -> Self {
        let mut c = Community {
            groups: Vec::with_capacity(n_groups),
            next_author: 0,
            prefix,
        };
        for _ in 0..n_groups {
            let g = (0..group_size).map(|_| c.fresh_id()).collect();
            c.groups.push(g);
        }
        c
    }

    fn churn(&mut self, group_rate: f64, member_rate: f64, rng: &mut ChaCha8Rng) {
        for gi in 0..self.groups.len() {
            let whole = rng.random::<f64>() < group_rate;
            for mi in 0..self.groups[gi].len() {
                let single = rng.random::<f64>() < member_rate;
                if whole || single {
                    self.groups[gi][mi] = self.fresh_id();
                }
            }
        }
    }
}

fn venue_papers(cfg: &SynthConfig, venue_index: usize, venue_id: &str, profile: &StabilityProfile) -> Vec<PaperRecord> {
    let mut drift_rng = stream(cfg.seed, venue_index, STREAM_DRIFT);
    let mut sample_rng = stream(cfg.seed, venue_index, STREAM_SAMPLE);
    let mut churn_rng = stream(cfg.seed, venue_index, STREAM_CHURN);
    let mut base_rng = stream(cfg.seed, venue_index, STREAM_BASE);

    let n_groups = cfg.author_pool_size / cfg.group_size;
    let sub_base = base_weights(&mut base_rng, cfg.n_subfields, 0.5);
    let kw_base = base_weights(&mut base_rng, cfg.n_keywords, 0.5);
    let group_base = base_weights(&mut base_rng, n_groups, 0.5);
    let subfields: Vec<String> = (0..cfg.n_subfields).map(|i| format!("sf{i:02}")).collect();
    let keywords: Vec<String> = (0..cfg.n_keywords).map(|i| format!("kw{i:03}")).collect();

    let mut community = Community::new(venue_id.to_string(), n_groups, cfg.group_size);
    let poisson = Poisson::new(cfg.papers_per_year as f64).expect("positive mean");
    let mut papers: Vec<PaperRecord> = Vec::new();
    let mut recent: Vec<Vec<String>> = Vec::new();

    for (offset, year) in (cfg.first_generated_year()..=cfg.end_year).enumerate() {
        let sub_w = perturbed(&sub_base, profile.drift, &mut drift_rng);
        let kw_w = perturbed(&kw_base, profile.drift, &mut drift_rng);
        let group_w = perturbed(&group_base, profile.drift, &mut drift_rng);
        let churn_scale = (profile.drift * normal(&mut drift_rng)).exp();
        if offset > 0 {
            community.churn(
                (profile.group_churn * churn_scale).min(1.0),
                (profile.member_churn * churn_scale).min(1.0),
                &mut churn_rng,
            );
        }

        let count = (poisson.sample(&mut sample_rng) as usize).max(1);
        let mut this_year = Vec::with_capacity(count);
        for k in 0..count {
            let g = pick(&group_w, sample_rng.random());
            let team_size = sample_rng.random_range(2..=cfg.max_team_size.max(2)).min(cfg.group_size);
            let flat = vec![1.0; cfg.group_size];
            let mut team: Vec<String> = weighted_subset(&flat, team_size, &mut sample_rng)
                .into_iter()
                .map(|i| community.groups[g][i].clone())
                .collect();
            let cross = sample_rng.random::<f64>() < cfg.cross_group_rate;
            let other_g = sample_rng.random_range(0..n_groups);
            let other_m = sample_rng.random_range(0..cfg.group_size);
            if cross && other_g != g && team.len() > 1 {
                *team.last_mut().unwrap() = community.groups[other_g][other_m].clone();
            }
            let fields = weighted_subset(&sub_w, cfg.subfields_per_paper, &mut sample_rng)
                .into_iter()
                .map(|i| subfields[i].clone())
                .collect();
            let kws = weighted_subset(&kw_w, cfg.keywords_per_paper, &mut sample_rng)
                .into_iter()
                .map(|i| keywords[i].clone())
                .collect();
            let pool: Vec<&String> = recent.iter().flatten().collect();
            let mut refs: Vec<String> = (0..cfg.refs_per_paper)
                .map(|_| sample_rng.random_range(0..pool.len().max(1)))
                .filter(|_| !pool.is_empty())
                .map(|i| pool[i].clone())
                .collect();
            refs.sort();
            refs.dedup();
            let id = format!("{venue_id}-{year}-{k:04}");
            this_year.push(id.clone());
            papers.push(PaperRecord {
                paper_id: id,
                venue_id: venue_id.to_string(),
                year,
                author_ids: team,
                subfields: fields,
                keywords: kws,
                reference_ids: refs,
            });
        }
        recent.push(this_year);
        if recent.len() > 2 {
            recent.remove(0);
        }
    }
    papers
}

/// Generates the corpus and the top-tier (stable) / non-top-tier
/// (unstable) label of each venue.
pub fn generate_corpus(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let total = config.n_venues_stable + config.n_venues_unstable;
    let mut papers = Vec::new();
    let mut labels = BTreeMap::new();
    for v in 0..total {
        let venue_id = format!("C{v:03}");
        let (label, profile) = if v < config.n_venues_stable {
            (Label::TopTier, &config.stable)
        } else {
            (Label::NonTopTier, &config.unstable)
        };
        papers.extend(venue_papers(config, v, &venue_id, profile));
        labels.insert(venue_id, label);
    }
    let corpus = Corpus::from_records(papers, &LoadConfig::default())?;
    Ok(SynthOutput {
        corpus,
        labels,
        analysis_window: config.analysis_window(),
    })
}
