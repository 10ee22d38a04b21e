//! Bibliographic corpus: parsing, validation and indexing.
//!
//! A corpus file holds one JSON object per line with keys `id`, `venue`,
//! `year`, `authors`, `fields`, `keywords` and `refs`. Unknown keys are
//! ignored, blank lines and lines starting with `#` are skipped.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One publication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    #[serde(rename = "id")]
    pub paper_id: String,
    #[serde(rename = "venue")]
    pub venue_id: String,
    pub year: i32,
    #[serde(rename = "authors")]
    pub author_ids: Vec<String>,
    #[serde(rename = "fields", default)]
    pub subfields: Vec<String>,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(rename = "refs", default)]
    pub reference_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadConfig {
    /// Inclusive year range; derived from the data when `None`.
    pub year_range: Option<(i32, i32)>,
    /// Strict mode fails on the first bad record, lenient mode skips it.
    pub strict: bool,
    /// Keep only papers that cite or are cited by another corpus paper.
    pub isolation_filter: bool,
}

impl Default for LoadConfig {
    fn default() -> Self {
        LoadConfig {
            year_range: None,
            strict: true,
            isolation_filter: false,
        }
    }
}

/// A reference that does not resolve to any paper in the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DanglingRef {
    pub paper_id: String,
    pub reference_id: String,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    papers: Vec<PaperRecord>,
    year_range: (i32, i32),
    field_universe: BTreeSet<String>,
    keyword_universe: BTreeSet<String>,
    by_id: HashMap<String, usize>,
    by_venue: BTreeMap<String, Vec<usize>>,
    dangling: Vec<DanglingRef>,
    warnings: Vec<String>,
}

/// All papers of one venue in one year.
#[derive(Debug, Clone)]
pub struct VenueYearSlice<'a> {
    pub venue_id: &'a str,
    pub year: i32,
    pub papers: Vec<&'a PaperRecord>,
    pub author_set: BTreeSet<&'a str>,
}

impl VenueYearSlice<'_> {
    pub fn paper_count(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }
}

/// Reads and validates a corpus file.
pub fn load_corpus(path: impl AsRef<Path>, config: &LoadConfig) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match serde_json::from_str::<PaperRecord>(trimmed) {
            Ok(record) => records.push((line_no, record)),
            Err(e) => {
                if config.strict {
                    return Err(Error::Parse {
                        line: line_no,
                        message: e.to_string(),
                    });
                }
                let msg = format!("line {line_no}: skipped malformed record: {e}");
                warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    let mut corpus = build(records, config)?;
    warnings.append(&mut corpus.warnings);
    corpus.warnings = warnings;
    Ok(corpus)
}

/// Writes papers in the line-delimited corpus format.
pub fn write_corpus<W: Write>(mut out: W, papers: &[PaperRecord]) -> Result<()> {
    for paper in papers {
        serde_json::to_writer(&mut out, paper)?;
        out.write_all(b"\n")
            .map_err(|e| Error::io("<corpus output>", e))?;
    }
    Ok(())
}

fn validate_record(record: &PaperRecord, range: Option<(i32, i32)>) -> std::result::Result<(), String> {
    if record.paper_id.is_empty() {
        return Err("empty paper id".into());
    }
    if !(1000..=9999).contains(&record.year) {
        return Err(format!("year {} is not a 4-digit year", record.year));
    }
    if let Some((lo, hi)) = range {
        if record.year < lo || record.year > hi {
            return Err(format!(
                "paper `{}`: year {} outside corpus range {lo}-{hi}",
                record.paper_id, record.year
            ));
        }
    }
    if record.author_ids.is_empty() {
        return Err(format!("paper `{}` has no authors", record.paper_id));
    }
    let mut seen = HashSet::new();
    for a in &record.author_ids {
        if !seen.insert(a.as_str()) {
            return Err(format!("paper `{}` lists author `{a}` twice", record.paper_id));
        }
    }
    Ok(())
}

fn build(records: Vec<(usize, PaperRecord)>, config: &LoadConfig) -> Result<Corpus> {
    let mut warnings = Vec::new();
    let mut papers: Vec<PaperRecord> = Vec::with_capacity(records.len());
    let mut by_id: HashMap<String, usize> = HashMap::with_capacity(records.len());

    for (line, record) in records {
        if let Err(message) = validate_record(&record, config.year_range) {
            if config.strict {
                return Err(Error::Parse { line, message });
            }
            let msg = format!("line {line}: skipped: {message}");
            warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        if by_id.contains_key(&record.paper_id) {
            if config.strict {
                return Err(Error::DuplicatePaper {
                    id: record.paper_id,
                    line,
                });
            }
            let msg = format!("line {line}: skipped duplicate paper id `{}`", record.paper_id);
            warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        by_id.insert(record.paper_id.clone(), papers.len());
        papers.push(record);
    }

    if config.isolation_filter {
        let mut cited: HashSet<&str> = HashSet::new();
        let mut citing: HashSet<&str> = HashSet::new();
        for p in &papers {
            for r in &p.reference_ids {
                if by_id.contains_key(r) && r != &p.paper_id {
                    cited.insert(r.as_str());
                    citing.insert(p.paper_id.as_str());
                }
            }
        }
        let keep: HashSet<String> = papers
            .iter()
            .filter(|p| cited.contains(p.paper_id.as_str()) || citing.contains(p.paper_id.as_str()))
            .map(|p| p.paper_id.clone())
            .collect();
        let removed = papers.len() - keep.len();
        if removed > 0 {
            warnings.push(format!("isolation filter removed {removed} papers"));
        }
        papers.retain(|p| keep.contains(&p.paper_id));
        by_id = papers
            .iter()
            .enumerate()
            .map(|(i, p)| (p.paper_id.clone(), i))
            .collect();
    }

    if papers.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let year_range = config.year_range.unwrap_or_else(|| {
        let lo = papers.iter().map(|p| p.year).min().unwrap_or_default();
        let hi = papers.iter().map(|p| p.year).max().unwrap_or_default();
        (lo, hi)
    });

    let mut field_universe = BTreeSet::new();
    let mut keyword_universe = BTreeSet::new();
    let mut by_venue: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut dangling = Vec::new();
    for (i, p) in papers.iter().enumerate() {
        field_universe.extend(p.subfields.iter().cloned());
        keyword_universe.extend(p.keywords.iter().cloned());
        by_venue.entry(p.venue_id.clone()).or_default().push(i);
        for r in &p.reference_ids {
            if !by_id.contains_key(r) {
                dangling.push(DanglingRef {
                    paper_id: p.paper_id.clone(),
                    reference_id: r.clone(),
                });
            }
        }
    }
    for idxs in by_venue.values_mut() {
        idxs.sort_by_key(|&i| (papers[i].year, i));
    }
    if !dangling.is_empty() {
        warnings.push(format!(
            "{} dangling references excluded from citation counts",
            dangling.len()
        ));
    }

    Ok(Corpus {
        papers,
        year_range,
        field_universe,
        keyword_universe,
        by_id,
        by_venue,
        dangling,
        warnings,
    })
}

impl Corpus {
    /// Builds a corpus from in-memory records (record position stands in for
    /// the line number in errors).
    pub fn from_records(records: Vec<PaperRecord>, config: &LoadConfig) -> Result<Corpus> {
        build(
            records.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect(),
            config,
        )
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn year_range(&self) -> (i32, i32) {
        self.year_range
    }

    pub fn field_universe(&self) -> &BTreeSet<String> {
        &self.field_universe
    }

    pub fn keyword_universe(&self) -> &BTreeSet<String> {
        &self.keyword_universe
    }

    pub fn dangling_refs(&self) -> &[DanglingRef] {
        &self.dangling
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn get(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.by_id.get(paper_id).map(|&i| &self.papers[i])
    }

    /// True when `reference_id` names a paper of this corpus.
    pub fn resolves(&self, reference_id: &str) -> bool {
        self.by_id.contains_key(reference_id)
    }

    pub fn venues(&self) -> impl Iterator<Item = &str> {
        self.by_venue.keys().map(String::as_str)
    }

    pub fn has_venue(&self, venue: &str) -> bool {
        self.by_venue.contains_key(venue)
    }

    /// Papers of a venue, ordered by year.
    pub fn venue_papers(&self, venue: &str) -> Result<impl Iterator<Item = &PaperRecord>> {
        let idxs = self
            .by_venue
            .get(venue)
            .ok_or_else(|| Error::UnknownVenue(venue.to_string()))?;
        Ok(idxs.iter().map(move |&i| &self.papers[i]))
    }

    /// Paper count per year for a venue (years without papers are absent).
    pub fn venue_year_counts(&self, venue: &str) -> Result<BTreeMap<i32, usize>> {
        let mut counts = BTreeMap::new();
        for p in self.venue_papers(venue)? {
            *counts.entry(p.year).or_insert(0) += 1;
        }
        Ok(counts)
    }

    pub fn slice(&self, venue: &str, year: i32) -> Result<VenueYearSlice<'_>> {
        let (venue_id, idxs) = self
            .by_venue
            .get_key_value(venue)
            .ok_or_else(|| Error::UnknownVenue(venue.to_string()))?;
        let start = idxs.partition_point(|&i| self.papers[i].year < year);
        let end = idxs.partition_point(|&i| self.papers[i].year <= year);
        let papers: Vec<&PaperRecord> = idxs[start..end].iter().map(|&i| &self.papers[i]).collect();
        let author_set = papers
            .iter()
            .flat_map(|p| p.author_ids.iter().map(String::as_str))
            .collect();
        Ok(VenueYearSlice {
            venue_id: venue_id.as_str(),
            year,
            papers,
            author_set,
        })
    }

    /// One slice per year of the corpus range, empty slices included.
    pub fn slices(&self, venue: &str) -> Result<Vec<VenueYearSlice<'_>>> {
        let (lo, hi) = self.year_range;
        (lo..=hi).map(|y| self.slice(venue, y)).collect()
    }
}

/// One entry of an author's publication history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorPublication {
    pub year: i32,
    pub venue_id: String,
    pub paper_id: String,
    pub subfields: Vec<String>,
}

/// Per-author publication histories, sorted by year.
#[derive(Debug, Clone, Default)]
pub struct AuthorIndex {
    histories: HashMap<String, Vec<AuthorPublication>>,
}

impl AuthorIndex {
    pub fn build(corpus: &Corpus) -> Self {
        let mut histories: HashMap<String, Vec<AuthorPublication>> = HashMap::new();
        for p in corpus.papers() {
            for a in &p.author_ids {
                histories.entry(a.clone()).or_default().push(AuthorPublication {
                    year: p.year,
                    venue_id: p.venue_id.clone(),
                    paper_id: p.paper_id.clone(),
                    subfields: p.subfields.clone(),
                });
            }
        }
        for h in histories.values_mut() {
            h.sort_by(|a, b| (a.year, &a.venue_id, &a.paper_id).cmp(&(b.year, &b.venue_id, &b.paper_id)));
        }
        AuthorIndex { histories }
    }

    pub fn author_count(&self) -> usize {
        self.histories.len()
    }

    /// Earliest publication year of an author in the corpus.
    pub fn first_pub_year(&self, author: &str) -> Option<i32> {
        self.histories.get(author).and_then(|h| h.first()).map(|p| p.year)
    }

    /// Publications with year in `[from, to]`; empty for unknown authors.
    pub fn window(&self, author: &str, from: i32, to: i32) -> &[AuthorPublication] {
        match self.histories.get(author) {
            Some(h) => {
                let start = h.partition_point(|p| p.year < from);
                let end = h.partition_point(|p| p.year <= to);
                if start < end {
                    &h[start..end]
                } else {
                    &[]
                }
            }
            None => &[],
        }
    }

    /// Papers of `author` in `[window.0, window.1]`, optionally restricted to
    /// one venue. Unknown authors yield an empty list.
    pub fn author_history(
        &self,
        author: &str,
        window: (i32, i32),
        venue_filter: Option<&str>,
    ) -> Result<Vec<&AuthorPublication>> {
        if window.0 > window.1 {
            return Err(Error::Config(format!(
                "history window {}..{} is inverted",
                window.0, window.1
            )));
        }
        Ok(self
            .window(author, window.0, window.1)
            .iter()
            .filter(|p| venue_filter.is_none_or(|v| p.venue_id == v))
            .collect())
    }

    /// True if the author has at least one paper in `venue` within `[from, to]`.
    pub fn published_in(&self, author: &str, venue: &str, from: i32, to: i32) -> bool {
        from <= to && self.window(author, from, to).iter().any(|p| p.venue_id == venue)
    }
}
