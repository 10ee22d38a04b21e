//! Flat-file formats: feature matrix, labels, per-year series and delta
//! CSVs, the provenance header line and atomic writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::classifier::Label;
use crate::error::{Error, Result};
use crate::features::{feature_names, DeltaSeries, FeatureVector, Quantity, YearDelta, YearSeries, FEATURE_COUNT};

pub const TOOL_NAME: &str = "venuetier";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// First 16 hex digits of the SHA-256 of the value's JSON form.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&json);
    Ok(hex::encode(&digest[..8]))
}

/// `# venuetier <version> config=<hash>`
pub fn header_line(hash: &str) -> String {
    format!("# {TOOL_NAME} {TOOL_VERSION} config={hash}")
}

/// Writes `contents` to a temporary file beside `path`, then renames it
/// into place.
pub fn atomic_write(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("`{field}` is not a number"),
    })
}

fn record_line(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

/// Renders CSV rows under an optional header line.
pub struct CsvOut {
    buf: Vec<u8>,
}

impl CsvOut {
    pub fn new(header: Option<&str>) -> Self {
        let mut buf = Vec::new();
        if let Some(h) = header {
            buf.extend_from_slice(h.as_bytes());
            buf.push(b'\n');
        }
        CsvOut { buf }
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(fields.into_iter().map(|s| s.as_ref().to_string()))?;
        let bytes = w.into_inner().map_err(|e| Error::Dataset(e.to_string()))?;
        self.buf.extend_from_slice(&bytes);
        Ok(())
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn into_string(self) -> String {
        String::from_utf8(self.buf).expect("csv output is utf-8")
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// `venue,crdi_mean,...,abc_stddev`
pub fn features_csv(rows: &[FeatureVector], header: Option<&str>) -> Result<String> {
    let mut out = CsvOut::new(header);
    out.row(std::iter::once("venue".to_string()).chain(feature_names()))?;
    for fv in rows {
        out.row(std::iter::once(fv.venue_id.clone()).chain(fv.values.iter().map(|&v| fmt_f64(v))))?;
    }
    Ok(out.into_string())
}

pub fn parse_features_csv(text: &str) -> Result<Vec<FeatureVector>> {
    let mut r = reader(text);
    let headers = r.headers()?.clone();
    let expected: Vec<String> = std::iter::once("venue".to_string()).chain(feature_names()).collect();
    if headers.iter().collect::<Vec<_>>() != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Parse {
            line: record_line(&headers),
            message: format!("feature header must be `{}`", expected.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = record_line(&rec);
        if rec.len() != FEATURE_COUNT + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, got {}", FEATURE_COUNT + 1, rec.len()),
            });
        }
        let values = rec.iter().skip(1).map(|f| parse_f64(f, line)).collect::<Result<Vec<_>>>()?;
        rows.push(FeatureVector {
            venue_id: rec[0].to_string(),
            values,
        });
    }
    Ok(rows)
}

pub fn read_features_csv(path: impl AsRef<Path>) -> Result<Vec<FeatureVector>> {
    parse_features_csv(&read_text(path.as_ref())?)
}

/// `venue_id,label`
pub fn labels_csv(labels: &BTreeMap<String, Label>, header: Option<&str>) -> Result<String> {
    let mut out = CsvOut::new(header);
    out.row(["venue_id", "label"])?;
    for (v, l) in labels {
        out.row([v.clone(), l.to_string()])?;
    }
    Ok(out.into_string())
}

pub fn parse_labels_csv(text: &str) -> Result<BTreeMap<String, Label>> {
    let mut r = reader(text);
    let headers = r.headers()?.clone();
    if headers.len() != 2 {
        return Err(Error::Parse {
            line: record_line(&headers),
            message: "labels header must be `venue_id,label`".into(),
        });
    }
    let mut labels = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let line = record_line(&rec);
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, got {}", rec.len()),
            });
        }
        let label: Label = rec[1].parse().map_err(|e: Error| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if labels.insert(rec[0].to_string(), label).is_some() {
            return Err(Error::Parse {
                line,
                message: format!("venue `{}` labeled twice", &rec[0]),
            });
        }
    }
    Ok(labels)
}

pub fn read_labels_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, Label>> {
    parse_labels_csv(&read_text(path.as_ref())?)
}

fn parse_quantity(name: &str, line: usize) -> Result<Quantity> {
    Quantity::ALL
        .into_iter()
        .find(|q| q.name().eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("unknown quantity `{name}`"),
        })
}

fn parse_year(field: &str, line: usize) -> Result<i32> {
    field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{field}` is not a year"),
    })
}

/// `venue,quantity,year,value`; missing years have an empty value.
pub fn raw_series_csv(series: &[YearSeries], header: Option<&str>) -> Result<String> {
    let mut out = CsvOut::new(header);
    out.row(["venue", "quantity", "year", "value"])?;
    for s in series {
        for &(year, v) in &s.values {
            out.row([s.venue_id.clone(), s.quantity.name().to_string(), year.to_string(), fmt_opt(v)])?;
        }
    }
    Ok(out.into_string())
}

pub fn parse_raw_series_csv(text: &str) -> Result<Vec<YearSeries>> {
    let mut r = reader(text);
    let mut out: Vec<YearSeries> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let quantity = parse_quantity(&rec[1], line)?;
        let year = parse_year(&rec[2], line)?;
        let value = if rec[3].is_empty() {
            None
        } else {
            Some(parse_f64(&rec[3], line)?)
        };
        match out.last_mut() {
            Some(s) if s.venue_id == rec[0] && s.quantity == quantity => s.values.push((year, value)),
            _ => out.push(YearSeries {
                venue_id: rec[0].to_string(),
                quantity,
                values: vec![(year, value)],
            }),
        }
    }
    Ok(out)
}

/// `venue,quantity,from_year,to_year,delta`
pub fn delta_series_csv(deltas: &[DeltaSeries], header: Option<&str>) -> Result<String> {
    let mut out = CsvOut::new(header);
    out.row(["venue", "quantity", "from_year", "to_year", "delta"])?;
    for d in deltas {
        for yd in &d.deltas {
            out.row([
                d.venue_id.clone(),
                d.quantity.name().to_string(),
                yd.from_year.to_string(),
                (yd.from_year + 1).to_string(),
                fmt_f64(yd.value),
            ])?;
        }
    }
    Ok(out.into_string())
}

pub fn parse_delta_series_csv(text: &str) -> Result<Vec<DeltaSeries>> {
    let mut r = reader(text);
    let mut out: Vec<DeltaSeries> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let quantity = parse_quantity(&rec[1], line)?;
        let delta = YearDelta {
            from_year: parse_year(&rec[2], line)?,
            value: parse_f64(&rec[4], line)?,
        };
        match out.last_mut() {
            Some(s) if s.venue_id == rec[0] && s.quantity == quantity => s.deltas.push(delta),
            _ => out.push(DeltaSeries {
                venue_id: rec[0].to_string(),
                quantity,
                deltas: vec![delta],
            }),
        }
    }
    Ok(out)
}

/// Per-venue publication statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VenueStats {
    pub venue_id: String,
    pub mean_paper_count: f64,
}

/// `venue,mean_paper_count`
pub fn venue_stats_csv(stats: &[VenueStats], header: Option<&str>) -> Result<String> {
    let mut out = CsvOut::new(header);
    out.row(["venue", "mean_paper_count"])?;
    for s in stats {
        out.row([s.venue_id.clone(), fmt_f64(s.mean_paper_count)])?;
    }
    Ok(out.into_string())
}

pub fn parse_venue_stats_csv(text: &str) -> Result<Vec<VenueStats>> {
    let mut r = reader(text);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = record_line(&rec);
        out.push(VenueStats {
            venue_id: rec[0].to_string(),
            mean_paper_count: parse_f64(&rec[1], line)?,
        });
    }
    Ok(out)
}

/// Reads a whole file for one of the `parse_*` functions.
pub fn read_file(path: impl AsRef<Path>) -> Result<String> {
    read_text(path.as_ref())
}
