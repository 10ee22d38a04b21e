//! Python bindings for the venuetier core library.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use venuetier::classifier::{self, Label, LabeledDataset, SvmParams};
use venuetier::corpus::{self, AuthorIndex, LoadConfig};
use venuetier::features::{self, DegreeNorm, FeatureConfig, PnaDenominator};
use venuetier::graph::{self, WeightedGraph};
use venuetier::stats;
use venuetier::synth::{generate_corpus, SynthConfig};

create_exception!(venuetier_py, VenuetierError, PyException);

type VenueRows = BTreeMap<String, Vec<f64>>;
type VenueText = BTreeMap<String, String>;

fn err(e: venuetier::Error) -> PyErr {
    VenuetierError::new_err(format!("[{}] {e}", e.code()))
}

fn parse_label(s: &str) -> PyResult<Label> {
    s.parse::<Label>().map_err(err)
}

fn dataset(rows: Vec<Vec<f64>>, labels: Vec<String>) -> PyResult<LabeledDataset> {
    let labels = labels.iter().map(|l| parse_label(l)).collect::<PyResult<Vec<_>>>()?;
    LabeledDataset::from_rows(rows, labels).map_err(err)
}

/// Base-2 Shannon entropy of a list of counts.
#[pyfunction]
fn shannon_entropy(counts: Vec<u64>) -> PyResult<f64> {
    features::shannon_entropy(counts).map_err(err)
}

/// Column names of the 27-feature vector, in order.
#[pyfunction]
fn feature_names() -> Vec<String> {
    features::feature_names()
}

/// An immutable, validated paper corpus.
#[pyclass(frozen)]
struct Corpus {
    inner: corpus::Corpus,
}

#[pymethods]
impl Corpus {
    #[staticmethod]
    #[pyo3(signature = (path, strict = true, isolation_filter = false))]
    fn load(path: &str, strict: bool, isolation_filter: bool) -> PyResult<Self> {
        let config = LoadConfig {
            year_range: None,
            strict,
            isolation_filter,
        };
        Ok(Corpus {
            inner: corpus::load_corpus(path, &config).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn venues(&self) -> Vec<String> {
        self.inner.venues().map(str::to_string).collect()
    }

    fn year_range(&self) -> (i32, i32) {
        self.inner.year_range()
    }

    fn venue_year_counts(&self, venue: &str) -> PyResult<BTreeMap<i32, usize>> {
        self.inner.venue_year_counts(venue).map_err(err)
    }

    /// Writes the corpus in the line-delimited JSON format.
    fn save(&self, path: &str) -> PyResult<()> {
        let mut buf = Vec::new();
        corpus::write_corpus(&mut buf, self.inner.papers()).map_err(err)?;
        venuetier::io::atomic_write(path, &buf).map_err(err)
    }

    /// Feature vectors of eligible venues and the reasons others were skipped.
    #[pyo3(signature = (venues = None, window = None, min_years = 5, pna_denominator = "papers", ddi_norm = "mass"))]
    fn features(
        &self,
        py: Python<'_>,
        venues: Option<Vec<String>>,
        window: Option<(i32, i32)>,
        min_years: usize,
        pna_denominator: &str,
        ddi_norm: &str,
    ) -> PyResult<(VenueRows, VenueText)> {
        let config = FeatureConfig {
            pna_denominator: pna_denominator.parse::<PnaDenominator>().map_err(err)?,
            degree_norm: ddi_norm.parse::<DegreeNorm>().map_err(err)?,
            min_years,
            window,
        };
        let names = venues.unwrap_or_else(|| self.venues());
        let corpus = &self.inner;
        let results = py.detach(|| {
            let index = AuthorIndex::build(corpus);
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            features::extract_profiles(corpus, &index, &refs, &config)
        });
        let mut ok = BTreeMap::new();
        let mut skipped = BTreeMap::new();
        for (venue, r) in results {
            match r {
                Ok(p) => {
                    ok.insert(venue, p.features.values);
                }
                Err(e) => {
                    skipped.insert(venue, e.to_string());
                }
            }
        }
        Ok((ok, skipped))
    }

    /// Two-year impact factor of `venue` in `year`.
    fn impact_factor(&self, venue: &str, year: i32) -> PyResult<f64> {
        stats::impact_factor(&self.inner, venue, year).map_err(err)
    }
}

/// Generates a synthetic corpus; returns `(corpus, labels, window)`.
#[pyfunction]
#[pyo3(signature = (config_json = None))]
fn synth(py: Python<'_>, config_json: Option<&str>) -> PyResult<(Corpus, VenueText, (i32, i32))> {
    let config = match config_json {
        Some(text) => SynthConfig::from_json(text).map_err(err)?,
        None => SynthConfig::default(),
    };
    let out = py.detach(|| generate_corpus(&config)).map_err(err)?;
    let labels = out.labels.iter().map(|(v, l)| (v.clone(), l.to_string())).collect();
    Ok((Corpus { inner: out.corpus }, labels, out.analysis_window))
}

/// Closeness and betweenness per node of a weighted edge list.
#[pyfunction]
fn centralities(edges: Vec<(String, String, u32)>) -> (BTreeMap<String, f64>, BTreeMap<String, f64>) {
    let mut g = WeightedGraph::new();
    for (a, b, w) in &edges {
        g.add_edge_weight(a, b, *w);
    }
    let nodes: Vec<String> = g.nodes().map(str::to_string).collect();
    let sub = graph::induce(&g, nodes.iter().map(String::as_str));
    (graph::closeness_centrality(&sub), graph::betweenness_centrality(&sub))
}

/// Student two-sample t-test: `(t, p, df)`.
#[pyfunction]
fn t_test(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let t = stats::t_test_two_sample(&a, &b).map_err(err)?;
    Ok((t.t, t.p, t.df))
}

#[pyfunction]
fn pearson_matrix(rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let dim = rows.first().map_or(0, Vec::len);
    let labels: Vec<String> = (0..dim).map(|i| i.to_string()).collect();
    Ok(stats::pearson_matrix(&rows, &labels).map_err(err)?.values)
}

/// PCA of the correlation matrix of `rows`.
#[pyfunction]
#[pyo3(signature = (rows, n_report = 11, top_k = 5))]
fn pca<'py>(py: Python<'py>, rows: Vec<Vec<f64>>, n_report: usize, top_k: usize) -> PyResult<Bound<'py, PyDict>> {
    let dim = rows.first().map_or(0, Vec::len);
    let labels: Vec<String> = (0..dim).map(|i| i.to_string()).collect();
    let report = stats::pca_factors(&rows, &labels, n_report, top_k).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("eigenvalues", &report.eigenvalues)?;
    d.set_item("loadings", &report.loadings)?;
    d.set_item("retained", report.retained)?;
    d.set_item("reconstruction", report.reconstruct())?;
    d.set_item(
        "top_loadings",
        report.factors.iter().map(|f| f.top_loadings.clone()).collect::<Vec<_>>(),
    )?;
    d.set_item("warnings", &report.warnings)?;
    Ok(d)
}

#[pyfunction]
fn cohens_kappa(a: Vec<String>, b: Vec<String>) -> PyResult<f64> {
    stats::cohens_kappa(&a, &b).map_err(err)
}

/// Stratified k-fold grid search: `(best_gamma, best_c, best_accuracy)`.
#[pyfunction]
#[pyo3(signature = (rows, labels, gamma_grid, c_grid, folds = 10, seed = 0, standardize = true))]
fn grid_search(
    py: Python<'_>,
    rows: Vec<Vec<f64>>,
    labels: Vec<String>,
    gamma_grid: Vec<f64>,
    c_grid: Vec<f64>,
    folds: usize,
    seed: u64,
    standardize: bool,
) -> PyResult<(f64, f64, f64)> {
    let data = dataset(rows, labels)?;
    let config = classifier::GridSearchConfig {
        folds,
        gamma_grid,
        c_grid,
        seed,
        standardize,
        ..classifier::GridSearchConfig::default()
    };
    let r = py.detach(|| classifier::grid_search(&data, &config)).map_err(err)?;
    Ok((r.best_gamma, r.best_c, r.best_accuracy))
}

/// RBF-kernel SVM.
#[pyclass(frozen)]
struct SvmModel {
    inner: classifier::SvmModel,
}

#[pymethods]
impl SvmModel {
    /// Labels are "TT" or "NTT".
    #[staticmethod]
    #[pyo3(signature = (rows, labels, gamma, c, standardize = true))]
    fn train(py: Python<'_>, rows: Vec<Vec<f64>>, labels: Vec<String>, gamma: f64, c: f64, standardize: bool) -> PyResult<Self> {
        let data = dataset(rows, labels)?;
        let params = SvmParams {
            standardize,
            ..SvmParams::new(gamma, c)
        };
        let inner = py.detach(|| classifier::train_smo(&data, &params)).map_err(err)?;
        Ok(SvmModel { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(SvmModel {
            inner: classifier::SvmModel::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    /// `(label, decision value)`.
    fn predict(&self, row: Vec<f64>) -> PyResult<(String, f64)> {
        let p = self.inner.predict(&row).map_err(err)?;
        Ok((p.label.to_string(), p.decision))
    }

    fn alphas(&self) -> Vec<f64> {
        self.inner.alphas()
    }

    #[getter]
    fn dual_coefficients(&self) -> Vec<f64> {
        self.inner.dual_coefficients.clone()
    }

    #[getter]
    fn support_indices(&self) -> Vec<usize> {
        self.inner.support_indices.clone()
    }

    #[getter]
    fn bias(&self) -> f64 {
        self.inner.bias
    }

    fn dual_objective(&self) -> f64 {
        self.inner.dual_objective()
    }
}

#[pymodule]
fn venuetier_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("VenuetierError", m.py().get_type::<VenuetierError>())?;
    m.add_class::<Corpus>()?;
    m.add_class::<SvmModel>()?;
    m.add_function(wrap_pyfunction!(shannon_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(centralities, m)?)?;
    m.add_function(wrap_pyfunction!(t_test, m)?)?;
    m.add_function(wrap_pyfunction!(pearson_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(pca, m)?)?;
    m.add_function(wrap_pyfunction!(cohens_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(grid_search, m)?)?;
    Ok(())
}
