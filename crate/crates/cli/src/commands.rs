use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde_json::json;
use venuetier::classifier::{
    accuracy, forward_combine, grid_search, log_grid, rank_features, stratified_split, train_smo, GridSearchConfig,
    Label, LabeledDataset, SvmModel, REFERENCE_C, REFERENCE_GAMMA,
};
use venuetier::corpus::{load_corpus, write_corpus, AuthorIndex, Corpus, LoadConfig};
use venuetier::features::{
    check_eligibility, extract_profiles, feature_label, feature_names, FeatureConfig, FeatureVector, VenueProfile,
};
use venuetier::graph::build_global_graph;
use venuetier::io::{
    delta_series_csv, features_csv, fmt_f64, fmt_opt, labels_csv, parse_delta_series_csv, parse_features_csv,
    parse_raw_series_csv, parse_venue_stats_csv, raw_series_csv, read_features_csv, read_file, read_labels_csv,
    venue_stats_csv, CsvOut, VenueStats,
};
use venuetier::report::{
    bucket_averages, group_feature_comparison, publication_buckets, raw_trends, yearly_group_deltas, GroupSummary,
    FEATURE_BUCKETS, REFERENCE_VALUES,
};
use venuetier::stats::{pca_from_correlation, pearson_matrix, CorrelationMatrix};
use venuetier::synth::{generate_corpus, SynthConfig};

use crate::output::{ensure_dir, strip_header, RunContext};
use crate::{
    AnalyzeArgs, ClassifyArgs, FeaturesArgs, GlobalArgs, GridData, IngestArgs, ReportArgs, SynthArgs, TrainArgs,
};

fn load_config(g: &GlobalArgs) -> LoadConfig {
    LoadConfig {
        year_range: None,
        strict: g.strict(),
        isolation_filter: g.isolation_filter,
    }
}

fn feature_config(g: &GlobalArgs, window: Option<(i32, i32)>) -> FeatureConfig {
    FeatureConfig {
        pna_denominator: g.pna_denominator,
        degree_norm: g.ddi_norm,
        min_years: g.min_years,
        window,
    }
}

fn load(g: &GlobalArgs, path: &Path) -> Result<Corpus> {
    load_corpus(path, &load_config(g)).with_context(|| format!("loading corpus {}", path.display()))
}

pub fn ingest(g: &GlobalArgs, a: &IngestArgs) -> Result<()> {
    let ctx = RunContext::new(g, "ingest", a, &[("corpus", &a.corpus)])?;
    let corpus = load(g, &a.corpus)?;
    let index = AuthorIndex::build(&corpus);
    let fc = feature_config(g, None);
    let venues: Vec<_> = corpus
        .venues()
        .map(|v| {
            let years = corpus.venue_year_counts(v).unwrap_or_default();
            let papers: usize = years.values().sum();
            let eligibility = check_eligibility(&corpus, v, &fc);
            json!({
                "venue": v,
                "papers": papers,
                "years": years,
                "eligible": eligibility.is_ok(),
                "reason": eligibility.err().map(|e| e.to_string()),
            })
        })
        .collect();
    let dangling = corpus.dangling_refs();
    let report = json!({
        "papers": corpus.len(),
        "venues": venues.len(),
        "authors": index.author_count(),
        "year_range": corpus.year_range(),
        "subfields": corpus.field_universe().len(),
        "keywords": corpus.keyword_universe().len(),
        "dangling_refs": dangling.len(),
        "dangling_sample": dangling.iter().take(20).collect::<Vec<_>>(),
        "warnings": corpus.warnings(),
        "venue_coverage": venues,
    });
    let body = serde_json::to_string_pretty(&report)? + "\n";
    match &a.out {
        Some(path) => {
            venuetier::io::atomic_write(path, ctx.render(&body).as_bytes())?;
        }
        None => print!("{}", ctx.render(&body)),
    }
    Ok(())
}

pub fn features(g: &GlobalArgs, a: &FeaturesArgs) -> Result<()> {
    let mut ctx = RunContext::new(g, "features", a, &[("corpus", &a.corpus)])?;
    let corpus = load(g, &a.corpus)?;
    let index = AuthorIndex::build(&corpus);
    let fc = feature_config(g, a.window);

    let requested = !a.venues.is_empty();
    let venues: Vec<&str> = if requested {
        for v in &a.venues {
            if !corpus.has_venue(v) {
                return Err(venuetier::Error::UnknownVenue(v.clone()).into());
            }
        }
        a.venues.iter().map(String::as_str).collect()
    } else {
        corpus.venues().collect()
    };

    let mut profiles: Vec<VenueProfile> = Vec::new();
    let mut skipped = CsvOut::new(None);
    skipped.row(["venue", "reason"])?;
    for (venue, result) in extract_profiles(&corpus, &index, &venues, &fc) {
        match result {
            Ok(p) => profiles.push(p),
            Err(e) if requested => return Err(e.into()),
            Err(e) => {
                warn!("skipping {venue}: {e}");
                skipped.row([venue, e.to_string()])?;
            }
        }
    }
    if profiles.is_empty() {
        bail!(venuetier::Error::Dataset(format!(
            "no eligible venues (at least {} consecutive years required)",
            g.min_years
        )));
    }
    info!("{} of {} venues eligible", profiles.len(), venues.len());

    ensure_dir(&a.out_dir)?;
    let fvs: Vec<FeatureVector> = profiles.iter().map(|p| p.features.clone()).collect();
    let series: Vec<_> = profiles.iter().flat_map(|p| p.series.clone()).collect();
    let deltas: Vec<_> = profiles.iter().flat_map(|p| p.deltas.clone()).collect();
    let stats: Vec<VenueStats> = profiles
        .iter()
        .map(|p| VenueStats {
            venue_id: p.venue_id.clone(),
            mean_paper_count: p.mean_paper_count,
        })
        .collect();
    ctx.write(&a.out_dir, "features.csv", &features_csv(&fvs, None)?)?;
    ctx.write(&a.out_dir, "raw_series.csv", &raw_series_csv(&series, None)?)?;
    ctx.write(&a.out_dir, "delta_series.csv", &delta_series_csv(&deltas, None)?)?;
    ctx.write(&a.out_dir, "venue_stats.csv", &venue_stats_csv(&stats, None)?)?;
    ctx.write(&a.out_dir, "ineligible.csv", &skipped.into_string())?;
    if let Some(year) = a.graph_year {
        let mut buf = Vec::new();
        build_global_graph(&corpus, year)
            .write_edge_list(&mut buf)
            .context("rendering edge list")?;
        ctx.write(&a.out_dir, &format!("graph_{year}.tsv"), &String::from_utf8(buf)?)?;
    }
    let window = a.window.unwrap_or_else(|| corpus.year_range());
    ctx.note("analysis_window", json!(window));
    ctx.note("eligible_venues", json!(profiles.len()));
    ctx.write_config(&a.out_dir)?;
    Ok(())
}

fn labeled_dataset(features: &[FeatureVector], labels: &BTreeMap<String, Label>) -> Result<LabeledDataset> {
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut labs = Vec::new();
    for fv in features {
        match labels.get(&fv.venue_id) {
            Some(&l) => {
                ids.push(fv.venue_id.clone());
                rows.push(fv.values.clone());
                labs.push(l);
            }
            None => info!("{} has no label; ignored for training", fv.venue_id),
        }
    }
    let present: BTreeSet<&str> = features.iter().map(|f| f.venue_id.as_str()).collect();
    for v in labels.keys().filter(|v| !present.contains(v.as_str())) {
        warn!("labeled venue {v} has no feature row");
    }
    Ok(LabeledDataset::new(ids, rows, labs)?)
}

fn grid_axis(decades: (i32, i32), reference: f64) -> Vec<f64> {
    let mut axis = log_grid(decades.0, decades.1);
    let (lo, hi) = (10f64.powi(decades.0), 10f64.powi(decades.1));
    if (lo..=hi).contains(&reference) && !axis.contains(&reference) {
        axis.push(reference);
        axis.sort_by(f64::total_cmp);
    }
    axis
}

pub fn train(g: &GlobalArgs, a: &TrainArgs) -> Result<()> {
    let ctx = RunContext::new(g, "train", a, &[("features", &a.features), ("labels", &a.labels)])?;
    if !(0.0..1.0).contains(&a.validation_fraction) || a.validation_fraction == 0.0 {
        bail!(venuetier::Error::Config(format!(
            "validation fraction must lie in (0, 1), got {}",
            a.validation_fraction
        )));
    }
    let features = read_features_csv(&a.features)?;
    let labels = read_labels_csv(&a.labels)?;
    let data = labeled_dataset(&features, &labels)?;
    let seed = g.seed.unwrap_or(0);

    let (train_idx, val_idx) = stratified_split(&data.labels, a.validation_fraction, seed)?;
    let train = data.select(&train_idx);
    let val = data.select(&val_idx);
    let grid_data = match a.grid_on {
        GridData::Validation => &val,
        GridData::Train => &train,
        GridData::All => &data,
    };
    let gs = GridSearchConfig {
        folds: a.folds,
        gamma_grid: grid_axis(a.gamma_decades, REFERENCE_GAMMA),
        c_grid: grid_axis(a.c_decades, REFERENCE_C),
        seed,
        standardize: g.standardize(),
        tol: a.tol,
        max_passes: a.max_passes,
    };
    let grid = grid_search(grid_data, &gs).context("grid search")?;
    let params = gs.params(grid.best_gamma, grid.best_c);

    let ranking = rank_features(&train, &val, &params).context("ranking features")?;
    let names = feature_names();
    let corr = pearson_matrix(&train.rows, &names)?;
    let order: Vec<usize> = ranking.iter().map(|s| s.feature).collect();
    let selection = forward_combine(&order, &train, &val, &corr.absolute(), a.corr_threshold, &params)
        .context("forward feature combination")?;

    let final_train = train.project(&selection.selected)?;
    let model = train_smo(&final_train, &params).context("training final model")?;
    let val_accuracy = accuracy(&model, &val.project(&selection.selected)?);
    let train_accuracy = accuracy(&model, &final_train);

    ensure_dir(&a.out_dir)?;
    ctx.write(&a.out_dir, "model.json", &(model.to_json()? + "\n"))?;

    let mut out = CsvOut::new(None);
    out.row(["gamma", "c", "mean_accuracy", "failed_folds"])?;
    for cell in &grid.cells {
        out.row([
            fmt_f64(cell.gamma),
            fmt_f64(cell.c),
            fmt_opt(cell.mean_accuracy),
            cell.failed_folds.to_string(),
        ])?;
    }
    ctx.write(&a.out_dir, "grid.csv", &out.into_string())?;

    let mut out = CsvOut::new(None);
    out.row(["venue", "label", "set", "fold"])?;
    let grid_ids = &grid_data.ids;
    let fold_of: BTreeMap<&str, usize> = grid_ids
        .iter()
        .map(String::as_str)
        .zip(grid.fold_assignment.iter().copied())
        .collect();
    for (set, part) in [("train", &train), ("validation", &val)] {
        for (id, l) in part.ids.iter().zip(&part.labels) {
            let fold = fold_of.get(id.as_str()).map(usize::to_string).unwrap_or_default();
            out.row([id.clone(), l.to_string(), set.to_string(), fold])?;
        }
    }
    ctx.write(&a.out_dir, "split.csv", &out.into_string())?;

    let mut out = CsvOut::new(None);
    out.row(["rank", "feature", "name", "accuracy"])?;
    for (rank, s) in ranking.iter().enumerate() {
        out.row([
            (rank + 1).to_string(),
            names[s.feature].clone(),
            feature_label(s.feature),
            fmt_f64(s.accuracy),
        ])?;
    }
    ctx.write(&a.out_dir, "feature_accuracy.csv", &out.into_string())?;

    let mut out = CsvOut::new(None);
    out.row(["features", "added", "accuracy"])?;
    for (k, acc) in selection.curve.iter().enumerate() {
        out.row([(k + 1).to_string(), names[order[k]].clone(), fmt_f64(*acc)])?;
    }
    ctx.write(&a.out_dir, "forward_curve.csv", &out.into_string())?;

    let (tt, ntt) = data.class_counts();
    let summary = json!({
        "labeled_venues": data.len(),
        "top_tier": tt,
        "non_top_tier": ntt,
        "train_venues": train.len(),
        "validation_venues": val.len(),
        "grid_on": a.grid_on,
        "best_gamma": grid.best_gamma,
        "best_c": grid.best_c,
        "best_cv_accuracy": grid.best_accuracy,
        "best_prefix": selection.best_prefix,
        "best_prefix_accuracy": selection.best_accuracy,
        "selected_features": selection.selected.iter().map(|&f| &names[f]).collect::<Vec<_>>(),
        "dropped_features": selection.dropped.iter().map(|&f| &names[f]).collect::<Vec<_>>(),
        "final_validation_accuracy": val_accuracy,
        "final_training_accuracy": train_accuracy,
        "support_vectors": model.support_vectors.len(),
        "reference_values": REFERENCE_VALUES.iter().copied().collect::<BTreeMap<_, _>>(),
    });
    ctx.write_json(&a.out_dir, "train_summary.json", &summary)?;
    ctx.write_config(&a.out_dir)?;
    Ok(())
}

pub fn classify(g: &GlobalArgs, a: &ClassifyArgs) -> Result<()> {
    let ctx = RunContext::new(g, "classify", a, &[("model", &a.model), ("features", &a.features)])?;
    let model = SvmModel::load(&a.model)?;
    let features = read_features_csv(&a.features)?;
    let mut out = CsvOut::new(None);
    let mut head = vec!["venue".to_string(), "label".into(), "decision".into()];
    for k in 1..=a.neighbors {
        head.extend([format!("neighbor_{k}"), format!("neighbor_{k}_label"), format!("neighbor_{k}_distance")]);
    }
    out.row(&head)?;
    for fv in &features {
        let p = model
            .predict(&fv.values)
            .with_context(|| format!("classifying {}", fv.venue_id))?;
        let mut row = vec![fv.venue_id.clone(), p.label.to_string(), fmt_f64(p.decision)];
        let near = model.nearest_exemplars(&fv.values, a.neighbors)?;
        for k in 0..a.neighbors {
            match near.get(k) {
                Some((ex, d)) => row.extend([ex.id.clone(), ex.label.to_string(), fmt_f64(*d)]),
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        out.row(&row)?;
    }
    let body = out.into_string();
    match &a.out {
        Some(path) => venuetier::io::atomic_write(path, ctx.render(&body).as_bytes())?,
        None => print!("{}", ctx.render(&body)),
    }
    Ok(())
}

fn summary_cells(s: &Option<GroupSummary>) -> [String; 3] {
    match s {
        Some(s) => [s.n.to_string(), fmt_f64(s.mean), fmt_f64(s.stddev)],
        None => ["0".into(), String::new(), String::new()],
    }
}

fn correlation_csv(corr: &CorrelationMatrix, absolute: bool) -> Result<String> {
    let mut out = CsvOut::new(None);
    out.row(std::iter::once("feature".to_string()).chain(corr.labels.iter().cloned()))?;
    for (i, name) in corr.labels.iter().enumerate() {
        let cells = (0..corr.dim()).map(|j| {
            let v = corr.get(i, j);
            fmt_f64(if absolute { v.abs() } else { v })
        });
        out.row(std::iter::once(name.clone()).chain(cells))?;
    }
    Ok(out.into_string())
}

pub fn analyze(g: &GlobalArgs, a: &AnalyzeArgs) -> Result<()> {
    let ctx = RunContext::new(g, "analyze", a, &[("features", &a.features), ("labels", &a.labels)])?;
    let features = read_features_csv(&a.features)?;
    let labels = read_labels_csv(&a.labels)?;
    ensure_dir(&a.out_dir)?;

    let mut out = CsvOut::new(None);
    out.row([
        "feature", "name", "top_n", "top_mean", "top_stddev", "non_top_n", "non_top_mean", "non_top_stddev", "t",
        "df", "p", "significant",
    ])?;
    for row in group_feature_comparison(&features, &labels) {
        let mut cells = vec![row.name.clone(), feature_label(row.feature)];
        cells.extend(summary_cells(&row.top));
        cells.extend(summary_cells(&row.non_top));
        match row.t_test {
            Some(t) => cells.extend([
                fmt_f64(t.t),
                fmt_f64(t.df),
                fmt_f64(t.p),
                t.significant(a.alpha).to_string(),
            ]),
            None => cells.extend([String::new(), String::new(), String::new(), String::new()]),
        }
        out.row(&cells)?;
    }
    ctx.write(&a.out_dir, "group_ttests.csv", &out.into_string())?;

    let rows: Vec<Vec<f64>> = features.iter().map(|f| f.values.clone()).collect();
    let corr = pearson_matrix(&rows, &feature_names())?;
    ctx.write(&a.out_dir, "correlation.csv", &correlation_csv(&corr, false)?)?;
    ctx.write(&a.out_dir, "correlation_abs.csv", &correlation_csv(&corr, true)?)?;

    let mut out = CsvOut::new(None);
    out.row(["feature_a", "feature_b", "r"])?;
    for (i, j, r) in corr.strong_pairs(a.corr_threshold) {
        out.row([corr.labels[i].clone(), corr.labels[j].clone(), fmt_f64(r)])?;
    }
    ctx.write(&a.out_dir, "strong_correlations.csv", &out.into_string())?;

    let pca = pca_from_correlation(&corr, a.pca_factors, a.top_loadings, a.variance_cut)?;
    for w in &pca.warnings {
        warn!("pca: {w}");
    }
    let mut out = CsvOut::new(None);
    let mut head = vec![
        "factor".to_string(),
        "eigenvalue".into(),
        "variance_fraction".into(),
        "cumulative_fraction".into(),
        "retained".into(),
    ];
    for k in 1..=a.top_loadings {
        head.extend([format!("feature_{k}"), format!("loading_{k}")]);
    }
    out.row(&head)?;
    for f in &pca.factors {
        let mut cells = vec![
            f.rank.to_string(),
            fmt_f64(f.eigenvalue),
            fmt_f64(f.variance_fraction),
            fmt_f64(f.cumulative_fraction),
            (f.rank <= pca.retained).to_string(),
        ];
        for k in 0..a.top_loadings {
            match f.top_loadings.get(k) {
                Some(&(i, v)) => cells.extend([pca.labels[i].clone(), fmt_f64(v)]),
                None => cells.extend([String::new(), String::new()]),
            }
        }
        out.row(&cells)?;
    }
    ctx.write(&a.out_dir, "pca_factors.csv", &out.into_string())?;
    ctx.write_json(&a.out_dir, "pca.json", &pca)?;
    ctx.write_config(&a.out_dir)?;
    Ok(())
}

pub fn synth(g: &GlobalArgs, a: &SynthArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(path) => SynthConfig::from_json(&read_file(path)?)?,
        None => SynthConfig::default(),
    };
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    let inputs: Vec<(&str, &Path)> = a.config.iter().map(|p| ("config", p.as_path())).collect();
    let mut ctx = RunContext::new(g, "synth", a, &inputs)?;
    ctx.note("synth", serde_json::to_value(&config)?);
    let out = generate_corpus(&config)?;
    ensure_dir(&a.out_dir)?;
    let mut buf = Vec::new();
    write_corpus(&mut buf, out.corpus.papers())?;
    ctx.write(&a.out_dir, "corpus.jsonl", &String::from_utf8(buf)?)?;
    ctx.write(&a.out_dir, "labels.csv", &labels_csv(&out.labels, None)?)?;
    ctx.note("analysis_window", json!(out.analysis_window));
    ctx.write_config(&a.out_dir)?;
    let (lo, hi) = out.analysis_window;
    println!(
        "generated {} papers for {} venues; analysis window {lo}:{hi} (pass --window {lo}:{hi} to features)",
        out.corpus.len(),
        out.labels.len(),
    );
    Ok(())
}

fn read_run_file(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    read_file(&path).with_context(|| format!("run directory is missing {name}"))
}

/// Copies a table written by `train` into the report, if present.
fn carry_over(ctx: &RunContext, run_dir: &Path, out_dir: &Path, name: &str) -> Result<()> {
    let path = run_dir.join(name);
    if !path.exists() {
        warn!("{name} not found in run directory; run `train` with the same --out-dir to include it");
        return Ok(());
    }
    let text = read_file(&path)?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    ctx.write(out_dir, name, &body)?;
    Ok(())
}

pub fn report(g: &GlobalArgs, a: &ReportArgs) -> Result<()> {
    let labels_path = a.labels.clone().unwrap_or_else(|| a.run_dir.join("labels.csv"));
    let features_path = a.run_dir.join("features.csv");
    let deltas_path = a.run_dir.join("delta_series.csv");
    let raw_path = a.run_dir.join("raw_series.csv");
    let stats_path = a.run_dir.join("venue_stats.csv");
    let ctx = RunContext::new(
        g,
        "report",
        a,
        &[
            ("labels", &labels_path),
            ("features.csv", &features_path),
            ("delta_series.csv", &deltas_path),
            ("raw_series.csv", &raw_path),
            ("venue_stats.csv", &stats_path),
        ],
    )?;
    let labels = read_labels_csv(&labels_path)?;
    let features = parse_features_csv(&read_run_file(&a.run_dir, "features.csv")?)?;
    let deltas = parse_delta_series_csv(&read_run_file(&a.run_dir, "delta_series.csv")?)?;
    let series = parse_raw_series_csv(&read_run_file(&a.run_dir, "raw_series.csv")?)?;
    let stats = parse_venue_stats_csv(&read_run_file(&a.run_dir, "venue_stats.csv")?)?;
    let out_dir = a.out_dir.clone().unwrap_or_else(|| a.run_dir.join("report"));
    ensure_dir(&out_dir)?;

    let mut out = CsvOut::new(None);
    out.row([
        "quantity", "from_year", "to_year", "top_n", "top_mean", "top_stddev", "non_top_n", "non_top_mean",
        "non_top_stddev",
    ])?;
    for row in yearly_group_deltas(&deltas, &labels) {
        let mut cells = vec![
            row.quantity.name().to_string(),
            row.from_year.to_string(),
            (row.from_year + 1).to_string(),
        ];
        cells.extend(summary_cells(&row.top));
        cells.extend(summary_cells(&row.non_top));
        out.row(&cells)?;
    }
    ctx.write(&out_dir, "yearly_deltas.csv", &out.into_string())?;

    let mut out = CsvOut::new(None);
    out.row(["venue", "label", "bucket_1", "bucket_2", "bucket_3"])?;
    for b in bucket_averages(&features, &labels) {
        let label = b.label.map(|l| l.to_string()).unwrap_or_default();
        out.row([b.venue_id, label, fmt_f64(b.values[0]), fmt_f64(b.values[1]), fmt_f64(b.values[2])])?;
    }
    ctx.write(&out_dir, "bucket_averages.csv", &out.into_string())?;

    let mut out = CsvOut::new(None);
    out.row(["bucket", "first_feature", "last_feature", "top_mean", "non_top_mean"])?;
    let names = feature_names();
    let buckets = bucket_averages(&features, &labels);
    for (k, range) in FEATURE_BUCKETS.iter().enumerate() {
        let group_mean = |l: Label| {
            let v: Vec<f64> = buckets.iter().filter(|b| b.label == Some(l)).map(|b| b.values[k]).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        out.row([
            (k + 1).to_string(),
            names[range.start].clone(),
            names[range.end - 1].clone(),
            fmt_opt(group_mean(Label::TopTier)),
            fmt_opt(group_mean(Label::NonTopTier)),
        ])?;
    }
    ctx.write(&out_dir, "bucket_group_means.csv", &out.into_string())?;

    let mut out = CsvOut::new(None);
    out.row(["feature", "name", "top_n", "top_mean", "top_stddev", "non_top_n", "non_top_mean", "non_top_stddev", "p"])?;
    for row in group_feature_comparison(&features, &labels) {
        let mut cells = vec![row.name.clone(), feature_label(row.feature)];
        cells.extend(summary_cells(&row.top));
        cells.extend(summary_cells(&row.non_top));
        cells.push(fmt_opt(row.t_test.map(|t| t.p)));
        out.row(&cells)?;
    }
    ctx.write(&out_dir, "group_features.csv", &out.into_string())?;

    let mut out = CsvOut::new(None);
    out.row(["quantity", "min_years", "pairs", "top_higher", "top_lower"])?;
    for row in raw_trends(&series, &labels, &a.trend_years) {
        out.row([
            row.quantity.name().to_string(),
            row.min_years.to_string(),
            row.pairs.to_string(),
            fmt_f64(row.top_higher),
            fmt_f64(row.top_lower),
        ])?;
    }
    ctx.write(&out_dir, "raw_trends.csv", &out.into_string())?;

    let counts: BTreeMap<String, f64> = stats.into_iter().map(|s| (s.venue_id, s.mean_paper_count)).collect();
    let mut out = CsvOut::new(None);
    out.row(std::iter::once("bucket".to_string()).chain(["label".into(), "venues".into()]).chain(names.iter().cloned()))?;
    for row in publication_buckets(&features, &counts, &labels) {
        let cells = [row.bucket.name().to_string(), row.label.to_string(), row.venues.to_string()];
        out.row(cells.into_iter().chain(row.feature_means.iter().map(|&v| fmt_f64(v))))?;
    }
    ctx.write(&out_dir, "publication_buckets.csv", &out.into_string())?;

    let mut out = CsvOut::new(None);
    out.row(["name", "value"])?;
    for (name, value) in REFERENCE_VALUES {
        out.row([name.to_string(), fmt_f64(*value)])?;
    }
    ctx.write(&out_dir, "reference_values.csv", &out.into_string())?;

    carry_over(&ctx, &a.run_dir, &out_dir, "feature_accuracy.csv")?;
    carry_over(&ctx, &a.run_dir, &out_dir, "forward_curve.csv")?;
    if let Ok(text) = read_file(a.run_dir.join("train_summary.json")) {
        let summary: serde_json::Value = serde_json::from_str(strip_header(&text))?;
        ctx.write_json(&out_dir, "train_summary.json", &summary)?;
    }
    ctx.write_config(&out_dir)?;
    Ok(())
}
