//! The cross-method benchmark driver.
//!
//! Every eligible `(series, method)` cell is evaluated on the 20% test
//! suffix; failures become report rows with an error tag instead of being
//! dropped, so density curves are never silently biased. All randomness is
//! derived from the run seed plus the series or cluster identity, and rows
//! are sorted after parallel evaluation, so reports are byte-identical
//! across runs and schedules.

use std::collections::BTreeMap;
use std::io;
use std::str::FromStr;

use rayon::prelude::*;

use crate::baseline::baseline_forecast;
use crate::cluster::{cluster_dataset, ClusterLabel, ClusterParams, Clustering};
use crate::dataset::{align_groups, Dataset};
use crate::error::{DataError, EvalError, ForecastError};
use crate::neural::{train, CellKind, TrainConfig};
use crate::sarima::{default_grid, fit_sarima, sarima_forecast, select_order, SarimaOrder};
use crate::series::{SeasonPeriod, SeriesId};
use crate::synth::splitmix64;

use super::kde::{kde, DensityCurve, DEFAULT_KDE_GRID};
use super::{metrics, train_test_split, MetricTriple, SplitSeries, TRAIN_RATIO};

/// A forecasting method under benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Baseline,
    Sarima,
    Lstm,
    Gru,
    LstmClustered,
    GruClustered,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Baseline,
        Method::Sarima,
        Method::Lstm,
        Method::Gru,
        Method::LstmClustered,
        Method::GruClustered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Sarima => "sarima",
            Method::Lstm => "lstm",
            Method::Gru => "gru",
            Method::LstmClustered => "lstm_clustered",
            Method::GruClustered => "gru_clustered",
        }
    }

    pub fn is_clustered(self) -> bool {
        matches!(self, Method::LstmClustered | Method::GruClustered)
    }

    fn cell_kind(self) -> Option<CellKind> {
        match self {
            Method::Lstm | Method::LstmClustered => Some(CellKind::Lstm),
            Method::Gru | Method::GruClustered => Some(CellKind::Gru),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown method {s:?}"))
    }
}

/// Which of the three error summaries a density curve describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricKind {
    Mae,
    Mse,
    Rmse,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::Mae, MetricKind::Mse, MetricKind::Rmse];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Mae => "mae",
            MetricKind::Mse => "mse",
            MetricKind::Rmse => "rmse",
        }
    }

    pub fn of(self, triple: &MetricTriple) -> f64 {
        match self {
            MetricKind::Mae => triple.mae,
            MetricKind::Mse => triple.mse,
            MetricKind::Rmse => triple.rmse,
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One `(series, method)` evaluation: metrics or a failure tag.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub series_id: SeriesId,
    pub method: Method,
    pub cluster_id: Option<usize>,
    pub outcome: Result<MetricTriple, String>,
}

/// The benchmark result: rows sorted by `(method, series_id)` plus one
/// density curve per `(method, metric)` with at least one successful row.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    rows: Vec<ReportRow>,
    densities: BTreeMap<(Method, MetricKind), DensityCurve>,
}

impl EvalReport {
    pub fn rows(&self) -> &[ReportRow] {
        &self.rows
    }

    pub fn densities(&self) -> &BTreeMap<(Method, MetricKind), DensityCurve> {
        &self.densities
    }

    /// Successful metric values of one method, in row order.
    pub fn ok_values(&self, method: Method, kind: MetricKind) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.method == method)
            .filter_map(|r| r.outcome.as_ref().ok())
            .map(|t| kind.of(t))
            .collect()
    }

    /// Median of the successful values of `(method, kind)`.
    pub fn median_metric(&self, method: Method, kind: MetricKind) -> Option<f64> {
        let mut values = self.ok_values(method, kind);
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        let n = values.len();
        Some(if n % 2 == 1 {
            values[n / 2]
        } else {
            (values[n / 2 - 1] + values[n / 2]) / 2.0
        })
    }
}

/// Everything [`benchmark`] needs besides the dataset.
#[derive(Debug, Clone)]
pub struct BenchmarkOptions {
    pub methods: Vec<Method>,
    /// Required when `methods` contains a clustered method.
    pub cluster_params: Option<ClusterParams>,
    pub per_series_train: TrainConfig,
    pub per_cluster_train: TrainConfig,
    pub seed: u64,
    /// Worker threads; 0 picks the machine default.
    pub workers: usize,
}

impl BenchmarkOptions {
    pub fn new(methods: Vec<Method>) -> Self {
        Self {
            methods,
            cluster_params: None,
            per_series_train: TrainConfig::per_series(),
            per_cluster_train: TrainConfig::per_cluster(),
            seed: 0,
            workers: 0,
        }
    }

    pub fn with_cluster_params(mut self, params: ClusterParams) -> Self {
        self.cluster_params = Some(params);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn seed_for_series(run_seed: u64, id: &SeriesId, kind: CellKind) -> u64 {
    splitmix64(run_seed ^ splitmix64(fnv1a(id.as_str().as_bytes()) ^ kind as u64))
}

fn seed_for_cluster(run_seed: u64, cluster: usize, kind: CellKind) -> u64 {
    splitmix64(run_seed ^ splitmix64(splitmix64(cluster as u64 + 1) ^ kind as u64))
}

fn forecast_error_tag(e: ForecastError) -> String {
    e.tag().to_owned()
}

fn eval_error_tag(e: &EvalError) -> String {
    match e {
        EvalError::TooShort { .. } => "too_short".to_owned(),
        EvalError::LengthMismatch { .. } => "length_mismatch".to_owned(),
        EvalError::EmptyInput => "empty_input".to_owned(),
    }
}

/// Run every requested method over the dataset.
///
/// Per-series methods evaluate every series; clustered methods evaluate
/// only series that landed in a cluster (noise has no model to use). Each
/// eligible cell produces exactly one row.
///
/// # Panics
/// When the dataset or method list is empty, or a clustered method is
/// requested without `cluster_params`.
pub fn benchmark(dataset: &Dataset, options: &BenchmarkOptions) -> EvalReport {
    assert!(!dataset.is_empty(), "benchmark needs a non-empty dataset");
    assert!(!options.methods.is_empty(), "benchmark needs at least one method");
    let needs_clusters = options.methods.iter().any(|m| m.is_clustered());
    if needs_clusters {
        assert!(
            options.cluster_params.is_some(),
            "clustered methods require cluster_params"
        );
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .expect("worker pool");
    pool.install(|| run(dataset, options, needs_clusters))
}

fn run(dataset: &Dataset, options: &BenchmarkOptions, needs_clusters: bool) -> EvalReport {
    let splits: Vec<Result<SplitSeries, EvalError>> = dataset
        .series()
        .iter()
        .map(|s| train_test_split(s, TRAIN_RATIO))
        .collect();
    let index_of: BTreeMap<&SeriesId, usize> = dataset
        .series()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id(), i))
        .collect();

    let clustering: Option<Clustering> = needs_clusters.then(|| {
        let groups = align_groups(dataset);
        let params = options.cluster_params.expect("checked by benchmark");
        cluster_dataset(&groups, &params).0
    });

    // one trained model per (clustered method, cluster id)
    let mut cluster_models: BTreeMap<(Method, usize), Result<crate::neural::RecurrentModel, String>> =
        BTreeMap::new();
    if let Some(clustering) = &clustering {
        let members = clustering.members_by_cluster();
        for &method in options.methods.iter().filter(|m| m.is_clustered()) {
            let kind = method.cell_kind().expect("clustered methods are neural");
            let trained: Vec<((Method, usize), Result<crate::neural::RecurrentModel, String>)> =
                members
                    .par_iter()
                    .map(|(&cluster, ids)| {
                        let prefixes: Vec<&crate::series::Series> = ids
                            .iter()
                            .filter_map(|id| {
                                let idx = index_of[id];
                                splits[idx].as_ref().ok().map(|split| &split.train)
                            })
                            .collect();
                        let outcome = if prefixes.is_empty() {
                            Err("too_short".to_owned())
                        } else {
                            let config = options
                                .per_cluster_train
                                .with_seed(seed_for_cluster(options.seed, cluster, kind));
                            train(&prefixes, kind, &config).map_err(forecast_error_tag)
                        };
                        ((method, cluster), outcome)
                    })
                    .collect();
            cluster_models.extend(trained);
        }
    }

    // flatten the eligible (method, series) cells
    let grid = default_grid(SeasonPeriod::QUARTERLY);
    let mut cells: Vec<(Method, usize, Option<usize>)> = Vec::new();
    for &method in &options.methods {
        for (idx, series) in dataset.series().iter().enumerate() {
            if method.is_clustered() {
                let label = clustering
                    .as_ref()
                    .expect("clustering ran for clustered methods")
                    .label(series.id());
                match label {
                    Some(ClusterLabel::Cluster(c)) => cells.push((method, idx, Some(c))),
                    _ => {} // noise: excluded from this method entirely
                }
            } else {
                cells.push((method, idx, None));
            }
        }
    }

    let mut rows: Vec<ReportRow> = cells
        .par_iter()
        .map(|&(method, idx, cluster_id)| {
            let series = &dataset.series()[idx];
            let outcome = evaluate_cell(
                method,
                series.id(),
                &splits[idx],
                cluster_id,
                &cluster_models,
                &grid,
                options,
            );
            ReportRow {
                series_id: series.id().clone(),
                method,
                cluster_id,
                outcome,
            }
        })
        .collect();
    rows.sort_by(|a, b| (a.method, &a.series_id).cmp(&(b.method, &b.series_id)));

    let mut densities = BTreeMap::new();
    let mut methods_sorted = options.methods.clone();
    methods_sorted.sort();
    methods_sorted.dedup();
    for method in methods_sorted {
        for kind in MetricKind::ALL {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == method)
                .filter_map(|r| r.outcome.as_ref().ok())
                .map(|t| kind.of(t))
                .collect();
            if let Ok(curve) = kde(&values, DEFAULT_KDE_GRID) {
                densities.insert((method, kind), curve);
            }
        }
    }

    EvalReport { rows, densities }
}

fn evaluate_cell(
    method: Method,
    series_id: &SeriesId,
    split: &Result<SplitSeries, EvalError>,
    cluster_id: Option<usize>,
    cluster_models: &BTreeMap<(Method, usize), Result<crate::neural::RecurrentModel, String>>,
    grid: &[SarimaOrder],
    options: &BenchmarkOptions,
) -> Result<MetricTriple, String> {
    let split = split.as_ref().map_err(eval_error_tag)?;
    let horizon = split.test.len();
    let actual = split.test.values();

    let forecast: Vec<f64> = match method {
        Method::Baseline => baseline_forecast(&split.train, SeasonPeriod::QUARTERLY, horizon)
            .map_err(forecast_error_tag)?,
        Method::Sarima => {
            let order = select_order(&split.train, grid).map_err(forecast_error_tag)?;
            let model = fit_sarima(&split.train, order).map_err(forecast_error_tag)?;
            sarima_forecast(&model, &split.train, horizon)
        }
        Method::Lstm | Method::Gru => {
            let kind = method.cell_kind().expect("neural method");
            let config = options
                .per_series_train
                .with_seed(seed_for_series(options.seed, series_id, kind));
            let model = train(&[&split.train], kind, &config).map_err(forecast_error_tag)?;
            model.predict(&split.train, horizon).map_err(forecast_error_tag)?
        }
        Method::LstmClustered | Method::GruClustered => {
            let cluster = cluster_id.expect("clustered cells carry a cluster id");
            let model = cluster_models
                .get(&(method, cluster))
                .expect("model trained for every cluster")
                .as_ref()
                .map_err(Clone::clone)?;
            model.predict(&split.train, horizon).map_err(forecast_error_tag)?
        }
    };
    metrics(&forecast, &actual).map_err(|e| eval_error_tag(&e))
}

/// Write rows as `series_id,method,cluster_id,mae,mse,rmse,status`.
/// Failure rows leave the metric cells empty and put the tag in `status`.
pub fn write_report_csv(report: &EvalReport, writer: impl io::Write) -> io::Result<()> {
    let mut out = io::BufWriter::new(writer);
    use io::Write;
    writeln!(out, "series_id,method,cluster_id,mae,mse,rmse,status")?;
    for row in report.rows() {
        let cluster = row
            .cluster_id
            .map_or(String::new(), |c| c.to_string());
        match &row.outcome {
            Ok(t) => writeln!(
                out,
                "{},{},{},{},{},{},ok",
                row.series_id, row.method, cluster, t.mae, t.mse, t.rmse
            )?,
            Err(tag) => writeln!(
                out,
                "{},{},{},,,,{}",
                row.series_id, row.method, cluster, tag
            )?,
        }
    }
    out.flush()
}

/// Read rows back from the report CSV schema.
pub fn read_report_csv(reader: impl io::Read) -> Result<Vec<ReportRow>, DataError> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut rows = Vec::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| DataError::MalformedRow {
            line: 0,
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |reason: String| DataError::MalformedRow { line, reason };
        if record.len() != 7 {
            return Err(bad(format!("expected 7 fields, got {}", record.len())));
        }
        let method = Method::from_str(&record[1]).map_err(bad)?;
        let cluster_id = if record[2].is_empty() {
            None
        } else {
            Some(record[2].parse().map_err(|_| bad(format!("bad cluster id {:?}", &record[2])))?)
        };
        let outcome = if &record[6] == "ok" {
            let parse = |field: usize| -> Result<f64, DataError> {
                record[field]
                    .parse()
                    .map_err(|_| DataError::MalformedRow {
                        line,
                        reason: format!("bad metric {:?}", &record[field]),
                    })
            };
            Ok(MetricTriple {
                mae: parse(3)?,
                mse: parse(4)?,
                rmse: parse(5)?,
            })
        } else {
            Err(record[6].to_owned())
        };
        rows.push(ReportRow {
            series_id: SeriesId::new(record[0].to_owned()),
            method,
            cluster_id,
            outcome,
        });
    }
    Ok(rows)
}

/// Rebuild an [`EvalReport`] (densities included) from parsed rows.
pub fn report_from_rows(rows: Vec<ReportRow>) -> EvalReport {
    let mut rows = rows;
    rows.sort_by(|a, b| (a.method, &a.series_id).cmp(&(b.method, &b.series_id)));
    let mut methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    let mut densities = BTreeMap::new();
    for method in methods {
        for kind in MetricKind::ALL {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == method)
                .filter_map(|r| r.outcome.as_ref().ok())
                .map(|t| kind.of(t))
                .collect();
            if let Ok(curve) = kde(&values, DEFAULT_KDE_GRID) {
                densities.insert((method, kind), curve);
            }
        }
    }
    EvalReport { rows, densities }
}

/// Write one density curve as `x,density`.
pub fn write_density_csv(curve: &DensityCurve, writer: impl io::Write) -> io::Result<()> {
    let mut out = io::BufWriter::new(writer);
    use io::Write;
    writeln!(out, "x,density")?;
    for (x, d) in curve.grid.iter().zip(&curve.density) {
        writeln!(out, "{x},{d}")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SynthConfig};

    fn small_dataset(n: usize, seed: u64) -> Dataset {
        generate_synthetic(&SynthConfig {
            n_series: n,
            n_archetypes: 2,
            seed,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    fn quick_options(methods: Vec<Method>) -> BenchmarkOptions {
        let mut options = BenchmarkOptions::new(methods).with_seed(42);
        options.per_series_train.epochs = 10;
        options.per_cluster_train.epochs = 5;
        options
    }

    #[test]
    fn baseline_rows_for_every_series() {
        let dataset = small_dataset(3, 1);
        let report = benchmark(&dataset, &quick_options(vec![Method::Baseline]));
        assert_eq!(report.rows().len(), 3);
        for row in report.rows() {
            let t = row.outcome.as_ref().unwrap();
            assert!(t.mae.is_finite() && t.mse.is_finite() && t.rmse.is_finite());
        }
    }

    #[test]
    fn repeated_runs_are_identical() {
        let dataset = small_dataset(6, 7);
        let options = quick_options(vec![Method::Baseline, Method::Gru]);
        let a = benchmark(&dataset, &options);
        let b = benchmark(&dataset, &options);
        assert_eq!(a, b);
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_report_csv(&a, &mut csv_a).unwrap();
        write_report_csv(&b, &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn clustered_methods_exclude_noise() {
        let dataset = small_dataset(40, 3);
        let mut options = quick_options(vec![Method::GruClustered]);
        options.cluster_params = Some(ClusterParams::new(3, 10.0, 0.8).unwrap());
        let report = benchmark(&dataset, &options);

        let groups = align_groups(&dataset);
        let (clustering, _) = cluster_dataset(&groups, &options.cluster_params.unwrap());
        let clustered = clustering.len() - clustering.noise_count();
        assert_eq!(report.rows().len(), clustered);
        for row in report.rows() {
            assert!(row.cluster_id.is_some());
        }
    }

    #[test]
    fn rows_cover_eligible_series_times_methods() {
        let dataset = small_dataset(8, 9);
        let report = benchmark(
            &dataset,
            &quick_options(vec![Method::Baseline, Method::Sarima]),
        );
        assert_eq!(report.rows().len(), 2 * 8);
    }

    #[test]
    fn report_csv_roundtrip() {
        let dataset = small_dataset(4, 11);
        let report = benchmark(&dataset, &quick_options(vec![Method::Baseline]));
        let mut buf = Vec::new();
        write_report_csv(&report, &mut buf).unwrap();
        let rows = read_report_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, report.rows());
        let rebuilt = report_from_rows(rows);
        assert_eq!(&rebuilt, &report);
    }

    #[test]
    fn failure_rows_carry_tags() {
        // 1-quarter series cannot be split
        let short = crate::series::Series::validate(
            SeriesId::from("tiny"),
            crate::series::RegionId::from("r"),
            vec![(crate::series::Timestamp::new(2013, 1).unwrap(), 5.0)],
        )
        .unwrap();
        let dataset = Dataset::new(vec![short], crate::dataset::Provenance::Loaded).unwrap();
        let report = benchmark(&dataset, &quick_options(vec![Method::Baseline]));
        assert_eq!(report.rows().len(), 1);
        assert_eq!(report.rows()[0].outcome, Err("too_short".to_owned()));
        // failure rows do not feed densities
        assert!(report.densities().is_empty());
    }

    #[test]
    fn method_parsing() {
        assert_eq!("gru_clustered".parse::<Method>().unwrap(), Method::GruClustered);
        assert_eq!("BASELINE".parse::<Method>().unwrap(), Method::Baseline);
        assert!("prophet".parse::<Method>().is_err());
    }

    #[test]
    fn median_of_even_and_odd_counts() {
        let dataset = small_dataset(5, 13);
        let report = benchmark(&dataset, &quick_options(vec![Method::Baseline]));
        let median = report.median_metric(Method::Baseline, MetricKind::Mae).unwrap();
        let mut values = report.ok_values(Method::Baseline, MetricKind::Mae);
        values.sort_by(f64::total_cmp);
        assert_eq!(median, values[2]);
        assert_eq!(report.median_metric(Method::Gru, MetricKind::Mae), None);
    }
}
