//! Batch CLI for the forecasting benchmark.
//!
//! Composable stages, each reading and writing the documented CSV formats:
//!
//! ```text
//! hydrocast synth     --synth cfg.toml --out out/
//! hydrocast cluster   --input data.csv --preset D1 --out out/
//! hydrocast forecast  --input data.csv --methods baseline,sarima --out out/
//! hydrocast benchmark --input data.csv --preset D4 --methods all --out out/
//! hydrocast report    --report out/report.csv --out out/
//! ```
//!
//! Output files are named from the command and preset/method only, so a
//! rerun with the same config and seed is byte-identical.

mod config;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hydrocast::baseline::baseline_forecast;
use hydrocast::cluster::{
    cluster_dataset, write_labels_csv, write_summary_csv, ClusterParams, Clustering, Preset,
    SummaryRow, TRAIN_RATIO,
};
use hydrocast::dataset::{align_groups, write_dataset};
use hydrocast::eval::{
    benchmark, read_report_csv, report_from_rows, train_test_split, write_density_csv,
    write_report_csv, BenchmarkOptions, EvalReport, Method, MetricKind,
};
use hydrocast::neural::{train, CellKind, RecurrentModel};
use hydrocast::sarima::{default_grid, fit_sarima, sarima_forecast, select_order};
use hydrocast::series::{SeasonPeriod, Series};
use hydrocast::synth::SynthConfig;

use config::{DataSource, FileConfig};

#[derive(Parser)]
#[command(name = "hydrocast", version, about = "Quarterly consumption forecasting benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it as CSV
    Synth(SynthArgs),
    /// Cluster aligned series groups; write summary and labels
    Cluster(ClusterArgs),
    /// Fit forecasters and write their test-horizon forecasts
    Forecast(ForecastArgs),
    /// Full pipeline: evaluate every method, write report and densities
    Benchmark(BenchmarkArgs),
    /// Recompute densities and medians from an existing report
    Report(ReportArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run config; every flag overrides it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset CSV (`series_id,region_id,year,month,consumption_m3`)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Synthetic-generator TOML config
    #[arg(long)]
    synth: Option<PathBuf>,
    /// Run seed; also overrides the synthetic seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = number of cores)
    #[arg(long)]
    workers: Option<usize>,
}

impl CommonArgs {
    fn file(&self) -> Result<FileConfig> {
        match &self.config {
            Some(path) => FileConfig::load(path),
            None => Ok(FileConfig::default()),
        }
    }

    fn out_dir(&self, file: &FileConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    fn seed(&self, file: &FileConfig) -> u64 {
        self.seed.or(file.seed).unwrap_or(0)
    }

    fn workers(&self, file: &FileConfig) -> usize {
        self.workers.or(file.workers).unwrap_or(0)
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of series to generate
    #[arg(long)]
    n_series: Option<usize>,
    #[arg(long)]
    n_regions: Option<usize>,
    #[arg(long)]
    n_archetypes: Option<usize>,
    #[arg(long)]
    noise_sd: Option<f64>,
}

#[derive(Args)]
struct ClusterBy {
    /// Named preset D1..D4, or `all` for the whole table
    #[arg(long)]
    preset: Option<String>,
    /// Explicit parameters instead of a preset
    #[arg(long, requires = "eps", requires = "cos_threshold")]
    min_pts: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    cos_threshold: Option<f64>,
}

impl ClusterBy {
    fn explicit(&self) -> Option<config::ClusterSection> {
        match (self.min_pts, self.eps, self.cos_threshold) {
            (Some(min_pts), Some(eps), Some(cos_threshold)) => Some(config::ClusterSection {
                min_pts,
                eps,
                cos_threshold,
            }),
            _ => None,
        }
    }

    /// Named parameter sets to run: one, or the whole D1..D4 table.
    fn resolve(&self, file: &FileConfig) -> Result<Vec<(String, ClusterParams)>> {
        if let Some(name) = &self.preset {
            if name.eq_ignore_ascii_case("all") {
                return Ok(Preset::ALL
                    .iter()
                    .map(|p| (p.name().to_owned(), p.params()))
                    .collect());
            }
            let preset: Preset = name.parse().map_err(anyhow::Error::msg)?;
            return Ok(vec![(preset.name().to_owned(), preset.params())]);
        }
        match config::resolve_cluster_params(None, self.explicit(), file)? {
            Some(named) => Ok(vec![named]),
            None => {
                bail!("no clustering parameters: pass --preset or --min-pts/--eps/--cos-threshold")
            }
        }
    }

    /// At most one parameter set (for stages that train per-cluster models).
    fn resolve_single(&self, file: &FileConfig) -> Result<Option<(String, ClusterParams)>> {
        if self
            .preset
            .as_deref()
            .is_some_and(|p| p.eq_ignore_ascii_case("all"))
        {
            bail!("this stage needs a single preset, not `all`");
        }
        let preset = match &self.preset {
            Some(name) => Some(name.parse::<Preset>().map_err(anyhow::Error::msg)?),
            None => None,
        };
        config::resolve_cluster_params(preset, self.explicit(), file)
    }
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    by: ClusterBy,
}

#[derive(Args)]
struct ForecastArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated list (baseline,sarima,lstm,gru,lstm_clustered,
    /// gru_clustered) or `all`
    #[arg(long)]
    methods: Option<String>,
    #[command(flatten)]
    by: ClusterBy,
    /// Also dump fitted models as JSON under `<out>/models/`
    #[arg(long)]
    dump_models: bool,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated method list or `all`
    #[arg(long)]
    methods: Option<String>,
    #[command(flatten)]
    by: ClusterBy,
}

#[derive(Args)]
struct ReportArgs {
    /// An existing report CSV
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Synth(args) => run_synth(args),
        Command::Cluster(args) => run_cluster(args),
        Command::Forecast(args) => run_forecast(args),
        Command::Benchmark(args) => run_benchmark(args),
        Command::Report(args) => run_report(args),
    }
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn write_file(path: &Path, write: impl FnOnce(&mut File) -> std::io::Result<()>) -> Result<()> {
    let mut file =
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write(&mut file).with_context(|| format!("cannot write {}", path.display()))
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let file = args.common.file()?;
    let out = args.common.out_dir(&file);
    let mut config = match (&args.common.synth, &file.synth) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read synth config {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))?
        }
        (None, Some(config)) => config.clone(),
        (None, None) => SynthConfig::default(),
    };
    if let Some(seed) = args.common.seed.or(file.seed) {
        config.seed = seed;
    }
    if let Some(v) = args.n_series {
        config.n_series = v;
    }
    if let Some(v) = args.n_regions {
        config.n_regions = v;
    }
    if let Some(v) = args.n_archetypes {
        config.n_archetypes = v;
    }
    if let Some(v) = args.noise_sd {
        config.noise_sd = v;
    }
    let dataset = hydrocast::synth::generate_synthetic(&config)?;
    create_out(&out)?;
    let path = out.join("synthetic.csv");
    write_file(&path, |f| {
        write_dataset(&dataset, f).map_err(|e| std::io::Error::other(e.to_string()))
    })?;
    println!("synth: {} series -> {}", dataset.len(), path.display());
    Ok(())
}

fn run_cluster(args: ClusterArgs) -> Result<()> {
    let file = args.common.file()?;
    let out = args.common.out_dir(&file);
    let source = DataSource::resolve(
        args.common.input.as_deref(),
        args.common.synth.as_deref(),
        &file,
        args.common.seed,
    )?;
    let dataset = source.load()?;
    let parameter_sets = args.by.resolve(&file)?;
    create_out(&out)?;

    let groups = align_groups(&dataset);
    println!(
        "load: {} series in {} aligned groups",
        dataset.len(),
        groups.len()
    );
    let mut summary_rows = Vec::new();
    for (name, params) in &parameter_sets {
        let (clustering, summary) = cluster_dataset(&groups, params);
        let labels_path = out.join(format!("cluster_labels_{name}.csv"));
        write_file(&labels_path, |f| write_labels_csv(&clustering, f))?;
        println!(
            "cluster {name}: {} clustered, {} clusters, {:.2}% noise -> {}",
            summary.n_series_clustered,
            summary.n_clusters,
            summary.noise_fraction * 100.0,
            labels_path.display()
        );
        summary_rows.push(SummaryRow {
            preset: name.clone(),
            params: *params,
            summary,
        });
    }
    let summary_path = if parameter_sets.len() == 1 {
        out.join(format!("cluster_summary_{}.csv", parameter_sets[0].0))
    } else {
        out.join("cluster_summary.csv")
    };
    write_file(&summary_path, |f| write_summary_csv(&summary_rows, f))?;
    println!("summary -> {}", summary_path.display());
    Ok(())
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn neural_kind(method: Method) -> Option<CellKind> {
    match method {
        Method::Lstm | Method::LstmClustered => Some(CellKind::Lstm),
        Method::Gru | Method::GruClustered => Some(CellKind::Gru),
        _ => None,
    }
}

fn run_forecast(args: ForecastArgs) -> Result<()> {
    let file = args.common.file()?;
    let out = args.common.out_dir(&file);
    let seed = args.common.seed(&file);
    let source = DataSource::resolve(
        args.common.input.as_deref(),
        args.common.synth.as_deref(),
        &file,
        args.common.seed,
    )?;
    let dataset = source.load()?;
    let methods = config::resolve_methods(args.methods.as_deref(), &file)?;
    let (per_series_train, per_cluster_train) = config::resolve_train(&file);
    create_out(&out)?;
    println!("load: {} series", dataset.len());

    let needs_clusters = methods.iter().any(|m| m.is_clustered());
    let clustering: Option<Clustering> = if needs_clusters {
        let Some((name, params)) = args.by.resolve_single(&file)? else {
            bail!("clustered methods need --preset or explicit cluster parameters");
        };
        let groups = align_groups(&dataset);
        let (clustering, summary) = cluster_dataset(&groups, &params);
        println!(
            "cluster {name}: {} clustered, {} clusters, {:.2}% noise",
            summary.n_series_clustered,
            summary.n_clusters,
            summary.noise_fraction * 100.0
        );
        Some(clustering)
    } else {
        None
    };

    let models_dir = out.join("models");
    if args.dump_models {
        std::fs::create_dir_all(&models_dir)?;
    }
    let grid = default_grid(SeasonPeriod::QUARTERLY);

    for method in methods {
        // cluster models are shared by every member series
        let mut cluster_models: BTreeMap<usize, Result<RecurrentModel, String>> = BTreeMap::new();
        if let (true, Some(clustering)) = (method.is_clustered(), clustering.as_ref()) {
            let kind = neural_kind(method).expect("clustered methods are neural");
            for (cluster, ids) in clustering.members_by_cluster() {
                let prefixes: Vec<Series> = ids
                    .iter()
                    .filter_map(|id| dataset.get(id))
                    .filter_map(|s| train_test_split(s, TRAIN_RATIO).ok())
                    .map(|split| split.train)
                    .collect();
                let refs: Vec<&Series> = prefixes.iter().collect();
                let outcome = if refs.is_empty() {
                    Err("too_short".to_owned())
                } else {
                    let config = per_cluster_train
                        .with_seed(splitmix64(seed ^ splitmix64(cluster as u64 ^ kind as u64)));
                    train(&refs, kind, &config).map_err(|e| e.tag().to_owned())
                };
                if let (true, Ok(model)) = (args.dump_models, &outcome) {
                    let path = models_dir.join(format!("{method}_cluster_{cluster}.json"));
                    write_file(&path, |f| f.write_all(model.to_json().as_bytes()))?;
                }
                cluster_models.insert(cluster, outcome);
            }
        }

        let path = out.join(format!("forecasts_{method}.csv"));
        let mut failures = 0usize;
        let mut rows = 0usize;
        write_file(&path, |f| {
            writeln!(f, "series_id,step,forecast")?;
            for series in dataset.series() {
                let Ok(split) = train_test_split(series, TRAIN_RATIO) else {
                    failures += 1;
                    continue;
                };
                let horizon = split.test.len();
                let forecast: Result<Vec<f64>, String> = match method {
                    Method::Baseline => {
                        baseline_forecast(&split.train, SeasonPeriod::QUARTERLY, horizon)
                            .map_err(|e| e.tag().to_owned())
                    }
                    Method::Sarima => select_order(&split.train, &grid)
                        .and_then(|order| fit_sarima(&split.train, order))
                        .map(|model| {
                            if args.dump_models {
                                let path =
                                    models_dir.join(format!("sarima_{}.json", series.id()));
                                let _ = std::fs::write(path, model.to_json());
                            }
                            sarima_forecast(&model, &split.train, horizon)
                        })
                        .map_err(|e| e.tag().to_owned()),
                    Method::Lstm | Method::Gru => {
                        let kind = neural_kind(method).expect("neural method");
                        let config = per_series_train.with_seed(splitmix64(
                            seed ^ splitmix64(fnv1a(series.id().as_str().as_bytes()) ^ kind as u64),
                        ));
                        train(&[&split.train], kind, &config)
                            .and_then(|model| {
                                if args.dump_models {
                                    let path = models_dir
                                        .join(format!("{method}_{}.json", series.id()));
                                    let _ = std::fs::write(path, model.to_json());
                                }
                                model.predict(&split.train, horizon)
                            })
                            .map_err(|e| e.tag().to_owned())
                    }
                    Method::LstmClustered | Method::GruClustered => {
                        let clustering = clustering.as_ref().expect("clustering ran");
                        match clustering.label(series.id()) {
                            Some(hydrocast::cluster::ClusterLabel::Cluster(c)) => cluster_models
                                .get(&c)
                                .expect("model per cluster")
                                .as_ref()
                                .map_err(Clone::clone)
                                .and_then(|model| {
                                    model
                                        .predict(&split.train, horizon)
                                        .map_err(|e| e.tag().to_owned())
                                }),
                            _ => continue, // noise: no model for this series
                        }
                    }
                };
                match forecast {
                    Ok(values) => {
                        for (step, value) in values.iter().enumerate() {
                            writeln!(f, "{},{},{}", series.id(), step + 1, value)?;
                        }
                        rows += 1;
                    }
                    Err(_) => failures += 1,
                }
            }
            Ok(())
        })?;
        println!(
            "forecast {method}: {rows} series, {failures} failures -> {}",
            path.display()
        );
    }
    Ok(())
}

fn run_benchmark(args: BenchmarkArgs) -> Result<()> {
    let file = args.common.file()?;
    let out = args.common.out_dir(&file);
    let seed = args.common.seed(&file);
    let workers = args.common.workers(&file);
    let source = DataSource::resolve(
        args.common.input.as_deref(),
        args.common.synth.as_deref(),
        &file,
        args.common.seed,
    )?;
    let dataset = source.load()?;
    let methods = config::resolve_methods(args.methods.as_deref(), &file)?;
    let (per_series_train, per_cluster_train) = config::resolve_train(&file);
    create_out(&out)?;
    println!("load: {} series", dataset.len());

    let needs_clusters = methods.iter().any(|m| m.is_clustered());
    let named_params = if needs_clusters {
        let Some(named) = args.by.resolve_single(&file)? else {
            bail!("clustered methods need --preset or explicit cluster parameters");
        };
        Some(named)
    } else {
        None
    };

    if let Some((name, params)) = &named_params {
        let groups = align_groups(&dataset);
        let (clustering, summary) = cluster_dataset(&groups, params);
        write_file(&out.join(format!("cluster_summary_{name}.csv")), |f| {
            write_summary_csv(
                &[SummaryRow {
                    preset: name.clone(),
                    params: *params,
                    summary,
                }],
                f,
            )
        })?;
        write_file(&out.join(format!("cluster_labels_{name}.csv")), |f| {
            write_labels_csv(&clustering, f)
        })?;
        println!(
            "cluster {name}: {} clustered, {} clusters, {:.2}% noise",
            summary.n_series_clustered,
            summary.n_clusters,
            summary.noise_fraction * 100.0
        );
    }

    let options = BenchmarkOptions {
        methods,
        cluster_params: named_params.as_ref().map(|(_, p)| *p),
        per_series_train,
        per_cluster_train,
        seed,
        workers,
    };
    let report = benchmark(&dataset, &options);
    let failures = report.rows().iter().filter(|r| r.outcome.is_err()).count();
    println!(
        "benchmark: {} rows, {} failures, seed {seed}",
        report.rows().len(),
        failures
    );

    let report_path = out.join("report.csv");
    write_file(&report_path, |f| write_report_csv(&report, f))?;
    write_densities(&report, &out)?;
    println!("report -> {}", report_path.display());
    Ok(())
}

fn write_densities(report: &EvalReport, out: &Path) -> Result<()> {
    for ((method, metric), curve) in report.densities() {
        let path = out.join(format!("density_{method}_{metric}.csv"));
        write_file(&path, |f| write_density_csv(curve, f))?;
    }
    Ok(())
}

fn run_report(args: ReportArgs) -> Result<()> {
    let file = File::open(&args.report)
        .with_context(|| format!("cannot open report {}", args.report.display()))?;
    let rows = read_report_csv(file)
        .with_context(|| format!("cannot parse report {}", args.report.display()))?;
    let report = report_from_rows(rows);
    create_out(&args.out)?;
    write_densities(&report, &args.out)?;

    let mut methods: Vec<Method> = report.rows().iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    println!("method,median_mae,median_mse,median_rmse,n_ok,n_failed");
    for method in methods {
        let n_ok = report
            .rows()
            .iter()
            .filter(|r| r.method == method && r.outcome.is_ok())
            .count();
        let n_failed = report
            .rows()
            .iter()
            .filter(|r| r.method == method && r.outcome.is_err())
            .count();
        let fmt = |kind: MetricKind| {
            report
                .median_metric(method, kind)
                .map_or_else(|| "-".to_owned(), |v| format!("{v:.4}"))
        };
        println!(
            "{method},{},{},{},{n_ok},{n_failed}",
            fmt(MetricKind::Mae),
            fmt(MetricKind::Mse),
            fmt(MetricKind::Rmse)
        );
    }
    Ok(())
}
