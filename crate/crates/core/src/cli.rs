//! Command-line front end: `adapt`, `ablate`, `synth` and `sweep`.
//!
//! Exit codes: 0 success, 1 invalid input or arguments, 2 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adapt::{run_egda, AdaptationReport, Convergence, EgdaConfig};
use crate::dataset::{
    generate_synthetic, load_dataset, standardize, write_labels, DomainDataset, FeatureLayout,
    FeatureOrdering, StandardizeMode, SyntheticSpec,
};
use crate::error::{EgdaError, Result};
use crate::importance::{
    feature_importance, rank_report, rank_scores, write_rank_csv, ImportanceProfile,
};
use crate::subspace::Weights;

pub const OUT_DIR_ENV: &str = "EGDA_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "egda", version, about = "Graph-guided domain adaptation for cross-session EEG")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Adapt a labeled source session to an unlabeled target session.
    Adapt(AdaptArgs),
    /// Run a preset that disables parts of the objective.
    Ablate {
        #[arg(long, value_enum)]
        preset: Preset,
        #[command(flatten)]
        run: AdaptArgs,
    },
    /// Write a synthetic source/target pair with a rotation + translation shift.
    Synth(SynthArgs),
    /// Run every (task, parameter point) combination and tabulate the results.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Preset {
    /// Full objective.
    Egda,
    /// Marginal alignment only: no scatter, no graph, no conditional terms.
    MarginalOnly,
    /// No graph term; conditional alignment stays on.
    NoGraph,
    /// No within-class scatter term.
    NoScatter,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Egda => "egda",
            Preset::MarginalOnly => "marginal_only",
            Preset::NoGraph => "no_graph",
            Preset::NoScatter => "no_scatter",
        }
    }

    pub fn apply(self, config: &mut EgdaConfig) {
        match self {
            Preset::Egda => {}
            Preset::MarginalOnly => {
                config.weights.beta = 0.0;
                config.weights.mu = 0.0;
                config.conditional = false;
            }
            Preset::NoGraph => config.weights.mu = 0.0,
            Preset::NoScatter => config.weights.beta = 0.0,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AdaptArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub source_labels: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    /// Used only to score the final predictions.
    #[arg(long)]
    pub target_labels: Option<PathBuf>,
    #[arg(long)]
    pub classes: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Subspace dimension [default: 100, or d/2 for d ≤ 100]
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 15)]
    pub iters: usize,
    #[arg(long, value_enum, default_value_t = StandardizeMode::ZscoreJoint)]
    pub standardize: StandardizeMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ridge added to the constraint matrix [default: 1e-6·tr(Q)/d]
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Stop early once the changed-label fraction drops to the threshold.
    #[arg(long)]
    pub early_stop: bool,
    #[arg(long, default_value_t = 0.0)]
    pub stability_threshold: f64,
    /// Force zero self-similarity in the learned graph.
    #[arg(long)]
    pub exclude_self: bool,
    /// Solve graph rows in parallel (same result).
    #[arg(long)]
    pub parallel_graph: bool,
    #[arg(long, default_value_t = 5)]
    pub bands: usize,
    #[arg(long, default_value_t = 62)]
    pub channels: usize,
    /// Features are ordered channel by channel instead of band by band.
    #[arg(long)]
    pub channel_major: bool,
    /// One channel name per line; defaults to the bundled 62-electrode montage.
    #[arg(long)]
    pub channel_names: Option<PathBuf>,
    /// Rows in importance.csv [default: all]
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: PathBuf,
}

impl AdaptArgs {
    pub fn config(&self) -> EgdaConfig {
        EgdaConfig {
            weights: Weights {
                alpha: self.alpha,
                beta: self.beta,
                mu: self.mu,
                lambda: self.lambda,
                gamma: self.gamma,
            },
            dim: self.dim,
            max_iters: self.iters,
            ridge: self.ridge,
            convergence: if self.early_stop {
                Convergence::LabelStability
            } else {
                Convergence::FixedIters
            },
            stability_threshold: self.stability_threshold,
            exclude_self: self.exclude_self,
            parallel_graph: self.parallel_graph,
            seed: self.seed,
            ..EgdaConfig::default()
        }
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout {
            band_count: self.bands,
            channel_count: self.channels,
            ordering: if self.channel_major {
                FeatureOrdering::ChannelMajor
            } else {
                FeatureOrdering::BandMajor
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileFormat {
    Csv,
    Bin,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 10)]
    pub dims: usize,
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    /// Euclidean norm of the target translation, spread evenly over all features.
    #[arg(long, default_value_t = 1.0)]
    pub shift: f64,
    /// Target rotation on the first two features, in degrees.
    #[arg(long, default_value_t = 15.0)]
    pub angle: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FileFormat::Csv)]
    pub format: FileFormat,
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// TOML file with arrays for any of alpha, beta, mu, lambda, gamma, dim.
    #[arg(long)]
    pub grid_file: PathBuf,
    /// CSV with header name,source,source_labels,target,target_labels.
    #[arg(long)]
    pub tasks_file: PathBuf,
    #[arg(long)]
    pub classes: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Run only this many grid points, drawn at random with --seed.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 15)]
    pub iters: usize,
    #[arg(long, value_enum, default_value_t = StandardizeMode::ZscoreJoint)]
    pub standardize: StandardizeMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

/// Written once per output directory; enough to replay the command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub preset: Option<String>,
    pub config: Option<EgdaConfig>,
    pub standardize: Option<StandardizeMode>,
    pub inputs: Vec<InputDigest>,
    pub parameters: serde_json::Value,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub summary: serde_json::Value,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    #[serde(flatten)]
    pub report: AdaptationReport,
    pub feature_importance: Vec<f64>,
    pub importance: Option<ImportanceProfile>,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn digest(role: &str, path: &Path) -> Result<InputDigest> {
    let bytes = fs::read(path).map_err(|e| EgdaError::io(path, e))?;
    Ok(InputDigest {
        role: role.to_owned(),
        path: path.to_owned(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| EgdaError::Serialization(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| EgdaError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| EgdaError::io(dir, e))
}

fn read_names(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| EgdaError::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

fn load_pair(
    args: &AdaptArgs,
) -> Result<(DomainDataset, DomainDataset)> {
    let source = load_dataset(&args.source, Some(&args.source_labels), args.classes)?;
    let target = load_dataset(&args.target, args.target_labels.as_deref(), args.classes)?;
    standardize(&source, &target, args.standardize)
}

/// `adapt` and `ablate` share this path; `preset` only changes the config and manifest.
pub fn cmd_adapt(args: &AdaptArgs, preset: Option<Preset>) -> Result<RunManifest> {
    let started = unix_now();
    let mut config = args.config();
    if let Some(p) = preset {
        p.apply(&mut config);
    }
    config.validate()?;
    if args.classes < 2 {
        return Err(EgdaError::InvalidParameter("--classes must be at least 2".into()));
    }

    let (source, target) = load_pair(args)?;
    let report = run_egda(&source, &target, &config)?;

    let layout = args.layout();
    let theta = feature_importance(&report.projection.a)?;
    let (importance, ranking) = if layout.check(theta.len()).is_ok() {
        let profile = ImportanceProfile::from_projection(&report.projection.a, &layout)?;
        let names = args.channel_names.as_deref().map(read_names).transpose()?;
        let top_k = args.top_k.unwrap_or(layout.channel_count);
        let ranking = rank_report(&profile, names.as_deref(), top_k)?;
        (Some(profile), ranking)
    } else {
        let names: Vec<String> = (0..theta.len()).map(|i| format!("f{i}")).collect();
        let ranking = rank_scores(&theta, &names, args.top_k.unwrap_or(theta.len()))?;
        (None, ranking)
    };

    create_dir(&args.out)?;
    write_labels(&args.out.join("predictions.csv"), &report.predictions)?;
    write_rank_csv(&args.out.join("importance.csv"), &ranking)?;

    let mut inputs = vec![
        digest("source", &args.source)?,
        digest("source_labels", &args.source_labels)?,
        digest("target", &args.target)?,
    ];
    if let Some(path) = &args.target_labels {
        inputs.push(digest("target_labels", path)?);
    }
    let summary = serde_json::json!({
        "iterations_run": report.iterations_run,
        "target_samples": report.predictions.len(),
        "accuracy": report.evaluation.as_ref().map(|e| e.accuracy),
        "final_objective": report.objective_trace.last(),
    });
    write_json(
        &args.out.join("report.json"),
        &ReportDocument {
            report,
            feature_importance: theta,
            importance,
        },
    )?;

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        command: if preset.is_some() { "ablate" } else { "adapt" }.to_owned(),
        preset: preset.map(|p| p.name().to_owned()),
        config: Some(config),
        standardize: Some(args.standardize),
        inputs,
        parameters: serde_json::json!({
            "classes": args.classes,
            "layout": layout,
            "top_k": args.top_k,
        }),
        started_unix: started,
        finished_unix: unix_now(),
        summary,
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<RunManifest> {
    let started = unix_now();
    if !args.shift.is_finite() || !args.angle.is_finite() {
        return Err(EgdaError::InvalidParameter("shift and angle must be finite".into()));
    }
    let spec = SyntheticSpec {
        class_count: args.classes,
        dims: args.dims,
        per_class: args.per_class,
        shift: SyntheticSpec::uniform_shift(args.dims.max(1), args.shift),
        rotation_angle: args.angle.to_radians(),
        seed: args.seed,
    };
    let (source, target) = generate_synthetic(&spec)?;
    create_dir(&args.out)?;
    let ext = match args.format {
        FileFormat::Csv => "csv",
        FileFormat::Bin => "bin",
    };
    let mut outputs = Vec::new();
    for (name, data) in [("source", &source), ("target", &target)] {
        let features = args.out.join(format!("{name}.{ext}"));
        let labels = args.out.join(format!("{name}_labels.txt"));
        data.save(&features, Some(&labels))?;
        outputs.push(digest(name, &features)?);
        outputs.push(digest(&format!("{name}_labels"), &labels)?);
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        command: "synth".to_owned(),
        preset: None,
        config: None,
        standardize: None,
        inputs: Vec::new(),
        parameters: serde_json::to_value(&spec).map_err(|e| EgdaError::Serialization(e.to_string()))?,
        started_unix: started,
        finished_unix: unix_now(),
        summary: serde_json::json!({ "outputs": outputs }),
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Parameter axes of a sweep; missing axes take the single default value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    #[serde(default = "default_beta")]
    pub beta: Vec<f64>,
    #[serde(default = "default_mu")]
    pub mu: Vec<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub dim: Vec<usize>,
}

fn default_alpha() -> Vec<f64> {
    vec![Weights::default().alpha]
}
fn default_beta() -> Vec<f64> {
    vec![Weights::default().beta]
}
fn default_mu() -> Vec<f64> {
    vec![Weights::default().mu]
}
fn default_lambda() -> Vec<f64> {
    vec![Weights::default().lambda]
}
fn default_gamma() -> Vec<f64> {
    vec![Weights::default().gamma]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub weights: Weights,
    pub dim: Option<usize>,
}

impl Grid {
    pub fn parse(text: &str) -> Result<Self> {
        let grid: Grid = toml::from_str(text).map_err(|e| EgdaError::InvalidParameter(format!("grid file: {e}")))?;
        for (name, axis) in [
            ("alpha", &grid.alpha),
            ("beta", &grid.beta),
            ("mu", &grid.mu),
            ("lambda", &grid.lambda),
            ("gamma", &grid.gamma),
        ] {
            if axis.is_empty() {
                return Err(EgdaError::InvalidParameter(format!("grid axis {name} is empty")));
            }
        }
        Ok(grid)
    }

    /// Cartesian product in alpha, beta, mu, lambda, gamma, dim nesting order.
    pub fn points(&self) -> Vec<GridPoint> {
        let dims: Vec<Option<usize>> = if self.dim.is_empty() {
            vec![None]
        } else {
            self.dim.iter().copied().map(Some).collect()
        };
        let mut out = Vec::new();
        for &alpha in &self.alpha {
            for &beta in &self.beta {
                for &mu in &self.mu {
                    for &lambda in &self.lambda {
                        for &gamma in &self.gamma {
                            for &dim in &dims {
                                out.push(GridPoint {
                                    weights: Weights { alpha, beta, mu, lambda, gamma },
                                    dim,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub source: PathBuf,
    pub source_labels: PathBuf,
    pub target: PathBuf,
    #[serde(default)]
    pub target_labels: Option<PathBuf>,
}

/// Parse a tasks CSV; relative paths are resolved against `base`.
pub fn parse_tasks(text: &str, base: &Path) -> Result<Vec<TaskSpec>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut tasks = Vec::new();
    for (i, row) in reader.deserialize::<TaskSpec>().enumerate() {
        let mut task = row.map_err(|e| EgdaError::Parse {
            line: i + 2,
            field: 0,
            message: e.to_string(),
        })?;
        let resolve = |p: &Path| if p.is_absolute() { p.to_owned() } else { base.join(p) };
        task.source = resolve(&task.source);
        task.source_labels = resolve(&task.source_labels);
        task.target = resolve(&task.target);
        task.target_labels = task
            .target_labels
            .filter(|p| !p.as_os_str().is_empty())
            .map(|p| resolve(&p));
        tasks.push(task);
    }
    if tasks.is_empty() {
        return Err(EgdaError::InvalidParameter("tasks file lists no tasks".into()));
    }
    Ok(tasks)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub task: String,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub dim: Option<usize>,
    pub accuracy: Option<f64>,
    pub iterations: Option<usize>,
    pub seconds: f64,
    pub status: String,
}

fn run_point(
    task: &TaskSpec,
    data: &std::result::Result<(DomainDataset, DomainDataset), String>,
    point: GridPoint,
    args: &SweepArgs,
) -> SweepRow {
    let started = Instant::now();
    let mut row = SweepRow {
        task: task.name.clone(),
        alpha: point.weights.alpha,
        beta: point.weights.beta,
        mu: point.weights.mu,
        lambda: point.weights.lambda,
        gamma: point.weights.gamma,
        dim: point.dim,
        accuracy: None,
        iterations: None,
        seconds: 0.0,
        status: "error".to_owned(),
    };
    let (source, target) = match data {
        Ok(pair) => pair,
        Err(message) => {
            eprintln!("task {}: {message}", task.name);
            return row;
        }
    };
    let config = EgdaConfig {
        weights: point.weights,
        dim: point.dim,
        max_iters: args.iters,
        seed: args.seed,
        ..EgdaConfig::default()
    };
    row.dim = Some(config.resolved_dim(source.dims()));
    let outcome = std::panic::catch_unwind(|| run_egda(source, target, &config));
    match outcome {
        Ok(Ok(report)) => {
            row.accuracy = report.evaluation.map(|e| e.accuracy);
            row.iterations = Some(report.iterations_run);
            row.status = "ok".to_owned();
        }
        Ok(Err(e)) => eprintln!("task {} at {:?}: {e}", task.name, point.weights),
        Err(_) => eprintln!("task {} at {:?}: run panicked", task.name, point.weights),
    }
    row.seconds = started.elapsed().as_secs_f64();
    row
}

pub struct SweepOutcome {
    pub manifest: RunManifest,
    pub rows: Vec<SweepRow>,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<SweepOutcome> {
    let started = unix_now();
    if args.jobs == 0 {
        return Err(EgdaError::InvalidParameter("--jobs must be at least 1".into()));
    }
    if args.classes < 2 {
        return Err(EgdaError::InvalidParameter("--classes must be at least 2".into()));
    }
    let grid_text = fs::read_to_string(&args.grid_file).map_err(|e| EgdaError::io(&args.grid_file, e))?;
    let grid = Grid::parse(&grid_text)?;
    let tasks_text =
        fs::read_to_string(&args.tasks_file).map_err(|e| EgdaError::io(&args.tasks_file, e))?;
    let base = args.tasks_file.parent().unwrap_or(Path::new("."));
    let tasks = parse_tasks(&tasks_text, base)?;

    let mut points = grid.points();
    if let Some(k) = args.sample {
        if k == 0 || k > points.len() {
            return Err(EgdaError::InvalidParameter(format!(
                "--sample must lie in 1..={}",
                points.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let mut picked: Vec<usize> = sample(&mut rng, points.len(), k).into_vec();
        picked.sort_unstable();
        points = picked.into_iter().map(|i| points[i]).collect();
    }

    let loaded: Vec<std::result::Result<(DomainDataset, DomainDataset), String>> = tasks
        .iter()
        .map(|t| {
            let pair = load_dataset(&t.source, Some(&t.source_labels), args.classes).and_then(|s| {
                let tgt = load_dataset(&t.target, t.target_labels.as_deref(), args.classes)?;
                standardize(&s, &tgt, args.standardize)
            });
            pair.map_err(|e| e.to_string())
        })
        .collect();

    let jobs: Vec<(usize, GridPoint)> = (0..tasks.len())
        .flat_map(|t| points.iter().map(move |&p| (t, p)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| EgdaError::InvalidParameter(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(t, p)| run_point(&tasks[t], &loaded[t], p, args))
            .collect()
    });

    create_dir(&args.out)?;
    let path = args.out.join("sweep.csv");
    let mut writer = csv::Writer::from_path(&path).map_err(|e| EgdaError::Serialization(e.to_string()))?;
    writer
        .write_record([
            "task", "alpha", "beta", "mu", "lambda", "gamma", "dim", "accuracy", "iterations",
            "seconds", "status",
        ])
        .map_err(|e| EgdaError::Serialization(e.to_string()))?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in &rows {
        writer
            .write_record([
                r.task.clone(),
                r.alpha.to_string(),
                r.beta.to_string(),
                r.mu.to_string(),
                r.lambda.to_string(),
                r.gamma.to_string(),
                opt(r.dim.map(|d| d.to_string())),
                opt(r.accuracy.map(|a| a.to_string())),
                opt(r.iterations.map(|i| i.to_string())),
                format!("{:.3}", r.seconds),
                r.status.clone(),
            ])
            .map_err(|e| EgdaError::Serialization(e.to_string()))?;
    }
    writer.flush().map_err(|e| EgdaError::io(&path, e))?;

    let mut inputs = vec![digest("grid", &args.grid_file)?, digest("tasks", &args.tasks_file)?];
    for t in &tasks {
        for (role, p) in [("source", &t.source), ("source_labels", &t.source_labels), ("target", &t.target)] {
            if let Ok(d) = digest(&format!("{}:{role}", t.name), p) {
                inputs.push(d);
            }
        }
    }
    let failures = rows.iter().filter(|r| r.status != "ok").count();
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        command: "sweep".to_owned(),
        preset: None,
        config: None,
        standardize: Some(args.standardize),
        inputs,
        parameters: serde_json::json!({
            "grid": grid,
            "classes": args.classes,
            "iters": args.iters,
            "sample": args.sample,
            "seed": args.seed,
            "jobs": args.jobs,
        }),
        started_unix: started,
        finished_unix: unix_now(),
        summary: serde_json::json!({ "runs": rows.len(), "failures": failures }),
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    Ok(SweepOutcome { manifest, rows })
}

fn exit_code(e: &EgdaError) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Parse `args` and run the selected command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Adapt(a) => cmd_adapt(a, None).map(|_| ()),
        Command::Ablate { preset, run } => cmd_adapt(run, Some(*preset)).map(|_| ()),
        Command::Synth(a) => cmd_synth(a).map(|_| ()),
        Command::Sweep(a) => match cmd_sweep(a) {
            Ok(outcome) if !outcome.rows.is_empty() && outcome.rows.iter().all(|r| r.status != "ok") => {
                eprintln!("error: all {} sweep runs failed", outcome.rows.len());
                return 1;
            }
            other => other.map(|_| ()),
        },
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn presets() {
        let mut c = EgdaConfig::default();
        Preset::MarginalOnly.apply(&mut c);
        assert_eq!((c.weights.beta, c.weights.mu, c.conditional), (0.0, 0.0, false));
        let mut c = EgdaConfig::default();
        Preset::NoGraph.apply(&mut c);
        assert_eq!((c.weights.mu, c.conditional), (0.0, true));
        let mut c = EgdaConfig::default();
        Preset::Egda.apply(&mut c);
        assert_eq!(c, EgdaConfig::default());
    }

    #[test]
    fn grid_defaults_and_order() {
        let grid = Grid::parse("alpha = [0.1, 1.0]\ndim = [3, 4]\n").unwrap();
        let pts = grid.points();
        assert_eq!(pts.len(), 4);
        assert_eq!((pts[0].weights.alpha, pts[0].dim), (0.1, Some(3)));
        assert_eq!((pts[1].weights.alpha, pts[1].dim), (0.1, Some(4)));
        assert_eq!(pts[2].weights.alpha, 1.0);
        assert_eq!(pts[0].weights.beta, 0.1);
        assert!(Grid::parse("alpha = []").is_err());
        assert!(Grid::parse("delta = [1.0]").is_err());
    }

    #[test]
    fn tasks_resolve_relative_paths() {
        let text = "name,source,source_labels,target,target_labels\n\
                    t1,s.csv,s.txt,t.csv,\n\
                    t2,/abs/s.csv,s.txt,t.csv,t.txt\n";
        let tasks = parse_tasks(text, Path::new("/data")).unwrap();
        assert_eq!(tasks[0].source, PathBuf::from("/data/s.csv"));
        assert_eq!(tasks[0].target_labels, None);
        assert_eq!(tasks[1].source, PathBuf::from("/abs/s.csv"));
        assert_eq!(tasks[1].target_labels, Some(PathBuf::from("/data/t.txt")));
    }

    #[test]
    fn missing_source_exits_one() {
        assert_eq!(run(["egda", "adapt", "--classes", "2", "--out", "x"]), 1);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["egda", "--help"]), 0);
    }
}
