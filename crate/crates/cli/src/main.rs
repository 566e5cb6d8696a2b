//! Command-line driver for the findworld library: simulation, causal
//! pre-processing, penalized training, penalty-path sweeps, repeated
//! studies, mortgage-data encoding, and report rendering.
//!
//! Every subcommand reads a JSON config file; flags only point at inputs or
//! override execution details (worker count, output format). Artifacts land
//! under the config's `out_dir`. On failure the process exits non-zero and
//! prints one machine-readable line to stderr:
//! `{"error":{"kind":"...","exit_class":N,"message":"..."}}` where the exit
//! class is 2 for config errors, 3 for data errors, and 4 for numeric
//! failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use findworld::adapt::{adapt_apply, adapt_fit, AdaptOptions};
use findworld::adjacency::{AdjacencyInfo, DagConfig};
use findworld::boost::{predict_proba, train, tune, BoostParams};
use findworld::dataset::{load_csv, save_csv, sidecar_path, Dataset};
use findworld::error::{Error, Result};
use findworld::hmda::{
    default_hmda_dag, default_hmda_rules, encode_csv_file, hmda_encode, synthesize_fixture,
    write_fixture_csv, FixtureConfig, HmdaEncodingRules,
};
use findworld::jsonio::{read_json, write_json};
use findworld::metrics::{fairness_panel, PanelOptions};
use findworld::scm::{default_credit_spec, simulate, ScmSpec, WorldKind};
use findworld::study::{
    run_hmda_study, run_simulation_study, MetricSummary, StudyConfig, StudySummary,
    TuneSettings,
};
use findworld::tradeoff::{
    find_lambda_star, relation_direction, tradeoff_curve, write_curves_csv, CurveOptions,
    LambdaSearch,
};
use findworld::warp::{warp_apply, warp_fit, WarpDirection, WarpOptions};

#[derive(Parser)]
#[command(
    name = "findworld",
    version,
    about = "Causal pre-processing and fairness-penalized boosting experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one dataset from a structural model and save it as CSV
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Which world to sample
        #[arg(long, value_enum, default_value_t = WorldArg::Real)]
        world: WorldArg,
    },
    /// Fit a pre-processing transform and emit the transformed dataset
    Preprocess {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train one boosted model and report its fairness panel
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Search the penalty weight and sweep fairness-accuracy curves
    Tradeoff {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the repeated study (simulation, or single-split on a CSV)
    Study {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's worker-thread count
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Encode a raw mortgage CSV (or synthesize the bundled-style fixture)
    HmdaPrepare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a study summary file as a table
    Report {
        /// Path to a summary.json written by `study`
        #[arg(long = "in", value_name = "SUMMARY_JSON")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Md)]
        format: ReportFormat,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WorldArg {
    Real,
    Find,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Md,
    Json,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            let class = error.exit_class();
            let payload = serde_json::json!({
                "error": {
                    "kind": error.kind(),
                    "exit_class": class,
                    "message": error.to_string(),
                }
            });
            eprintln!("{payload}");
            ExitCode::from(class as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate { config, world } => cmd_simulate(&config, world),
        Command::Preprocess { config } => cmd_preprocess(&config),
        Command::Train { config } => cmd_train(&config),
        Command::Tradeoff { config } => cmd_tradeoff(&config),
        Command::Study { config, jobs } => cmd_study(&config, jobs),
        Command::HmdaPrepare { config } => cmd_hmda_prepare(&config),
        Command::Report { input, format } => cmd_report(&input, format),
    }
}

fn config_err(field: &str, detail: &str) -> Error {
    Error::Config { field: field.into(), detail: detail.into() }
}

fn require_path(field: &str, path: &Path) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(config_err(field, "path must be set"));
    }
    Ok(())
}

/// Load a dataset saved by this tool (CSV plus schema sidecar).
fn load_dataset(path: &Path) -> Result<Dataset> {
    load_csv(path, sidecar_path(path))
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct SimulateConfig {
    /// Structural-model JSON; `None` uses the built-in credit graph.
    scm_spec: Option<PathBuf>,
    n: usize,
    seed: u64,
    out_dir: PathBuf,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { scm_spec: None, n: 10_000, seed: 17, out_dir: PathBuf::from("out") }
    }
}

fn cmd_simulate(config: &Path, world: WorldArg) -> Result<()> {
    let cfg: SimulateConfig = read_json(config)?;
    let spec: ScmSpec = match &cfg.scm_spec {
        Some(path) => read_json(path)?,
        None => default_credit_spec(),
    };
    let (kind, name) = match world {
        WorldArg::Real => (WorldKind::Real, "real"),
        WorldArg::Find => (WorldKind::Find, "find"),
    };
    let data = simulate(&spec, kind, cfg.n, cfg.seed)?;
    let out = cfg.out_dir.join(format!("{name}.csv"));
    save_csv(&data, &out)?;
    println!("wrote {} ({} rows)", out.display(), data.n_rows());
    Ok(())
}

// -------------------------------------------------------------- preprocess

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    Warp,
    Adapt,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct PreprocessConfig {
    /// Rows the transform is fitted on (CSV + schema sidecar).
    train_csv: PathBuf,
    /// Rows to transform; defaults to `train_csv`.
    apply_csv: Option<PathBuf>,
    method: Method,
    /// Causal graph, either explicit ...
    dag: Option<DagConfig>,
    /// ... or taken from a structural-model JSON; the mortgage default
    /// applies when neither is given.
    scm_spec: Option<PathBuf>,
    direction: WarpDirection,
    baseline: f64,
    bins: usize,
    seed: u64,
    out_dir: PathBuf,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            train_csv: PathBuf::new(),
            apply_csv: None,
            method: Method::Warp,
            dag: None,
            scm_spec: None,
            direction: WarpDirection::default(),
            baseline: 0.0,
            bins: 10,
            seed: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn resolve_graph(dag: &Option<DagConfig>, scm_spec: &Option<PathBuf>) -> Result<AdjacencyInfo> {
    let config = match (dag, scm_spec) {
        (Some(dag), _) => dag.clone(),
        (None, Some(path)) => {
            let spec: ScmSpec = read_json(path)?;
            DagConfig { parents: spec.parent_map(), pa: spec.protected_node.clone() }
        }
        (None, None) => default_hmda_dag(),
    };
    AdjacencyInfo::new(&config)
}

fn cmd_preprocess(config: &Path) -> Result<()> {
    let cfg: PreprocessConfig = read_json(config)?;
    require_path("train_csv", &cfg.train_csv)?;
    let train_ds = load_dataset(&cfg.train_csv)?;
    let apply_ds = match &cfg.apply_csv {
        Some(path) => load_dataset(path)?,
        None => train_ds.clone(),
    };
    let adjacency = resolve_graph(&cfg.dag, &cfg.scm_spec)?;

    let (out_name, transformed) = match cfg.method {
        Method::Warp => {
            let model = warp_fit(
                &train_ds,
                &adjacency,
                &WarpOptions { direction: cfg.direction, seed: cfg.seed },
            )?;
            write_json(cfg.out_dir.join("warp_model.json"), &model)?;
            ("warped.csv", warp_apply(&model, &apply_ds)?)
        }
        Method::Adapt => {
            let model = adapt_fit(
                &train_ds,
                &adjacency,
                &AdaptOptions { baseline: cfg.baseline, bins: cfg.bins, seed: cfg.seed },
            )?;
            write_json(cfg.out_dir.join("adapt_model.json"), &model)?;
            ("adapted.csv", adapt_apply(&model, &apply_ds)?)
        }
    };
    let out = cfg.out_dir.join(out_name);
    save_csv(&transformed, &out)?;
    println!("wrote {} ({} rows)", out.display(), transformed.n_rows());
    Ok(())
}

// ------------------------------------------------------------------- train

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct TrainConfig {
    train_csv: PathBuf,
    /// Panel evaluation rows; defaults to the training rows
    /// (resubstitution — fine for smoke runs, not for reporting).
    test_csv: Option<PathBuf>,
    params: BoostParams,
    tune: Option<TuneSettings>,
    threshold: f64,
    bootstrap_replicates: usize,
    confidence_level: f64,
    panel_seed: u64,
    out_dir: PathBuf,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            train_csv: PathBuf::new(),
            test_csv: None,
            params: BoostParams::default(),
            tune: None,
            threshold: 0.5,
            bootstrap_replicates: 1000,
            confidence_level: 0.95,
            panel_seed: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn cmd_train(config: &Path) -> Result<()> {
    let cfg: TrainConfig = read_json(config)?;
    require_path("train_csv", &cfg.train_csv)?;
    let train_ds = load_dataset(&cfg.train_csv)?;
    let test_ds = match &cfg.test_csv {
        Some(path) => Some(load_dataset(path)?),
        None => None,
    };

    let params = match &cfg.tune {
        None => cfg.params.clone(),
        Some(settings) => {
            let tuned = tune(
                &train_ds,
                &settings.space,
                settings.budget,
                settings.folds,
                &cfg.params,
                cfg.params.seed,
            )?;
            BoostParams { depth: tuned.depth, eta: tuned.eta, ..cfg.params.clone() }
        }
    };
    let model = train(&train_ds, &params)?;
    write_json(cfg.out_dir.join("model.json"), &model)?;

    let eval_ds = test_ds.as_ref().unwrap_or(&train_ds);
    let probs = predict_proba(&model, eval_ds)?;
    let panel = fairness_panel(
        &probs,
        eval_ds.target(),
        eval_ds.pa(),
        &PanelOptions {
            threshold: cfg.threshold,
            bootstrap_replicates: cfg.bootstrap_replicates,
            confidence_level: cfg.confidence_level,
            seed: cfg.panel_seed,
        },
    )?;
    write_json(cfg.out_dir.join("metrics.json"), &panel)?;
    println!(
        "wrote {} and {} (auc {:.3})",
        cfg.out_dir.join("model.json").display(),
        cfg.out_dir.join("metrics.json").display(),
        panel.auc
    );
    Ok(())
}

// ---------------------------------------------------------------- tradeoff

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NamedCsv {
    name: String,
    path: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct TradeoffConfig {
    train_csv: PathBuf,
    /// Held-out rows; the penalty search targets this set, and the curve
    /// labelled "test" is evaluated on it.
    test_csv: PathBuf,
    /// Further test sets to sweep the same models over.
    extra_worlds: Vec<NamedCsv>,
    params: BoostParams,
    search: LambdaSearch,
    curve: CurveOptions,
    out_dir: PathBuf,
}

impl Default for TradeoffConfig {
    fn default() -> Self {
        TradeoffConfig {
            train_csv: PathBuf::new(),
            test_csv: PathBuf::new(),
            extra_worlds: Vec::new(),
            params: BoostParams::default(),
            search: LambdaSearch::default(),
            curve: CurveOptions::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Serialize)]
struct TradeoffReport {
    lambda_star: f64,
    achieved_disparity: f64,
    evaluated: Vec<(f64, f64)>,
    relations: Vec<(String, findworld::tradeoff::Relation)>,
}

fn cmd_tradeoff(config: &Path) -> Result<()> {
    let cfg: TradeoffConfig = read_json(config)?;
    require_path("train_csv", &cfg.train_csv)?;
    require_path("test_csv", &cfg.test_csv)?;
    for (i, world) in cfg.extra_worlds.iter().enumerate() {
        if world.name.is_empty() || world.name == "test" {
            return Err(config_err(
                &format!("extra_worlds[{i}].name"),
                "must be non-empty and different from \"test\"",
            ));
        }
    }

    let train_ds = load_dataset(&cfg.train_csv)?;
    let test_ds = load_dataset(&cfg.test_csv)?;
    let extra: Vec<(String, Dataset)> = cfg
        .extra_worlds
        .iter()
        .map(|w| Ok((w.name.clone(), load_dataset(&w.path)?)))
        .collect::<Result<_>>()?;

    let found = find_lambda_star(&train_ds, &test_ds, &cfg.params, &cfg.search)?;
    let mut worlds: Vec<(&str, &Dataset)> = vec![("test", &test_ds)];
    worlds.extend(extra.iter().map(|(n, d)| (n.as_str(), d)));
    let curves =
        tradeoff_curve(&train_ds, &worlds, found.lambda_star, &cfg.params, &cfg.curve)?;

    let relations = curves
        .iter()
        .map(|c| Ok((c.world.clone(), relation_direction(&c.points)?)))
        .collect::<Result<_>>()?;
    let report = TradeoffReport {
        lambda_star: found.lambda_star,
        achieved_disparity: found.achieved_disparity,
        evaluated: found.evaluated,
        relations,
    };
    write_json(cfg.out_dir.join("lambda_star.json"), &report)?;
    write_curves_csv(cfg.out_dir.join("curves.csv"), &curves)?;
    println!(
        "lambda* = {} (held-out disparity {:.4}); wrote {}",
        report.lambda_star,
        report.achieved_disparity,
        cfg.out_dir.join("curves.csv").display()
    );
    Ok(())
}

// ------------------------------------------------------------------- study

fn cmd_study(config: &Path, jobs: Option<usize>) -> Result<()> {
    let mut cfg: StudyConfig = read_json(config)?;
    if let Some(jobs) = jobs {
        cfg.jobs = jobs;
    }
    // a CSV path selects the single-split observational pipeline
    let summary = if cfg.data_csv.is_some() {
        run_hmda_study(&cfg)?
    } else {
        run_simulation_study(&cfg)?
    };
    println!(
        "study complete: {} of {} iterations, artifacts in {}",
        summary.iterations_run,
        summary.iterations_requested,
        cfg.out_dir.display()
    );
    Ok(())
}

// ----------------------------------------------------------- hmda-prepare

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct HmdaPrepareConfig {
    /// Raw extract to encode; `None` synthesizes the bundled-style fixture.
    raw_csv: Option<PathBuf>,
    /// Encoding rules JSON; `None` uses the defaults.
    rules: Option<PathBuf>,
    /// Shape of the synthetic fixture (only used when `raw_csv` is absent).
    fixture: FixtureConfig,
    /// Also save the synthesized raw CSV next to the encoded output.
    keep_raw: bool,
    out_dir: PathBuf,
}

impl Default for HmdaPrepareConfig {
    fn default() -> Self {
        HmdaPrepareConfig {
            raw_csv: None,
            rules: None,
            fixture: FixtureConfig::default(),
            keep_raw: true,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn cmd_hmda_prepare(config: &Path) -> Result<()> {
    let cfg: HmdaPrepareConfig = read_json(config)?;
    let rules: HmdaEncodingRules = match &cfg.rules {
        Some(path) => read_json(path)?,
        None => default_hmda_rules(),
    };

    let (encoded, report) = match &cfg.raw_csv {
        Some(path) => encode_csv_file(path, &rules)?,
        None => {
            let (headers, rows) = synthesize_fixture(&cfg.fixture);
            if cfg.keep_raw {
                write_fixture_csv(cfg.out_dir.join("raw_fixture.csv"), &cfg.fixture)?;
            }
            hmda_encode(&headers, &rows, &rules)?
        }
    };

    save_csv(&encoded, cfg.out_dir.join("encoded.csv"))?;
    write_json(cfg.out_dir.join("encode_report.json"), &report)?;
    write_json(cfg.out_dir.join("rules.json"), &rules)?;
    println!(
        "encoded {} rows ({} dropped) into {}",
        report.kept_rows,
        report.dropped_rows(),
        cfg.out_dir.join("encoded.csv").display()
    );
    Ok(())
}

// ------------------------------------------------------------------ report

fn format_cell(summary: Option<&MetricSummary>) -> String {
    match summary {
        Some(s) => format!("{:.3} ({:.3})", s.mean, s.sd),
        None => "—".into(),
    }
}

fn render_markdown(summary: &StudySummary) -> String {
    let mut out = String::new();
    out.push_str("# Study summary\n\n");
    out.push_str(&format!(
        "- iterations: {} run of {} requested, {} rows each\n",
        summary.iterations_run, summary.iterations_requested, summary.rows
    ));
    out.push_str(&format!(
        "- model: depth {}, eta {:.3}{}\n",
        summary.depth,
        summary.eta,
        if summary.tuned { " (tuned)" } else { " (fixed)" }
    ));
    out.push_str(&format!(
        "- penalty search: bound {}, lambda* mean {:.4} (sd {:.4}), achieved disparity mean {:.4}\n",
        summary.epsilon,
        summary.lambda_star.mean,
        summary.lambda_star.sd,
        summary.achieved_disparity.mean
    ));
    out.push_str(&format!("- failed iterations: {}\n\n", summary.failures.len()));

    out.push_str(
        "| World | DP | FPR balance | FNR balance | PPV parity | AUC | Base-rate gap | Aligned/Tradeoff/Flat |\n",
    );
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for world in &summary.worlds {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {}/{}/{} |\n",
            world.world,
            format_cell(Some(&world.dp)),
            format_cell(world.fpr_balance.as_ref()),
            format_cell(world.fnr_balance.as_ref()),
            format_cell(world.ppv_parity.as_ref()),
            format_cell(Some(&world.auc)),
            format_cell(Some(&world.base_rate_gap)),
            world.relations.aligned,
            world.relations.tradeoff,
            world.relations.flat,
        ));
    }
    out
}

fn cmd_report(input: &Path, format: ReportFormat) -> Result<()> {
    let summary: StudySummary = read_json(input)?;
    match format {
        ReportFormat::Md => print!("{}", render_markdown(&summary)),
        ReportFormat::Json => println!(
            "{}",
            serde_json::to_string_pretty(&summary).map_err(Error::Json)?
        ),
    }
    Ok(())
}
