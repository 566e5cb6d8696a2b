//! Experiment driver: repeated simulate → pre-process → train → evaluate
//! runs, aggregated into summary artifacts.
//!
//! A study runs `iterations` independent repetitions. Each one draws a
//! paired real/counterfactual dataset (or splits a loaded CSV once), fits
//! the warping and adaptation transforms on the real training rows, builds
//! the two pre-processed views, trains one unpenalized model per world,
//! evaluates the fairness panel on that world's test rows, searches the
//! penalty path on the real world, and sweeps fairness–accuracy curves
//! across every world's test set. Per-iteration results are always
//! persisted under `out_dir/iterations/`, so every aggregate in
//! `summary.json` can be recomputed from the artifacts.
//!
//! Determinism: the master seed fixes each iteration seed, which fixes
//! every stage seed (simulation, split, transforms, training, bootstrap),
//! so a study writes byte-identical `summary.json` across runs — including
//! under `jobs > 1`, because results are merged in iteration order.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapt::{adapt_apply, adapt_fit, AdaptOptions};
use crate::adjacency::{AdjacencyInfo, DagConfig};
use crate::boost::{predict_proba, train, tune, BoostParams, SearchSpace, TuneResult};
use crate::dataset::{load_csv, save_csv, sidecar_path, split, Dataset, SplitSpec};
use crate::error::{io_err, Error, Result};
use crate::hmda::default_hmda_dag;
use crate::jsonio::{read_json, write_json};
use crate::metrics::{base_rate_gap, fairness_panel, FairnessReport, PanelOptions};
use crate::scm::{default_credit_spec, paired_worlds, simulate, ScmSpec, WorldKind};
use crate::seeding::{
    iteration_seed, mix_seed, stage_seed, STREAM_ADAPT, STREAM_BOOTSTRAP, STREAM_SIM,
    STREAM_SPLIT, STREAM_TRAIN, STREAM_TUNE, STREAM_WARP,
};
use crate::stats::{mean, quantile_sorted, sample_sd};
use crate::tradeoff::{
    find_lambda_star, relation_direction, tradeoff_curve, CurveOptions, LambdaSearch,
    Relation, TradeoffCurve,
};
use crate::warp::{warp_apply, warp_fit, WarpOptions};

/// World names, in reporting order.
pub const WORLD_REAL: &str = "real";
pub const WORLD_FIND: &str = "find";
pub const WORLD_ADAPTED: &str = "adapted";
pub const WORLD_WARPED: &str = "warped";

/// Hyper-parameter search budget for the unpenalized model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneSettings {
    pub budget: usize,
    pub folds: usize,
    pub space: SearchSpace,
}

impl Default for TuneSettings {
    fn default() -> Self {
        TuneSettings { budget: 20, folds: 3, space: SearchSpace::default() }
    }
}

/// Full study configuration; every field has a default, so a JSON config
/// only needs to name what it overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    /// Structural-model JSON for simulation studies; `None` uses the
    /// built-in credit-scoring graph.
    pub scm_spec: Option<PathBuf>,
    /// Encoded CSV (schema sidecar alongside) for [`run_hmda_study`].
    pub data_csv: Option<PathBuf>,
    /// Causal graph for CSV data; `None` uses the mortgage default.
    pub dag: Option<DagConfig>,
    /// Rows per simulated iteration; ignored when data comes from a CSV.
    pub n: usize,
    /// Number of repetitions; a CSV study always runs exactly one.
    pub iterations: usize,
    pub train_fraction: f64,
    /// Base boosting parameters; tuning overrides `depth` and `eta`.
    pub params: BoostParams,
    /// `None` skips tuning and uses `params` as-is.
    pub tune: Option<TuneSettings>,
    /// Penalty-weight search (grid, disparity bound, refinement steps).
    pub search: LambdaSearch,
    /// Sweep shape and bootstrap settings, shared with the panels.
    pub curve: CurveOptions,
    /// Classification threshold for the fairness panel.
    pub threshold: f64,
    /// Quantile bins for the adaptation strata.
    pub bins: usize,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    /// Also write each world's full dataset per iteration.
    pub save_datasets: bool,
    /// Worker threads for iterations; 1 = serial.
    pub jobs: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            scm_spec: None,
            data_csv: None,
            dag: None,
            n: 10_000,
            iterations: 25,
            train_fraction: 0.7,
            params: BoostParams::default(),
            tune: Some(TuneSettings::default()),
            search: LambdaSearch::default(),
            curve: CurveOptions::default(),
            threshold: 0.5,
            bins: 10,
            master_seed: 17,
            out_dir: PathBuf::from("out"),
            save_datasets: false,
            jobs: 1,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, detail: String| {
            Err(Error::Config { field: field.into(), detail })
        };
        if self.iterations < 1 {
            return bad("iterations", "must be at least 1".into());
        }
        if self.n < 10 {
            return bad("n", format!("need at least 10 rows per iteration, got {}", self.n));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction", format!("must be in (0, 1), got {}", self.train_fraction));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad("threshold", format!("must be in (0, 1), got {}", self.threshold));
        }
        if self.bins < 2 {
            return bad("bins", format!("need at least 2 strata bins, got {}", self.bins));
        }
        if self.jobs < 1 {
            return bad("jobs", "must be at least 1".into());
        }
        if self.curve.steps < 1 {
            return bad("curve.steps", "need at least 1 interior sweep point".into());
        }
        self.params.validate()?;
        self.search.validate()?;
        Ok(())
    }
}

/// Everything recorded for one world within one iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldMetrics {
    pub world: String,
    pub panel: FairnessReport,
    /// |P(Y=1|protected) − P(Y=1|baseline)| on the world's full dataset.
    pub base_rate_gap: f64,
    /// Direction of this world's fairness–accuracy sweep.
    pub relation: Relation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationResult {
    pub index: usize,
    pub seed: u64,
    pub worlds: Vec<WorldMetrics>,
    pub lambda_star: f64,
    /// Held-out real-world disparity at `lambda_star`.
    pub achieved_disparity: f64,
    /// Penalty weights evaluated during the search.
    pub lambda_evaluations: usize,
    pub curves: Vec<TradeoffCurve>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationFailure {
    pub index: usize,
    pub kind: String,
    pub message: String,
}

/// Mean, sample sd, and a 95% percentile interval over iterations. The
/// interval is clamped to contain the mean, and sd is 0 for a single run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

fn summarize(values: &[f64]) -> MetricSummary {
    let m = mean(values);
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    MetricSummary {
        mean: m,
        sd: sample_sd(values),
        lo: quantile_sorted(&sorted, 0.025).min(m),
        hi: quantile_sorted(&sorted, 0.975).max(m),
    }
}

fn summarize_defined(values: &[Option<f64>]) -> Option<MetricSummary> {
    let defined: Vec<f64> = values.iter().copied().flatten().collect();
    (!defined.is_empty()).then(|| summarize(&defined))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationTally {
    pub aligned: usize,
    pub tradeoff: usize,
    pub flat: usize,
}

/// Per-world aggregate over iterations. The optional entries are `None`
/// when the metric was undefined in every iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldSummary {
    pub world: String,
    pub dp: MetricSummary,
    pub fpr_balance: Option<MetricSummary>,
    pub fnr_balance: Option<MetricSummary>,
    pub ppv_parity: Option<MetricSummary>,
    pub auc: MetricSummary,
    pub base_rate_gap: MetricSummary,
    pub relations: RelationTally,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudySummary {
    pub master_seed: u64,
    /// Rows per iteration (dataset size for CSV studies).
    pub rows: usize,
    pub iterations_requested: usize,
    pub iterations_run: usize,
    /// Depth/eta actually trained with (post-tuning when tuning ran).
    pub depth: usize,
    pub eta: f64,
    pub tuned: bool,
    /// Disparity bound the penalty search had to meet.
    pub epsilon: f64,
    pub worlds: Vec<WorldSummary>,
    pub lambda_star: MetricSummary,
    pub achieved_disparity: MetricSummary,
    pub failures: Vec<IterationFailure>,
}

/// One world's data within an iteration; index 0 must be the real world,
/// whose training rows drive the penalty search and the sweep models.
struct WorldData {
    name: &'static str,
    full_gap: f64,
    train: Dataset,
    test: Dataset,
}

/// Train/evaluate every world of one iteration: unpenalized panels, the
/// real-world penalty search, and the shared-model sweep curves.
fn evaluate_worlds(
    index: usize,
    it_seed: u64,
    worlds: &[WorldData],
    cfg: &StudyConfig,
    params: &BoostParams,
) -> Result<IterationResult> {
    let mut panels = Vec::with_capacity(worlds.len());
    for (k, w) in worlds.iter().enumerate() {
        let p = BoostParams {
            lambda_fair: 0.0,
            seed: mix_seed(stage_seed(it_seed, STREAM_TRAIN), k as u64),
            ..params.clone()
        };
        let model = train(&w.train, &p)?;
        let probs = predict_proba(&model, &w.test)?;
        let panel = fairness_panel(
            &probs,
            w.test.target(),
            w.test.pa(),
            &PanelOptions {
                threshold: cfg.threshold,
                bootstrap_replicates: cfg.curve.bootstrap_replicates,
                confidence_level: cfg.curve.confidence_level,
                seed: mix_seed(stage_seed(it_seed, STREAM_BOOTSTRAP), 100 + k as u64),
            },
        )?;
        panels.push(panel);
    }

    let real = &worlds[0];
    let search_params = BoostParams {
        seed: mix_seed(stage_seed(it_seed, STREAM_TRAIN), 50),
        ..params.clone()
    };
    let found = find_lambda_star(&real.train, &real.test, &search_params, &cfg.search)?;

    let named: Vec<(&str, &Dataset)> = worlds.iter().map(|w| (w.name, &w.test)).collect();
    let sweep_params = BoostParams {
        seed: mix_seed(stage_seed(it_seed, STREAM_TRAIN), 60),
        ..params.clone()
    };
    let curves = tradeoff_curve(
        &real.train,
        &named,
        found.lambda_star,
        &sweep_params,
        &CurveOptions {
            steps: cfg.curve.steps,
            bootstrap_replicates: cfg.curve.bootstrap_replicates,
            confidence_level: cfg.curve.confidence_level,
            seed: stage_seed(it_seed, STREAM_BOOTSTRAP),
        },
    )?;

    let mut metrics = Vec::with_capacity(worlds.len());
    for ((w, panel), curve) in worlds.iter().zip(panels).zip(&curves) {
        metrics.push(WorldMetrics {
            world: w.name.to_string(),
            panel,
            base_rate_gap: w.full_gap,
            relation: relation_direction(&curve.points)?,
        });
    }
    Ok(IterationResult {
        index,
        seed: it_seed,
        worlds: metrics,
        lambda_star: found.lambda_star,
        achieved_disparity: found.achieved_disparity,
        lambda_evaluations: found.evaluated.len(),
        curves,
    })
}

fn save_world_datasets(
    cfg: &StudyConfig,
    index: usize,
    worlds: &[(&str, &Dataset)],
) -> Result<()> {
    let dir = cfg.out_dir.join("datasets").join(format!("iter_{index:03}"));
    for (name, ds) in worlds {
        save_csv(ds, dir.join(format!("{name}.csv")))?;
    }
    Ok(())
}

/// One simulation repetition: paired worlds, shared split, both transforms
/// fitted on real training rows and applied to the full real dataset.
fn run_sim_iteration(
    index: usize,
    cfg: &StudyConfig,
    spec: &ScmSpec,
    adjacency: &AdjacencyInfo,
    params: &BoostParams,
) -> Result<IterationResult> {
    let it_seed = iteration_seed(cfg.master_seed, index);
    let (real, find) = paired_worlds(spec, cfg.n, stage_seed(it_seed, STREAM_SIM))?;
    let split_spec = SplitSpec {
        train_fraction: cfg.train_fraction,
        seed: stage_seed(it_seed, STREAM_SPLIT),
    };
    let (real_train, real_test) = split(&real, &split_spec)?;

    let warp_model = warp_fit(
        &real_train,
        adjacency,
        &WarpOptions { seed: stage_seed(it_seed, STREAM_WARP), ..WarpOptions::default() },
    )?;
    let warped = warp_apply(&warp_model, &real)?;
    let adapt_model = adapt_fit(
        &real_train,
        adjacency,
        &AdaptOptions { bins: cfg.bins, seed: stage_seed(it_seed, STREAM_ADAPT), baseline: 0.0 },
    )?;
    let adapted = adapt_apply(&adapt_model, &real)?;

    if cfg.save_datasets {
        save_world_datasets(
            cfg,
            index,
            &[
                (WORLD_REAL, &real),
                (WORLD_FIND, &find),
                (WORLD_ADAPTED, &adapted),
                (WORLD_WARPED, &warped),
            ],
        )?;
    }

    // the shared split seed keeps rows paired across worlds
    let (find_train, find_test) = split(&find, &split_spec)?;
    let (adapted_train, adapted_test) = split(&adapted, &split_spec)?;
    let (warped_train, warped_test) = split(&warped, &split_spec)?;
    let worlds = vec![
        WorldData {
            name: WORLD_REAL,
            full_gap: base_rate_gap(&real)?,
            train: real_train,
            test: real_test,
        },
        WorldData {
            name: WORLD_FIND,
            full_gap: base_rate_gap(&find)?,
            train: find_train,
            test: find_test,
        },
        WorldData {
            name: WORLD_ADAPTED,
            full_gap: base_rate_gap(&adapted)?,
            train: adapted_train,
            test: adapted_test,
        },
        WorldData {
            name: WORLD_WARPED,
            full_gap: base_rate_gap(&warped)?,
            train: warped_train,
            test: warped_test,
        },
    ];
    evaluate_worlds(index, it_seed, &worlds, cfg, params)
}

/// Tune depth/eta once (when configured) on dedicated data.
fn resolve_params(
    cfg: &StudyConfig,
    tune_data: &Dataset,
) -> Result<(BoostParams, Option<TuneResult>)> {
    match &cfg.tune {
        None => Ok((cfg.params.clone(), None)),
        Some(settings) => {
            let result = tune(
                tune_data,
                &settings.space,
                settings.budget,
                settings.folds,
                &cfg.params,
                mix_seed(cfg.master_seed, STREAM_TUNE),
            )?;
            let params =
                BoostParams { depth: result.depth, eta: result.eta, ..cfg.params.clone() };
            Ok((params, Some(result)))
        }
    }
}

fn run_iterations<F>(
    cfg: &StudyConfig,
    count: usize,
    run: F,
) -> Result<Vec<(usize, Result<IterationResult>)>>
where
    F: Fn(usize) -> Result<IterationResult> + Sync,
{
    if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Config { field: "jobs".into(), detail: e.to_string() })?;
        Ok(pool.install(|| (0..count).into_par_iter().map(|i| (i, run(i))).collect()))
    } else {
        Ok((0..count).map(|i| (i, run(i))).collect())
    }
}

/// Persist per-iteration artifacts, aggregate, and write the summary files.
fn finish(
    cfg: &StudyConfig,
    rows: usize,
    params: &BoostParams,
    tuned: Option<&TuneResult>,
    results: Vec<(usize, Result<IterationResult>)>,
) -> Result<StudySummary> {
    let requested = results.len();
    let iter_dir = cfg.out_dir.join("iterations");
    let mut successes: Vec<IterationResult> = Vec::new();
    let mut failures: Vec<IterationFailure> = Vec::new();
    let mut first_error: Option<Error> = None;
    for (index, result) in results {
        match result {
            Ok(iteration) => {
                write_json(iter_dir.join(format!("iter_{index:03}.json")), &iteration)?;
                successes.push(iteration);
            }
            Err(error) => {
                log::warn!("iteration {index} failed: {error}");
                failures.push(IterationFailure {
                    index,
                    kind: error.kind().to_string(),
                    message: error.to_string(),
                });
                first_error.get_or_insert(error);
            }
        }
    }
    if successes.is_empty() {
        // nothing to aggregate; surface what went wrong
        return Err(first_error.expect("no results at all"));
    }

    let world_names: Vec<String> =
        successes[0].worlds.iter().map(|w| w.world.clone()).collect();
    let mut worlds = Vec::with_capacity(world_names.len());
    for name in &world_names {
        let per_iter: Vec<&WorldMetrics> = successes
            .iter()
            .map(|it| {
                it.worlds.iter().find(|w| &w.world == name).ok_or_else(|| {
                    Error::SchemaMismatch(format!(
                        "iteration {} is missing world {name:?}",
                        it.index
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let collect = |f: &dyn Fn(&WorldMetrics) -> f64| -> Vec<f64> {
            per_iter.iter().map(|w| f(w)).collect()
        };
        let collect_opt = |f: &dyn Fn(&WorldMetrics) -> Option<f64>| -> Vec<Option<f64>> {
            per_iter.iter().map(|w| f(w)).collect()
        };
        let mut relations = RelationTally::default();
        for w in &per_iter {
            match w.relation {
                Relation::Aligned => relations.aligned += 1,
                Relation::Tradeoff => relations.tradeoff += 1,
                Relation::Flat => relations.flat += 1,
            }
        }
        worlds.push(WorldSummary {
            world: name.clone(),
            dp: summarize(&collect(&|w| w.panel.dp)),
            fpr_balance: summarize_defined(&collect_opt(&|w| w.panel.fpr_balance)),
            fnr_balance: summarize_defined(&collect_opt(&|w| w.panel.fnr_balance)),
            ppv_parity: summarize_defined(&collect_opt(&|w| w.panel.ppv_parity)),
            auc: summarize(&collect(&|w| w.panel.auc)),
            base_rate_gap: summarize(&collect(&|w| w.base_rate_gap)),
            relations,
        });
    }

    let lambda_stars: Vec<f64> = successes.iter().map(|it| it.lambda_star).collect();
    let achieved: Vec<f64> = successes.iter().map(|it| it.achieved_disparity).collect();
    let summary = StudySummary {
        master_seed: cfg.master_seed,
        rows,
        iterations_requested: requested,
        iterations_run: successes.len(),
        depth: params.depth,
        eta: params.eta,
        tuned: tuned.is_some(),
        epsilon: cfg.search.epsilon,
        worlds,
        lambda_star: summarize(&lambda_stars),
        achieved_disparity: summarize(&achieved),
        failures,
    };
    write_json(cfg.out_dir.join("summary.json"), &summary)?;
    write_table_csv(cfg.out_dir.join("table.csv"), &summary)?;
    write_study_curves_csv(cfg.out_dir.join("curves.csv"), &successes)?;
    Ok(summary)
}

/// Repeated-simulation study over the four worlds.
pub fn run_simulation_study(cfg: &StudyConfig) -> Result<StudySummary> {
    cfg.validate()?;
    let spec: ScmSpec = match &cfg.scm_spec {
        Some(path) => read_json(path)?,
        None => default_credit_spec(),
    };
    let adjacency = spec.adjacency()?;
    // tuning gets its own simulated draw so no iteration's data picks the
    // hyper-parameters
    let tune_data =
        simulate(&spec, WorldKind::Real, cfg.n, mix_seed(cfg.master_seed, STREAM_TUNE))?;
    let (params, tuned) = resolve_params(cfg, &tune_data)?;
    let results = run_iterations(cfg, cfg.iterations, |i| {
        run_sim_iteration(i, cfg, &spec, &adjacency, &params)
    })?;
    finish(cfg, cfg.n, &params, tuned.as_ref(), results)
}

/// Single-split study on an encoded CSV: real, adapted, and warped worlds
/// only (no simulated counterfactual is available for observed data).
pub fn run_hmda_study(cfg: &StudyConfig) -> Result<StudySummary> {
    cfg.validate()?;
    let path = cfg.data_csv.as_ref().ok_or_else(|| Error::Config {
        field: "data_csv".into(),
        detail: "a CSV study needs the encoded dataset path".into(),
    })?;
    let data = load_csv(path, sidecar_path(path))?;
    let dag = cfg.dag.clone().unwrap_or_else(default_hmda_dag);
    let adjacency = AdjacencyInfo::new(&dag)?;
    if adjacency.pa() != data.pa_name() {
        return Err(Error::SchemaMismatch(format!(
            "graph protected attribute {:?} does not match dataset {:?}",
            adjacency.pa(),
            data.pa_name()
        )));
    }

    let it_seed = iteration_seed(cfg.master_seed, 0);
    let split_spec = SplitSpec {
        train_fraction: cfg.train_fraction,
        seed: stage_seed(it_seed, STREAM_SPLIT),
    };
    let (train_ds, test_ds) = split(&data, &split_spec)?;
    let (params, tuned) = resolve_params(cfg, &train_ds)?;

    let warp_model = warp_fit(
        &train_ds,
        &adjacency,
        &WarpOptions { seed: stage_seed(it_seed, STREAM_WARP), ..WarpOptions::default() },
    )?;
    let warped = warp_apply(&warp_model, &data)?;
    let adapt_model = adapt_fit(
        &train_ds,
        &adjacency,
        &AdaptOptions { bins: cfg.bins, seed: stage_seed(it_seed, STREAM_ADAPT), baseline: 0.0 },
    )?;
    let adapted = adapt_apply(&adapt_model, &data)?;

    if cfg.save_datasets {
        save_world_datasets(
            cfg,
            0,
            &[(WORLD_REAL, &data), (WORLD_ADAPTED, &adapted), (WORLD_WARPED, &warped)],
        )?;
    }

    let (adapted_train, adapted_test) = split(&adapted, &split_spec)?;
    let (warped_train, warped_test) = split(&warped, &split_spec)?;
    let worlds = vec![
        WorldData {
            name: WORLD_REAL,
            full_gap: base_rate_gap(&data)?,
            train: train_ds,
            test: test_ds,
        },
        WorldData {
            name: WORLD_ADAPTED,
            full_gap: base_rate_gap(&adapted)?,
            train: adapted_train,
            test: adapted_test,
        },
        WorldData {
            name: WORLD_WARPED,
            full_gap: base_rate_gap(&warped)?,
            train: warped_train,
            test: warped_test,
        },
    ];
    let rows = data.n_rows();
    let result = evaluate_worlds(0, it_seed, &worlds, cfg, &params);
    finish(cfg, rows, &params, tuned.as_ref(), vec![(0, result)])
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Long-format per-world table: one row per (world, metric), empty fields
/// for metrics that were undefined in every iteration.
fn write_table_csv(path: impl AsRef<Path>, summary: &StudySummary) -> Result<()> {
    let mut out = String::from("world,metric,mean,sd,lo,hi\n");
    let fmt = |s: &MetricSummary| format!("{},{},{},{}", s.mean, s.sd, s.lo, s.hi);
    for world in &summary.worlds {
        let rows: [(&str, Option<MetricSummary>); 6] = [
            ("dp", Some(world.dp)),
            ("fpr_balance", world.fpr_balance),
            ("fnr_balance", world.fnr_balance),
            ("ppv_parity", world.ppv_parity),
            ("auc", Some(world.auc)),
            ("base_rate_gap", Some(world.base_rate_gap)),
        ];
        for (metric, value) in rows {
            let cells = value.map(|s| fmt(&s)).unwrap_or_else(|| ",,,".into());
            out.push_str(&format!("{},{},{}\n", world.world, metric, cells));
        }
    }
    write_text(path.as_ref(), &out)
}

/// All sweep curves across iterations in one tidy file.
fn write_study_curves_csv(path: impl AsRef<Path>, iterations: &[IterationResult]) -> Result<()> {
    let mut out = String::from("iteration,world,w,lambda,fairness,auc,ci_lo,ci_hi\n");
    for iteration in iterations {
        for curve in &iteration.curves {
            for p in &curve.points {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    iteration.index,
                    curve.world,
                    p.w,
                    p.lambda,
                    p.fairness,
                    p.auc,
                    p.auc_ci.0,
                    p.auc_ci.1
                ));
            }
        }
    }
    write_text(path.as_ref(), &out)
}
