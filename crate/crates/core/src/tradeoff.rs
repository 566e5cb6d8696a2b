//! Penalty-strength search and fairness–accuracy trade-off curves.
//!
//! [`find_lambda_star`] looks for the smallest penalty weight whose model
//! pushes the held-out group gap in predicted probabilities under a bound:
//! it walks a geometric grid upward to the first passing weight, then
//! tightens the bracket with a few bisection steps. [`tradeoff_curve`]
//! sweeps penalty weights between 0 and that λ*, evaluating each model on
//! any number of named test sets, and [`relation_direction`] classifies
//! whether fairness and accuracy move together, against each other, or not
//! at all along the sweep.

use serde::{Deserialize, Serialize};

use crate::boost::{predict_proba, train, BoostModel, BoostParams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{auc, auc_ci, disparity};
use crate::seeding::mix_seed;
use crate::stats::spearman;

/// `{0} ∪ {10^k : k = -2..4}` — spans "no penalty" to "penalty dominates".
pub fn default_lambda_grid() -> Vec<f64> {
    // dense in the top decades: the held-out disparity of penalized models
    // typically crosses the bound somewhere in [1e3, 1e4], and a pure
    // powers-of-ten walk either steps straight over the crossing or lands
    // far past it, dragging every interpolated sweep weight into the
    // saturated regime
    vec![
        0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 500.0, 1000.0, 1250.0, 1500.0, 1750.0, 2000.0, 2250.0,
        2500.0, 2750.0, 3000.0, 3500.0, 4000.0, 5000.0, 7000.0, 10000.0,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSearch {
    /// Candidate penalty weights, strictly ascending, all finite and >= 0.
    pub grid: Vec<f64>,
    /// Held-out probability-gap bound a weight must beat.
    pub epsilon: f64,
    /// Optional bisection steps once a passing weight brackets a failing
    /// one. Zero (the default) keeps the result on the grid: the smallest
    /// passing grid value wins. Positive values trade that guarantee for a
    /// finer, off-grid estimate.
    pub refine_steps: usize,
}

impl Default for LambdaSearch {
    fn default() -> Self {
        LambdaSearch { grid: default_lambda_grid(), epsilon: 0.01, refine_steps: 0 }
    }
}

impl LambdaSearch {
    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Err(Error::Config { field: "search".into(), detail });
        if self.grid.is_empty() {
            return bad("lambda grid is empty".into());
        }
        if !self.grid.iter().all(|l| l.is_finite() && *l >= 0.0) {
            return bad("lambda grid values must be finite and >= 0".into());
        }
        if !self.grid.windows(2).all(|w| w[0] < w[1]) {
            return bad("lambda grid must be strictly ascending".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaStarResult {
    /// Smallest evaluated weight meeting the bound.
    pub lambda_star: f64,
    /// Every `(lambda, held-out disparity)` pair evaluated, in evaluation order.
    pub evaluated: Vec<(f64, f64)>,
    /// Held-out disparity at `lambda_star`.
    pub achieved_disparity: f64,
}

/// Train at `lambda` and measure the group gap of held-out probabilities.
fn disparity_at(
    train_ds: &Dataset,
    test_ds: &Dataset,
    params: &BoostParams,
    lambda: f64,
) -> Result<f64> {
    let model = train(train_ds, &BoostParams { lambda_fair: lambda, ..params.clone() })?;
    let probs = predict_proba(&model, test_ds)?;
    disparity(&probs, test_ds.pa())
}

/// Smallest penalty weight whose held-out probability gap beats
/// `search.epsilon`, refined by bisection between the bracketing grid pair.
pub fn find_lambda_star(
    train_ds: &Dataset,
    test_ds: &Dataset,
    params: &BoostParams,
    search: &LambdaSearch,
) -> Result<LambdaStarResult> {
    search.validate()?;
    params.validate()?;

    let mut evaluated: Vec<(f64, f64)> = Vec::new();
    let mut bracket: Option<(f64, f64)> = None; // (last failing, first passing)
    for &lambda in &search.grid {
        let c = disparity_at(train_ds, test_ds, params, lambda)?;
        evaluated.push((lambda, c));
        if c < search.epsilon {
            let lo = evaluated.iter().rev().nth(1).map(|(l, _)| *l);
            bracket = lo.map(|lo| (lo, lambda));
            break;
        }
    }

    let passed = evaluated.iter().any(|(_, c)| *c < search.epsilon);
    if !passed {
        let (lambda, best) = evaluated
            .iter()
            .copied()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("grid validated non-empty");
        return Err(Error::GridExhausted { lambda, best });
    }

    if let Some((mut lo, mut hi)) = bracket {
        for _ in 0..search.refine_steps {
            let mid = if lo > 0.0 { (lo * hi).sqrt() } else { (lo + hi) / 2.0 };
            let c = disparity_at(train_ds, test_ds, params, mid)?;
            evaluated.push((mid, c));
            if c < search.epsilon {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    let (lambda_star, achieved_disparity) = evaluated
        .iter()
        .copied()
        .filter(|(_, c)| *c < search.epsilon)
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .expect("at least one weight passed");
    Ok(LambdaStarResult { lambda_star, evaluated, achieved_disparity })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions {
    /// Interior sweep points; the curve has `steps + 2` points in total,
    /// at weights `w = n / (steps + 1)` for `n = 0 ..= steps + 1`.
    pub steps: usize,
    pub bootstrap_replicates: usize,
    pub confidence_level: f64,
    pub seed: u64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions { steps: 9, bootstrap_replicates: 1000, confidence_level: 0.95, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    /// Fraction of λ* this model was trained at.
    pub w: f64,
    pub lambda: f64,
    /// 1 − |group gap of predicted probabilities| on this test set.
    pub fairness: f64,
    pub auc: f64,
    pub auc_ci: (f64, f64),
}

/// One fairness–accuracy curve: every sweep model scored on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub world: String,
    pub points: Vec<TradeoffPoint>,
}

/// Sweep penalty weights `w · lambda_star` and score each model on every
/// named test set. One model is trained per weight and shared across all
/// test sets, so curves are comparable point for point.
pub fn tradeoff_curve(
    train_ds: &Dataset,
    test_worlds: &[(&str, &Dataset)],
    lambda_star: f64,
    params: &BoostParams,
    opts: &CurveOptions,
) -> Result<Vec<TradeoffCurve>> {
    params.validate()?;
    if !(lambda_star >= 0.0 && lambda_star.is_finite()) {
        return Err(Error::Config {
            field: "lambda_star".into(),
            detail: format!("must be finite and >= 0, got {lambda_star}"),
        });
    }
    if test_worlds.is_empty() {
        return Err(Error::Config {
            field: "test_worlds".into(),
            detail: "at least one test set is required".into(),
        });
    }
    if !(opts.confidence_level > 0.0 && opts.confidence_level < 1.0) {
        return Err(Error::Config {
            field: "confidence_level".into(),
            detail: format!("must be in (0,1), got {}", opts.confidence_level),
        });
    }

    let denom = (opts.steps + 1) as f64;
    let mut models: Vec<(f64, f64, Option<BoostModel>)> = Vec::new(); // (w, lambda, model)
    for n in 0..=(opts.steps + 1) {
        let w = n as f64 / denom;
        let lambda = w * lambda_star;
        // identical weights (e.g. lambda_star = 0) reuse the same model
        let model = if let Some((_, _, Some(m))) =
            models.iter().find(|(_, l, m)| l.to_bits() == lambda.to_bits() && m.is_some())
        {
            m.clone()
        } else {
            train(train_ds, &BoostParams { lambda_fair: lambda, ..params.clone() })?
        };
        models.push((w, lambda, Some(model)));
    }

    let mut curves = Vec::with_capacity(test_worlds.len());
    for (world_idx, (world, test_ds)) in test_worlds.iter().enumerate() {
        let mut points = Vec::with_capacity(models.len());
        for (point_idx, (w, lambda, model)) in models.iter().enumerate() {
            let model = model.as_ref().expect("every sweep weight trained");
            let probs = predict_proba(model, test_ds)?;
            let fairness = 1.0 - disparity(&probs, test_ds.pa())?;
            let point_auc = auc(&probs, test_ds.target())?;
            let ci_seed = mix_seed(opts.seed, (world_idx * 1000 + point_idx) as u64);
            let auc_ci = auc_ci(
                &probs,
                test_ds.target(),
                opts.confidence_level,
                opts.bootstrap_replicates,
                ci_seed,
            )?;
            points.push(TradeoffPoint { w: *w, lambda: *lambda, fairness, auc: point_auc, auc_ci });
        }
        curves.push(TradeoffCurve { world: world.to_string(), points });
    }
    Ok(curves)
}

/// How fairness and accuracy move along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Spearman correlation >= 0.5: the two improve together.
    Aligned,
    /// Spearman correlation <= -0.5: one is bought with the other.
    Tradeoff,
    /// In between, including flat curves.
    Flat,
}

/// Classify a curve by the Spearman correlation of fairness against AUC.
pub fn relation_direction(points: &[TradeoffPoint]) -> Result<Relation> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints { got: points.len(), min: 3 });
    }
    let fairness: Vec<f64> = points.iter().map(|p| p.fairness).collect();
    let aucs: Vec<f64> = points.iter().map(|p| p.auc).collect();
    let rho = spearman(&fairness, &aucs);
    Ok(if rho >= 0.5 {
        Relation::Aligned
    } else if rho <= -0.5 {
        Relation::Tradeoff
    } else {
        Relation::Flat
    })
}

/// Write curves as tidy CSV: `world,w,lambda,fairness,auc,ci_lo,ci_hi`.
pub fn write_curves_csv(path: impl AsRef<std::path::Path>, curves: &[TradeoffCurve]) -> Result<()> {
    if let Some(parent) = path.as_ref().parent() {
        std::fs::create_dir_all(parent).map_err(|e| crate::error::io_err(path.as_ref(), e))?;
    }
    let mut w = csv::Writer::from_path(path.as_ref())
        .map_err(|e| Error::Csv(e))?;
    w.write_record(["world", "w", "lambda", "fairness", "auc", "ci_lo", "ci_hi"])?;
    for curve in curves {
        for p in &curve.points {
            w.write_record([
                curve.world.as_str(),
                &p.w.to_string(),
                &p.lambda.to_string(),
                &p.fairness.to_string(),
                &p.auc.to_string(),
                &p.auc_ci.0.to_string(),
                &p.auc_ci.1.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| crate::error::io_err(path.as_ref(), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{split, Column, ColumnKind, SplitSpec};
    use crate::stats::sigmoid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Group-biased labels: x drives y, group 1 gets a logit bump.
    fn biased(n: usize, bump: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut a, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..n {
            let g = f64::from(rng.random::<f64>() < 0.5);
            let v: f64 = rng.random::<f64>() * 4.0 - 2.0;
            let p = sigmoid(0.8 * v + bump * g - 0.5 * bump - 0.2);
            a.push(g);
            x.push(v);
            y.push(f64::from(rng.random::<f64>() < p));
        }
        Dataset::new(
            vec![
                Column { name: "a".into(), kind: ColumnKind::Binary, values: a },
                Column { name: "x".into(), kind: ColumnKind::Numeric, values: x },
                Column { name: "y".into(), kind: ColumnKind::Binary, values: y },
            ],
            "a",
            "y",
        )
        .unwrap()
    }

    fn quick_params() -> BoostParams {
        BoostParams { rounds: 60, ..Default::default() }
    }

    #[test]
    fn search_config_is_validated() {
        let unsorted = LambdaSearch { grid: vec![1.0, 0.5], ..Default::default() };
        assert_eq!(unsorted.validate().unwrap_err().kind(), "config");
        let negative = LambdaSearch { grid: vec![-1.0, 0.5], ..Default::default() };
        assert_eq!(negative.validate().unwrap_err().kind(), "config");
        let empty = LambdaSearch { grid: vec![], ..Default::default() };
        assert_eq!(empty.validate().unwrap_err().kind(), "config");
        let eps = LambdaSearch { epsilon: 0.0, ..Default::default() };
        assert_eq!(eps.validate().unwrap_err().kind(), "config");
    }

    #[test]
    fn unbiased_data_passes_at_zero() {
        let data = biased(3000, 0.0, 11);
        let (tr, te) = split(&data, &SplitSpec { train_fraction: 0.7, seed: 1 }).unwrap();
        let search = LambdaSearch { epsilon: 0.05, ..Default::default() };
        let res = find_lambda_star(&tr, &te, &quick_params(), &search).unwrap();
        assert_eq!(res.lambda_star, 0.0);
        assert_eq!(res.evaluated.len(), 1, "no refinement when the first weight passes");
        assert!(res.achieved_disparity < 0.05);
    }

    #[test]
    fn biased_data_needs_positive_lambda() {
        let data = biased(3000, 1.4, 13);
        let (tr, te) = split(&data, &SplitSpec { train_fraction: 0.7, seed: 2 }).unwrap();
        let search = LambdaSearch { epsilon: 0.05, ..Default::default() };
        let res = find_lambda_star(&tr, &te, &quick_params(), &search).unwrap();
        assert!(res.lambda_star > 0.0);
        assert!(res.achieved_disparity < 0.05);
        // default search stays on the grid: the answer is the first (hence
        // smallest) passing grid value and nothing beyond it was trained
        assert!(search.grid.contains(&res.lambda_star));
        assert_eq!(res.evaluated.last().unwrap().0, res.lambda_star);
        for (l, c) in &res.evaluated {
            if *c < search.epsilon {
                assert!(res.lambda_star <= *l);
            }
        }
    }

    #[test]
    fn refinement_adds_bisection_evaluations() {
        let data = biased(3000, 1.4, 13);
        let (tr, te) = split(&data, &SplitSpec { train_fraction: 0.7, seed: 2 }).unwrap();
        let search = LambdaSearch { epsilon: 0.05, refine_steps: 3, ..Default::default() };
        let res = find_lambda_star(&tr, &te, &quick_params(), &search).unwrap();
        assert!(res.achieved_disparity < 0.05);
        // three bisection evaluations on top of the grid walk
        let grid_walk = res
            .evaluated
            .iter()
            .filter(|(l, _)| search.grid.contains(l))
            .count();
        assert_eq!(res.evaluated.len(), grid_walk + 3);
        // smallest passing value among everything evaluated
        for (l, c) in &res.evaluated {
            if *c < search.epsilon {
                assert!(res.lambda_star <= *l);
            }
        }
    }

    #[test]
    fn refinement_brackets_shrink_toward_smaller_lambda() {
        let data = biased(3000, 1.4, 17);
        let (tr, te) = split(&data, &SplitSpec { train_fraction: 0.7, seed: 3 }).unwrap();
        let search = LambdaSearch { epsilon: 0.05, refine_steps: 3, ..Default::default() };
        let res = find_lambda_star(&tr, &te, &quick_params(), &search).unwrap();
        let first_pass = res
            .evaluated
            .iter()
            .find(|(_, c)| *c < search.epsilon)
            .map(|(l, _)| *l)
            .unwrap();
        assert!(
            res.lambda_star <= first_pass,
            "bisection may only move the answer down: {} vs {first_pass}",
            res.lambda_star
        );
    }

    #[test]
    fn impossible_bound_exhausts_grid() {
        let data = biased(1200, 1.4, 19);
        let (tr, te) = split(&data, &SplitSpec { train_fraction: 0.7, seed: 4 }).unwrap();
        let search = LambdaSearch {
            grid: vec![0.0, 0.01],
            epsilon: 1e-9,
            refine_steps: 3,
        };
        let err = find_lambda_star(&tr, &te, &quick_params(), &search).unwrap_err();
        match err {
            Error::GridExhausted { best, .. } => assert!(best >= 1e-9),
            other => panic!("expected grid exhaustion, got {other}"),
        }
    }

    #[test]
    fn curve_shapes_and_weights() {
        let data = biased(2000, 1.0, 23);
        let (tr, te) = split(&data, &SplitSpec { train_fraction: 0.7, seed: 5 }).unwrap();
        let opts = CurveOptions { steps: 4, bootstrap_replicates: 50, ..Default::default() };
        let curves =
            tradeoff_curve(&tr, &[("real", &te)], 100.0, &quick_params(), &opts).unwrap();
        assert_eq!(curves.len(), 1);
        let points = &curves[0].points;
        assert_eq!(points.len(), opts.steps + 2);
        assert_eq!(points[0].w, 0.0);
        assert_eq!(points[0].lambda, 0.0);
        assert_eq!(points.last().unwrap().w, 1.0);
        assert_eq!(points.last().unwrap().lambda, 100.0);
        for pair in points.windows(2) {
            assert!(pair[0].w < pair[1].w);
        }
        for p in points {
            assert!(p.auc_ci.0 <= p.auc && p.auc <= p.auc_ci.1);
            assert!(p.fairness > 0.0 && p.fairness <= 1.0);
        }
    }

    #[test]
    fn zero_lambda_star_gives_flat_curve() {
        let data = biased(2000, 0.0, 29);
        let (tr, te) = split(&data, &SplitSpec { train_fraction: 0.7, seed: 6 }).unwrap();
        let opts = CurveOptions { steps: 3, bootstrap_replicates: 50, ..Default::default() };
        let curves = tradeoff_curve(&tr, &[("real", &te)], 0.0, &quick_params(), &opts).unwrap();
        let points = &curves[0].points;
        // every weight collapses to lambda = 0, so the model is shared
        let first = points[0].auc;
        assert!(points.iter().all(|p| p.auc == first));
        assert_eq!(relation_direction(points).unwrap(), Relation::Flat);
    }

    #[test]
    fn biased_curve_reads_as_tradeoff() {
        let data = biased(4000, 1.4, 31);
        let (tr, te) = split(&data, &SplitSpec { train_fraction: 0.7, seed: 7 }).unwrap();
        let search = LambdaSearch { epsilon: 0.05, ..Default::default() };
        let star = find_lambda_star(&tr, &te, &quick_params(), &search).unwrap();
        let opts = CurveOptions { steps: 6, bootstrap_replicates: 50, ..Default::default() };
        let curves = tradeoff_curve(&tr, &[("real", &te)], star.lambda_star, &quick_params(), &opts)
            .unwrap();
        let points = &curves[0].points;
        // the penalty buys fairness...
        assert!(points.last().unwrap().fairness > points[0].fairness + 0.1);
        // ...at an accuracy cost, because the bias sits in the labels
        assert_eq!(relation_direction(points).unwrap(), Relation::Tradeoff);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let p = TradeoffPoint { w: 0.0, lambda: 0.0, fairness: 0.9, auc: 0.8, auc_ci: (0.7, 0.9) };
        let err = relation_direction(&[p.clone(), p]).unwrap_err();
        assert_eq!(err.kind(), "too_few_points");
    }

    #[test]
    fn curves_csv_is_tidy() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curves.csv");
        let curves = vec![TradeoffCurve {
            world: "real".into(),
            points: vec![TradeoffPoint {
                w: 0.5,
                lambda: 2.0,
                fairness: 0.9,
                auc: 0.8,
                auc_ci: (0.75, 0.85),
            }],
        }];
        write_curves_csv(&path, &curves).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "world,w,lambda,fairness,auc,ci_lo,ci_hi");
        assert_eq!(lines.next().unwrap(), "real,0.5,2,0.9,0.8,0.75,0.85");
        assert!(lines.next().is_none());
    }

    #[test]
    fn rejects_bad_curve_inputs() {
        let data = biased(200, 0.0, 37);
        let opts = CurveOptions::default();
        let err =
            tradeoff_curve(&data, &[], 1.0, &quick_params(), &opts).unwrap_err();
        assert_eq!(err.kind(), "config");
        let err = tradeoff_curve(&data, &[("real", &data)], f64::NAN, &quick_params(), &opts)
            .unwrap_err();
        assert_eq!(err.kind(), "config");
    }
}
