//! Gradient-boosted trees with a group-disparity penalty.
//!
//! The training objective is the Bernoulli deviance plus
//! `lambda_fair * |mean(pi | group 1) - mean(pi | group 0)|` over the
//! training predictions. The penalty enters the per-row gradients (its
//! dense hessian is deliberately omitted); trees are then grown by standard
//! second-order boosting. With `lambda_fair = 0` this is plain logistic
//! boosting.

pub mod tree;
pub mod tune;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats::{logit, mean, sigmoid};
pub use tree::Tree;
pub use tune::{tune, SearchSpace, TuneCandidate, TuneResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    /// Learning rate in (0, 1].
    pub eta: f64,
    /// Maximum tree depth (>= 1).
    pub depth: usize,
    /// Number of boosting rounds (>= 1).
    pub rounds: usize,
    /// Weight of the group-disparity penalty (>= 0).
    pub lambda_fair: f64,
    /// Additive floor on leaf hessians: leaf = -G / (H + min_leaf_weight).
    pub min_leaf_weight: f64,
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            eta: 0.1,
            depth: 4,
            rounds: 200,
            lambda_fair: 0.0,
            min_leaf_weight: 1.0,
            seed: 0,
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, detail: String| Err(Error::Config { field: field.into(), detail });
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta", format!("must be in (0,1], got {}", self.eta));
        }
        if self.depth < 1 {
            return bad("depth", "must be at least 1".into());
        }
        if self.rounds < 1 {
            return bad("rounds", "must be at least 1".into());
        }
        if !(self.lambda_fair >= 0.0) {
            return bad("lambda_fair", format!("must be >= 0, got {}", self.lambda_fair));
        }
        if !(self.min_leaf_weight >= 0.0) {
            return bad(
                "min_leaf_weight",
                format!("must be >= 0, got {}", self.min_leaf_weight),
            );
        }
        Ok(())
    }
}

/// Per-round snapshot of predictions and the group means they induce.
#[derive(Debug, Clone)]
pub struct ObjectiveState {
    /// sigma(score) per row, clamped into the open unit interval.
    pub probs: Vec<f64>,
    pub n_protected: usize,
    pub n_baseline: usize,
    pub mean_protected: f64,
    pub mean_baseline: f64,
}

impl ObjectiveState {
    pub fn from_scores(scores: &[f64], groups: &[f64]) -> Self {
        let probs: Vec<f64> = scores
            .iter()
            .map(|&s| sigmoid(s).clamp(1e-15, 1.0 - 1e-15))
            .collect();
        let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0usize, 0.0, 0usize);
        for (p, g) in probs.iter().zip(groups) {
            if *g == 1.0 {
                s1 += p;
                n1 += 1;
            } else {
                s0 += p;
                n0 += 1;
            }
        }
        ObjectiveState {
            probs,
            n_protected: n1,
            n_baseline: n0,
            mean_protected: if n1 > 0 { s1 / n1 as f64 } else { 0.0 },
            mean_baseline: if n0 > 0 { s0 / n0 as f64 } else { 0.0 },
        }
    }

    /// mean(pi | protected) - mean(pi | baseline), sign preserved.
    pub fn signed_disparity(&self) -> f64 {
        self.mean_protected - self.mean_baseline
    }
}

/// Per-row (gradient, hessian) of the penalized objective.
///
/// gradient_i = (pi_i - y_i) + lambda * s * c_i * pi_i (1 - pi_i), where
/// s = sign(group-mean difference) and c_i = +1/N1 for the protected group,
/// -1/N0 for the baseline; at the |.|-kink (equal means) s = 0. The hessian
/// is pi (1 - pi) from the loss alone.
pub fn objective_grad(
    state: &ObjectiveState,
    labels: &[f64],
    groups: &[f64],
    lambda_fair: f64,
) -> Result<Vec<(f64, f64)>> {
    assert_eq!(state.probs.len(), labels.len());
    assert_eq!(state.probs.len(), groups.len());
    if lambda_fair > 0.0 {
        if state.n_protected == 0 {
            return Err(Error::EmptyGroup("1 (protected)".into()));
        }
        if state.n_baseline == 0 {
            return Err(Error::EmptyGroup("0 (baseline)".into()));
        }
    }
    let delta = state.signed_disparity();
    let s = if delta > 0.0 {
        1.0
    } else if delta < 0.0 {
        -1.0
    } else {
        0.0
    };
    let c1 = if state.n_protected > 0 { 1.0 / state.n_protected as f64 } else { 0.0 };
    let c0 = if state.n_baseline > 0 { -1.0 / state.n_baseline as f64 } else { 0.0 };
    Ok(state
        .probs
        .iter()
        .zip(labels.iter().zip(groups))
        .map(|(&p, (&y, &g))| {
            let c = if g == 1.0 { c1 } else { c0 };
            let grad = (p - y) + lambda_fair * s * c * p * (1.0 - p);
            let hess = p * (1.0 - p);
            (grad, hess)
        })
        .collect())
}

/// Penalized empirical risk: sum of Bernoulli deviances plus
/// `lambda_fair * |group mean gap|` of the predicted probabilities.
pub fn regularized_risk(scores: &[f64], labels: &[f64], groups: &[f64], lambda_fair: f64) -> f64 {
    let loss: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&f, &y)| f.max(0.0) + (-f.abs()).exp().ln_1p() - y * f)
        .sum();
    if lambda_fair == 0.0 {
        return loss;
    }
    let state = ObjectiveState::from_scores(scores, groups);
    loss + lambda_fair * state.signed_disparity().abs()
}

/// Trained ensemble: base score plus eta-scaled log-odds increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub feature_names: Vec<String>,
    pub base_score: f64,
    pub trees: Vec<Tree>,
    pub params: BoostParams,
}

impl BoostModel {
    /// Log-odds score for one row given features in `feature_names` order.
    pub fn score_row(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.feature_names.len());
        self.base_score
            + self
                .trees
                .iter()
                .map(|t| t.predict(|f| x[f]))
                .sum::<f64>()
    }
}

/// Train a penalized boosted ensemble on `data`.
///
/// Features are every non-target column (protected attribute included);
/// the dataset's PA column defines the penalty groups.
pub fn train(data: &Dataset, params: &BoostParams) -> Result<BoostModel> {
    params.validate()?;
    let labels = data.target();
    let groups = data.pa();
    let n = data.n_rows();
    let n_pos = labels.iter().filter(|&&y| y == 1.0).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::DegenerateTarget);
    }
    let feature_names = data.feature_names(true);
    let cols: Vec<&[f64]> = feature_names
        .iter()
        .map(|name| data.values(name).expect("feature exists"))
        .collect();
    let presorted = tree::presort(&cols);

    let base_score = logit(mean(labels));
    let mut scores = vec![base_score; n];
    let mut row_out = vec![0.0; n];
    let grow_params = tree::GrowParams {
        max_depth: params.depth,
        min_leaf_weight: params.min_leaf_weight,
        eta: params.eta,
    };
    let mut trees = Vec::with_capacity(params.rounds);
    for _ in 0..params.rounds {
        let state = ObjectiveState::from_scores(&scores, groups);
        let gh = objective_grad(&state, labels, groups, params.lambda_fair)?;
        let grad: Vec<f64> = gh.iter().map(|(g, _)| *g).collect();
        let hess: Vec<f64> = gh.iter().map(|(_, h)| *h).collect();
        let t = tree::grow(&cols, &presorted, &grad, &hess, &grow_params, &mut row_out);
        for (s, d) in scores.iter_mut().zip(&row_out) {
            *s += d;
        }
        trees.push(t);
    }
    Ok(BoostModel {
        feature_names,
        base_score,
        trees,
        params: params.clone(),
    })
}

fn feature_columns<'d>(model: &BoostModel, data: &'d Dataset) -> Result<Vec<&'d [f64]>> {
    model
        .feature_names
        .iter()
        .map(|name| {
            data.values(name).map_err(|_| {
                Error::SchemaMismatch(format!(
                    "dataset lacks feature column {name:?} the model was trained on"
                ))
            })
        })
        .collect()
}

/// Log-odds scores for every row of `data`.
pub fn predict_scores(model: &BoostModel, data: &Dataset) -> Result<Vec<f64>> {
    let cols = feature_columns(model, data)?;
    let mut x = vec![0.0; cols.len()];
    let mut out = Vec::with_capacity(data.n_rows());
    for i in 0..data.n_rows() {
        for (j, c) in cols.iter().enumerate() {
            x[j] = c[i];
        }
        out.push(model.score_row(&x));
    }
    Ok(out)
}

/// Predicted probabilities, strictly inside (0, 1).
pub fn predict_proba(model: &BoostModel, data: &Dataset) -> Result<Vec<f64>> {
    Ok(predict_scores(model, data)?
        .into_iter()
        .map(|s| sigmoid(s).clamp(1e-12, 1.0 - 1e-12))
        .collect())
}
