//! Random-search hyperparameter tuning with k-fold cross-validation.
//!
//! Samples (depth, eta) pairs — depth uniform on an integer range, eta
//! log-uniform — trains each at zero fairness penalty, and keeps the pair
//! with the best mean validation AUC. Deliberately simple: the budget is
//! small and the search space two-dimensional.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boost::{train, BoostParams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::auc;
use crate::seeding::mix_seed;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSpace {
    pub depth_min: usize,
    pub depth_max: usize,
    pub eta_min: f64,
    pub eta_max: f64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            depth_min: 2,
            depth_max: 8,
            eta_min: 0.01,
            eta_max: 0.3,
        }
    }
}

impl SearchSpace {
    fn validate(&self) -> Result<()> {
        if self.depth_min < 1 || self.depth_max < self.depth_min {
            return Err(Error::Config {
                field: "search.depth".into(),
                detail: format!("bad depth range [{}, {}]", self.depth_min, self.depth_max),
            });
        }
        if !(self.eta_min > 0.0 && self.eta_max <= 1.0 && self.eta_min <= self.eta_max) {
            return Err(Error::Config {
                field: "search.eta".into(),
                detail: format!("bad eta range [{}, {}]", self.eta_min, self.eta_max),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuneCandidate {
    pub depth: usize,
    pub eta: f64,
    pub mean_auc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuneResult {
    pub depth: usize,
    pub eta: f64,
    pub candidates: Vec<TuneCandidate>,
}

/// Random search over (depth, eta) with `folds`-fold cross-validated AUC.
///
/// All candidates train at `lambda_fair = 0`; other fields of `base` are
/// carried through unchanged. Ties keep the earliest sampled candidate.
pub fn tune(
    data: &Dataset,
    space: &SearchSpace,
    budget: usize,
    folds: usize,
    base: &BoostParams,
    seed: u64,
) -> Result<TuneResult> {
    space.validate()?;
    if budget < 1 {
        return Err(Error::Config {
            field: "tune_budget".into(),
            detail: "must be at least 1".into(),
        });
    }
    if folds < 2 || data.n_rows() < folds {
        return Err(Error::Config {
            field: "folds".into(),
            detail: format!("need 2 <= folds <= n_rows, got {folds}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xF01D));
    let n = data.n_rows();
    let mut perm: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    perm.shuffle(&mut rng);

    let mut candidates = Vec::with_capacity(budget);
    let mut best: Option<TuneCandidate> = None;
    for c in 0..budget {
        let depth = rng.random_range(space.depth_min..=space.depth_max);
        let eta = (space.eta_min.ln()
            + rng.random::<f64>() * (space.eta_max.ln() - space.eta_min.ln()))
        .exp();
        let mut total = 0.0;
        for k in 0..folds {
            let lo = k * n / folds;
            let hi = (k + 1) * n / folds;
            let valid_idx = &perm[lo..hi];
            let train_idx: Vec<usize> = perm[..lo].iter().chain(&perm[hi..]).copied().collect();
            let params = BoostParams {
                depth,
                eta,
                lambda_fair: 0.0,
                seed: mix_seed(seed, (c * folds + k) as u64),
                ..base.clone()
            };
            let model = train(&data.select_rows(&train_idx), &params)?;
            let valid = data.select_rows(valid_idx);
            let probs = crate::boost::predict_proba(&model, &valid)?;
            total += auc(&probs, valid.target())?;
        }
        let cand = TuneCandidate {
            depth,
            eta,
            mean_auc: total / folds as f64,
        };
        if best.as_ref().map_or(true, |b| cand.mean_auc > b.mean_auc) {
            best = Some(cand.clone());
        }
        candidates.push(cand);
    }
    let best = best.expect("budget >= 1");
    Ok(TuneResult {
        depth: best.depth,
        eta: best.eta,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Column, ColumnKind, Dataset};

    fn separable(n: usize) -> Dataset {
        // y = 1 iff x > 0.5, plus a protected attribute with no effect
        let x: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect();
        let a: Vec<f64> = (0..n).map(|i| ((i * 7) % 2) as f64).collect();
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

    fn quick_base() -> BoostParams {
        BoostParams {
            rounds: 15,
            ..BoostParams::default()
        }
    }

    #[test]
    fn budget_one_returns_the_single_pair() {
        let ds = separable(120);
        let r = tune(&ds, &SearchSpace::default(), 1, 3, &quick_base(), 5).unwrap();
        assert_eq!(r.candidates.len(), 1);
        assert_eq!((r.depth, r.eta), (r.candidates[0].depth, r.candidates[0].eta));
    }

    #[test]
    fn deterministic_under_seed() {
        let ds = separable(120);
        let a = tune(&ds, &SearchSpace::default(), 4, 3, &quick_base(), 9).unwrap();
        let b = tune(&ds, &SearchSpace::default(), 4, 3, &quick_base(), 9).unwrap();
        assert_eq!((a.depth, a.eta), (b.depth, b.eta));
        assert_eq!(a.candidates.len(), b.candidates.len());
        for (x, y) in a.candidates.iter().zip(&b.candidates) {
            assert_eq!((x.depth, x.eta, x.mean_auc), (y.depth, y.eta, y.mean_auc));
        }
    }

    #[test]
    fn winner_dominates_sampled_set() {
        let ds = separable(150);
        let r = tune(&ds, &SearchSpace::default(), 5, 3, &quick_base(), 3).unwrap();
        let winner = r
            .candidates
            .iter()
            .find(|c| c.depth == r.depth && c.eta == r.eta)
            .expect("winner is a candidate");
        for c in &r.candidates {
            assert!(winner.mean_auc >= c.mean_auc);
        }
        // the problem is separable, so the winner should rank well
        assert!(winner.mean_auc > 0.9, "mean_auc = {}", winner.mean_auc);
    }

    #[test]
    fn zero_budget_rejected() {
        let ds = separable(60);
        let err = tune(&ds, &SearchSpace::default(), 0, 3, &quick_base(), 1).unwrap_err();
        assert_eq!(err.kind(), "config");
    }

    #[test]
    fn sampled_values_stay_in_space() {
        let ds = separable(90);
        let space = SearchSpace { depth_min: 3, depth_max: 5, eta_min: 0.05, eta_max: 0.2 };
        let r = tune(&ds, &space, 6, 3, &quick_base(), 11).unwrap();
        for c in &r.candidates {
            assert!((3..=5).contains(&c.depth));
            assert!((0.05..=0.2).contains(&c.eta));
        }
    }
}
