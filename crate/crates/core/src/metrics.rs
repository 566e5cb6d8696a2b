//! Group fairness metrics: disparity, the DP/FPR/FNR/PPV panel, AUC, and
//! bootstrap confidence intervals.
//!
//! All "fulfillment" values use the convention `1 - |group gap|`, so 1 means
//! the two protected-attribute groups are treated identically and lower
//! values mean larger gaps. Rates whose defining cell count is zero (e.g.
//! PPV when a group receives no positive predictions) are reported as
//! absent rather than failing the whole panel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seeding::mix_seed;
use crate::stats::{midranks, quantile_sorted};

/// Absolute difference of mean predicted probability between groups.
pub fn disparity(probs: &[f64], groups: &[f64]) -> Result<f64> {
    Ok(signed_disparity(probs, groups)?.abs())
}

/// Mean(prob | group 1) − mean(prob | group 0); sign kept for callers that
/// need the direction (the training penalty does).
pub fn signed_disparity(probs: &[f64], groups: &[f64]) -> Result<f64> {
    assert_eq!(probs.len(), groups.len());
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
    if n1 == 0 {
        return Err(Error::EmptyGroup("1 (protected)".into()));
    }
    if n0 == 0 {
        return Err(Error::EmptyGroup("0 (baseline)".into()));
    }
    Ok(s1 / n1 as f64 - s0 / n0 as f64)
}

/// Rank-based AUC (Mann-Whitney with midranks; ties count 1/2).
///
/// Exactly equals the O(n²) pair count `(wins + 0.5 * ties) / (pos * neg)`:
/// both reduce to the same dyadic rational numerator before one division.
pub fn auc(probs: &[f64], labels: &[f64]) -> Result<f64> {
    assert_eq!(probs.len(), labels.len());
    let n_pos = labels.iter().filter(|&&y| y == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let ranks = midranks(probs);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 1.0)
        .map(|(r, _)| r)
        .sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Percentile-bootstrap confidence interval for AUC over row resamples.
///
/// Replicates where the resample is single-class are skipped. The interval
/// is widened if necessary to contain the point estimate.
pub fn auc_ci(
    probs: &[f64],
    labels: &[f64],
    level: f64,
    replicates: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config {
            field: "confidence_level".into(),
            detail: format!("must be in (0,1), got {level}"),
        });
    }
    let point = auc(probs, labels)?;
    let n = probs.len();
    let mut stats = Vec::with_capacity(replicates);
    let mut bp = Vec::with_capacity(n);
    let mut bl = Vec::with_capacity(n);
    for b in 0..replicates {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, b as u64));
        bp.clear();
        bl.clear();
        for _ in 0..n {
            let i = rng.random_range(0..n);
            bp.push(probs[i]);
            bl.push(labels[i]);
        }
        if let Ok(a) = auc(&bp, &bl) {
            stats.push(a);
        }
    }
    if stats.is_empty() {
        // pathological tiny inputs: fall back to the degenerate interval
        return Ok((point, point));
    }
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let alpha = 1.0 - level;
    let lo = quantile_sorted(&stats, alpha / 2.0).min(point);
    let hi = quantile_sorted(&stats, 1.0 - alpha / 2.0).max(point);
    Ok((lo, hi))
}

/// |P(Y=1 | group 1) − P(Y=1 | group 0)| on a dataset's target column.
pub fn base_rate_gap(ds: &Dataset) -> Result<f64> {
    disparity(ds.target(), ds.pa())
}

/// Knobs for [`fairness_panel`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PanelOptions {
    pub threshold: f64,
    pub bootstrap_replicates: usize,
    pub confidence_level: f64,
    pub seed: u64,
}

impl Default for PanelOptions {
    fn default() -> Self {
        PanelOptions {
            threshold: 0.5,
            bootstrap_replicates: 1000,
            confidence_level: 0.95,
            seed: 0,
        }
    }
}

/// Group-fairness fulfillment panel plus AUC with bootstrap interval.
///
/// `None` entries were undefined on this data (a zero cell count); the
/// `undefined` list says which and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    /// 1 − |positive-prediction-rate gap| at the threshold.
    pub dp: f64,
    /// 1 − |false-positive-rate gap|.
    pub fpr_balance: Option<f64>,
    /// 1 − |false-negative-rate gap|.
    pub fnr_balance: Option<f64>,
    /// 1 − |positive-predictive-value gap|.
    pub ppv_parity: Option<f64>,
    pub auc: f64,
    pub auc_ci: (f64, f64),
    pub base_rate_protected: f64,
    pub base_rate_baseline: f64,
    pub threshold: f64,
    /// Names of entries above that were undefined, with the reason.
    pub undefined: Vec<String>,
}

impl FairnessReport {
    /// CSV header matching [`FairnessReport::csv_row`].
    pub fn csv_header() -> &'static str {
        "dp,fpr_balance,fnr_balance,ppv_parity,auc,ci_lo,ci_hi"
    }

    /// One CSV row; undefined entries render as empty fields.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.dp,
            opt(self.fpr_balance),
            opt(self.fnr_balance),
            opt(self.ppv_parity),
            self.auc,
            self.auc_ci.0,
            self.auc_ci.1
        )
    }
}

#[derive(Default, Clone, Copy)]
struct Confusion {
    tp: usize,
    fp: usize,
    tn: usize,
    fn_: usize,
}

impl Confusion {
    fn pos_rate(&self) -> f64 {
        let n = self.tp + self.fp + self.tn + self.fn_;
        (self.tp + self.fp) as f64 / n as f64
    }
    fn fpr(&self) -> Option<f64> {
        let neg = self.fp + self.tn;
        (neg > 0).then(|| self.fp as f64 / neg as f64)
    }
    fn fnr(&self) -> Option<f64> {
        let pos = self.tp + self.fn_;
        (pos > 0).then(|| self.fn_ as f64 / pos as f64)
    }
    fn ppv(&self) -> Option<f64> {
        let pred_pos = self.tp + self.fp;
        (pred_pos > 0).then(|| self.tp as f64 / pred_pos as f64)
    }
    fn base_rate(&self) -> f64 {
        let n = self.tp + self.fp + self.tn + self.fn_;
        (self.tp + self.fn_) as f64 / n as f64
    }
}

/// Compute the full fairness panel from one shared confusion tabulation.
pub fn fairness_panel(
    probs: &[f64],
    labels: &[f64],
    groups: &[f64],
    opts: &PanelOptions,
) -> Result<FairnessReport> {
    assert_eq!(probs.len(), labels.len());
    assert_eq!(probs.len(), groups.len());
    let mut cm = [Confusion::default(), Confusion::default()]; // [baseline, protected]
    for i in 0..probs.len() {
        let g = if groups[i] == 1.0 { 1 } else { 0 };
        let pred = probs[i] >= opts.threshold;
        match (pred, labels[i] == 1.0) {
            (true, true) => cm[g].tp += 1,
            (true, false) => cm[g].fp += 1,
            (false, true) => cm[g].fn_ += 1,
            (false, false) => cm[g].tn += 1,
        }
    }
    let count = |c: &Confusion| c.tp + c.fp + c.tn + c.fn_;
    if count(&cm[1]) == 0 {
        return Err(Error::EmptyGroup("1 (protected)".into()));
    }
    if count(&cm[0]) == 0 {
        return Err(Error::EmptyGroup("0 (baseline)".into()));
    }

    let mut undefined = Vec::new();
    let mut gap = |name: &str, a: Option<f64>, b: Option<f64>| -> Option<f64> {
        match (a, b) {
            (Some(x), Some(y)) => Some(1.0 - (x - y).abs()),
            _ => {
                let side = if a.is_none() { "protected" } else { "baseline" };
                undefined.push(format!("{name}: zero cell count in {side} group"));
                None
            }
        }
    };
    let dp = 1.0 - (cm[1].pos_rate() - cm[0].pos_rate()).abs();
    let fpr_balance = gap("fpr_balance", cm[1].fpr(), cm[0].fpr());
    let fnr_balance = gap("fnr_balance", cm[1].fnr(), cm[0].fnr());
    let ppv_parity = gap("ppv_parity", cm[1].ppv(), cm[0].ppv());

    let point = auc(probs, labels)?;
    let ci = auc_ci(
        probs,
        labels,
        opts.confidence_level,
        opts.bootstrap_replicates,
        opts.seed,
    )?;
    Ok(FairnessReport {
        dp,
        fpr_balance,
        fnr_balance,
        ppv_parity,
        auc: point,
        auc_ci: ci,
        base_rate_protected: cm[1].base_rate(),
        base_rate_baseline: cm[0].base_rate(),
        threshold: opts.threshold,
        undefined,
    })
}
