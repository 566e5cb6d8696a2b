//! Small numeric helpers shared across the crate.
//!
//! Nothing here is clever: plain means, the linear-interpolation sample
//! quantile, midranks, rank correlation, a two-sample KS statistic, and the
//! logistic pair. They are centralized so that every module agrees on the
//! exact same conventions (ties via midranks, quantiles via the common
//! `(n-1)p` interpolation rule).

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n-1 denominator); 0 when fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Sample quantile with linear interpolation on an already sorted slice.
///
/// Uses the `h = (n-1)p` interpolation rule, so `p = 0` and `p = 1` return
/// the extremes and intermediate values interpolate between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let p = p.clamp(0.0, 1.0);
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = h - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// 1-based midranks: tied values all receive the average of their ranks.
pub fn midranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("NaN in midranks"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share the block average
        let r = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; 0 when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation with midranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    pearson(&midranks(xs), &midranks(ys))
}

/// Two-sample Kolmogorov-Smirnov statistic: sup |F1 - F2|.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "ks of empty sample");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Large-sample KS critical value `c(alpha) * sqrt((n1+n2)/(n1*n2))`.
///
/// `c(alpha) = sqrt(-ln(alpha/2) / 2)`, e.g. 1.6276 at alpha = 0.01.
pub fn ks_critical(alpha: f64, n1: usize, n2: usize) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0);
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * (((n1 + n2) as f64) / ((n1 * n2) as f64)).sqrt()
}

/// Logistic function 1 / (1 + e^-x), stable for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`sigmoid`]; the argument is clamped away from {0, 1}.
pub fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-9, 1.0 - 1e-9);
    (p / (1.0 - p)).ln()
}

/// Mid-distribution empirical probability rank of `x` within `sorted`.
///
/// Returns `(#less + (#equal + 1)/2) / (n + 1)`, which is strictly inside
/// (0, 1), strictly increasing in `x` across distinct values, and assigns
/// tied values the same rank.
pub fn ecdf_mid_rank(sorted: &[f64], x: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "rank within empty sample");
    let less = sorted.partition_point(|v| *v < x);
    let le = sorted.partition_point(|v| *v <= x);
    let eq = le - less;
    (less as f64 + (eq as f64 + 1.0) / 2.0) / (n as f64 + 1.0)
}

/// Value at mid-rank `u` among `sorted` values: the inverse of
/// [`ecdf_mid_rank`], interpolating linearly between order statistics and
/// clamping to the extremes. `rank_to_value(s, ecdf_mid_rank(s, v)) == v`
/// whenever `v` occurs in `s` without ties.
pub fn rank_to_value(sorted: &[f64], u: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty sample");
    let h = (u * (n + 1) as f64 - 1.0).clamp(0.0, (n - 1) as f64);
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= n {
        sorted[lo]
    } else {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    }
}
