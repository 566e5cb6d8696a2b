//! Minimal linear and logistic regression for the per-group location models.
//!
//! The warping transform needs nothing fancier than ordinary least squares
//! and an IRLS logistic fit over a handful of parent columns, so this module
//! hand-rolls both on top of a small dense Gaussian-elimination solver
//! rather than pulling in a linear-algebra stack. Designs are tiny (k ≤ 10);
//! none of this is meant for wide problems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::sigmoid;

/// Solve `A x = b` for a small dense system via Gaussian elimination with
/// partial pivoting. Returns None when the matrix is numerically singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..k {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let mut s = b[row];
        for c in row + 1..k {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Accumulate X'X and X'z for a design of `cols` feature columns plus an
/// implicit leading intercept, restricted to `rows`, with optional per-row
/// weights.
fn normal_equations(
    cols: &[&[f64]],
    rows: &[usize],
    z: impl Fn(usize) -> f64,
    w: impl Fn(usize) -> f64,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = cols.len() + 1;
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xtz = vec![0.0; k];
    let mut x = vec![0.0; k];
    for &i in rows {
        x[0] = 1.0;
        for (j, c) in cols.iter().enumerate() {
            x[j + 1] = c[i];
        }
        let wi = w(i);
        let zi = z(i);
        for r in 0..k {
            let wx = wi * x[r];
            for c in r..k {
                xtx[r][c] += wx * x[c];
            }
            xtz[r] += wx * zi;
        }
    }
    for r in 0..k {
        for c in 0..r {
            xtx[r][c] = xtx[c][r];
        }
    }
    (xtx, xtz)
}

/// Linear model `y ≈ b0 + Σ b_j x_j` fit by least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct LinearModel {
    pub coefs: Vec<f64>, // [intercept, per-feature...]
}

impl LinearModel {
    /// Least-squares fit of `y` on `cols`, restricted to `rows`.
    ///
    /// A whisper of ridge keeps collinear designs solvable; it is far below
    /// estimation noise at any realistic sample size.
    pub fn fit(cols: &[&[f64]], y: &[f64], rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DegenerateGroup("no rows to fit on".into()));
        }
        let (mut xtx, xtz) = normal_equations(cols, rows, |i| y[i], |_| 1.0);
        let k = xtx.len();
        let coefs = loop {
            if let Some(c) = solve_dense(xtx.clone(), xtz.clone()) {
                if c.iter().all(|v| v.is_finite()) {
                    break c;
                }
            }
            let scale = (0..k).map(|r| xtx[r][r]).sum::<f64>().max(1.0) / k as f64;
            for r in 0..k {
                xtx[r][r] += 1e-8 * scale + 1e-12;
            }
            if xtx[0][0].is_infinite() {
                return Err(Error::DegenerateGroup("singular design".into()));
            }
        };
        Ok(LinearModel { coefs })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len() + 1, self.coefs.len());
        self.coefs[0]
            + self
                .coefs[1..]
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }
}

/// Logistic model fit by iteratively reweighted least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct LogisticModel {
    pub coefs: Vec<f64>, // [intercept, per-feature...]
}

impl LogisticModel {
    /// IRLS fit of binary `y` on `cols`, restricted to `rows`.
    ///
    /// `y` must contain both classes within `rows` (callers check); under
    /// quasi-separation the light ridge keeps coefficients finite.
    pub fn fit(cols: &[&[f64]], y: &[f64], rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DegenerateGroup("no rows to fit on".into()));
        }
        let k = cols.len() + 1;
        let mut beta = vec![0.0; k];
        let mut x = vec![0.0; k];
        for _ in 0..50 {
            // working response z = eta + (y - p)/w with weights w = p(1-p)
            let eta_of = |i: usize, beta: &[f64]| {
                let mut e = beta[0];
                for (j, c) in cols.iter().enumerate() {
                    e += beta[j + 1] * c[i];
                }
                e
            };
            let mut xtwx = vec![vec![0.0; k]; k];
            let mut xtwz = vec![0.0; k];
            for &i in rows {
                let eta = eta_of(i, &beta);
                let p = sigmoid(eta);
                let w = (p * (1.0 - p)).max(1e-10);
                let z = eta + (y[i] - p) / w;
                x[0] = 1.0;
                for (j, c) in cols.iter().enumerate() {
                    x[j + 1] = c[i];
                }
                for r in 0..k {
                    let wx = w * x[r];
                    for c2 in r..k {
                        xtwx[r][c2] += wx * x[c2];
                    }
                    xtwz[r] += wx * z;
                }
            }
            for r in 0..k {
                for c2 in 0..r {
                    xtwx[r][c2] = xtwx[c2][r];
                }
                xtwx[r][r] += 1e-8; // ridge against separation
            }
            let next = solve_dense(xtwx, xtwz)
                .ok_or_else(|| Error::DegenerateGroup("singular logistic design".into()))?;
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::DegenerateGroup(
                    "logistic fit diverged to non-finite coefficients".into(),
                ));
            }
            let delta: f64 = next
                .iter()
                .zip(&beta)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            beta = next;
            if delta < 1e-10 {
                break;
            }
        }
        Ok(LogisticModel { coefs: beta })
    }

    pub fn prob(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len() + 1, self.coefs.len());
        let mut e = self.coefs[0];
        for (c, v) in self.coefs[1..].iter().zip(x) {
            e += c * v;
        }
        sigmoid(e)
    }
}
