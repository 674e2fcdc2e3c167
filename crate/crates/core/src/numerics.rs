//! Vector helpers shared by the strategies and the backtester.

use std::ops::Deref;

use crate::error::{Error, Result};

/// Tolerance on the weight sum accepted by [`Portfolio::new`].
pub const SUM_TOLERANCE: f64 = 1e-9;
/// Most negative weight accepted by [`Portfolio::new`].
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// Nonnegative wealth fractions summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio(Vec<f64>);

impl Portfolio {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter(
                "portfolio needs at least one asset".into(),
            ));
        }
        check_finite(&weights)?;
        if let Some((j, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, &w)| w < -NEGATIVE_TOLERANCE)
        {
            return Err(Error::InvalidParameter(format!(
                "negative weight {w} for asset {j}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(Portfolio(weights))
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter(
                "portfolio needs at least one asset".into(),
            ));
        }
        Ok(Portfolio(vec![1.0 / m as f64; m]))
    }

    /// Weight `1/k` on each of the `k` listed assets.
    pub fn uniform_over(support: &[usize], m: usize) -> Result<Self> {
        if support.is_empty() || support.iter().any(|&j| j >= m) {
            return Err(Error::InvalidParameter(format!(
                "invalid support {support:?} for {m} assets"
            )));
        }
        let w = 1.0 / support.len() as f64;
        let mut weights = vec![0.0; m];
        for &j in support {
            weights[j] = w;
        }
        Ok(Portfolio(weights))
    }

    /// Skips validation; callers guarantee the simplex invariants.
    pub(crate) fn from_vec_unchecked(weights: Vec<f64>) -> Self {
        debug_assert!(Portfolio::new(weights.clone()).is_ok(), "{weights:?}");
        Portfolio(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Portfolio {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Forecast of the next day's price relatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedRelative(Vec<f64>);

impl PredictedRelative {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        if let Some(j) = values.iter().position(|&v| v <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "predicted relative {} for asset {j} is not positive",
                values[j]
            )));
        }
        Ok(PredictedRelative(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for PredictedRelative {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Euclidean projection onto `{b : b >= 0, sum(b) = 1}`.
///
/// Sorts descending, takes the largest `k` with
/// `u_k - (u_1 + ... + u_k - 1) / k > 0`, then shifts by that threshold and
/// clips at zero.
pub fn project_simplex(v: &[f64]) -> Result<Portfolio> {
    if v.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot project an empty vector".into(),
        ));
    }
    check_finite(v)?;

    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = sorted[0] - 1.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    Ok(Portfolio(v.iter().map(|&x| (x - theta).max(0.0)).collect()))
}

/// Mean of the last `min(w, rows.len())` rows.
pub fn sma<R: AsRef<[f64]>>(rows: &[R], w: usize) -> Result<Vec<f64>> {
    if w == 0 {
        return Err(Error::InvalidParameter("window must be at least 1".into()));
    }
    let last = rows
        .last()
        .ok_or_else(|| Error::InvalidParameter("sma of an empty history".into()))?
        .as_ref();
    let used = &rows[rows.len().saturating_sub(w)..];
    let mut sum = vec![0.0; last.len()];
    for row in used {
        let row = row.as_ref();
        if row.len() != sum.len() {
            return Err(Error::LengthMismatch {
                left: sum.len(),
                right: row.len(),
            });
        }
        for (s, p) in sum.iter_mut().zip(row) {
            *s += p;
        }
    }
    let count = used.len() as f64;
    Ok(sum.into_iter().map(|s| s / count).collect())
}

/// `sma(rows, w) / p_t`, elementwise, where `p_t` is the last row.
pub fn predicted_relative_sma<R: AsRef<[f64]>>(rows: &[R], w: usize) -> Result<PredictedRelative> {
    let avg = sma(rows, w)?;
    let current = rows.last().expect("sma checked non-empty").as_ref();
    PredictedRelative::new(avg.iter().zip(current).map(|(a, p)| a / p).collect())
}

/// `1 / x_t`, elementwise.
pub fn predicted_relative_inverse(x: &[f64]) -> Result<PredictedRelative> {
    check_positive_row(x)?;
    PredictedRelative::new(x.iter().map(|v| 1.0 / v).collect())
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

pub(crate) fn check_positive_row(x: &[f64]) -> Result<()> {
    check_finite(x)?;
    match x.iter().position(|&v| v <= 0.0) {
        Some(j) => Err(Error::InvalidParameter(format!(
            "relative {} for asset {j} is not positive",
            x[j]
        ))),
        None => Ok(()),
    }
}
