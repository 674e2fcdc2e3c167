//! The eight portfolio-selection rules and the state machine that drives them.
//!
//! Every rule is available as a pure function of the previous portfolio and
//! the newly revealed data, and through [`StrategyState::advance`], which
//! keeps the bookkeeping (drifted holdings, recent prices) between days.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{
    check_positive_row, dot, mean, predicted_relative_inverse, predicted_relative_sma,
    project_simplex, sma, Portfolio, PredictedRelative,
};

/// Absolute tolerance under which two relatives count as tied in SMR/SMAR.
pub const TIE_TOLERANCE: f64 = 1e-12;
/// Below this squared deviation the PAMR/OLMAR step size is set to zero.
pub const DEGENERATE_VARIANCE: f64 = 1e-15;
/// Moving-average window of TCO-2.
pub const TCO2_WINDOW: usize = 5;

const RESCALE_ABOVE: f64 = 1e100;
const RESCALE_BELOW: f64 = 1e-100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    BahU,
    CrpU,
    Smr,
    Smar,
    Pamr,
    Olmar,
    Tco1,
    Tco2,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 8] = [
        StrategyKind::BahU,
        StrategyKind::CrpU,
        StrategyKind::Smr,
        StrategyKind::Smar,
        StrategyKind::Pamr,
        StrategyKind::Olmar,
        StrategyKind::Tco1,
        StrategyKind::Tco2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::BahU => "BAH_U",
            StrategyKind::CrpU => "CRP_U",
            StrategyKind::Smr => "SMR",
            StrategyKind::Smar => "SMAR",
            StrategyKind::Pamr => "PAMR",
            StrategyKind::Olmar => "OLMAR",
            StrategyKind::Tco1 => "TCO-1",
            StrategyKind::Tco2 => "TCO-2",
        }
    }

    /// Whether the portfolio sequence depends on the cost rate (through the
    /// derived TCO threshold).
    pub fn is_cost_aware(self) -> bool {
        matches!(self, StrategyKind::Tco1 | StrategyKind::Tco2)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_'))
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "bah" | "bahu" => StrategyKind::BahU,
            "crp" | "crpu" => StrategyKind::CrpU,
            "smr" => StrategyKind::Smr,
            "smar" => StrategyKind::Smar,
            "pamr" => StrategyKind::Pamr,
            "olmar" => StrategyKind::Olmar,
            "tco1" => StrategyKind::Tco1,
            "tco2" => StrategyKind::Tco2,
            _ => {
                return Err(Error::InvalidParameter(format!("unknown strategy {s:?}")));
            }
        })
    }
}

/// Strategy identifier plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    /// PAMR return cap or OLMAR return target.
    pub epsilon: f64,
    /// Moving-average window for SMAR and OLMAR.
    pub window: usize,
    /// TCO step size.
    pub eta: f64,
    /// TCO threshold. `None` derives `10 * eta * gamma` from the cost rate.
    pub lambda: Option<f64>,
    /// TCO-2 only: divide the moving average by today's relatives instead of
    /// today's prices.
    pub tco2_divide_by_relatives: bool,
}

impl StrategySpec {
    pub fn new(kind: StrategyKind) -> Self {
        StrategySpec {
            kind,
            epsilon: match kind {
                StrategyKind::Olmar => 10.0,
                _ => 0.5,
            },
            window: 5,
            eta: 10.0,
            lambda: None,
            tco2_divide_by_relatives: false,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if matches!(self.kind, StrategyKind::Pamr | StrategyKind::Olmar)
            && !(self.epsilon > 0.0 && self.epsilon.is_finite())
        {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if let Some(lambda) = self.lambda {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return bad(format!("lambda must be nonnegative, got {lambda}"));
            }
        }
        Ok(())
    }

    /// The TCO threshold in force at cost rate `gamma`.
    pub fn resolved_lambda(&self, gamma: f64) -> f64 {
        self.lambda.unwrap_or(10.0 * self.eta * gamma)
    }

    /// Number of recent price rows the strategy needs.
    fn history_len(&self) -> usize {
        match self.kind {
            StrategyKind::Smar | StrategyKind::Olmar => self.window,
            StrategyKind::Tco2 => TCO2_WINDOW,
            _ => 1,
        }
    }
}

impl Default for StrategySpec {
    fn default() -> Self {
        StrategySpec::new(StrategyKind::CrpU)
    }
}

pub fn initial_portfolio(m: usize) -> Result<Portfolio> {
    Portfolio::uniform(m)
}

/// Holdings after one day of drift: `(b * x) / (b . x)`.
pub fn price_adjusted(b: &Portfolio, x: &[f64]) -> Result<Portfolio> {
    check_row(b, x)?;
    let growth = dot(b, x);
    if growth <= 0.0 {
        return Err(Error::InvalidParameter("portfolio return is zero".into()));
    }
    Ok(Portfolio::from_vec_unchecked(
        b.iter().zip(x).map(|(w, r)| w * r / growth).collect(),
    ))
}

/// Uniform weight on the assets that did worst yesterday.
pub fn smr_portfolio(x: &[f64]) -> Result<Portfolio> {
    let worst = x.iter().copied().fold(f64::INFINITY, f64::min);
    let support: Vec<usize> = (0..x.len())
        .filter(|&j| x[j] - worst <= TIE_TOLERANCE)
        .collect();
    Portfolio::uniform_over(&support, x.len())
}

/// Uniform weight on the assets with the highest predicted relative.
pub fn smar_portfolio(predicted: &PredictedRelative) -> Result<Portfolio> {
    let best = predicted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let support: Vec<usize> = (0..predicted.len())
        .filter(|&j| best - predicted[j] <= TIE_TOLERANCE)
        .collect();
    Portfolio::uniform_over(&support, predicted.len())
}

/// Passive-aggressive step towards `b . x <= epsilon`.
pub fn pamr_update(b: &Portfolio, x: &[f64], epsilon: f64) -> Result<Portfolio> {
    check_row(b, x)?;
    let loss = dot(b, x) - epsilon;
    if loss <= 0.0 {
        return Ok(b.clone());
    }
    reversion_step(b, x, -loss)
}

/// Passive-aggressive step towards `b . x_pred >= epsilon`.
pub fn olmar_update(
    b: &Portfolio,
    predicted: &PredictedRelative,
    epsilon: f64,
) -> Result<Portfolio> {
    check_row(b, predicted)?;
    let shortfall = epsilon - dot(b, predicted);
    if shortfall <= 0.0 {
        return Ok(b.clone());
    }
    reversion_step(b, predicted, shortfall)
}

/// `project(b + (gap / ||d - mean d||^2) (d - mean d))`, where `gap` carries
/// the sign of the move.
fn reversion_step(b: &Portfolio, d: &[f64], gap: f64) -> Result<Portfolio> {
    let centre = mean(d);
    let deviation: Vec<f64> = d.iter().map(|v| v - centre).collect();
    let spread = dot(&deviation, &deviation);
    if spread < DEGENERATE_VARIANCE {
        return Ok(b.clone());
    }
    let tau = gap / spread;
    let moved: Vec<f64> = b.iter().zip(&deviation).map(|(w, e)| w + tau * e).collect();
    project_simplex(&moved)
}

/// The thresholded TCO target before normalisation: each weight of the
/// drifted portfolio `adjusted` moves by the soft-thresholded component of
/// `eta * (u - mean(u))`, with `u = x_pred / (adjusted . x_pred)`.
pub fn tco_target(
    adjusted: &Portfolio,
    predicted: &PredictedRelative,
    eta: f64,
    lambda: f64,
) -> Result<Vec<f64>> {
    check_row(adjusted, predicted)?;
    let expected = dot(adjusted, predicted);
    let u: Vec<f64> = predicted.iter().map(|v| v / expected).collect();
    let u_mean = mean(&u);
    Ok(adjusted
        .iter()
        .zip(&u)
        .map(|(w, ui)| {
            let push = eta * (ui - u_mean);
            let sign = if push >= 0.0 { 1.0 } else { -1.0 };
            w + sign * (push.abs() - lambda).max(0.0)
        })
        .collect())
}

/// One TCO step from the target `b` held through the day with relatives `x`.
pub fn tco_update(
    b: &Portfolio,
    x: &[f64],
    predicted: &PredictedRelative,
    eta: f64,
    lambda: f64,
) -> Result<Portfolio> {
    let adjusted = price_adjusted(b, x)?;
    tco_from_adjusted(adjusted, predicted, eta, lambda)
}

fn tco_from_adjusted(
    adjusted: Portfolio,
    predicted: &PredictedRelative,
    eta: f64,
    lambda: f64,
) -> Result<Portfolio> {
    let target = tco_target(&adjusted, predicted, eta, lambda)?;
    if target == adjusted.weights() {
        return Ok(adjusted);
    }
    project_simplex(&target)
}

fn check_row(b: &[f64], x: &[f64]) -> Result<()> {
    if b.len() != x.len() {
        return Err(Error::LengthMismatch {
            left: b.len(),
            right: x.len(),
        });
    }
    check_positive_row(x)
}

/// Day-by-day state of one strategy on one market.
///
/// [`portfolio`](Self::portfolio) is the target to hold for the upcoming
/// day. [`advance`](Self::advance) reveals that day's relatives and moves to
/// the next target, so a target only ever depends on data already revealed.
#[derive(Debug, Clone)]
pub struct StrategyState {
    spec: StrategySpec,
    lambda: f64,
    current: Portfolio,
    adjusted: Portfolio,
    prices: VecDeque<Vec<f64>>,
    capacity: usize,
    day: usize,
}

impl StrategyState {
    /// Starts from the uniform portfolio with unit reference prices.
    /// `gamma` is the cost rate used to derive the TCO threshold.
    pub fn new(spec: StrategySpec, m: usize, gamma: f64) -> Result<Self> {
        StrategyState::with_initial_prices(spec, &vec![1.0; m], gamma)
    }

    /// Starts from the uniform portfolio with `prices` as the last known
    /// closing prices.
    pub fn with_initial_prices(spec: StrategySpec, prices: &[f64], gamma: f64) -> Result<Self> {
        spec.validate()?;
        check_positive_row(prices)?;
        let current = initial_portfolio(prices.len())?;
        let capacity = spec.history_len().max(1);
        let mut window = VecDeque::with_capacity(capacity + 1);
        window.push_back(prices.to_vec());
        Ok(StrategyState {
            lambda: spec.resolved_lambda(gamma),
            spec,
            adjusted: current.clone(),
            current,
            prices: window,
            capacity,
            day: 0,
        })
    }

    pub fn spec(&self) -> &StrategySpec {
        &self.spec
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Target portfolio for the next trading day.
    pub fn portfolio(&self) -> &Portfolio {
        &self.current
    }

    /// Holdings of the previous target after the last revealed day's drift.
    pub fn adjusted_portfolio(&self) -> &Portfolio {
        &self.adjusted
    }

    /// Number of relatives revealed so far.
    pub fn day(&self) -> usize {
        self.day
    }

    pub fn price_window(&self) -> impl Iterator<Item = &[f64]> {
        self.prices.iter().map(Vec::as_slice)
    }

    /// Reveals the relatives `x` of the day just traded and returns the
    /// target for the following day.
    pub fn advance(&mut self, x: &[f64]) -> Result<&Portfolio> {
        check_row(&self.current, x)?;
        let adjusted = price_adjusted(&self.current, x)?;
        self.push_prices(x);

        let next = match self.spec.kind {
            StrategyKind::BahU => adjusted.clone(),
            StrategyKind::CrpU => Portfolio::uniform(x.len())?,
            StrategyKind::Smr => smr_portfolio(x)?,
            StrategyKind::Smar => smar_portfolio(&self.sma_prediction(self.spec.window)?)?,
            StrategyKind::Pamr => pamr_update(&self.current, x, self.spec.epsilon)?,
            StrategyKind::Olmar => {
                let predicted = self.sma_prediction(self.spec.window)?;
                olmar_update(&self.current, &predicted, self.spec.epsilon)?
            }
            StrategyKind::Tco1 => tco_from_adjusted(
                adjusted.clone(),
                &predicted_relative_inverse(x)?,
                self.spec.eta,
                self.lambda,
            )?,
            StrategyKind::Tco2 => {
                let predicted = if self.spec.tco2_divide_by_relatives {
                    let avg = sma(self.prices.make_contiguous(), TCO2_WINDOW)?;
                    PredictedRelative::new(avg.iter().zip(x).map(|(a, r)| a / r).collect())?
                } else {
                    self.sma_prediction(TCO2_WINDOW)?
                };
                tco_from_adjusted(adjusted.clone(), &predicted, self.spec.eta, self.lambda)?
            }
        };

        self.adjusted = adjusted;
        self.current = next;
        self.day += 1;
        Ok(&self.current)
    }

    fn sma_prediction(&mut self, w: usize) -> Result<PredictedRelative> {
        predicted_relative_sma(self.prices.make_contiguous(), w)
    }

    fn push_prices(&mut self, x: &[f64]) {
        let last = self.prices.back().expect("window never empty");
        let mut next: Vec<f64> = last.iter().zip(x).map(|(p, r)| p * r).collect();
        if self.prices.len() == self.capacity {
            self.prices.pop_front();
        }
        // Moving-average ratios are per-asset scale free, so a column can be
        // renormalised whenever it drifts towards overflow.
        for (j, p) in next.iter_mut().enumerate() {
            if *p > RESCALE_ABOVE || *p < RESCALE_BELOW {
                let scale = *p;
                for row in self.prices.iter_mut() {
                    row[j] /= scale;
                }
                *p = 1.0;
            }
        }
        self.prices.push_back(next);
    }
}
