//! Index-of-difficulty formulations.
//!
//! Four variants of the Shannon index are supported:
//!
//! | variant | formula                     | adjustment           |
//! |---------|-----------------------------|----------------------|
//! | NA      | `log2(A / W + 1)`           | none                 |
//! | SA      | `log2(A / W_e + 1)`         | spatial              |
//! | TA      | `log2(A / W^t + 1)`         | temporal             |
//! | TSA     | `log2(A / W_e^t + 1)`       | temporal and spatial |
//!
//! The temporal factor `t` is the binary log of temporal efficiency, the
//! ratio of an ideal one-second movement time to the observed one. Its
//! generic form is `t = -a * log2(MT + b) + c`; `(1, 0, 0)` gives
//! `t = log2(1 s / MT)`, so `t = 1` at `MT = 0.5 s` and the temporally
//! adjusted variants coincide with the classical ones there.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{inverse_normal_cdf, normal_sf};
use crate::stats::ols_fit;

/// Multiplier turning endpoint standard deviation into effective width.
pub const SD_WIDTH_FACTOR: f64 = 4.133;

/// z-score at which the discrete-error method leaves the width unchanged.
pub const REFERENCE_Z: f64 = 2.066;

/// Error rate used when a dataset records neither endpoints nor errors.
pub const DEFAULT_ERROR_RATE: f64 = 0.03883;

/// Theoretical ideal movement time, seconds.
pub const IDEAL_MOVEMENT_TIME_S: f64 = 1.0;

/// The four difficulty models, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formulation {
    #[serde(rename = "NA")]
    Na,
    #[serde(rename = "SA")]
    Sa,
    #[serde(rename = "TA")]
    Ta,
    #[serde(rename = "TSA")]
    Tsa,
}

impl Formulation {
    pub const ALL: [Formulation; 4] = [Formulation::Na, Formulation::Sa, Formulation::Ta, Formulation::Tsa];

    pub fn is_temporal(self) -> bool {
        matches!(self, Formulation::Ta | Formulation::Tsa)
    }

    pub fn is_spatial(self) -> bool {
        matches!(self, Formulation::Sa | Formulation::Tsa)
    }

    pub fn short(self) -> &'static str {
        match self {
            Formulation::Na => "NA",
            Formulation::Sa => "SA",
            Formulation::Ta => "TA",
            Formulation::Tsa => "TSA",
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ID_{}", self.short())
    }
}

/// Constants of the generic temporal factor `t = -a * log2(MT + b) + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalFactorParams {
    pub a: f64,
    /// Time offset, seconds.
    pub b: f64,
    pub c: f64,
}

impl Default for TemporalFactorParams {
    fn default() -> Self {
        Self { a: 1.0, b: 0.0, c: 0.0 }
    }
}

impl TemporalFactorParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let params = Self { a, b, c };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::invalid(format!("temporal factor a must be > 0, got {}", self.a)));
        }
        if !self.b.is_finite() || !self.c.is_finite() {
            return Err(Error::NonFinite("temporal factor constants"));
        }
        Ok(())
    }

    pub fn is_default(&self) -> bool {
        *self == Self::default()
    }
}

/// Temporal adjustment factor for an observed movement time (seconds).
pub fn temporal_factor(mt_observed: f64, params: &TemporalFactorParams) -> Result<f64> {
    params.validate()?;
    let shifted = mt_observed + params.b;
    if !(shifted > 0.0) || !shifted.is_finite() {
        return Err(Error::invalid(format!(
            "movement time plus offset must be positive, got {mt_observed} + {}",
            params.b
        )));
    }
    Ok(-params.a * (shifted / IDEAL_MOVEMENT_TIME_S).log2() + params.c)
}

fn shannon(amplitude: f64, width: f64) -> Result<f64> {
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return Err(Error::invalid(format!("amplitude must be >= 0, got {amplitude}")));
    }
    Ok((amplitude / width + 1.0).log2())
}

fn check_width(width: f64, what: &str) -> Result<()> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::invalid(format!("{what} must be > 0, got {width}")));
    }
    Ok(())
}

fn powered_width(width: f64, t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::NonFinite("temporal factor"));
    }
    let powered = width.powf(t);
    if !(powered.is_finite() && powered > 0.0) {
        return Err(Error::degenerate(format!(
            "width^t out of range: {width}^{t} = {powered}"
        )));
    }
    Ok(powered)
}

/// Unadjusted index, `log2(A / W + 1)`.
pub fn id_na(amplitude: f64, width: f64) -> Result<f64> {
    check_width(width, "target width")?;
    shannon(amplitude, width)
}

/// Spatially adjusted index, `log2(A / W_e + 1)`.
pub fn id_sa(amplitude: f64, effective_width: f64) -> Result<f64> {
    check_width(effective_width, "effective width")?;
    shannon(amplitude, effective_width)
}

/// Temporally adjusted index, `log2(A / W^t + 1)`.
pub fn id_ta(amplitude: f64, width: f64, t: f64) -> Result<f64> {
    check_width(width, "target width")?;
    shannon(amplitude, powered_width(width, t)?)
}

/// Temporally and spatially adjusted index, `log2(A / W_e^t + 1)`.
pub fn id_tsa(amplitude: f64, effective_width: f64, t: f64) -> Result<f64> {
    check_width(effective_width, "effective width")?;
    shannon(amplitude, powered_width(effective_width, t)?)
}

/// One difficulty value for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdSample {
    pub id_bits: f64,
    pub formulation: Formulation,
    pub trial_ref: usize,
}

/// Sample standard deviation with an `n - 1` denominator.
pub(crate) fn sample_sd(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Some((ss / (n - 1.0)).sqrt())
}

/// Effective width from signed endpoint offsets: `4.133 * SD`.
pub fn effective_width_sd(axis_offsets: &[f64]) -> Result<f64> {
    if axis_offsets.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("endpoint offsets"));
    }
    let sd = sample_sd(axis_offsets)
        .ok_or_else(|| Error::degenerate(format!("need at least 2 endpoint offsets, got {}", axis_offsets.len())))?;
    if sd == 0.0 {
        return Err(Error::degenerate("endpoint offsets have zero variance"));
    }
    Ok(SD_WIDTH_FACTOR * sd)
}

fn check_error_rate(error_rate: f64) -> Result<()> {
    if !(error_rate > 0.0 && error_rate < 1.0) {
        return Err(Error::invalid(format!(
            "error rate must lie in (0, 1), got {error_rate}"
        )));
    }
    Ok(())
}

/// Two-sided z-score leaving a fraction `error_rate` of endpoints outside `±z·SD`.
pub fn z_from_error_rate(error_rate: f64) -> Result<f64> {
    check_error_rate(error_rate)?;
    Ok(-inverse_normal_cdf(error_rate / 2.0)?)
}

/// Width multiplier `2.066 / z(ε)` of the discrete-error method.
pub fn discrete_width_ratio(error_rate: f64) -> Result<f64> {
    Ok(REFERENCE_Z / z_from_error_rate(error_rate)?)
}

/// Per-trial effective widths under the discrete-error method.
pub fn effective_widths_discrete(widths: &[f64], error_rate: f64) -> Result<Vec<f64>> {
    let ratio = discrete_width_ratio(error_rate)?;
    widths
        .iter()
        .map(|&w| {
            check_width(w, "target width")?;
            Ok(ratio * w)
        })
        .collect()
}

/// Mean effective width under the discrete-error method.
pub fn effective_width_discrete(widths: &[f64], error_rate: f64) -> Result<f64> {
    if widths.is_empty() {
        return Err(Error::invalid("no target widths"));
    }
    let per_trial = effective_widths_discrete(widths, error_rate)?;
    Ok(per_trial.iter().sum::<f64>() / per_trial.len() as f64)
}

/// The error rate at which the discrete-error method maps `W_e = W`,
/// `2 * (1 - Φ(2.066))`.
pub fn error_rate_for_unit_ratio() -> f64 {
    2.0 * normal_sf(REFERENCE_Z)
}

/// How effective width is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthMethod {
    StandardDeviation,
    DiscreteError,
}

/// Which trials pool their endpoints for the standard-deviation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthGrouping {
    ByParticipantAndWidth,
    ByWidth,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveWidthConfig {
    pub method: WidthMethod,
    /// Used by the discrete-error method, and as the fallback when a
    /// standard-deviation group lacks endpoint data.
    pub error_rate: Option<f64>,
    pub grouping: WidthGrouping,
}

impl Default for EffectiveWidthConfig {
    fn default() -> Self {
        Self {
            method: WidthMethod::StandardDeviation,
            error_rate: None,
            grouping: WidthGrouping::ByParticipantAndWidth,
        }
    }
}

impl EffectiveWidthConfig {
    pub fn discrete(error_rate: f64) -> Self {
        Self {
            method: WidthMethod::DiscreteError,
            error_rate: Some(error_rate),
            grouping: WidthGrouping::ByParticipantAndWidth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.method, self.error_rate) {
            (WidthMethod::DiscreteError, None) => Err(Error::MissingInput(
                "error rate is required by the discrete-error method".into(),
            )),
            (_, Some(e)) => check_error_rate(e),
            _ => Ok(()),
        }
    }
}

/// Inputs of one trial for the temporally adjusted index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaInput {
    pub amplitude: f64,
    pub width: f64,
    pub mt: f64,
}

/// Closed search interval for one temporal-factor constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn grid(&self, points: usize) -> Vec<f64> {
        if self.lo == self.hi || points < 2 {
            return vec![self.lo];
        }
        (0..points)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (points - 1) as f64)
            .collect()
    }

    fn step(&self, points: usize) -> f64 {
        if points < 2 {
            0.0
        } else {
            (self.hi - self.lo) / (points - 1) as f64
        }
    }

    fn around(&self, centre: f64, half_width: f64) -> Interval {
        Interval {
            lo: (centre - half_width).max(self.lo),
            hi: (centre + half_width).min(self.hi),
        }
    }
}

/// Search space for [`calibrate_generic_t`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub a: Interval,
    pub b: Interval,
    pub c: Interval,
    /// Grid points per free axis in every pass.
    pub grid_points: usize,
    /// Number of zoomed refinement passes after the coarse grid.
    pub refinements: usize,
}

impl Default for SearchBounds {
    fn default() -> Self {
        Self {
            a: Interval::new(0.25, 2.0),
            b: Interval::new(0.0, 1.0),
            c: Interval::new(-1.0, 1.0),
            grid_points: 9,
            refinements: 8,
        }
    }
}

/// Outcome of a temporal-factor calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub params: TemporalFactorParams,
    pub r_squared: f64,
    pub evaluated_points: usize,
}

/// R² of the fit of movement time on the temporally adjusted index computed
/// with `params`; `None` when the parameters are infeasible for the data.
pub fn ta_fit_r_squared(trials: &[TaInput], params: &TemporalFactorParams) -> Option<f64> {
    let mut ids = Vec::with_capacity(trials.len());
    for t in trials {
        let factor = temporal_factor(t.mt, params).ok()?;
        ids.push(id_ta(t.amplitude, t.width, factor).ok()?);
    }
    let mts: Vec<f64> = trials.iter().map(|t| t.mt).collect();
    ols_fit(&ids, &mts).ok().map(|fit| fit.r_squared)
}

const TIE_TOLERANCE: f64 = 1e-12;

fn distance_to_default(p: &TemporalFactorParams) -> f64 {
    (p.a - 1.0).powi(2) + p.b.powi(2) + p.c.powi(2)
}

fn better(candidate: (TemporalFactorParams, f64), best: Option<(TemporalFactorParams, f64)>) -> bool {
    match best {
        None => true,
        Some((bp, br)) => {
            let (cp, cr) = candidate;
            cr > br + TIE_TOLERANCE
                || ((cr - br).abs() <= TIE_TOLERANCE && distance_to_default(&cp) < distance_to_default(&bp))
        }
    }
}

/// Fits the generic temporal-factor constants by maximizing the R² of the
/// movement-time regression on the temporally adjusted index.
///
/// A coarse grid over `bounds` is followed by `bounds.refinements` zoomed
/// grids around the incumbent. Grid points are evaluated in parallel but
/// reduced in grid order, so the result does not depend on scheduling.
/// Ties within 1e-12 in R² go to the point closest to `(1, 0, 0)`.
pub fn calibrate_generic_t(trials: &[TaInput], bounds: &SearchBounds) -> Result<Calibration> {
    if trials.len() < 10 {
        return Err(Error::invalid(format!(
            "calibration needs at least 10 trials, got {}",
            trials.len()
        )));
    }
    for iv in [bounds.a, bounds.b, bounds.c] {
        if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo <= iv.hi) {
            return Err(Error::invalid(format!("bad search interval [{}, {}]", iv.lo, iv.hi)));
        }
    }
    let min_mt = trials.iter().map(|t| t.mt).fold(f64::INFINITY, f64::min);
    if bounds.a.hi <= 0.0 || min_mt + bounds.b.hi <= 0.0 {
        return Err(Error::invalid(
            "empty search space: need a > 0 and min(MT) + b > 0 somewhere in the bounds",
        ));
    }

    let mut space = *bounds;
    let mut best: Option<(TemporalFactorParams, f64)> = None;
    let mut evaluated = 0;
    for pass in 0..=bounds.refinements {
        let mut points = Vec::new();
        for a in space.a.grid(bounds.grid_points) {
            for b in space.b.grid(bounds.grid_points) {
                for c in space.c.grid(bounds.grid_points) {
                    if a > 0.0 && min_mt + b > 0.0 {
                        points.push(TemporalFactorParams { a, b, c });
                    }
                }
            }
        }
        if pass == 0 && bounds.a.lo <= 1.0 && bounds.a.hi >= 1.0 {
            let default = TemporalFactorParams::default();
            if bounds.b.lo <= 0.0 && bounds.b.hi >= 0.0 && bounds.c.lo <= 0.0 && bounds.c.hi >= 0.0 {
                points.push(default);
            }
        }
        evaluated += points.len();
        let scored: Vec<(TemporalFactorParams, Option<f64>)> = points
            .into_par_iter()
            .map(|p| (p, ta_fit_r_squared(trials, &p)))
            .collect();
        for (p, r2) in scored {
            if let Some(r2) = r2.filter(|r| r.is_finite()) {
                if better((p, r2), best) {
                    best = Some((p, r2));
                }
            }
        }
        let Some((centre, _)) = best else {
            return Err(Error::invalid("empty search space: no feasible grid point"));
        };
        space = SearchBounds {
            a: bounds.a.around(centre.a, space.a.step(bounds.grid_points)),
            b: bounds.b.around(centre.b, space.b.step(bounds.grid_points)),
            c: bounds.c.around(centre.c, space.c.step(bounds.grid_points)),
            ..space
        };
    }
    let (params, r_squared) = best.expect("checked after each pass");
    Ok(Calibration {
        params,
        r_squared,
        evaluated_points: evaluated,
    })
}
