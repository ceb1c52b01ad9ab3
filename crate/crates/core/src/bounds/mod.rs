//! Closed-form error bounds and the adversarial instances behind the lower
//! bounds.
//!
//! Every bound has the form `leading * exp(exponent)`. At desk-scale budgets
//! many upper bounds exceed 1, so the raw value and the exponent are kept next
//! to the value clamped to `[0, 1]`.

mod adversarial;

use std::fmt;

pub use adversarial::{adversarial_monotone_pair, concave_perturb, verify_perturbation};

use crate::env::{GapVector, ShapeClass};
use crate::error::{Result, TbpError};

pub const C_MON: f64 = 1.0 / 48.0;
pub const C_MON_LOG: f64 = 12.0;
pub const C_CON: f64 = 1.0 / 576.0;
pub const C_CON_LOG: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Lower,
    Upper,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub delta_min: f64,
    pub t: u64,
    pub sigma: f64,
    pub k: Option<usize>,
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub shape: ShapeClass,
    pub side: Side,
    pub leading: f64,
    pub exponent: f64,
    /// `leading * exp(exponent)`; may exceed 1 or overflow to `inf`.
    pub value: f64,
    pub clamped: f64,
    /// Whether the budget lies in the range where the bound is proved.
    pub regime_ok: bool,
    pub params: BoundParams,
}

impl BoundReport {
    fn new(
        shape: ShapeClass,
        side: Side,
        leading: f64,
        exponent: f64,
        regime_ok: bool,
        params: BoundParams,
    ) -> Self {
        let value = leading * exponent.exp();
        BoundReport {
            shape,
            side,
            leading,
            exponent,
            value,
            clamped: value.min(1.0),
            regime_ok,
            params,
        }
    }

    /// Natural log of the raw value.
    pub fn log_value(&self) -> f64 {
        self.leading.ln() + self.exponent
    }
}

fn check_inputs(delta_min: f64, t: u64, sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(TbpError::Precondition(format!("sigma must be > 0, got {sigma}")));
    }
    if !(delta_min >= 0.0) || !delta_min.is_finite() {
        return Err(TbpError::Precondition(format!(
            "delta_min must be >= 0, got {delta_min}"
        )));
    }
    if t < 1 {
        return Err(TbpError::Precondition("T must be >= 1".into()));
    }
    Ok(())
}

fn check_k(k: usize) -> Result<()> {
    if k < 1 {
        return Err(TbpError::TooFewArms { min: 1, got: k });
    }
    Ok(())
}

fn snr(delta_min: f64, t: u64, sigma: f64) -> f64 {
    t as f64 * delta_min * delta_min / (sigma * sigma)
}

/// `exp(-T D^2 / s^2) / 4`.
pub fn monotone_lower(delta_min: f64, t: u64, sigma: f64) -> Result<BoundReport> {
    check_inputs(delta_min, t, sigma)?;
    let params = BoundParams { delta_min, t, sigma, k: None, h: None };
    Ok(BoundReport::new(
        ShapeClass::Monotone,
        Side::Lower,
        0.25,
        -snr(delta_min, t, sigma),
        true,
        params,
    ))
}

/// `exp(-T D^2 / (48 s^2) + 12 ln K)`, proved for `T > 36 ln K`.
pub fn monotone_upper(delta_min: f64, t: u64, sigma: f64, k: usize) -> Result<BoundReport> {
    check_inputs(delta_min, t, sigma)?;
    check_k(k)?;
    let ln_k = (k as f64).ln();
    let params = BoundParams { delta_min, t, sigma, k: Some(k), h: None };
    Ok(BoundReport::new(
        ShapeClass::Monotone,
        Side::Upper,
        1.0,
        -C_MON * snr(delta_min, t, sigma) + C_MON_LOG * ln_k,
        t as f64 > 36.0 * ln_k,
        params,
    ))
}

/// `exp(-9 T D^2 / s^2) / 4`.
pub fn concave_lower(delta_min: f64, t: u64, sigma: f64) -> Result<BoundReport> {
    check_inputs(delta_min, t, sigma)?;
    let params = BoundParams { delta_min, t, sigma, k: None, h: None };
    Ok(BoundReport::new(
        ShapeClass::Concave,
        Side::Lower,
        0.25,
        -9.0 * snr(delta_min, t, sigma),
        true,
        params,
    ))
}

/// `3 exp(-T D^2 / (576 s^2) + 12 ln K)`, proved for `T > 108 ln K`.
pub fn concave_upper(delta_min: f64, t: u64, sigma: f64, k: usize) -> Result<BoundReport> {
    check_inputs(delta_min, t, sigma)?;
    check_k(k)?;
    let ln_k = (k as f64).ln();
    let params = BoundParams { delta_min, t, sigma, k: Some(k), h: None };
    Ok(BoundReport::new(
        ShapeClass::Concave,
        Side::Upper,
        3.0,
        -C_CON * snr(delta_min, t, sigma) + C_CON_LOG * ln_k,
        t as f64 > 108.0 * ln_k,
        params,
    ))
}

/// `H = sum of 1 / D_i^2` over the strictly positive gaps.
pub fn unstructured_complexity(gaps: &GapVector) -> f64 {
    gaps.gaps
        .iter()
        .filter(|g| **g > 0.0)
        .map(|g| 1.0 / (g * g))
        .sum()
}

/// Lower `exp(-3T/(s^2 H) - 4 s^-2 ln(12 (ln T + 1) K))` and upper
/// `exp(-T/(64 s^2 H) + 2 ln((ln T + 1) K))` for the unstructured class.
pub fn unstructured_bounds(
    gaps: &GapVector,
    t: u64,
    sigma: f64,
    k: usize,
) -> Result<(BoundReport, BoundReport)> {
    check_inputs(gaps.delta_min, t.max(1), sigma)?;
    check_k(k)?;
    if t < 2 {
        return Err(TbpError::Precondition("T must be >= 2".into()));
    }
    let h = unstructured_complexity(gaps);
    if h == 0.0 {
        return Err(TbpError::Precondition("every gap is zero, so H = 0".into()));
    }
    let s2 = sigma * sigma;
    let tf = t as f64;
    let log_factor = (tf.ln() + 1.0) * k as f64;
    let params = BoundParams {
        delta_min: gaps.delta_min,
        t,
        sigma,
        k: Some(k),
        h: Some(h),
    };
    let lower = BoundReport::new(
        ShapeClass::Unstructured,
        Side::Lower,
        1.0,
        -3.0 * tf / (s2 * h) - 4.0 / s2 * (12.0 * log_factor).ln(),
        true,
        params,
    );
    let upper = BoundReport::new(
        ShapeClass::Unstructured,
        Side::Upper,
        1.0,
        -tf / (64.0 * s2 * h) + 2.0 * log_factor.ln(),
        true,
        params,
    );
    Ok((lower, upper))
}
