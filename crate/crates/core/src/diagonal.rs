//! Diagonal value and diagonal projection error of an operator at a point.
//!
//! For `x ≠ 0` the diagonal value `λ(x) = ⟨T(x), x⟩ / ‖x‖²` is the scalar
//! minimizing `‖T(x) − αx‖ / ‖x‖` over α, and the minimum is
//! `ε(x) = √(‖T(x)‖²/‖x‖² − λ(x)²)`. At the origin both are defined as 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, norm_sq};
use crate::operator::{OperatorHandle, Point};

/// Radicands down to this (relative) negative value are rounding noise.
pub const RADICAND_CLAMP: f64 = 1e-12;

/// A point annotated with its diagonal value and diagonal error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSample {
    pub point: Point,
    pub lambda: f64,
    pub error: f64,
}

impl EigenSample {
    pub fn evaluate(op: &OperatorHandle, point: Point) -> Result<Self> {
        let tx = op.try_eval(&point)?;
        let (lambda, error) = value_and_error(&tx, &point)?;
        Ok(Self {
            point,
            lambda,
            error,
        })
    }
}

fn is_zero(x: &[f64]) -> bool {
    x.iter().all(|&v| v == 0.0)
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("point"))
    }
}

/// `(λ, ε)` from a precomputed image `tx = T(x)`.
pub fn value_and_error(tx: &[f64], x: &[f64]) -> Result<(f64, f64)> {
    check_finite(x)?;
    if is_zero(x) {
        return Ok((0.0, 0.0));
    }
    let xx = norm_sq(x);
    let lambda = dot(tx, x) / xx;
    let ratio = norm_sq(tx) / xx;
    let radicand = ratio - lambda * lambda;
    if radicand >= 0.0 {
        return Ok((lambda, radicand.sqrt()));
    }
    // Cancellation near an eigenvector leaves a negative residue that scales
    // with ‖T(x)‖²/‖x‖².
    if radicand >= -RADICAND_CLAMP * ratio.max(1.0) {
        Ok((lambda, 0.0))
    } else if radicand.is_nan() {
        Err(Error::NonFinite("diagonal error"))
    } else {
        Err(Error::NumericalFailure(format!(
            "negative radicand {radicand:e} in diagonal error"
        )))
    }
}

/// `λ_T(x) = ⟨T(x), x⟩ / ‖x‖²`, zero at the origin.
pub fn diagonal_value(op: &OperatorHandle, x: &[f64]) -> Result<f64> {
    check_finite(x)?;
    if is_zero(x) {
        return Ok(0.0);
    }
    let tx = op.try_eval(x)?;
    Ok(dot(&tx, x) / norm_sq(x))
}

/// `ε_T(x) = √(‖T(x)‖²/‖x‖² − λ(x)²)`, zero at the origin.
pub fn diagonal_error(op: &OperatorHandle, x: &[f64]) -> Result<f64> {
    let tx = op.try_eval(x)?;
    value_and_error(&tx, x).map(|(_, e)| e)
}

/// Normalized residual `‖T(x) − αx‖ / ‖x‖` at an arbitrary scalar α.
pub fn projection_error_at(op: &OperatorHandle, x: &[f64], alpha: f64) -> Result<f64> {
    check_finite(x)?;
    if is_zero(x) {
        return Err(Error::ZeroVector);
    }
    let tx = op.try_eval(x)?;
    let residual: Vec<f64> = tx.iter().zip(x).map(|(t, xi)| t - alpha * xi).collect();
    Ok(norm(&residual) / norm(x))
}
