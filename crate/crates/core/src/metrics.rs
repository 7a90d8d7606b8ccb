//! Error estimates for fitted models and summary statistics for clouds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensearch::EigenCloud;
use crate::error::{Error, Result};
use crate::extension::ExtensionModel;
use crate::linalg::{dot, norm};
use crate::operator::{DomainBox, OperatorHandle};

/// Slack for counting a coordinate as outside its error bound.
pub const AUDIT_SLACK: f64 = 1e-9;

const MC_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Root-mean-square error `(μ(P)⁻¹ ∫_P ‖f̂ − f‖²)^{1/2}`.
    pub l2_normalized: f64,
    /// `μ(P)⁻¹ (∫_P ‖f̂ − f‖²)^{1/2}`, i.e. `l2_normalized / √μ(P)`.
    pub l2_volume_scaled: f64,
    /// Delta-method standard error of `l2_normalized`.
    pub l2_std_error: f64,
    /// Largest `|f̂ − f|(w)` seen, per frame coordinate.
    pub max_pointwise: Vec<f64>,
    /// Sample points with some coordinate outside its error bound.
    pub bound_violations: usize,
    pub mc_points: usize,
    pub rng_seed: u64,
}

/// Per-point comparison in frame coordinates.
struct PointCheck {
    sq_err: f64,
    abs_err: Vec<f64>,
    violated: bool,
}

fn check_point(op: &OperatorHandle, model: &ExtensionModel, p: &[f64]) -> Result<PointCheck> {
    let frame = model.frame();
    let x = frame.to_coords(p)?;
    let eval = model.evaluate(&x)?;
    let truth = op.try_eval(p)?;
    let fhat = frame.from_coords(&eval.interpolant)?;
    let sq_err = fhat
        .iter()
        .zip(&truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let t = frame.to_coords(&truth)?;
    let abs_err: Vec<f64> = (0..model.dim())
        .map(|w| (eval.interpolant[w] - t[w]).abs())
        .collect();
    let violated = abs_err
        .iter()
        .zip(eval.bound.as_slice())
        .any(|(e, b)| *e > b + AUDIT_SLACK);
    Ok(PointCheck {
        sq_err,
        abs_err,
        violated,
    })
}

/// Monte Carlo estimate of the normalized L2 distance between the model's
/// interpolant and the operator over `domain`.
pub fn mc_l2_error(
    op: &OperatorHandle,
    model: &ExtensionModel,
    domain: &DomainBox,
    mc_points: usize,
    rng_seed: u64,
) -> Result<ErrorReport> {
    if mc_points == 0 {
        return Err(Error::Config("mc_points must be at least 1".into()));
    }
    if domain.dim() != model.dim() || op.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: domain.dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(MC_STREAM);
    let points: Vec<_> = (0..mc_points).map(|_| domain.sample(&mut rng)).collect();
    let checks = points
        .par_iter()
        .map(|p| check_point(op, model, p))
        .collect::<Result<Vec<_>>>()?;

    let m = mc_points as f64;
    let mean_sq = checks.iter().map(|c| c.sq_err).sum::<f64>() / m;
    let var = if mc_points > 1 {
        checks
            .iter()
            .map(|c| (c.sq_err - mean_sq).powi(2))
            .sum::<f64>()
            / (m - 1.0)
    } else {
        0.0
    };
    let l2 = mean_sq.sqrt();
    let se_mean = (var / m).sqrt();
    let l2_std_error = if l2 > 0.0 { se_mean / (2.0 * l2) } else { 0.0 };
    let mut max_pointwise = vec![0.0f64; model.dim()];
    for c in &checks {
        for (mx, e) in max_pointwise.iter_mut().zip(&c.abs_err) {
            *mx = mx.max(*e);
        }
    }
    Ok(ErrorReport {
        l2_normalized: l2,
        l2_volume_scaled: l2 / domain.volume().sqrt(),
        l2_std_error,
        max_pointwise,
        bound_violations: checks.iter().filter(|c| c.violated).count(),
        mc_points,
        rng_seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub points: usize,
    /// Points with some coordinate where `|f̂ − T|(w) > bound(w)`.
    pub violations: usize,
    /// (point, coordinate) pairs out of bound.
    pub coordinate_violations: usize,
    pub max_excess: f64,
}

impl AuditReport {
    pub fn violation_fraction(&self) -> f64 {
        if self.points == 0 {
            0.0
        } else {
            self.violations as f64 / self.points as f64
        }
    }
}

/// Checks `|f̂ − T|(w) ≤ bound(x)(w)` on a `per_axis`ⁿ grid over `domain`.
pub fn bound_audit(
    op: &OperatorHandle,
    model: &ExtensionModel,
    domain: &DomainBox,
    per_axis: usize,
) -> Result<AuditReport> {
    audit_points(op, model, &domain.grid(per_axis))
}

pub fn audit_points(
    op: &OperatorHandle,
    model: &ExtensionModel,
    points: &[Vec<f64>],
) -> Result<AuditReport> {
    let frame = model.frame();
    let per_point = points
        .par_iter()
        .map(|p| -> Result<(usize, f64)> {
            let x = frame.to_coords(p)?;
            let e = model.evaluate(&x)?;
            let t = frame.to_coords(&op.try_eval(p)?)?;
            let mut count = 0;
            let mut excess = f64::NEG_INFINITY;
            for w in 0..model.dim() {
                let over = (e.interpolant[w] - t[w]).abs() - e.bound[w];
                excess = excess.max(over);
                if over > AUDIT_SLACK {
                    count += 1;
                }
            }
            Ok((count, excess))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AuditReport {
        points: points.len(),
        violations: per_point.iter().filter(|(c, _)| *c > 0).count(),
        coordinate_violations: per_point.iter().map(|(c, _)| c).sum(),
        max_excess: per_point
            .iter()
            .map(|(_, e)| *e)
            .fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
}

impl Summary {
    /// `None` for an empty slice. Quantiles interpolate linearly between order statistics.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v[0],
            q10: q(0.1),
            median: q(0.5),
            q90: q(0.9),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudQuality {
    pub count: usize,
    pub error: Option<Summary>,
    /// Angle (radians) from each nonzero sample to the nearest reference line.
    pub angle_to_reference: Option<Summary>,
}

/// Angle between the line through `p` and the line through `d`, in `[0, π/2]`.
pub fn line_angle(p: &[f64], d: &[f64]) -> f64 {
    let c = dot(p, d).abs() / (norm(p) * norm(d));
    c.min(1.0).acos()
}

pub fn cloud_quality(cloud: &EigenCloud, reference: &[Vec<f64>]) -> CloudQuality {
    let errors: Vec<f64> = cloud.samples.iter().map(|s| s.error).collect();
    let angle_to_reference = if reference.is_empty() {
        None
    } else {
        let angles: Vec<f64> = cloud
            .samples
            .iter()
            .filter(|s| norm(&s.point) > 0.0)
            .map(|s| {
                reference
                    .iter()
                    .map(|d| line_angle(&s.point, d))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        Summary::of(&angles)
    };
    CloudQuality {
        count: errors.len(),
        error: Summary::of(&errors),
        angle_to_reference,
    }
}
