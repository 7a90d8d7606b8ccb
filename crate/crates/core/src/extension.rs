//! α-weakened lattice McShane and Whitney extensions.
//!
//! Given samples `(z, T(z))` in frame coordinates, constants `K(w)` and a
//! blend weight `α ∈ [0,1]`, every coordinate `w` uses the distance
//!
//! ```text
//! d_w(x, z) = (1 − α)·|x − z|(w) + α·‖x − z‖₂
//! ```
//!
//! and the extensions are
//!
//! ```text
//! T^M(x)(w) = max_z  T(z)(w) − K(w)·d_w(x, z)
//! T^W(x)(w) = min_z  T(z)(w) + K(w)·d_w(x, z)
//! ```
//!
//! When `T` satisfies `|T(x) − T(y)|(w) ≤ K(w)·d_w(x, y)` everywhere,
//! `T^M ≤ T ≤ T^W` and both lie within `2K(w)·min_z d_w(x, z)` of `T`.
//! The interpolant is the midpoint of the two.
//!
//! Queries cost `O(|S|·n)`; there is no spatial index.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basisframe::{BasisFrame, LatticeVector};
use crate::error::{Error, Result};
use crate::operator::{OperatorHandle, Point};

/// Slack used when re-verifying the Lipschitz inequality for fitted constants.
pub const CERTIFY_SLACK: f64 = 1e-9;

/// Norm in the α term. Only the Euclidean norm of frame coordinates is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    #[default]
    Euclidean,
}

/// A sample point and the operator value there, both in frame coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSample {
    pub z: LatticeVector,
    pub tz: LatticeVector,
}

#[inline]
fn blend(alpha: f64, coord_gap: f64, dist: f64) -> f64 {
    (1.0 - alpha) * coord_gap + alpha * dist
}

fn euclid_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )))
    }
}

/// Best per-coordinate constants over all sample pairs:
/// `K(w) = max_{x≠y} |T(x) − T(y)|(w) / d_w(x, y)`.
///
/// A pair with zero denominator and nonzero numerator (only possible for
/// `α = 0`) makes `K(w)` unbounded.
pub fn estimate_k(samples: &[ModelSample], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if samples.len() < 2 {
        return Err(Error::Config(format!(
            "estimating K needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples[0].z.dim();
    let rows: Vec<Result<Vec<f64>>> = (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let a = &samples[i];
            let mut k = vec![0.0f64; n];
            for b in &samples[i + 1..] {
                let dist = euclid_gap(a.z.as_slice(), b.z.as_slice());
                for w in 0..n {
                    let num = (a.tz[w] - b.tz[w]).abs();
                    if num == 0.0 {
                        continue;
                    }
                    let den = blend(alpha, (a.z[w] - b.z[w]).abs(), dist);
                    if den == 0.0 {
                        return Err(Error::UnboundedConstant { coordinate: w });
                    }
                    k[w] = k[w].max(num / den);
                }
            }
            Ok(k)
        })
        .collect();
    let mut k = vec![0.0f64; n];
    for row in rows {
        for (kw, rw) in k.iter_mut().zip(row?) {
            *kw = kw.max(rw);
        }
    }
    if let Some(w) = k.iter().position(|x| !x.is_finite()) {
        return Err(Error::UnboundedConstant { coordinate: w });
    }
    Ok(k)
}

/// Result of one query against the model, all in frame coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub mcshane: LatticeVector,
    pub whitney: LatticeVector,
    pub interpolant: LatticeVector,
    pub bound: LatticeVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionModel {
    frame: BasisFrame,
    samples: Vec<ModelSample>,
    k: Vec<f64>,
    alpha: f64,
    norm: NormKind,
}

impl ExtensionModel {
    /// Builds a model from ambient samples, estimating `K` from them.
    pub fn fit(frame: BasisFrame, points: &[Point], values: &[Point], alpha: f64) -> Result<Self> {
        let samples = to_frame_samples(&frame, points, values)?;
        let k = estimate_k(&samples, alpha)?;
        Self::from_parts(frame, samples, k, alpha)
    }

    /// Builds a model with caller-supplied constants; see [`Self::certify`].
    pub fn with_constants(
        frame: BasisFrame,
        points: &[Point],
        values: &[Point],
        k: Vec<f64>,
        alpha: f64,
    ) -> Result<Self> {
        let samples = to_frame_samples(&frame, points, values)?;
        Self::from_parts(frame, samples, k, alpha)
    }

    /// Samples `op` at `points` and fits.
    pub fn fit_operator(
        frame: BasisFrame,
        op: &OperatorHandle,
        points: &[Point],
        alpha: f64,
    ) -> Result<Self> {
        let values = points
            .iter()
            .map(|p| op.try_eval(p))
            .collect::<Result<Vec<_>>>()?;
        Self::fit(frame, points, &values, alpha)
    }

    /// Validates and deduplicates frame-coordinate samples.
    pub fn from_parts(
        frame: BasisFrame,
        samples: Vec<ModelSample>,
        k: Vec<f64>,
        alpha: f64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        let n = frame.dim();
        if k.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: k.len(),
            });
        }
        if k.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Config(format!(
                "constants must be finite and nonnegative: {k:?}"
            )));
        }
        let samples = dedup(samples, n)?;
        if samples.is_empty() {
            return Err(Error::Config(
                "extension model needs at least one sample".into(),
            ));
        }
        Ok(Self {
            frame,
            samples,
            k,
            alpha,
            norm: NormKind::Euclidean,
        })
    }

    pub fn frame(&self) -> &BasisFrame {
        &self.frame
    }

    pub fn samples(&self) -> &[ModelSample] {
        &self.samples
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn norm(&self) -> NormKind {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    /// Same samples and frame with different constants.
    pub fn with_k(&self, k: Vec<f64>) -> Result<Self> {
        Self::from_parts(self.frame.clone(), self.samples.clone(), k, self.alpha)
    }

    /// Same constants with extra samples appended.
    pub fn with_extra_samples(&self, extra: Vec<ModelSample>) -> Result<Self> {
        let mut samples = self.samples.clone();
        samples.extend(extra);
        Self::from_parts(self.frame.clone(), samples, self.k.clone(), self.alpha)
    }

    /// First sample pair `(i, j, w)` violating the weakened Lipschitz
    /// inequality by more than `slack`, if any.
    pub fn certify(&self, slack: f64) -> Option<(usize, usize, usize)> {
        let n = self.dim();
        for (i, a) in self.samples.iter().enumerate() {
            for (j, b) in self.samples.iter().enumerate().skip(i + 1) {
                let dist = euclid_gap(a.z.as_slice(), b.z.as_slice());
                for w in 0..n {
                    let lhs = (a.tz[w] - b.tz[w]).abs();
                    let rhs = self.k[w] * blend(self.alpha, (a.z[w] - b.z[w]).abs(), dist);
                    if lhs > rhs + slack {
                        return Some((i, j, w));
                    }
                }
            }
        }
        None
    }

    pub fn is_certified(&self) -> bool {
        self.certify(CERTIFY_SLACK).is_none()
    }

    fn check(&self, x: &LatticeVector) -> Result<()> {
        if x.dim() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            })
        }
    }

    /// McShane, Whitney, midpoint and error bound in one pass over the samples.
    pub fn evaluate(&self, x: &LatticeVector) -> Result<Evaluation> {
        self.check(x)?;
        let n = self.dim();
        let mut lo = vec![f64::NEG_INFINITY; n];
        let mut hi = vec![f64::INFINITY; n];
        let mut nearest = vec![f64::INFINITY; n];
        for s in &self.samples {
            let dist = euclid_gap(x.as_slice(), s.z.as_slice());
            for w in 0..n {
                let d = blend(self.alpha, (x[w] - s.z[w]).abs(), dist);
                let reach = self.k[w] * d;
                lo[w] = lo[w].max(s.tz[w] - reach);
                hi[w] = hi[w].min(s.tz[w] + reach);
                nearest[w] = nearest[w].min(d);
            }
        }
        let mid = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let bound = nearest
            .iter()
            .zip(&self.k)
            .map(|(d, k)| 2.0 * k * d)
            .collect();
        Ok(Evaluation {
            mcshane: LatticeVector(lo),
            whitney: LatticeVector(hi),
            interpolant: LatticeVector(mid),
            bound: LatticeVector(bound),
        })
    }

    pub fn mcshane(&self, x: &LatticeVector) -> Result<LatticeVector> {
        self.evaluate(x).map(|e| e.mcshane)
    }

    pub fn whitney(&self, x: &LatticeVector) -> Result<LatticeVector> {
        self.evaluate(x).map(|e| e.whitney)
    }

    pub fn interpolate(&self, x: &LatticeVector) -> Result<LatticeVector> {
        self.evaluate(x).map(|e| e.interpolant)
    }

    /// `2K(w)·min_z d_w(x, z)`.
    pub fn error_bound(&self, x: &LatticeVector) -> Result<LatticeVector> {
        self.evaluate(x).map(|e| e.bound)
    }

    /// Ambient point → interpolated ambient value.
    pub fn evaluate_ambient(&self, p: &[f64]) -> Result<Point> {
        let x = self.frame.to_coords(p)?;
        let y = self.interpolate(&x)?;
        self.frame.from_coords(&y)
    }

    pub fn to_record(&self) -> ModelRecord {
        ModelRecord {
            frame: self.frame.clone(),
            samples: self.samples.clone(),
            k: self.k.clone(),
            alpha: self.alpha,
            norm: self.norm,
        }
    }
}

/// On-disk form of a model: `{frame, samples, K, alpha, norm}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRecord {
    pub frame: BasisFrame,
    pub samples: Vec<ModelSample>,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    pub alpha: f64,
    #[serde(default)]
    pub norm: NormKind,
}

impl TryFrom<ModelRecord> for ExtensionModel {
    type Error = Error;
    fn try_from(r: ModelRecord) -> Result<Self> {
        ExtensionModel::from_parts(r.frame, r.samples, r.k, r.alpha)
    }
}

impl Serialize for ExtensionModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExtensionModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let record = ModelRecord::deserialize(d)?;
        ExtensionModel::try_from(record).map_err(serde::de::Error::custom)
    }
}

fn to_frame_samples(
    frame: &BasisFrame,
    points: &[Point],
    values: &[Point],
) -> Result<Vec<ModelSample>> {
    if points.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    points
        .iter()
        .zip(values)
        .map(|(p, v)| {
            Ok(ModelSample {
                z: frame.to_coords(p)?,
                tz: frame.to_coords(v)?,
            })
        })
        .collect()
}

/// Drops exact repeats; repeated coordinates with different values are an error.
fn dedup(samples: Vec<ModelSample>, n: usize) -> Result<Vec<ModelSample>> {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::with_capacity(samples.len());
    let mut out: Vec<ModelSample> = Vec::with_capacity(samples.len());
    for s in samples {
        for v in [&s.z, &s.tz] {
            if v.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.dim(),
                });
            }
            if v.as_slice().iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("model sample"));
            }
        }
        // +0.0 and -0.0 are the same point
        let key: Vec<u64> = s.z.as_slice().iter().map(|x| (x + 0.0).to_bits()).collect();
        match seen.get(&key) {
            Some(&idx) => {
                if out[idx].tz != s.tz {
                    return Err(Error::ConflictingSamples);
                }
            }
            None => {
                seen.insert(key, out.len());
                out.push(s);
            }
        }
    }
    Ok(out)
}
