//! Bases inducing the lattice order, and coordinate-wise lattice vectors.
//!
//! A [`BasisFrame`] holds the change-of-basis matrix `B` (columns are the
//! basis vectors) and its inverse. Coordinates in the frame are ordered
//! pointwise, which is the lattice order used by the extension formulas.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::eigensearch::EigenCloud;
use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm, Lu, Matrix};

/// A vector in frame coordinates, with coordinate-wise `|·|`, `∨` and `∧`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeVector(pub Vec<f64>);

impl LatticeVector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn abs(&self) -> Self {
        Self(self.0.iter().map(|x| x.abs()).collect())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// Coordinate-wise maximum `x ∨ y`.
    pub fn sup(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, f64::max)
    }

    /// Coordinate-wise minimum `x ∧ y`.
    pub fn inf(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, f64::min)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `x ≤ y` in the lattice order.
    pub fn le(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl Index<usize> for LatticeVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for LatticeVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameSource {
    Direct,
    Pca,
    Octant,
    User,
}

/// Where the covariance of a cloud is centered for PCA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterMode {
    #[default]
    Mean,
    Origin,
}

/// Linear independence threshold: `|det B| > DET_TOL · ∏‖bⱼ‖`.
pub const DET_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BasisFrame {
    vectors: Vec<Vec<f64>>,
    /// Row-major `B⁻¹`.
    inverse: Matrix,
    source: FrameSource,
}

/// On-disk form: `{"vectors": [[...], ...], "source": "pca"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub vectors: Vec<Vec<f64>>,
    pub source: FrameSource,
}

impl BasisFrame {
    pub fn new(vectors: Vec<Vec<f64>>, source: FrameSource) -> Result<Self> {
        let n = vectors.len();
        if n == 0 {
            return Err(Error::Config("basis must have at least one vector".into()));
        }
        for v in &vectors {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("basis vector"));
            }
        }
        // vectors are the columns of B
        let b = linalg::transpose(&vectors);
        let lu = Lu::new(&b)?;
        let det = lu.determinant();
        let scale: f64 = vectors.iter().map(|v| norm(v)).product();
        if det.is_nan() || det.abs() <= DET_TOL * scale {
            return Err(Error::DependentBasis { det });
        }
        let inverse = lu.inverse()?;
        Ok(Self {
            vectors,
            inverse,
            source,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            vectors: linalg::identity(n),
            inverse: linalg::identity(n),
            source: FrameSource::User,
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn source(&self) -> FrameSource {
        self.source
    }

    /// `B` in row-major form.
    pub fn matrix(&self) -> Matrix {
        linalg::transpose(&self.vectors)
    }

    pub fn determinant(&self) -> f64 {
        linalg::determinant(&self.matrix()).unwrap_or(0.0)
    }

    /// Ambient point → frame coordinates, `B⁻¹ p`.
    pub fn to_coords(&self, p: &[f64]) -> Result<LatticeVector> {
        self.check_dim(p.len())?;
        Ok(LatticeVector(linalg::mat_vec(&self.inverse, p)))
    }

    /// Frame coordinates → ambient point, `B c`.
    pub fn from_coords(&self, c: &LatticeVector) -> Result<Vec<f64>> {
        self.check_dim(c.dim())?;
        let n = self.dim();
        let mut p = vec![0.0; n];
        for (v, &cj) in self.vectors.iter().zip(&c.0) {
            for (pi, vi) in p.iter_mut().zip(v) {
                *pi += cj * vi;
            }
        }
        Ok(p)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            })
        }
    }

    pub fn to_record(&self) -> FrameRecord {
        FrameRecord {
            vectors: self.vectors.clone(),
            source: self.source,
        }
    }

    pub fn from_record(record: FrameRecord) -> Result<Self> {
        Self::new(record.vectors, record.source)
    }
}

impl Serialize for BasisFrame {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BasisFrame {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let record = FrameRecord::deserialize(d)?;
        Self::from_record(record).map_err(serde::de::Error::custom)
    }
}

/// Flips `v` so its largest-magnitude entry (first one on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Covariance matrix of `points` (divisor `m − 1`) about the mean or the origin.
pub fn covariance(points: &[Vec<f64>], center: CenterMode) -> Result<Matrix> {
    let m = points.len();
    if m < 2 {
        return Err(Error::DegenerateCloud(format!(
            "{m} points cannot define a covariance"
        )));
    }
    let n = points[0].len();
    let mut mean = vec![0.0; n];
    if center == CenterMode::Mean {
        for p in points {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: p.len(),
                });
            }
            for (mi, pi) in mean.iter_mut().zip(p) {
                *mi += pi;
            }
        }
        mean.iter_mut().for_each(|x| *x /= m as f64);
    }
    let mut cov = vec![vec![0.0; n]; n];
    for p in points {
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.len(),
            });
        }
        let d: Vec<f64> = p.iter().zip(&mean).map(|(a, b)| a - b).collect();
        for i in 0..n {
            for j in i..n {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    let denom = match center {
        CenterMode::Mean => (m - 1) as f64,
        CenterMode::Origin => m as f64,
    };
    for i in 0..n {
        for j in i..n {
            cov[i][j] /= denom;
            cov[j][i] = cov[i][j];
        }
    }
    Ok(cov)
}

/// Principal axes of a point set, sorted by non-increasing variance.
///
/// Returns the frame together with the variances along each axis.
pub fn pca_points(points: &[Vec<f64>], center: CenterMode) -> Result<(BasisFrame, Vec<f64>)> {
    let n = points.first().map(Vec::len).unwrap_or(0);
    if points.len() < n.max(2) {
        return Err(Error::DegenerateCloud(format!(
            "{} points cannot span dimension {n}",
            points.len()
        )));
    }
    let cov = covariance(points, center)?;
    let eig = linalg::symmetric_eigen(&cov)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.values[b].total_cmp(&eig.values[a]));
    let values: Vec<f64> = order.iter().map(|&k| eig.values[k]).collect();
    let largest = values[0];
    let smallest = values[n - 1];
    if largest.is_nan() || largest <= 0.0 || smallest < 1e-12 * largest {
        return Err(Error::DegenerateCloud(format!(
            "covariance eigenvalues {values:?} are rank deficient"
        )));
    }
    let vectors = order
        .iter()
        .map(|&k| {
            let mut col: Vec<f64> = eig.vectors.iter().map(|row| row[k]).collect();
            let len = norm(&col);
            col.iter_mut().for_each(|x| *x /= len);
            fix_sign(&mut col);
            col
        })
        .collect();
    Ok((BasisFrame::new(vectors, FrameSource::Pca)?, values))
}

/// PCA frame of an eigenvector cloud.
pub fn pca_basis(cloud: &EigenCloud, center: CenterMode) -> Result<BasisFrame> {
    pca_points(&cloud.points(), center).map(|(frame, _)| frame)
}

/// Frame of orthant diagonals: the j-th vector is `B·σⱼ/√n`.
pub fn octant_basis(frame: &BasisFrame, sigmas: &[Vec<f64>]) -> Result<BasisFrame> {
    let n = frame.dim();
    if sigmas.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: sigmas.len(),
        });
    }
    for s in sigmas {
        if s.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: s.len(),
            });
        }
        if s.iter().any(|&x| x != 1.0 && x != -1.0) {
            return Err(Error::Config(format!(
                "sign vector {s:?} must have entries ±1"
            )));
        }
    }
    let sigma_det = linalg::determinant(&linalg::transpose(&sigmas.to_vec()))?;
    if sigma_det.abs() < 0.5 {
        // a ±1 matrix has an integer determinant
        return Err(Error::DependentBasis { det: sigma_det });
    }
    let root_n = (n as f64).sqrt();
    let vectors = sigmas
        .iter()
        .map(|s| {
            let c = LatticeVector(s.iter().map(|x| x / root_n).collect());
            frame.from_coords(&c)
        })
        .collect::<Result<Vec<_>>>()?;
    BasisFrame::new(vectors, FrameSource::Octant)
}

/// Minimum share of the cloud a direction cluster needs to count as an axis.
pub const DIRECT_MASS_FLOOR: f64 = 0.05;

/// Looks for `n` well-populated direction clusters in the cloud.
///
/// Directions are compared as lines (`p` and `−p` coincide) and grouped by
/// single-link clustering at angular distance `tol_angle`. If exactly `n`
/// clusters hold at least [`DIRECT_MASS_FLOOR`] of the nonzero points and
/// their mean directions are independent, they form the basis, largest
/// cluster first. Otherwise `None`.
pub fn direct_points(points: &[Vec<f64>], tol_angle: f64) -> Option<BasisFrame> {
    let n = points.first()?.len();
    let dirs: Vec<Vec<f64>> = points
        .iter()
        .filter_map(|p| {
            let len = norm(p);
            (len > 0.0).then(|| p.iter().map(|x| x / len).collect())
        })
        .collect();
    let m = dirs.len();
    if m == 0 {
        return None;
    }
    let cos_tol = tol_angle.cos();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if dot(&dirs[i], &dirs[j]).abs() >= cos_tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    // clusters keyed by root, in order of first member
    let mut clusters: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..m {
        let root = find(&mut parent, i);
        match clusters.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(i),
            None => clusters.push((root, vec![i])),
        }
    }
    let floor = DIRECT_MASS_FLOOR * m as f64;
    let mut heavy: Vec<Vec<usize>> = clusters
        .into_iter()
        .map(|(_, members)| members)
        .filter(|members| members.len() as f64 >= floor)
        .collect();
    if heavy.len() != n {
        return None;
    }
    // stable: equal sizes keep first-seen order
    heavy.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let vectors: Vec<Vec<f64>> = heavy
        .iter()
        .map(|members| {
            let reference = &dirs[members[0]];
            let mut sum = vec![0.0; n];
            for &k in members {
                let sign = if dot(&dirs[k], reference) < 0.0 {
                    -1.0
                } else {
                    1.0
                };
                for (s, d) in sum.iter_mut().zip(&dirs[k]) {
                    *s += sign * d;
                }
            }
            let len = norm(&sum);
            let mut v: Vec<f64> = sum.iter().map(|x| x / len).collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    BasisFrame::new(vectors, FrameSource::Direct).ok()
}

pub fn direct_basis(cloud: &EigenCloud, tol_angle: f64) -> Option<BasisFrame> {
    direct_points(&cloud.points(), tol_angle)
}
