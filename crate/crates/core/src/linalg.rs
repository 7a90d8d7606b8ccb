//! Small dense linear algebra for n ≤ 16: row-major square matrices stored
//! as `Vec<Vec<f64>>`, a cyclic Jacobi eigensolver and LU with partial
//! pivoting.

use crate::error::{Error, Result};

pub type Matrix = Vec<Vec<f64>>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

pub fn transpose(m: &Matrix) -> Matrix {
    let n = m.len();
    if n == 0 {
        return Vec::new();
    }
    (0..m[0].len())
        .map(|j| (0..n).map(|i| m[i][j]).collect())
        .collect()
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues, unsorted, in the order produced by the sweeps.
    pub values: Vec<f64>,
    /// Column `k` of this row-major matrix is the eigenvector for `values[k]`.
    pub vectors: Matrix,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations on a symmetric matrix.
///
/// Each rotation annihilates one off-diagonal pair; the accumulated product
/// of rotations gives the eigenvectors. Sweeps stop once the off-diagonal
/// Frobenius mass is negligible relative to the whole matrix.
pub fn symmetric_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    let n = a.len();
    for row in a {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
    }
    let mut m = a.clone();
    let mut v = identity(n);
    let total: f64 = m.iter().flatten().map(|x| x * x).sum();
    if !total.is_finite() {
        return Err(Error::NonFinite("symmetric matrix"));
    }
    let threshold = f64::EPSILON * f64::EPSILON * total;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| 2.0 * m[p][q] * m[p][q])
            .sum();
        if off <= threshold {
            let values = (0..n).map(|i| m[i][i]).collect();
            return Ok(SymmetricEigen { values, vectors: v });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::NumericalFailure(format!(
        "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
    )))
}

/// LU factorization with partial pivoting, `P·A = L·U` packed in one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    packed: Matrix,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.len();
        let mut packed = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let pivot = (k..n)
                .max_by(|&i, &j| packed[i][k].abs().total_cmp(&packed[j][k].abs()))
                .unwrap_or(k);
            if pivot != k {
                packed.swap(pivot, k);
                perm.swap(pivot, k);
                sign = -sign;
            }
            let d = packed[k][k];
            if d == 0.0 {
                continue;
            }
            for i in (k + 1)..n {
                let factor = packed[i][k] / d;
                packed[i][k] = factor;
                for j in (k + 1)..n {
                    packed[i][j] -= factor * packed[k][j];
                }
            }
        }
        Ok(Self { packed, perm, sign })
    }

    pub fn determinant(&self) -> f64 {
        self.sign
            * (0..self.packed.len())
                .map(|i| self.packed[i][i])
                .product::<f64>()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.packed.len();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= self.packed[i][j] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                y[i] -= self.packed[i][j] * y[j];
            }
            if self.packed[i][i] == 0.0 {
                return Err(Error::NumericalFailure("singular matrix".into()));
            }
            y[i] /= self.packed[i][i];
        }
        Ok(y)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.packed.len();
        let mut columns = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            columns.push(self.solve(&e)?);
        }
        Ok(transpose(&columns))
    }
}

pub fn determinant(a: &Matrix) -> Result<f64> {
    Ok(Lu::new(a)?.determinant())
}
