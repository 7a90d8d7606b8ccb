//! Evaluable operators ℝⁿ → ℝⁿ and the catalog of test maps.
//!
//! Operators are pure functions behind an `Arc`, so a handle can be cloned
//! freely and evaluated from many threads at once.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in ambient (canonical) coordinates.
pub type Point = Vec<f64>;

type EvalFn = dyn Fn(&[f64]) -> Point + Send + Sync;
type EigenvalueFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Axis-aligned box `[a₁,b₁]×…×[aₙ,bₙ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::Config("domain box has dimension 0".into()));
        }
        for (a, b) in lower.iter().zip(&upper) {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite("domain box"));
            }
            if a > b {
                return Err(Error::Config(format!(
                    "domain box has lower {a} > upper {b}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[-half_width, half_width]ⁿ`.
    pub fn symmetric(dim: usize, half_width: f64) -> Self {
        Self {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| b - a)
            .product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    pub fn clamp(&self, p: &mut [f64]) {
        for (x, (a, b)) in p.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *x = x.clamp(*a, *b);
        }
    }

    /// One point drawn uniformly from the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| {
                let u: f64 = rng.random();
                // u < 1 keeps the draw inside even for a degenerate interval.
                (a + (b - a) * u).clamp(*a, *b)
            })
            .collect()
    }

    /// Deterministic lattice of `per_axis` points per coordinate, endpoints included.
    pub fn grid(&self, per_axis: usize) -> Vec<Point> {
        let n = self.dim();
        if per_axis == 0 {
            return Vec::new();
        }
        let axis = |k: usize, i: usize| -> f64 {
            if per_axis == 1 {
                0.5 * (self.lower[k] + self.upper[k])
            } else {
                let t = i as f64 / (per_axis - 1) as f64;
                self.lower[k] + (self.upper[k] - self.lower[k]) * t
            }
        };
        let total = per_axis.pow(n as u32);
        (0..total)
            .map(|mut idx| {
                let mut p = vec![0.0; n];
                for k in (0..n).rev() {
                    p[k] = axis(k, idx % per_axis);
                    idx /= per_axis;
                }
                p
            })
            .collect()
    }
}

/// A ray `{t·direction}` of eigenvectors with its eigenvalue as a function of `t`.
#[derive(Clone)]
pub struct EigenRay {
    pub direction: Vec<f64>,
    pub eigenvalue: Option<Arc<EigenvalueFn>>,
}

impl fmt::Debug for EigenRay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EigenRay")
            .field("direction", &self.direction)
            .field("eigenvalue", &self.eigenvalue.is_some())
            .finish()
    }
}

impl EigenRay {
    fn new(direction: Vec<f64>, eigenvalue: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            direction,
            eigenvalue: Some(Arc::new(eigenvalue)),
        }
    }
}

/// Black-box evaluable map with optional oracle metadata.
#[derive(Clone)]
pub struct OperatorHandle {
    name: String,
    dim: usize,
    eval: Arc<EvalFn>,
    domain: DomainBox,
    eigenrays: Vec<EigenRay>,
}

impl fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("eigenrays", &self.eigenrays)
            .finish()
    }
}

impl OperatorHandle {
    /// Wraps a closure as an operator on `[-5, 5]ⁿ`.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[f64]) -> Point + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            domain: DomainBox::symmetric(dim, 5.0),
            eigenrays: Vec::new(),
        }
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Self {
        debug_assert_eq!(domain.dim(), self.dim);
        self.domain = domain;
        self
    }

    pub fn with_eigenrays(mut self, rays: Vec<EigenRay>) -> Self {
        self.eigenrays = rays;
        self
    }

    /// A linear map given by a row-major matrix.
    pub fn linear(name: impl Into<String>, matrix: Vec<Vec<f64>>) -> Self {
        let dim = matrix.len();
        Self::new(name, dim, move |x| crate::linalg::mat_vec(&matrix, x))
    }

    pub fn identity(dim: usize) -> Self {
        Self::new("identity", dim, |x| x.to_vec())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn eigenrays(&self) -> &[EigenRay] {
        &self.eigenrays
    }

    /// Evaluates the operator, panicking on a wrong-length input.
    pub fn eval(&self, x: &[f64]) -> Point {
        assert_eq!(
            x.len(),
            self.dim,
            "operator `{}` expects dimension {}",
            self.name,
            self.dim
        );
        (self.eval)(x)
    }

    pub fn try_eval(&self, x: &[f64]) -> Result<Point> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let y = (self.eval)(x);
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        Ok(y)
    }
}

/// `S(x,y) = (x² + y², 2xy)` on `[-1,1]²`; diagonal in the basis {(1,1),(1,−1)}.
pub fn catalog_s() -> OperatorHandle {
    OperatorHandle::new("S", 2, |p| {
        let (x, y) = (p[0], p[1]);
        vec![x * x + y * y, 2.0 * x * y]
    })
    .with_domain(DomainBox::symmetric(2, 1.0))
    .with_eigenrays(vec![
        // S(t,0) = (t², 0) = t·(t, 0)
        EigenRay::new(vec![1.0, 0.0], |t| t),
        EigenRay::new(vec![1.0, 1.0], |z| 2.0 * z),
        EigenRay::new(vec![1.0, -1.0], |v| 2.0 * v),
    ])
}

/// `G(x,y) = (x − y + |y|/(1+|y|), |y|/(1+|y|))`, eigenrays through (1,0) and (1,1).
pub fn catalog_g() -> OperatorHandle {
    OperatorHandle::new("G", 2, |p| {
        let (x, y) = (p[0], p[1]);
        let s = y.abs() / (1.0 + y.abs());
        vec![x - y + s, s]
    })
    .with_eigenrays(vec![
        EigenRay::new(vec![1.0, 0.0], |_| 1.0),
        EigenRay::new(vec![1.0, 1.0], |t| {
            if t == 0.0 {
                0.0
            } else {
                t.abs() / (t * (1.0 + t.abs()))
            }
        }),
    ])
}

/// `R_r(x,y) = (8x + r·sin(5xy), 4x² + 4xy + y² − 2x − √|x+y|/5)` on `[-5,5]²`.
///
/// The square root term is not Lipschitz along `x + y = 0`.
pub fn catalog_r(r: f64) -> OperatorHandle {
    OperatorHandle::new(format!("R({r})"), 2, move |p| {
        let (x, y) = (p[0], p[1]);
        vec![
            8.0 * x + r * (5.0 * x * y).sin(),
            4.0 * x * x + 4.0 * x * y + y * y - 2.0 * x - 0.2 * (x + y).abs().sqrt(),
        ]
    })
}

/// The perturbed diagonal map `(x + y, x − y)` plus small smooth terms, on `[-5,5]²`.
pub fn catalog_f5() -> OperatorHandle {
    OperatorHandle::new("f5", 2, |p| {
        let (x, y) = (p[0], p[1]);
        vec![
            x + y + 0.2 * (10.0 * x).sin() + x * y / 100.0,
            x - y - 0.1 * (x + 5.0 * y).cos(),
        ]
    })
}

/// Looks up a catalog operator by key: `S`, `G`, `R` (param `r`), `f5`,
/// `identity` (param `n`, default 2).
pub fn from_key(key: &str, params: &BTreeMap<String, f64>) -> Result<OperatorHandle> {
    let allowed: &[&str] = match key {
        "S" | "G" | "f5" => &[],
        "R" => &["r"],
        "identity" => &["n"],
        _ => return Err(Error::UnknownOperator(key.to_string())),
    };
    if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Config(format!(
            "operator `{key}` does not take parameter `{bad}`"
        )));
    }
    Ok(match key {
        "S" => catalog_s(),
        "G" => catalog_g(),
        "f5" => catalog_f5(),
        "R" => catalog_r(params.get("r").copied().unwrap_or(0.0)),
        "identity" => {
            let n = params.get("n").copied().unwrap_or(2.0);
            if n < 1.0 || n.fract() != 0.0 {
                return Err(Error::Config(format!(
                    "identity dimension must be a positive integer, got {n}"
                )));
            }
            OperatorHandle::identity(n as usize)
        }
        _ => unreachable!(),
    })
}
