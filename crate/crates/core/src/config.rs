//! Run configuration: a TOML file with one table per pipeline stage.
//!
//! Every key has a default, and the defaults reproduce the perturbed
//! diagonal map experiment: 250 uniform seeds on `[-5,5]²`, 50 survivors,
//! 10 proposals, `τ = 5`, 5 refinement steps, PCA basis and `α = 0.1`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basisframe::CenterMode;
use crate::eigensearch::{SearchConfig, SeedDistribution, VarianceMode};
use crate::error::{Error, Result};
use crate::operator::{self, DomainBox, OperatorHandle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub operator: OperatorSection,
    pub search: SearchSection,
    pub basis: BasisSection,
    pub fit: FitSection,
    pub evaluate: EvaluateSection,
    pub benchmark: BenchmarkSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out: PathBuf::from("out"),
            operator: OperatorSection::default(),
            search: SearchSection::default(),
            basis: BasisSection::default(),
            fit: FitSection::default(),
            evaluate: EvaluateSection::default(),
            benchmark: BenchmarkSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorSection {
    pub key: String,
    pub params: BTreeMap<String, f64>,
}

impl Default for OperatorSection {
    fn default() -> Self {
        Self {
            key: "f5".into(),
            params: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub n_initial: usize,
    pub n_select: usize,
    pub n_proposals: usize,
    pub tau: f64,
    pub steps: usize,
    /// Box corners; the operator's own domain when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    pub variance_mode: VarianceMode,
    pub distribution: SeedDistribution,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            n_initial: 250,
            n_select: 50,
            n_proposals: 10,
            tau: 5.0,
            steps: 5,
            lower: None,
            upper: None,
            variance_mode: VarianceMode::Code,
            distribution: SeedDistribution::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisMode {
    /// Direction clusters, falling back to PCA when none are found.
    Direct,
    Pca,
    Octant,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisSection {
    pub mode: BasisMode,
    pub center: CenterMode,
    /// Angular clustering tolerance for `direct`, radians.
    pub tol_angle: f64,
    /// Sign vectors for `octant`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<Vec<f64>>>,
    /// Basis vectors for `user`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<Vec<f64>>>,
}

impl Default for BasisSection {
    fn default() -> Self {
        Self {
            mode: BasisMode::Pca,
            center: CenterMode::Mean,
            tol_angle: 0.05,
            sigmas: None,
            vectors: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub alpha: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        Self { alpha: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    /// Grid points per axis over the search box.
    pub grid: usize,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self { grid: 51 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSection {
    pub mc_points: usize,
    /// Audit grid points per axis.
    pub audit_grid: usize,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self {
            mc_points: 10_000,
            audit_grid: 101,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    pub fn operator(&self) -> Result<OperatorHandle> {
        operator::from_key(&self.operator.key, &self.operator.params)
    }

    pub fn domain(&self, op: &OperatorHandle) -> Result<DomainBox> {
        match (&self.search.lower, &self.search.upper) {
            (None, None) => Ok(op.domain().clone()),
            (Some(lo), Some(hi)) => {
                let b = DomainBox::new(lo.clone(), hi.clone())
                    .map_err(|e| Error::Config(format!("search box: {e}")))?;
                if b.dim() != op.dim() {
                    return Err(Error::Config(format!(
                        "search box has dimension {}, operator `{}` has {}",
                        b.dim(),
                        op.name(),
                        op.dim()
                    )));
                }
                Ok(b)
            }
            _ => Err(Error::Config(
                "search.lower and search.upper must be given together".into(),
            )),
        }
    }

    pub fn search_config(&self, op: &OperatorHandle) -> Result<SearchConfig> {
        let s = &self.search;
        let cfg = SearchConfig {
            n_initial: s.n_initial,
            n_select: s.n_select,
            n_proposals: s.n_proposals,
            tau: s.tau,
            steps: s.steps,
            domain: self.domain(op)?,
            rng_seed: self.seed,
            variance_mode: s.variance_mode,
            distribution: s.distribution,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every section against the resolved operator.
    pub fn validate(&self) -> Result<()> {
        let op = self.operator()?;
        self.search_config(&op)?;
        let n = op.dim();
        let alpha = self.fit.alpha;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!(
                "fit.alpha must lie in [0, 1], got {alpha}"
            )));
        }
        if !(self.basis.tol_angle > 0.0 && self.basis.tol_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Config(format!(
                "basis.tol_angle must lie in (0, π/2), got {}",
                self.basis.tol_angle
            )));
        }
        let square = |name: &str, m: &Option<Vec<Vec<f64>>>| -> Result<()> {
            match m {
                None => Err(Error::Config(format!("basis.mode needs basis.{name}"))),
                Some(rows) if rows.len() != n || rows.iter().any(|r| r.len() != n) => Err(
                    Error::Config(format!("basis.{name} must hold {n} vectors of length {n}")),
                ),
                Some(_) => Ok(()),
            }
        };
        match self.basis.mode {
            BasisMode::Octant => square("sigmas", &self.basis.sigmas)?,
            BasisMode::User => square("vectors", &self.basis.vectors)?,
            BasisMode::Direct | BasisMode::Pca => {}
        }
        if self.benchmark.mc_points == 0 {
            return Err(Error::Config(
                "benchmark.mc_points must be at least 1".into(),
            ));
        }
        if self.evaluate.grid == 0 || self.benchmark.audit_grid == 0 {
            return Err(Error::Config("grid sizes must be at least 1".into()));
        }
        Ok(())
    }
}
