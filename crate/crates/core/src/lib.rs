//! Approximation of almost-diagonal Lipschitz maps on `ℝⁿ`.
//!
//! The procedure searches for approximate eigenvectors of a map `T` by Monte
//! Carlo refinement of the diagonal error
//! `ε(x) = min_λ ‖T(x) − λx‖ / ‖x‖`, builds a lattice basis from the
//! resulting cloud, and extends `T` from the cloud with α-weakened lattice
//! McShane and Whitney formulas that carry pointwise error bounds.
//!
//! ```
//! use latlip::prelude::*;
//!
//! let op = catalog_r(0.0);
//! let cfg = SearchConfig::new(op.domain().clone());
//! let (_, cloud) = run_search(&op, &cfg).unwrap();
//! assert!(cloud.mean_error() < 0.1);
//! ```

#![allow(clippy::needless_range_loop)]

pub mod basisframe;
pub mod config;
pub mod diagonal;
pub mod eigensearch;
pub mod error;
pub mod extension;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod operator;
pub mod pipeline;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::basisframe::{
        direct_basis, octant_basis, pca_basis, BasisFrame, CenterMode, FrameSource, LatticeVector,
    };
    pub use crate::config::RunConfig;
    pub use crate::diagonal::{diagonal_error, diagonal_value, EigenSample};
    pub use crate::eigensearch::{run_search, EigenCloud, SearchConfig, VarianceMode};
    pub use crate::error::{Error, Result};
    pub use crate::extension::{estimate_k, Evaluation, ExtensionModel, ModelSample};
    pub use crate::metrics::{bound_audit, mc_l2_error, AuditReport, ErrorReport};
    pub use crate::operator::{
        catalog_f5, catalog_g, catalog_r, catalog_s, DomainBox, OperatorHandle, Point,
    };
}
