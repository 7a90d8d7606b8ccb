//! The end-to-end procedure and the file-producing stages behind the CLI.
//!
//! 1. approximate eigenvectors by Monte Carlo search;
//! 2. choose a basis from the resulting cloud;
//! 3. fit the lattice constants `K(w)` on the cloud;
//! 4. evaluate the McShane/Whitney interpolant and its error bounds.
//!
//! Each stage is a pure function of the run config and its input files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basisframe::{self, BasisFrame, FrameRecord, FrameSource};
use crate::config::{BasisMode, BasisSection, RunConfig};
use crate::diagonal::EigenSample;
use crate::eigensearch::{run_search, EigenCloud};
use crate::error::{Error, Result};
use crate::extension::{estimate_k, ExtensionModel};
use crate::io::{self, GridRow};
use crate::metrics::{self, AuditReport, CloudQuality, ErrorReport};
use crate::operator::{OperatorHandle, Point};

pub const CONFIG_ECHO: &str = "config.toml";
pub const INITIAL_CSV: &str = "initial.csv";
pub const CLOUD_CSV: &str = "cloud.csv";
pub const HISTORY_CSV: &str = "history.csv";
pub const TRACE_CSV: &str = "trace.csv";
pub const SEARCH_SUMMARY: &str = "search_summary.json";
pub const FRAME_JSON: &str = "frame.json";
pub const MODEL_JSON: &str = "model.json";
pub const FIT_SUMMARY: &str = "fit_summary.json";
pub const GRID_CSV: &str = "grid.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

/// Builds the lattice basis for `points` according to the basis section.
pub fn build_frame(section: &BasisSection, points: &[Point]) -> Result<BasisFrame> {
    match section.mode {
        BasisMode::Direct => match basisframe::direct_points(points, section.tol_angle) {
            Some(frame) => Ok(frame),
            None => basisframe::pca_points(points, section.center).map(|(f, _)| f),
        },
        BasisMode::Pca => basisframe::pca_points(points, section.center).map(|(f, _)| f),
        BasisMode::Octant => {
            let (pca, _) = basisframe::pca_points(points, section.center)?;
            let sigmas = section.sigmas.as_ref().ok_or_else(|| {
                Error::Config("basis.mode = \"octant\" needs basis.sigmas".into())
            })?;
            basisframe::octant_basis(&pca, sigmas)
        }
        BasisMode::User => {
            let vectors = section
                .vectors
                .clone()
                .ok_or_else(|| Error::Config("basis.mode = \"user\" needs basis.vectors".into()))?;
            BasisFrame::new(vectors, FrameSource::User)
        }
    }
}

/// Everything produced by one pass of the procedure.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub operator: OperatorHandle,
    /// All uniform seeds, sorted by error.
    pub seeded: EigenCloud,
    pub cloud: EigenCloud,
    pub model: ExtensionModel,
}

/// Search, basis selection and fit, in memory.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineRun> {
    let op = cfg.operator()?;
    let search = cfg.search_config(&op)?;
    let (seeded, cloud) = run_search(&op, &search)?;
    let model = fit_cloud(cfg, &op, &cloud.samples)?;
    Ok(PipelineRun {
        operator: op,
        seeded,
        cloud,
        model,
    })
}

fn fit_cloud(
    cfg: &RunConfig,
    op: &OperatorHandle,
    samples: &[EigenSample],
) -> Result<ExtensionModel> {
    let points: Vec<Point> = samples.iter().map(|s| s.point.clone()).collect();
    let frame = build_frame(&cfg.basis, &points)?;
    ExtensionModel::fit_operator(frame, op, &points, cfg.fit.alpha)
}

fn prepare_out(cfg: &RunConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let mut echo = cfg.clone();
    echo.out = out.to_path_buf();
    std::fs::write(out.join(CONFIG_ECHO), echo.to_toml())?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSummary {
    pub operator: String,
    pub seed: u64,
    pub samples: usize,
    pub initial_mean_error: f64,
    pub final_mean_error: f64,
    pub quality: CloudQuality,
}

fn reference_rays(op: &OperatorHandle) -> Vec<Vec<f64>> {
    op.eigenrays().iter().map(|r| r.direction.clone()).collect()
}

/// `eigensearch`: writes the seed set, final cloud, histories and a summary.
pub fn cmd_eigensearch(cfg: &RunConfig, out: &Path) -> Result<SearchSummary> {
    let op = cfg.operator()?;
    let search = cfg.search_config(&op)?;
    let (seeded, cloud) = run_search(&op, &search)?;
    prepare_out(cfg, out)?;
    io::write_cloud(&out.join(INITIAL_CSV), &seeded.samples)?;
    io::write_cloud(&out.join(CLOUD_CSV), &cloud.samples)?;
    io::write_history(&out.join(HISTORY_CSV), &cloud.history)?;
    io::write_trace(&out.join(TRACE_CSV), &cloud.history)?;
    let summary = SearchSummary {
        operator: op.name().to_string(),
        seed: cfg.seed,
        samples: cloud.len(),
        initial_mean_error: cloud.history.first().map(|h| h.mean_error).unwrap_or(0.0),
        final_mean_error: cloud.mean_error(),
        quality: metrics::cloud_quality(&cloud, &reference_rays(&op)),
    };
    io::write_json(&out.join(SEARCH_SUMMARY), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSummary {
    pub operator: String,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    pub alpha: f64,
    pub basis: FrameRecord,
    pub samples: usize,
    pub certified: bool,
}

/// `fit`: builds the basis and model from a cloud file.
pub fn cmd_fit(cfg: &RunConfig, cloud_path: &Path, out: &Path) -> Result<ExtensionModel> {
    let op = cfg.operator()?;
    let samples = io::read_cloud(cloud_path)?;
    if samples.first().map(|s| s.point.len()) != Some(op.dim()) {
        return Err(Error::Format {
            path: cloud_path.to_path_buf(),
            message: format!("expected a nonempty cloud of dimension {}", op.dim()),
        });
    }
    let model = fit_cloud(cfg, &op, &samples)?;
    prepare_out(cfg, out)?;
    io::write_json(&out.join(FRAME_JSON), model.frame())?;
    io::write_json(&out.join(MODEL_JSON), &model)?;
    let summary = FitSummary {
        operator: op.name().to_string(),
        k: model.k().to_vec(),
        alpha: model.alpha(),
        basis: model.frame().to_record(),
        samples: model.samples().len(),
        certified: model.is_certified(),
    };
    io::write_json(&out.join(FIT_SUMMARY), &summary)?;
    Ok(model)
}

/// Where `evaluate` takes its query points from.
#[derive(Debug, Clone)]
pub enum PointSource {
    /// `x1..xn` columns of a CSV file.
    File(PathBuf),
    /// Regular grid over a box.
    Grid {
        lower: Vec<f64>,
        upper: Vec<f64>,
        per_axis: usize,
    },
}

pub fn evaluate_rows(model: &ExtensionModel, points: &[Point]) -> Result<Vec<GridRow>> {
    use rayon::prelude::*;
    points
        .par_iter()
        .map(|p| {
            let x = model.frame().to_coords(p)?;
            let e = model.evaluate(&x)?;
            Ok(GridRow {
                point: p.clone(),
                fhat: model.frame().from_coords(&e.interpolant)?,
                bound: e.bound.into_inner(),
            })
        })
        .collect()
}

/// `evaluate`: interpolant (ambient) and bounds (frame coordinates) per point.
pub fn cmd_evaluate(model_path: &Path, source: &PointSource, out: &Path) -> Result<usize> {
    let model: ExtensionModel = io::read_json(model_path)?;
    let points = match source {
        PointSource::File(path) => io::read_points(path)?,
        PointSource::Grid {
            lower,
            upper,
            per_axis,
        } => crate::operator::DomainBox::new(lower.clone(), upper.clone())?.grid(*per_axis),
    };
    let rows = evaluate_rows(&model, &points)?;
    std::fs::create_dir_all(out)?;
    io::write_grid(&out.join(GRID_CSV), &rows)?;
    Ok(rows.len())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub operator: String,
    pub seed: u64,
    pub alpha: f64,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    /// Constants for the same samples and basis with `α = 0`; `None` when unbounded.
    #[serde(rename = "K_alpha_zero")]
    pub k_alpha_zero: Option<Vec<f64>>,
    pub basis: FrameRecord,
    pub final_mean_error: f64,
    pub error: ErrorReport,
    pub audit: AuditReport,
}

impl BenchmarkReport {
    pub fn metric_rows(&self) -> Vec<(String, f64)> {
        let mut rows = vec![
            ("l2_normalized".to_string(), self.error.l2_normalized),
            ("l2_volume_scaled".to_string(), self.error.l2_volume_scaled),
            ("l2_std_error".to_string(), self.error.l2_std_error),
            ("alpha".to_string(), self.alpha),
        ];
        for (i, k) in self.k.iter().enumerate() {
            rows.push((format!("K{}", i + 1), *k));
        }
        if let Some(k0) = &self.k_alpha_zero {
            for (i, k) in k0.iter().enumerate() {
                rows.push((format!("K{}_alpha0", i + 1), *k));
            }
        }
        for (i, m) in self.error.max_pointwise.iter().enumerate() {
            rows.push((format!("max_pointwise{}", i + 1), *m));
        }
        rows.push(("mc_points".to_string(), self.error.mc_points as f64));
        rows.push((
            "mc_bound_violations".to_string(),
            self.error.bound_violations as f64,
        ));
        rows.push(("audit_points".to_string(), self.audit.points as f64));
        rows.push(("audit_violations".to_string(), self.audit.violations as f64));
        rows.push((
            "audit_violation_fraction".to_string(),
            self.audit.violation_fraction(),
        ));
        rows.push(("final_mean_epsilon".to_string(), self.final_mean_error));
        rows
    }
}

/// Full procedure plus Monte Carlo error and grid audit, in memory.
pub fn benchmark(cfg: &RunConfig) -> Result<(PipelineRun, BenchmarkReport)> {
    let run = run_pipeline(cfg)?;
    let domain = cfg.domain(&run.operator)?;
    let error = metrics::mc_l2_error(
        &run.operator,
        &run.model,
        &domain,
        cfg.benchmark.mc_points,
        cfg.seed,
    )?;
    let audit = metrics::bound_audit(&run.operator, &run.model, &domain, cfg.benchmark.audit_grid)?;
    let k_alpha_zero = match estimate_k(run.model.samples(), 0.0) {
        Ok(k) => Some(k),
        Err(Error::UnboundedConstant { .. }) => None,
        Err(e) => return Err(e),
    };
    let report = BenchmarkReport {
        operator: run.operator.name().to_string(),
        seed: cfg.seed,
        alpha: run.model.alpha(),
        k: run.model.k().to_vec(),
        k_alpha_zero,
        basis: run.model.frame().to_record(),
        final_mean_error: run.cloud.mean_error(),
        error,
        audit,
    };
    Ok((run, report))
}

/// `benchmark`: every stage's artifacts plus `report.json` and `report.csv`.
pub fn cmd_benchmark(cfg: &RunConfig, out: &Path) -> Result<BenchmarkReport> {
    let (run, report) = benchmark(cfg)?;
    prepare_out(cfg, out)?;
    io::write_cloud(&out.join(INITIAL_CSV), &run.seeded.samples)?;
    io::write_cloud(&out.join(CLOUD_CSV), &run.cloud.samples)?;
    io::write_history(&out.join(HISTORY_CSV), &run.cloud.history)?;
    io::write_trace(&out.join(TRACE_CSV), &run.cloud.history)?;
    io::write_json(&out.join(FRAME_JSON), run.model.frame())?;
    io::write_json(&out.join(MODEL_JSON), &run.model)?;
    let domain = cfg.domain(&run.operator)?;
    let rows = evaluate_rows(&run.model, &domain.grid(cfg.evaluate.grid))?;
    io::write_grid(&out.join(GRID_CSV), &rows)?;
    io::write_json(&out.join(REPORT_JSON), &report)?;
    io::write_metrics(&out.join(REPORT_CSV), &report.metric_rows())?;
    Ok(report)
}
