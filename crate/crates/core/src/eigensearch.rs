//! Monte Carlo search for approximate eigenvectors.
//!
//! The search seeds the domain box uniformly, keeps the samples with the
//! smallest diagonal error, and then repeatedly replaces each survivor with
//! the best of itself and a handful of Gaussian proposals whose spread
//! shrinks with the survivor's own error.
//!
//! Every random draw comes from a ChaCha stream keyed by the run seed and a
//! stream id, so the parallel refinement is bit-identical to a serial run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagonal::EigenSample;
use crate::error::{Error, Result};
use crate::operator::{DomainBox, OperatorHandle};

/// How the proposal spread is derived from a survivor's error `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceMode {
    /// Per-axis standard deviation `τ·ε`.
    #[default]
    Code,
    /// Density `∝ exp(−‖a − x‖²/(τ ε))`, i.e. standard deviation `√(τ ε / 2)`.
    Density,
}

impl VarianceMode {
    pub fn std_dev(self, tau: f64, error: f64) -> f64 {
        match self {
            VarianceMode::Code => tau * error,
            VarianceMode::Density => (tau * error / 2.0).sqrt(),
        }
    }
}

/// Distribution of the initial seed set. Only uniform sampling is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedDistribution {
    #[default]
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Initial uniform sample count.
    pub n_initial: usize,
    /// Survivors kept after seeding.
    pub n_select: usize,
    /// Gaussian proposals per survivor per step.
    pub n_proposals: usize,
    pub tau: f64,
    pub steps: usize,
    pub domain: DomainBox,
    pub rng_seed: u64,
    pub variance_mode: VarianceMode,
    pub distribution: SeedDistribution,
}

impl SearchConfig {
    pub fn new(domain: DomainBox) -> Self {
        Self {
            n_initial: 250,
            n_select: 50,
            n_proposals: 10,
            tau: 5.0,
            steps: 5,
            domain,
            rng_seed: 1,
            variance_mode: VarianceMode::Code,
            distribution: SeedDistribution::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_select == 0 || self.n_select > self.n_initial {
            return Err(Error::Config(format!(
                "need 0 < n_select ≤ n_initial, got n_select={} n_initial={}",
                self.n_select, self.n_initial
            )));
        }
        if self.n_proposals == 0 {
            return Err(Error::Config("n_proposals must be at least 1".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// Per-step record of the survivors' errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub mean_error: f64,
    /// Error of survivor `i` after this step, indexed by survivor slot.
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenCloud {
    pub samples: Vec<EigenSample>,
    pub history: Vec<StepRecord>,
    pub config: SearchConfig,
}

impl EigenCloud {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_error(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.error).sum::<f64>() / self.samples.len() as f64
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.point.clone()).collect()
    }

    fn record(&mut self, step: usize) {
        let errors: Vec<f64> = self.samples.iter().map(|s| s.error).collect();
        self.history.push(StepRecord {
            step,
            mean_error: self.mean_error(),
            errors,
        });
    }
}

const SEED_STREAM: u64 = 0;

/// Stream id for survivor `index` at refinement step `step` (1-based).
fn refine_stream(step: usize, index: usize) -> u64 {
    ((step as u64) << 32) | index as u64
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn stable_sort_by_error(samples: &mut [EigenSample]) {
    samples.sort_by(|a, b| a.error.total_cmp(&b.error));
}

/// Draws `n_initial` uniform points, scores them, and sorts by error
/// (stable, so ties keep sampling order).
pub fn seed_uniform(op: &OperatorHandle, cfg: &SearchConfig) -> Result<EigenCloud> {
    cfg.validate()?;
    if cfg.domain.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: cfg.domain.dim(),
        });
    }
    let mut rng = stream_rng(cfg.rng_seed, SEED_STREAM);
    let points: Vec<_> = (0..cfg.n_initial)
        .map(|_| cfg.domain.sample(&mut rng))
        .collect();
    let mut samples = points
        .into_par_iter()
        .map(|p| EigenSample::evaluate(op, p))
        .collect::<Result<Vec<_>>>()?;
    stable_sort_by_error(&mut samples);
    Ok(EigenCloud {
        samples,
        history: Vec::new(),
        config: cfg.clone(),
    })
}

/// Keeps the `keep` samples with the smallest error.
pub fn select_best(cloud: &EigenCloud, keep: usize) -> Result<EigenCloud> {
    if keep > cloud.len() {
        return Err(Error::Config(format!(
            "cannot select {keep} samples from a cloud of {}",
            cloud.len()
        )));
    }
    let mut samples = cloud.samples.clone();
    stable_sort_by_error(&mut samples);
    samples.truncate(keep);
    Ok(EigenCloud {
        samples,
        history: cloud.history.clone(),
        config: cloud.config.clone(),
    })
}

fn refine_survivor(
    op: &OperatorHandle,
    survivor: &EigenSample,
    cfg: &SearchConfig,
    rng: &mut ChaCha8Rng,
) -> Result<EigenSample> {
    let sd = cfg.variance_mode.std_dev(cfg.tau, survivor.error);
    let mut best = survivor.clone();
    for _ in 0..cfg.n_proposals {
        let mut p: Vec<f64> = survivor
            .point
            .iter()
            .map(|&c| {
                let z: f64 = StandardNormal.sample(rng);
                c + sd * z
            })
            .collect();
        cfg.domain.clamp(&mut p);
        let candidate = EigenSample::evaluate(op, p)?;
        // strict: ties keep the incumbent
        if candidate.error < best.error {
            best = candidate;
        }
    }
    Ok(best)
}

/// One refinement pass; `step` (1-based) selects the random substreams.
pub fn refine_step(
    op: &OperatorHandle,
    cloud: &EigenCloud,
    cfg: &SearchConfig,
    step: usize,
) -> Result<EigenCloud> {
    if cloud.is_empty() {
        return Err(Error::Config("cannot refine an empty cloud".into()));
    }
    let samples = cloud
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = stream_rng(cfg.rng_seed, refine_stream(step, i));
            refine_survivor(op, s, cfg, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = EigenCloud {
        samples,
        history: cloud.history.clone(),
        config: cloud.config.clone(),
    };
    out.record(step);
    Ok(out)
}

/// Seeding, selection and `steps` refinement passes.
///
/// Survivors keep their slot across steps, so `history[k].errors[i]` traces
/// survivor `i`; `history[0]` is the state right after selection.
pub fn run_search(op: &OperatorHandle, cfg: &SearchConfig) -> Result<(EigenCloud, EigenCloud)> {
    let seeded = seed_uniform(op, cfg)?;
    let mut cloud = select_best(&seeded, cfg.n_select)?;
    cloud.record(0);
    for step in 1..=cfg.steps {
        cloud = refine_step(op, &cloud, cfg, step)?;
    }
    Ok((seeded, cloud))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagonal::diagonal_error;
    use crate::operator::{catalog_f5, catalog_r, catalog_s};

    fn r_config(seed: u64) -> SearchConfig {
        SearchConfig {
            n_initial: 500,
            n_select: 100,
            n_proposals: 10,
            tau: 5.0,
            steps: 10,
            rng_seed: seed,
            ..SearchConfig::new(DomainBox::symmetric(2, 5.0))
        }
    }

    #[test]
    fn degenerate_box_yields_origin() {
        let cfg = SearchConfig {
            n_initial: 1,
            n_select: 1,
            ..SearchConfig::new(DomainBox::symmetric(2, 0.0))
        };
        let cloud = seed_uniform(&catalog_s(), &cfg).unwrap();
        assert_eq!(cloud.samples.len(), 1);
        assert_eq!(cloud.samples[0].point, vec![0.0, 0.0]);
        assert_eq!(cloud.samples[0].lambda, 0.0);
        assert_eq!(cloud.samples[0].error, 0.0);
    }

    #[test]
    fn seeding_is_deterministic_and_sorted() {
        let cfg = r_config(3);
        let a = seed_uniform(&catalog_f5(), &cfg).unwrap();
        let b = seed_uniform(&catalog_f5(), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.samples.windows(2).all(|w| w[0].error <= w[1].error));
        let c = seed_uniform(&catalog_f5(), &r_config(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn seeding_s_finds_near_eigenvectors() {
        // A 401×401 grid scan over [-1,1]² puts ~15% of points below ε = 0.05,
        // so 10⁴ uniform draws miss that region with negligible probability.
        let s = catalog_s();
        let grid = s.domain().grid(401);
        let frac = grid
            .iter()
            .filter(|p| diagonal_error(&s, p).unwrap() < 0.05)
            .count() as f64
            / grid.len() as f64;
        assert!(frac > 0.1, "{frac}");
        let cfg = SearchConfig {
            n_initial: 10_000,
            n_select: 1,
            ..SearchConfig::new(s.domain().clone())
        };
        let cloud = seed_uniform(&s, &cfg).unwrap();
        assert!(cloud.samples[0].error < 0.05);
    }

    #[test]
    fn select_best_edges() {
        let cloud = seed_uniform(&catalog_f5(), &r_config(1)).unwrap();
        assert_eq!(select_best(&cloud, cloud.len()).unwrap(), cloud);
        let one = select_best(&cloud, 1).unwrap();
        let min = cloud
            .samples
            .iter()
            .map(|s| s.error)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(one.samples[0].error, min);
        assert!(select_best(&cloud, cloud.len() + 1).is_err());
        let fifth = select_best(&cloud, 100).unwrap();
        assert_eq!(fifth.len() * 5, cloud.len());
    }

    #[test]
    fn zero_error_survivor_is_fixed() {
        let s = catalog_s();
        let cfg = SearchConfig::new(DomainBox::symmetric(2, 1.0));
        let sample = EigenSample::evaluate(&s, vec![0.5, 0.0]).unwrap();
        assert_eq!(sample.error, 0.0);
        let cloud = EigenCloud {
            samples: vec![sample.clone()],
            history: Vec::new(),
            config: cfg.clone(),
        };
        let next = refine_step(&s, &cloud, &cfg, 1).unwrap();
        assert_eq!(next.samples[0], sample);
    }

    #[test]
    fn steps_zero_is_selection() {
        let op = catalog_r(0.0);
        let cfg = SearchConfig {
            steps: 0,
            ..r_config(9)
        };
        let (seeded, cloud) = run_search(&op, &cfg).unwrap();
        assert_eq!(cloud.samples, select_best(&seeded, 100).unwrap().samples);
        assert_eq!(cloud.history.len(), 1);
    }

    #[test]
    fn refinement_is_monotone_and_scores_stored_points() {
        for r in [0.0, 3.0, -10.0] {
            let op = catalog_r(r);
            let cfg = r_config(5);
            let (_, cloud) = run_search(&op, &cfg).unwrap();
            assert_eq!(cloud.history.len(), cfg.steps + 1);
            for w in cloud.history.windows(2) {
                for (a, b) in w[0].errors.iter().zip(&w[1].errors) {
                    assert!(b <= a);
                }
                assert!(w[1].mean_error <= w[0].mean_error);
            }
            for s in &cloud.samples {
                assert!(cfg.domain.contains(&s.point));
                assert_eq!(
                    s.error.to_bits(),
                    diagonal_error(&op, &s.point).unwrap().to_bits()
                );
            }
        }
    }

    #[test]
    fn r0_refinement_reduces_mean_error() {
        let (_, cloud) = run_search(&catalog_r(0.0), &r_config(2)).unwrap();
        let first = cloud.history.first().unwrap().mean_error;
        let last = cloud.history.last().unwrap().mean_error;
        // Seeds 1..=20 give ratios between 0.03 and 0.095.
        assert!(last < 0.2 * first, "{last} vs {first}");
    }

    #[test]
    fn r0_cloud_concentrates_on_eigenvector_curves() {
        // Seeds 1..=20: between 93% and 99% of survivors end below ε = 0.1.
        for seed in [1, 2, 3] {
            let (_, cloud) = run_search(&catalog_r(0.0), &r_config(seed)).unwrap();
            let near = cloud.samples.iter().filter(|s| s.error < 0.1).count();
            assert!(
                near as f64 >= 0.8 * cloud.len() as f64,
                "seed {seed}: {near}"
            );
            let median = |e: &[f64]| crate::metrics::Summary::of(e).unwrap().median;
            let first = median(&cloud.history[0].errors);
            let last = median(&cloud.history.last().unwrap().errors);
            assert!(last < first);
        }
    }

    #[test]
    fn density_mode_differs_from_code_mode() {
        let op = catalog_f5();
        let cfg = SearchConfig {
            rng_seed: 8,
            ..SearchConfig::new(DomainBox::symmetric(2, 5.0))
        };
        let dens = SearchConfig {
            variance_mode: VarianceMode::Density,
            ..cfg.clone()
        };
        let (_, a) = run_search(&op, &cfg).unwrap();
        let (_, b) = run_search(&op, &dens).unwrap();
        assert_eq!(a.history[0], b.history[0]);
        assert_ne!(a.samples, b.samples);
    }

    #[test]
    fn invalid_configs() {
        let base = SearchConfig::new(DomainBox::symmetric(2, 5.0));
        assert!(SearchConfig {
            n_select: 0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(SearchConfig {
            n_select: 300,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(SearchConfig {
            n_proposals: 0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(SearchConfig {
            tau: 0.0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(base.validate().is_ok());
    }
}
