//! Input densities and class-conditional rejection sampling.
//!
//! All randomness derives from the density's seed. Each consumer draws from
//! its own ChaCha8 stream, `ChaCha8Rng::seed_from_u64(seed)` with
//! `set_stream(id)`; the ids in [`streams`] are fixed so runs are
//! reproducible byte for byte.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::blackbox::BlackBox;
use crate::error::{MesError, Result};
use crate::explanation::FeatureVector;

/// Stream ids for per-component RNG derivation.
pub mod streams {
    /// Unconditional draws (`InputDensity::sample`).
    pub const UNCONDITIONAL: u64 = 0;
    /// Class-0 pool for score tables.
    pub const CLASS_0: u64 = 1;
    /// Class-1 pool for score tables.
    pub const CLASS_1: u64 = 2;
    /// Anchor selection in the coverage loop.
    pub const ANCHOR_PICK: u64 = 3;
    /// Base for per-iteration surrogate-fit sampling; iteration `t` uses
    /// `FIT_BASE + 2t` (class 0) and `FIT_BASE + 2t + 1` (class 1).
    pub const FIT_BASE: u64 = 1 << 32;
}

pub const DEFAULT_BATCH: usize = 1024;
pub const DEFAULT_MAX_DRAWS_FACTOR: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    StandardGaussian { dim: usize },
    Empirical { points: Vec<FeatureVector> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputDensity {
    pub kind: DensityKind,
    pub seed: u64,
}

impl InputDensity {
    pub fn standard_gaussian(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(MesError::InvalidParameter("dimension must be >= 1".into()));
        }
        Ok(Self {
            kind: DensityKind::StandardGaussian { dim },
            seed,
        })
    }

    pub fn empirical(points: Vec<FeatureVector>, seed: u64) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| MesError::InvalidParameter("empirical dataset is empty".into()))?;
        let dim = first.dim();
        if let Some(bad) = points.iter().find(|p| p.dim() != dim) {
            return Err(MesError::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(Self {
            kind: DensityKind::Empirical { points },
            seed,
        })
    }

    /// Empirical density over the rows of a CSV file.
    pub fn from_csv(path: &Path, seed: u64) -> Result<Self> {
        Self::empirical(crate::io::read_points_csv(path)?, seed)
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DensityKind::StandardGaussian { dim } => *dim,
            DensityKind::Empirical { points } => points[0].dim(),
        }
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> FeatureVector {
        match &self.kind {
            DensityKind::StandardGaussian { dim } => {
                let v: Vec<f64> = (0..*dim).map(|_| rng.sample(StandardNormal)).collect();
                FeatureVector::new(v).expect("gaussian draws are finite")
            }
            DensityKind::Empirical { points } => points[rng.random_range(0..points.len())].clone(),
        }
    }

    pub fn draw_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<FeatureVector> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    /// `n` iid draws from the unconditional stream.
    pub fn sample(&self, n: usize) -> Result<Vec<FeatureVector>> {
        if n == 0 {
            return Err(MesError::InvalidParameter("sample count must be >= 1".into()));
        }
        Ok(self.draw_n(&mut self.rng(streams::UNCONDITIONAL), n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RejectionConfig {
    /// Points per black-box query.
    pub batch_size: usize,
    /// Draw cap as a multiple of the requested count.
    pub max_draws_factor: usize,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        Self {
            batch_size: DEFAULT_BATCH,
            max_draws_factor: DEFAULT_MAX_DRAWS_FACTOR,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConditionalSample {
    pub points: Vec<FeatureVector>,
    pub draws: usize,
}

impl ConditionalSample {
    pub fn acceptance_rate(&self) -> f64 {
        self.points.len() as f64 / self.draws as f64
    }
}

/// Rejection-samples `n` points with `f(x) = label` from `p`, using `rng`.
pub fn conditional_sample_with<R: Rng + ?Sized>(
    p: &InputDensity,
    f: &dyn BlackBox,
    label: bool,
    n: usize,
    max_draws: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<ConditionalSample> {
    if n == 0 {
        return Err(MesError::InvalidParameter("sample count must be >= 1".into()));
    }
    if max_draws < n {
        return Err(MesError::InvalidParameter(format!(
            "max_draws ({max_draws}) must be >= n ({n})"
        )));
    }
    let batch_size = batch_size.max(1);
    let mut points = Vec::with_capacity(n);
    let mut draws = 0;
    while points.len() < n {
        if draws >= max_draws {
            return Err(MesError::ClassTooRare {
                label: label as u8,
                accepted: points.len(),
                requested: n,
                draws,
                rate: points.len() as f64 / draws as f64,
            });
        }
        let chunk = batch_size.min(max_draws - draws);
        let candidates = p.draw_n(rng, chunk);
        draws += chunk;
        let labels = f.predict_batch(&candidates)?;
        for (x, l) in candidates.into_iter().zip(labels) {
            if l == label && points.len() < n {
                points.push(x);
            }
        }
    }
    Ok(ConditionalSample { points, draws })
}

/// Draws `n` points from `p(x | f = label)` on the class's own stream.
pub fn conditional_sample(
    p: &InputDensity,
    f: &dyn BlackBox,
    label: bool,
    n: usize,
    cfg: &RejectionConfig,
) -> Result<ConditionalSample> {
    let stream = if label { streams::CLASS_1 } else { streams::CLASS_0 };
    conditional_sample_with(
        p,
        f,
        label,
        n,
        n.saturating_mul(cfg.max_draws_factor),
        cfg.batch_size,
        &mut p.rng(stream),
    )
}

/// Both class pools, `(class 0, class 1)`, each drawn on its own stream.
/// The two run concurrently when the classifier is thread-safe; the result
/// is identical either way.
pub fn class_pools(
    p: &InputDensity,
    f: &dyn BlackBox,
    n: usize,
    cfg: &RejectionConfig,
) -> Result<(ConditionalSample, ConditionalSample)> {
    if f.is_thread_safe() {
        let (neg, pos) = std::thread::scope(|s| {
            let neg = s.spawn(|| conditional_sample(p, f, false, n, cfg));
            let pos = conditional_sample(p, f, true, n, cfg);
            (neg.join().expect("sampling thread panicked"), pos)
        });
        Ok((neg?, pos?))
    } else {
        let neg = conditional_sample(p, f, false, n, cfg)?;
        let pos = conditional_sample(p, f, true, n, cfg)?;
        Ok((neg, pos))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackbox::FnModel;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn gaussian_sample_shape_and_mean() {
        let p = InputDensity::standard_gaussian(3, 7).unwrap();
        let s = p.sample(5).unwrap();
        assert_eq!(s.len(), 5);
        assert!(s.iter().all(|x| x.dim() == 3 && x.iter().all(|v| v.is_finite())));

        let big = p.sample(20_000).unwrap();
        for j in 0..3 {
            let mean = big.iter().map(|x| x[j]).sum::<f64>() / big.len() as f64;
            assert!(mean.abs() < 0.05, "mean {mean}");
        }
    }

    #[test]
    fn empirical_sample_stays_in_support() {
        let a = fv(&[1.0, 2.0]);
        let b = fv(&[-1.0, 0.5]);
        let p = InputDensity::empirical(vec![a.clone(), b.clone()], 3).unwrap();
        for x in p.sample(4).unwrap() {
            assert!(x == a || x == b);
        }
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        let p = InputDensity::standard_gaussian(2, 99).unwrap();
        assert_eq!(p.sample(10).unwrap(), p.sample(10).unwrap());
        let q = InputDensity::standard_gaussian(2, 100).unwrap();
        assert_ne!(p.sample(10).unwrap(), q.sample(10).unwrap());
    }

    #[test]
    fn empirical_rejects_ragged_or_empty() {
        assert!(InputDensity::empirical(vec![], 0).is_err());
        assert!(InputDensity::empirical(vec![fv(&[1.0]), fv(&[1.0, 2.0])], 0).is_err());
        assert!(InputDensity::standard_gaussian(0, 0).is_err());
    }

    #[test]
    fn always_accept() {
        let p = InputDensity::standard_gaussian(2, 1).unwrap();
        let f = FnModel::new(|_: &[f64]| true);
        let mut rng = p.rng(streams::CLASS_1);
        let s = conditional_sample_with(&p, &f, true, 10, 10, 1, &mut rng).unwrap();
        assert_eq!(s.points.len(), 10);
        assert_eq!(s.draws, 10);
        let mut rng = p.rng(streams::CLASS_1);
        assert_eq!(s.points, p.draw_n(&mut rng, 10));
    }

    #[test]
    fn empty_class_is_too_rare() {
        let p = InputDensity::standard_gaussian(2, 1).unwrap();
        let f = FnModel::new(|_: &[f64]| true);
        let mut rng = p.rng(0);
        let err = conditional_sample_with(&p, &f, false, 1, 100, 16, &mut rng).unwrap_err();
        match err {
            MesError::ClassTooRare {
                draws, accepted, rate, ..
            } => {
                assert_eq!(draws, 100);
                assert_eq!(accepted, 0);
                assert_eq!(rate, 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn half_space_acceptance_rate() {
        let p = InputDensity::standard_gaussian(1, 5).unwrap();
        let f = FnModel::new(|x: &[f64]| x[0] <= 0.0);
        let s = conditional_sample(&p, &f, true, 1000, &RejectionConfig::default()).unwrap();
        assert_eq!(s.points.len(), 1000);
        assert!(s.points.iter().all(|x| x[0] <= 0.0));
        let rate = s.acceptance_rate();
        assert!((rate - 0.5).abs() < 0.05, "rate {rate}");
    }

    #[test]
    fn class_pools_same_with_or_without_threads() {
        struct Serial;
        impl BlackBox for Serial {
            fn predict(&self, x: &[f64]) -> Result<bool> {
                Ok(x[0] + x[1] > 0.3)
            }
            fn is_thread_safe(&self) -> bool {
                false
            }
        }
        let p = InputDensity::standard_gaussian(2, 11).unwrap();
        let cfg = RejectionConfig::default();
        let (a0, a1) = class_pools(&p, &FnModel::new(|x: &[f64]| x[0] + x[1] > 0.3), 200, &cfg).unwrap();
        let (b0, b1) = class_pools(&p, &Serial, 200, &cfg).unwrap();
        assert_eq!(a0.points, b0.points);
        assert_eq!(a1.points, b1.points);
        assert!(a0.points.iter().all(|x| x[0] + x[1] <= 0.3));
        assert!(a1.points.iter().all(|x| x[0] + x[1] > 0.3));
    }
}
