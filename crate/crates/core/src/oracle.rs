//! Monte Carlo estimates of the ensemble moments, independent of the
//! quadrature path.
//!
//! Samples are drawn in fixed-size blocks. Block `k` uses a ChaCha8 stream
//! seeded with the user seed and stream index `k`, and block statistics are
//! merged in index order, so results depend only on `(seed, n_samples)` and
//! not on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ensemble::InputEnsemble;
use crate::error::{Error, Result};
use crate::fidelity::{one_shot_fidelity, InputState, NoiseSpec, ResourceSpec};

pub const MIN_SAMPLES: usize = 1000;
pub const BLOCK_SIZE: usize = 16_384;

/// Streaming mean and central moments up to order four.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl RunningMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2 - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    /// Combines two disjoint sample sets.
    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let na = self.n as f64;
        let nb = other.n as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let d3 = d2 * delta;
        let d4 = d2 * d2;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3 + other.m3 + d3 * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        Self {
            n: self.n + other.n,
            mean: self.mean + delta * nb / n,
            m2,
            m3,
            m4,
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population variance `μ₂`.
    pub fn variance(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m2 / self.n as f64
        }
    }

    /// Population fourth central moment `μ₄`.
    pub fn fourth_central(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m4 / self.n as f64
        }
    }

    /// Unbiased variance `M₂/(n−1)`.
    pub fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Square root of the unbiased variance.
    pub fn std_dev(&self) -> f64 {
        self.sample_variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn stderr_mean(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        self.std_dev() / (self.n as f64).sqrt()
    }

    /// Delta-method standard error of the standard deviation.
    pub fn stderr_std_dev(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        let s = self.std_dev();
        if s == 0.0 {
            return 0.0;
        }
        let mu2 = self.variance();
        let var_mu2 = ((self.fourth_central() - mu2 * mu2) / self.n as f64).max(0.0);
        var_mu2.sqrt() / (2.0 * s)
    }
}

/// Monte Carlo estimate of `F` and `ΔF`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub deviation: f64,
    pub stderr: f64,
    pub stderr_deviation: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl McEstimate {
    fn from_moments(m: &RunningMoments, seed: u64) -> Self {
        Self {
            mean: m.mean(),
            deviation: m.std_dev(),
            stderr: m.stderr_mean(),
            stderr_deviation: m.stderr_std_dev(),
            n_samples: m.count() as usize,
            seed,
        }
    }
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Statistics of `observable(input)` over `n_samples` inputs drawn from the
/// ensemble.
pub fn sample_statistics<F>(ensemble: &InputEnsemble, n_samples: usize, seed: u64, observable: F) -> Result<RunningMoments>
where
    F: Fn(&InputState) -> Result<f64> + Sync,
{
    let n_blocks = n_samples.div_ceil(BLOCK_SIZE);
    let blocks: Vec<RunningMoments> = (0..n_blocks)
        .into_par_iter()
        .map(|k| {
            let mut rng = block_rng(seed, k);
            let len = BLOCK_SIZE.min(n_samples - k * BLOCK_SIZE);
            let mut acc = RunningMoments::new();
            for _ in 0..len {
                let input = ensemble.sample(&mut rng)?;
                acc.push(observable(&input)?);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(blocks.iter().fold(RunningMoments::new(), |acc, b| acc.merge(b)))
}

/// Monte Carlo `F` and `ΔF` at fixed gain.
pub fn mc_moments(
    resource: &ResourceSpec,
    ensemble: &InputEnsemble,
    g: f64,
    noise: &NoiseSpec,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_SAMPLES,
            got: n_samples,
        });
    }
    let stats = sample_statistics(ensemble, n_samples, seed, |input| {
        one_shot_fidelity(resource, input, g, noise)
    })?;
    Ok(McEstimate::from_moments(&stats, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::InputFamily;
    use crate::fidelity::ResourceFamily;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn naive(xs: &[f64]) -> (f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let c = |p: i32| xs.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / n;
        (mean, c(2), c(4))
    }

    proptest! {
        #[test]
        fn streaming_matches_two_pass(xs in prop::collection::vec(-10.0f64..10.0, 2..200), split in 0usize..200) {
            let split = split.min(xs.len());
            let mut whole = RunningMoments::new();
            xs.iter().for_each(|&x| whole.push(x));
            let mut a = RunningMoments::new();
            let mut b = RunningMoments::new();
            xs[..split].iter().for_each(|&x| a.push(x));
            xs[split..].iter().for_each(|&x| b.push(x));
            let merged = a.merge(&b);
            let (mean, mu2, mu4) = naive(&xs);
            for m in [whole, merged] {
                prop_assert!((m.mean() - mean).abs() < 1e-10);
                prop_assert!((m.variance() - mu2).abs() < 1e-9 * (1.0 + mu2));
                prop_assert!((m.fourth_central() - mu4).abs() < 1e-8 * (1.0 + mu4));
            }
        }
    }

    #[test]
    fn merge_order_is_immaterial() {
        let parts: Vec<RunningMoments> = (0..7)
            .map(|k| {
                let mut m = RunningMoments::new();
                for i in 0..(100 + 37 * k) {
                    m.push(((i * 7919 + k * 104729) % 1000) as f64 / 1000.0);
                }
                m
            })
            .collect();
        let fwd = parts.iter().fold(RunningMoments::new(), |a, b| a.merge(b));
        let rev = parts.iter().rev().fold(RunningMoments::new(), |a, b| a.merge(b));
        assert_eq!(fwd.count(), rev.count());
        assert_abs_diff_eq!(fwd.mean(), rev.mean(), epsilon = 1e-12);
        assert_abs_diff_eq!(fwd.variance(), rev.variance(), epsilon = 1e-12);
        assert_abs_diff_eq!(fwd.fourth_central(), rev.fourth_central(), epsilon = 1e-12);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let res = ResourceSpec::new(ResourceFamily::PhotonAdded, 0.7).unwrap();
        let ens = InputEnsemble::uniform(InputFamily::SqueezedCoherent, 1.0).unwrap();
        let run = |seed| mc_moments(&res, &ens, 0.8, &NoiseSpec::NOISELESS, 40_000, seed).unwrap();
        assert_eq!(run(11), run(11));
        assert_ne!(run(11).mean, run(12).mean);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let res = ResourceSpec::tmsv(0.5).unwrap();
        let ens = InputEnsemble::gaussian_coherent(2.0).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_moments(&res, &ens, 0.7, &NoiseSpec::NOISELESS, 50_000, 3).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn stderr_scales_as_inverse_sqrt() {
        let res = ResourceSpec::tmsv(0.5).unwrap();
        let ens = InputEnsemble::gaussian_coherent(2.0).unwrap();
        let run = |n| mc_moments(&res, &ens, 0.7, &NoiseSpec::NOISELESS, n, 5).unwrap().stderr;
        let se: Vec<f64> = [10_000, 100_000, 1_000_000].into_iter().map(run).collect();
        for w in se.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio / 10f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio}");
        }
    }

    #[test]
    fn degenerate_ensemble_reproduces_vacuum() {
        let res = ResourceSpec::new(ResourceFamily::PhotonSubtracted, 1.0).unwrap();
        let ens = InputEnsemble::uniform(InputFamily::SqueezedCoherent, 1e-4).unwrap();
        let est = mc_moments(&res, &ens, 0.8, &NoiseSpec::NOISELESS, 10_000, 9).unwrap();
        let f0 = one_shot_fidelity(&res, &InputState::vacuum(), 0.8, &NoiseSpec::NOISELESS).unwrap();
        assert_abs_diff_eq!(est.mean, f0, epsilon = 1e-7);
        assert!(est.deviation < 1e-6);
    }

    #[test]
    fn unbiased_variance() {
        let mut m = RunningMoments::new();
        [1.0, 2.0, 3.0, 4.0].iter().for_each(|&x| m.push(x));
        assert_abs_diff_eq!(m.sample_variance(), 5.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.variance(), 1.25, epsilon = 1e-15);
        assert_abs_diff_eq!(m.stderr_mean(), (5.0f64 / 3.0).sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_integrand_has_zero_spread() {
        let res = ResourceSpec::tmsv(1.0).unwrap();
        let ens = InputEnsemble::gaussian_coherent(3.0).unwrap();
        let est = mc_moments(&res, &ens, 1.0, &NoiseSpec::NOISELESS, 5_000, 1).unwrap();
        assert_abs_diff_eq!(est.mean, 1.0 / (1.0 + (-2.0f64).exp()), epsilon = 1e-14);
        assert!(est.deviation < 1e-7);
        assert!(est.stderr < 1e-9);
        assert_eq!(est.n_samples, 5_000);
    }

    #[test]
    fn rejects_small_runs() {
        let res = ResourceSpec::tmsv(1.0).unwrap();
        let ens = InputEnsemble::gaussian_coherent(1.0).unwrap();
        assert!(matches!(
            mc_moments(&res, &ens, 0.5, &NoiseSpec::NOISELESS, 999, 0),
            Err(Error::TooFewSamples { min: 1000, got: 999 })
        ));
    }
}
