//! Ensemble moments of the one-shot fidelity and their gain optimization.
//!
//! The average fidelity `F = ⟨f⟩` and second moment `⟨f²⟩` are ratios of
//! domain integrals against the ensemble weight; the weight itself is
//! integrated with the same nodes so truncation and rule errors cancel in
//! the ratio. The fidelity deviation is `ΔF = √(⟨f²⟩ − F²)`.

use crate::ensemble::{DomainQuadrature, InputEnsemble};
use crate::error::{Error, Result};
use crate::fidelity::{one_shot_fidelity_with, Lambda2Source, NoiseSpec, ResourceSpec};
use crate::optimize::{grid_golden_maximize, GridGoldenOptions};

/// Negative radicands down to this size are rounding, not failure.
pub const RADICAND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentOptions {
    pub quadrature: DomainQuadrature,
    pub gain_search: GridGoldenOptions,
    pub lambda2_source: Lambda2Source,
}

impl MomentOptions {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.quadrature.rel_tol = rel_tol;
        self
    }
}

/// First and second moment at a fixed gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub second: f64,
    pub error_mean: f64,
    pub error_second: f64,
    pub n_evals: u64,
}

impl Moments {
    pub fn deviation(&self) -> Result<f64> {
        deviation_from_moments(self.mean, self.second)
    }
}

/// `√(⟨f²⟩ − F²)`, with radicands in `[−1e−12, 0]` mapped to zero.
pub fn deviation_from_moments(mean: f64, second: f64) -> Result<f64> {
    let radicand = second - mean * mean;
    if radicand < -RADICAND_SLACK {
        return Err(Error::InconsistentMoments { deficit: -radicand });
    }
    Ok(radicand.max(0.0).sqrt())
}

/// Average fidelity and second moment at gain `g`.
pub fn moments(
    resource: &ResourceSpec,
    ensemble: &InputEnsemble,
    g: f64,
    noise: &NoiseSpec,
    opts: &MomentOptions,
) -> Result<Moments> {
    let domain = ensemble.domain();
    let res = domain.integrate(&opts.quadrature, |input| {
        let f = one_shot_fidelity_with(resource, input, g, noise, opts.lambda2_source)?;
        Ok([1.0, f, f * f])
    })?;
    let [norm, first, second] = res.estimate.value;
    let [err_norm, err_first, err_second] = res.estimate.error;
    let mean = first / norm;
    let second_moment = second / norm;
    let out = Moments {
        mean,
        second: second_moment,
        error_mean: (err_first + mean * err_norm) / norm,
        error_second: (err_second + second_moment * err_norm) / norm,
        n_evals: res.n_evals,
    };
    if !res.converged {
        return Err(Error::AccuracyNotReached {
            estimate: out.mean,
            error: out.error_mean,
            n_evals: out.n_evals,
        });
    }
    Ok(out)
}

/// `F` and its quadrature error estimate at fixed gain.
pub fn average_fidelity(
    resource: &ResourceSpec,
    ensemble: &InputEnsemble,
    g: f64,
    noise: &NoiseSpec,
    opts: &MomentOptions,
) -> Result<(f64, f64)> {
    let m = moments(resource, ensemble, g, noise, opts)?;
    Ok((m.mean, m.error_mean))
}

/// `⟨f²⟩` and its quadrature error estimate at fixed gain.
pub fn second_moment(
    resource: &ResourceSpec,
    ensemble: &InputEnsemble,
    g: f64,
    noise: &NoiseSpec,
    opts: &MomentOptions,
) -> Result<(f64, f64)> {
    let m = moments(resource, ensemble, g, noise, opts)?;
    Ok((m.second, m.error_second))
}

pub fn fidelity_deviation(
    resource: &ResourceSpec,
    ensemble: &InputEnsemble,
    g: f64,
    noise: &NoiseSpec,
    opts: &MomentOptions,
) -> Result<f64> {
    moments(resource, ensemble, g, noise, opts)?.deviation()
}

/// Figures of merit at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentResult {
    pub avg_fidelity: f64,
    /// Evaluated at `g_opt`, not separately optimized.
    pub fidelity_deviation: f64,
    pub second_moment: f64,
    pub g_opt: f64,
    pub quad_error_f: f64,
    pub quad_error_f2: f64,
    /// Kernel calls over the whole gain search.
    pub n_evals: u64,
}

impl MomentResult {
    /// Wraps moments computed at a fixed gain.
    pub fn at_gain(g: f64, m: &Moments) -> Result<Self> {
        Ok(Self {
            avg_fidelity: m.mean,
            fidelity_deviation: m.deviation()?,
            second_moment: m.second,
            g_opt: g,
            quad_error_f: m.error_mean,
            quad_error_f2: m.error_second,
            n_evals: m.n_evals,
        })
    }
}

/// Maximizes `F` over the gain `g ∈ [0, 1]` and reports `ΔF` at the
/// maximizer.
pub fn optimize_gain(
    resource: &ResourceSpec,
    ensemble: &InputEnsemble,
    noise: &NoiseSpec,
    opts: &MomentOptions,
) -> Result<MomentResult> {
    let best = grid_golden_maximize(
        |g| moments(resource, ensemble, g, noise, opts),
        |m: &Moments| m.mean,
        0.0,
        1.0,
        &opts.gain_search,
    )?;
    let mut out = MomentResult::at_gain(best.x, &best.value)?;
    // n_calls moment evaluations of roughly equal cost
    out.n_evals = best.value.n_evals * best.n_calls as u64;
    Ok(out)
}

/// The same protocol without entanglement (`r = 0`) and without noise,
/// gain-optimized.
pub fn entanglement_free_baseline(ensemble: &InputEnsemble, opts: &MomentOptions) -> Result<MomentResult> {
    let resource = ResourceSpec::tmsv(0.0)?;
    optimize_gain(&resource, ensemble, &NoiseSpec::NOISELESS, opts)
}
