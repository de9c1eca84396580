//! Input ensembles, their integration domains and samplers.
//!
//! Two energy regularizations are supported: a constant density inside the
//! energy shell `b² + sinh²ε ≤ sinh²L`, and Gaussian suppression
//! `e^{−b²/σ_c} e^{−ε²/σ_s}`. Each is restricted to coherent, squeezed or
//! squeezed-coherent inputs.

use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{invalid, Error, Result};
pub use crate::fidelity::input_energy;
use crate::fidelity::InputState;
use crate::quadrature::{integrate_until, AdaptiveOptions, Estimate, GaussLegendre, Integral};

/// Gaussian widths are truncated at this many `√σ`.
pub const GAUSSIAN_CUT_SIGMAS: f64 = 6.0;

/// Largest `σ_s` and `σ_c` inside the studied window.
pub const STUDIED_SIGMA_S_MAX: f64 = 5.0;
pub const STUDIED_SIGMA_C_MAX: f64 = 10.0;

/// Rejection attempts per sample before the sampler gives up.
pub const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputFamily {
    Coherent,
    Squeezed,
    SqueezedCoherent,
}

impl InputFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            InputFamily::Coherent => "coherent",
            InputFamily::Squeezed => "squeezed",
            InputFamily::SqueezedCoherent => "squeezed-coherent",
        }
    }

    fn has_displacement(self) -> bool {
        self != InputFamily::Squeezed
    }

    fn has_squeezing(self) -> bool {
        self != InputFamily::Coherent
    }
}

impl fmt::Display for InputFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InputFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "coherent" => Ok(InputFamily::Coherent),
            "squeezed" => Ok(InputFamily::Squeezed),
            "squeezed-coherent" | "sc" => Ok(InputFamily::SqueezedCoherent),
            other => Err(invalid(
                "family",
                format!("unknown input family `{other}` (expected coherent, squeezed or squeezed-coherent)"),
            )),
        }
    }
}

/// How the cutoff `L` bounds the displacement of a uniform coherent ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CoherentCutoff {
    /// Same energy as squeezing up to `L`: `b ≤ sinh L`.
    #[default]
    SqueezingEquivalent,
    /// `L` is the displacement radius itself: `b ≤ L`.
    DisplacementRadius,
}

impl CoherentCutoff {
    pub fn as_str(self) -> &'static str {
        match self {
            CoherentCutoff::SqueezingEquivalent => "squeezing",
            CoherentCutoff::DisplacementRadius => "displacement",
        }
    }
}

impl FromStr for CoherentCutoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "squeezing" | "sinh" => Ok(CoherentCutoff::SqueezingEquivalent),
            "displacement" | "radius" => Ok(CoherentCutoff::DisplacementRadius),
            other => Err(invalid(
                "coherent_cutoff",
                format!("unknown convention `{other}` (expected squeezing or displacement)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnsembleKind {
    ConstrainedUniform {
        cutoff: f64,
        coherent_cutoff: CoherentCutoff,
    },
    GaussianSuppressed {
        sigma_s: Option<f64>,
        sigma_c: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputEnsemble {
    kind: EnsembleKind,
    family: InputFamily,
}

impl InputEnsemble {
    /// Constant density inside the energy shell set by `cutoff > 0`.
    pub fn uniform(family: InputFamily, cutoff: f64) -> Result<Self> {
        if !cutoff.is_finite() || cutoff <= 0.0 {
            return Err(invalid("L", format!("{cutoff} must be finite and positive")));
        }
        Ok(Self {
            kind: EnsembleKind::ConstrainedUniform {
                cutoff,
                coherent_cutoff: CoherentCutoff::default(),
            },
            family,
        })
    }

    /// Selects the cutoff convention for uniform coherent ensembles. No effect
    /// on other ensembles.
    pub fn with_coherent_cutoff(mut self, convention: CoherentCutoff) -> Self {
        if let EnsembleKind::ConstrainedUniform {
            ref mut coherent_cutoff,
            ..
        } = self.kind
        {
            *coherent_cutoff = convention;
        }
        self
    }

    /// Gaussian suppression. `sigma_s` is required for squeezed inputs,
    /// `sigma_c` for coherent ones, both for squeezed-coherent ones; widths not
    /// used by the family must be absent.
    pub fn gaussian(family: InputFamily, sigma_s: Option<f64>, sigma_c: Option<f64>) -> Result<Self> {
        check_sigma("sigma_s", sigma_s, family.has_squeezing())?;
        check_sigma("sigma_c", sigma_c, family.has_displacement())?;
        Ok(Self {
            kind: EnsembleKind::GaussianSuppressed { sigma_s, sigma_c },
            family,
        })
    }

    pub fn gaussian_coherent(sigma_c: f64) -> Result<Self> {
        Self::gaussian(InputFamily::Coherent, None, Some(sigma_c))
    }

    pub fn gaussian_squeezed(sigma_s: f64) -> Result<Self> {
        Self::gaussian(InputFamily::Squeezed, Some(sigma_s), None)
    }

    pub fn gaussian_squeezed_coherent(sigma_s: f64, sigma_c: f64) -> Result<Self> {
        Self::gaussian(InputFamily::SqueezedCoherent, Some(sigma_s), Some(sigma_c))
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn family(&self) -> InputFamily {
        self.family
    }

    /// Total energy budget `sinh²L` of a uniform ensemble.
    pub fn energy_budget(&self) -> Option<f64> {
        match self.kind {
            EnsembleKind::ConstrainedUniform { cutoff, .. } => Some(cutoff.sinh().powi(2)),
            EnsembleKind::GaussianSuppressed { .. } => None,
        }
    }

    /// True when a Gaussian width lies outside `σ_s ≤ 5`, `σ_c ≤ 10`.
    pub fn outside_studied_window(&self) -> bool {
        match self.kind {
            EnsembleKind::GaussianSuppressed { sigma_s, sigma_c } => {
                sigma_s.is_some_and(|s| s > STUDIED_SIGMA_S_MAX)
                    || sigma_c.is_some_and(|c| c > STUDIED_SIGMA_C_MAX)
            }
            EnsembleKind::ConstrainedUniform { .. } => false,
        }
    }

    /// Integration domain for fidelity moments.
    pub fn domain(&self) -> IntegrationDomain {
        self.build_domain(false)
    }

    /// Integration domain for the average energy. For Gaussian squeezing the
    /// `sinh²ε` factor moves the integrand peak out to `ε = σ_s`, so the cut
    /// is placed at `σ_s + 6√σ_s` instead of `6√σ_s`.
    pub fn energy_domain(&self) -> IntegrationDomain {
        self.build_domain(true)
    }

    fn build_domain(&self, for_energy: bool) -> IntegrationDomain {
        let family = self.family;
        match self.kind {
            EnsembleKind::ConstrainedUniform {
                cutoff,
                coherent_cutoff,
            } => {
                let (eps_max, b_limit) = match family {
                    InputFamily::Coherent => {
                        let b_max = match coherent_cutoff {
                            CoherentCutoff::SqueezingEquivalent => cutoff.sinh(),
                            CoherentCutoff::DisplacementRadius => cutoff,
                        };
                        (0.0, BLimit::Fixed(b_max))
                    }
                    InputFamily::Squeezed => (cutoff, BLimit::Fixed(0.0)),
                    InputFamily::SqueezedCoherent => (
                        cutoff,
                        BLimit::EnergyShell {
                            sinh_cutoff: cutoff.sinh(),
                        },
                    ),
                };
                IntegrationDomain {
                    family,
                    eps_max,
                    b_limit,
                    density: Density::Uniform,
                    truncation_tail: 0.0,
                }
            }
            EnsembleKind::GaussianSuppressed { sigma_s, sigma_c } => {
                let eps_max = sigma_s.map_or(0.0, |s| {
                    let base = GAUSSIAN_CUT_SIGMAS * s.sqrt();
                    if for_energy {
                        s + base
                    } else {
                        base
                    }
                });
                let b_max = sigma_c.map_or(0.0, |c| GAUSSIAN_CUT_SIGMAS * c.sqrt());
                // Mass of x e^{−x²/σ} beyond 6√σ is e^{−36} per sector.
                let sector_tail = (-GAUSSIAN_CUT_SIGMAS * GAUSSIAN_CUT_SIGMAS).exp();
                let sectors = sigma_s.is_some() as i32 + sigma_c.is_some() as i32;
                IntegrationDomain {
                    family,
                    eps_max,
                    b_limit: BLimit::Fixed(b_max),
                    density: Density::Gaussian {
                        inv_sigma_s: sigma_s.map_or(0.0, |s| 1.0 / s),
                        inv_sigma_c: sigma_c.map_or(0.0, |c| 1.0 / c),
                    },
                    truncation_tail: -((sectors as f64) * (-sector_tail).ln_1p()).exp_m1(),
                }
            }
        }
    }

    /// Draws one input distributed as the ensemble density times the
    /// phase-space measure.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<InputState> {
        let phi = if self.family.has_displacement() {
            TAU * rng.random::<f64>()
        } else {
            0.0
        };
        let theta = if self.family.has_squeezing() {
            TAU * rng.random::<f64>()
        } else {
            0.0
        };
        let (b, eps) = match self.kind {
            EnsembleKind::ConstrainedUniform {
                cutoff,
                coherent_cutoff,
            } => match self.family {
                InputFamily::Coherent => {
                    let b_max = match coherent_cutoff {
                        CoherentCutoff::SqueezingEquivalent => cutoff.sinh(),
                        CoherentCutoff::DisplacementRadius => cutoff,
                    };
                    (b_max * rng.random::<f64>().sqrt(), 0.0)
                }
                InputFamily::Squeezed => (0.0, cutoff * rng.random::<f64>().sqrt()),
                InputFamily::SqueezedCoherent => sample_energy_shell(cutoff, rng)?,
            },
            EnsembleKind::GaussianSuppressed { sigma_s, sigma_c } => {
                // x e^{−x²/σ} dx  ⇔  x² ~ Exp(mean σ)
                let mut radial = |sigma: Option<f64>| {
                    sigma.map_or(0.0, |s| (-s * (-rng.random::<f64>()).ln_1p()).sqrt())
                };
                let eps = radial(sigma_s);
                let b = radial(sigma_c);
                (b, eps)
            }
        };
        InputState::new(b, phi, eps, theta)
    }
}

/// Uniform in (ε², b²) over the bounding box, rejected on the energy shell;
/// the resulting density in (ε, b) is proportional to `b ε`.
fn sample_energy_shell<R: Rng + ?Sized>(cutoff: f64, rng: &mut R) -> Result<(f64, f64)> {
    let budget = cutoff.sinh().powi(2);
    for _ in 0..MAX_REJECTIONS {
        let eps = cutoff * rng.random::<f64>().sqrt();
        let b2 = budget * rng.random::<f64>();
        if b2 + eps.sinh().powi(2) <= budget {
            return Ok((b2.sqrt(), eps));
        }
    }
    Err(Error::SamplerExhausted {
        attempts: MAX_REJECTIONS,
    })
}

fn check_sigma(name: &'static str, sigma: Option<f64>, required: bool) -> Result<()> {
    match (sigma, required) {
        (Some(s), true) if s.is_finite() && s > 0.0 => Ok(()),
        (Some(s), true) => Err(invalid(name, format!("{s} must be finite and positive"))),
        (None, true) => Err(invalid(name, "required by this input family")),
        (Some(_), false) => Err(invalid(name, "not used by this input family")),
        (None, false) => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BLimit {
    /// `b ∈ [0, b_max]` independent of ε.
    Fixed(f64),
    /// `b ∈ [0, √(sinh²L − sinh²ε)]`.
    EnergyShell { sinh_cutoff: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Density {
    Uniform,
    Gaussian { inv_sigma_s: f64, inv_sigma_c: f64 },
}

/// Integration region `ε ∈ [0, ε_max]`, `b ∈ [0, b_max(ε)]`, `φ, θ ∈ [0, 2π)`
/// together with the density times measure Jacobian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationDomain {
    family: InputFamily,
    eps_max: f64,
    b_limit: BLimit,
    density: Density,
    truncation_tail: f64,
}

/// Controls for [`IntegrationDomain::integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainQuadrature {
    pub rel_tol: f64,
    pub max_evals: u64,
    pub rule_points: usize,
    pub max_panels: usize,
}

impl Default for DomainQuadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-7,
            max_evals: 10_000_000,
            rule_points: 12,
            max_panels: 400,
        }
    }
}

/// Result of integrating over a domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainIntegral<const K: usize> {
    pub estimate: Estimate<K>,
    pub converged: bool,
    pub n_evals: u64,
}

impl IntegrationDomain {
    pub fn family(&self) -> InputFamily {
        self.family
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn b_limit(&self) -> BLimit {
        self.b_limit
    }

    pub fn b_max(&self, eps: f64) -> f64 {
        match self.b_limit {
            BLimit::Fixed(b) => b,
            BLimit::EnergyShell { sinh_cutoff } => {
                let s = eps.sinh();
                ((sinh_cutoff - s) * (sinh_cutoff + s)).max(0.0).sqrt()
            }
        }
    }

    /// Relative weight lost to truncating the Gaussian tails.
    pub fn truncation_tail(&self) -> f64 {
        self.truncation_tail
    }

    /// Density times radial Jacobian; the θ integral (2π) is folded in for
    /// families with squeezing, the φ integral is left to the caller.
    pub fn weight(&self, b: f64, eps: f64) -> f64 {
        let jacobian = match self.family {
            InputFamily::Coherent => b,
            InputFamily::Squeezed => TAU * eps,
            InputFamily::SqueezedCoherent => TAU * b * eps,
        };
        let density = match self.density {
            Density::Uniform => 1.0,
            Density::Gaussian {
                inv_sigma_s,
                inv_sigma_c,
            } => (-(b * b) * inv_sigma_c - eps * eps * inv_sigma_s).exp(),
        };
        jacobian * density
    }

    /// Closed-form `𝒩 = ∫ weight dφ (dε db)` over the untruncated support.
    pub fn normalization(&self) -> f64 {
        match (self.density, self.family, self.b_limit) {
            (Density::Gaussian { inv_sigma_s, inv_sigma_c }, family, _) => {
                let s = 1.0 / inv_sigma_s;
                let c = 1.0 / inv_sigma_c;
                match family {
                    InputFamily::Coherent => PI * c,
                    InputFamily::Squeezed => PI * s,
                    InputFamily::SqueezedCoherent => PI * s * PI * c,
                }
            }
            (Density::Uniform, InputFamily::Coherent, BLimit::Fixed(b)) => PI * b * b,
            (Density::Uniform, InputFamily::Squeezed, _) => PI * self.eps_max * self.eps_max,
            (Density::Uniform, _, _) => {
                // 4π² ∫₀ᴸ ε (sinh²L − sinh²ε)/2 dε with
                // ∫₀ᴸ ε sinh²ε dε = L sinh2L/4 − (cosh2L − 1)/8 − L²/4.
                let l = self.eps_max;
                let budget = l.sinh().powi(2);
                let j = l * (2.0 * l).sinh() / 4.0 - (2.0 * l).sinh().powi(2) / (8.0 * ((2.0 * l).cosh() + 1.0))
                    - l * l / 4.0;
                4.0 * PI * PI * 0.5 * (budget * l * l / 2.0 - j)
            }
        }
    }

    /// Integrates `weight · f(input)` over the domain with nested adaptive
    /// Gauss–Legendre quadrature.
    ///
    /// `f` is evaluated at inputs with `θ = 0` and `φ ∈ [0, π/2]`; it must be
    /// θ-independent and even under `φ → −φ` and `φ → π − φ` (the closed-form
    /// fidelity is), so the quarter-period result is multiplied by 4.
    pub fn integrate<const K: usize, F>(
        &self,
        opts: &DomainQuadrature,
        mut f: F,
    ) -> Result<DomainIntegral<K>>
    where
        F: FnMut(&InputState) -> Result<[f64; K]>,
    {
        let rule = GaussLegendre::new(opts.rule_points);
        let evals = Cell::new(0u64);
        let stop = || evals.get() >= opts.max_evals;
        let outer = AdaptiveOptions {
            rel_tol: opts.rel_tol,
            abs_tol: 0.0,
            max_panels: opts.max_panels,
        };
        let inner = AdaptiveOptions {
            rel_tol: 0.1 * opts.rel_tol,
            ..outer
        };
        let innermost = AdaptiveOptions {
            rel_tol: 0.01 * opts.rel_tol,
            ..outer
        };

        let mut point = |b: f64, phi: f64, eps: f64| -> Result<Estimate<K>> {
            evals.set(evals.get() + 1);
            let w = self.weight(b, eps);
            let input = InputState::new(b, phi, eps, 0.0)?;
            let mut v = f(&input)?;
            for x in &mut v {
                *x *= w;
            }
            Ok(Estimate::exact(v))
        };

        let mut converged = true;
        let track = |i: Integral<K>, converged: &mut bool| {
            *converged &= i.converged;
            i.estimate
        };

        let result = match self.family {
            InputFamily::Squeezed => {
                let i = integrate_until(&rule, |eps| point(0.0, 0.0, eps), 0.0, self.eps_max, &outer, stop)?;
                track(i, &mut converged)
            }
            InputFamily::Coherent => {
                let b_max = self.b_max(0.0);
                let i = integrate_until(
                    &rule,
                    |b| {
                        let inner_i = integrate_until(
                            &rule,
                            |phi| point(b, phi, 0.0),
                            0.0,
                            FRAC_PI_2,
                            &inner,
                            stop,
                        )?;
                        Ok::<_, Error>(scale(inner_i.estimate, 4.0))
                    },
                    0.0,
                    b_max,
                    &outer,
                    stop,
                )?;
                track(i, &mut converged)
            }
            InputFamily::SqueezedCoherent => {
                let i = integrate_until(
                    &rule,
                    |eps| {
                        let b_max = self.b_max(eps);
                        let b_int = integrate_until(
                            &rule,
                            |b| {
                                let phi_int = integrate_until(
                                    &rule,
                                    |phi| point(b, phi, eps),
                                    0.0,
                                    FRAC_PI_2,
                                    &innermost,
                                    stop,
                                )?;
                                Ok::<_, Error>(scale(phi_int.estimate, 4.0))
                            },
                            0.0,
                            b_max,
                            &inner,
                            stop,
                        )?;
                        Ok::<_, Error>(b_int.estimate)
                    },
                    0.0,
                    self.eps_max,
                    &outer,
                    stop,
                )?;
                track(i, &mut converged)
            }
        };

        let n_evals = evals.get();
        Ok(DomainIntegral {
            estimate: result,
            converged: converged && n_evals <= opts.max_evals,
            n_evals,
        })
    }
}

fn scale<const K: usize>(mut e: Estimate<K>, factor: f64) -> Estimate<K> {
    for k in 0..K {
        e.value[k] *= factor;
        e.error[k] *= factor;
    }
    e
}

/// Closed-form mean energy of a Gaussian-suppressed ensemble:
/// `σ_c + ½ e^{σ_s} √(πσ_s) erf(√σ_s)` restricted to the present sectors.
pub fn gaussian_average_energy(sigma_s: Option<f64>, sigma_c: Option<f64>) -> f64 {
    let coherent = sigma_c.unwrap_or(0.0);
    let squeezed = sigma_s.map_or(0.0, |s| {
        0.5 * s.exp() * (PI * s).sqrt() * libm::erf(s.sqrt())
    });
    coherent + squeezed
}

/// Mean energy `(1/𝒩) ∫ p E`, integrated numerically for any ensemble.
pub fn ensemble_average_energy_quadrature(ensemble: &InputEnsemble, opts: &DomainQuadrature) -> Result<f64> {
    let domain = ensemble.energy_domain();
    let res = domain.integrate(opts, |input| Ok([1.0, input_energy(input)]))?;
    let [norm, energy] = res.estimate.value;
    if !res.converged {
        return Err(Error::AccuracyNotReached {
            estimate: energy / norm,
            error: (res.estimate.error[1] + energy / norm * res.estimate.error[0]) / norm,
            n_evals: res.n_evals,
        });
    }
    Ok(energy / norm)
}

/// Mean energy of the ensemble: closed form for Gaussian suppression,
/// quadrature (at relative tolerance 1e−10) for uniform ensembles.
pub fn ensemble_average_energy(ensemble: &InputEnsemble) -> Result<f64> {
    match ensemble.kind {
        EnsembleKind::GaussianSuppressed { sigma_s, sigma_c } => Ok(gaussian_average_energy(sigma_s, sigma_c)),
        EnsembleKind::ConstrainedUniform { .. } => ensemble_average_energy_quadrature(
            ensemble,
            &DomainQuadrature {
                rel_tol: 1e-10,
                ..Default::default()
            },
        ),
    }
}
