//! Closed-form one-shot fidelity for teleporting a squeezed-coherent state
//! through a squeezed Bell-like resource, with optional propagation loss and
//! lossy Bell measurement.
//!
//! The resource is `S₁₂(r e^{iγ}) (cos δ |00⟩ + e^{iη} sin δ |11⟩)`. Two-mode
//! squeezed vacuum, photon-added and photon-subtracted resources are fixed
//! choices of `δ` as a function of `r`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Largest supported resource squeezing.
pub const MAX_SQUEEZING: f64 = 5.0;

/// Slack allowed above 1 (or below 0) before a fidelity is treated as a bug.
pub const FIDELITY_SLACK: f64 = 1e-9;

const ARCCOS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResourceFamily {
    /// Two-mode squeezed vacuum (`δ = 0`).
    Tmsv,
    PhotonAdded,
    PhotonSubtracted,
    /// Free mixing angle supplied by the caller.
    CustomDelta,
}

impl ResourceFamily {
    pub const NAMED: [ResourceFamily; 3] = [
        ResourceFamily::Tmsv,
        ResourceFamily::PhotonAdded,
        ResourceFamily::PhotonSubtracted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResourceFamily::Tmsv => "tmsv",
            ResourceFamily::PhotonAdded => "pa",
            ResourceFamily::PhotonSubtracted => "ps",
            ResourceFamily::CustomDelta => "custom",
        }
    }
}

impl fmt::Display for ResourceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResourceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tmsv" => Ok(ResourceFamily::Tmsv),
            "pa" | "photon-added" | "photon_added" => Ok(ResourceFamily::PhotonAdded),
            "ps" | "photon-subtracted" | "photon_subtracted" => Ok(ResourceFamily::PhotonSubtracted),
            "custom" | "custom-delta" => Ok(ResourceFamily::CustomDelta),
            other => Err(invalid(
                "family",
                format!("unknown resource family `{other}` (expected tmsv, pa, ps or custom)"),
            )),
        }
    }
}

/// Bell mixing angle prescribed for a named resource family.
///
/// Returns `None` for [`ResourceFamily::CustomDelta`], which has no
/// prescription. Panics if the arccos argument leaves `[0, 1]` by more than
/// rounding, which cannot happen for `r ≥ 0`.
pub fn delta_for_family(family: ResourceFamily, r: f64) -> Option<f64> {
    let numerator = match family {
        ResourceFamily::Tmsv => return Some(0.0),
        ResourceFamily::CustomDelta => return None,
        ResourceFamily::PhotonAdded => r.sinh(),
        ResourceFamily::PhotonSubtracted => r.cosh(),
    };
    let arg = numerator / (2.0 * r).cosh().sqrt();
    assert!(
        (-ARCCOS_SLACK..=1.0 + ARCCOS_SLACK).contains(&arg),
        "arccos argument {arg} out of range for {family} at r = {r}"
    );
    Some(arg.clamp(0.0, 1.0).acos())
}

/// Two-mode squeezed Bell-like resource.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceSpec {
    family: ResourceFamily,
    r: f64,
    gamma: f64,
    delta: f64,
    eta: f64,
}

impl ResourceSpec {
    /// Resource of a named family at squeezing `r`.
    pub fn new(family: ResourceFamily, r: f64) -> Result<Self> {
        check_squeezing(r)?;
        let delta = delta_for_family(family, r).ok_or_else(|| {
            invalid("delta", "custom resources need an explicit mixing angle")
        })?;
        let eta = match family {
            ResourceFamily::PhotonAdded | ResourceFamily::PhotonSubtracted => -PI,
            _ => 0.0,
        };
        Ok(Self {
            family,
            r,
            gamma: 0.0,
            delta,
            eta,
        })
    }

    pub fn tmsv(r: f64) -> Result<Self> {
        Self::new(ResourceFamily::Tmsv, r)
    }

    /// Resource with a caller-chosen mixing angle `delta ∈ [0, π/2]`.
    pub fn custom(r: f64, delta: f64) -> Result<Self> {
        check_squeezing(r)?;
        if !(0.0..=FRAC_PI_2).contains(&delta) {
            return Err(invalid("delta", format!("{delta} not in [0, π/2]")));
        }
        Ok(Self {
            family: ResourceFamily::CustomDelta,
            r,
            gamma: 0.0,
            delta,
            eta: 0.0,
        })
    }

    pub fn family(&self) -> ResourceFamily {
        self.family
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Relative phase of the `|11⟩` component. Recorded only; the kernel is
    /// written in the phase convention where it is absorbed.
    pub fn eta(&self) -> f64 {
        self.eta
    }
}

fn check_squeezing(r: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(invalid("r", format!("{r} must be finite and non-negative")));
    }
    if r > MAX_SQUEEZING {
        return Err(invalid(
            "r",
            format!("{r} exceeds the supported maximum {MAX_SQUEEZING}"),
        ));
    }
    Ok(())
}

/// Single-mode pure Gaussian input `S(ε e^{iθ}) D(b e^{iφ}) |0⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputState {
    b: f64,
    phi: f64,
    eps: f64,
    theta: f64,
}

impl InputState {
    /// Angles are reduced into `[0, 2π)`.
    pub fn new(b: f64, phi: f64, eps: f64, theta: f64) -> Result<Self> {
        if !b.is_finite() || b < 0.0 {
            return Err(invalid("b", format!("{b} must be finite and non-negative")));
        }
        if !eps.is_finite() || eps < 0.0 {
            return Err(invalid("eps", format!("{eps} must be finite and non-negative")));
        }
        if !phi.is_finite() || !theta.is_finite() {
            return Err(invalid("phi/theta", "angles must be finite"));
        }
        Ok(Self {
            b,
            phi: reduce_angle(phi),
            eps,
            theta: reduce_angle(theta),
        })
    }

    pub fn vacuum() -> Self {
        Self {
            b: 0.0,
            phi: 0.0,
            eps: 0.0,
            theta: 0.0,
        }
    }

    pub fn coherent(b: f64, phi: f64) -> Result<Self> {
        Self::new(b, phi, 0.0, 0.0)
    }

    pub fn squeezed(eps: f64, theta: f64) -> Result<Self> {
        Self::new(0.0, 0.0, eps, theta)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Mean photon number `b² + sinh²ε`.
    pub fn energy(&self) -> f64 {
        input_energy(self)
    }
}

fn reduce_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if y >= TAU {
        0.0
    } else {
        y
    }
}

/// Mean photon number of a squeezed-coherent input.
pub fn input_energy(input: &InputState) -> f64 {
    let s = input.eps.sinh();
    input.b * input.b + s * s
}

/// Fiber loss `τ` on the resource and measurement loss modelled by a beam
/// splitter of reflectivity `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    tau: f64,
    reflectivity: f64,
}

impl NoiseSpec {
    pub const NOISELESS: NoiseSpec = NoiseSpec {
        tau: 0.0,
        reflectivity: 0.0,
    };

    pub fn new(tau: f64, reflectivity: f64) -> Result<Self> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(invalid("tau", format!("{tau} must be finite and non-negative")));
        }
        if !(0.0..=1.0).contains(&reflectivity) {
            return Err(invalid("R", format!("{reflectivity} not in [0, 1]")));
        }
        Ok(Self { tau, reflectivity })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn reflectivity(&self) -> f64 {
        self.reflectivity
    }

    /// `T = √(1 − R²)`.
    pub fn transmittivity(&self) -> f64 {
        let r = self.reflectivity;
        ((1.0 - r) * (1.0 + r)).sqrt()
    }

    pub fn is_noiseless(&self) -> bool {
        self.tau == 0.0 && self.reflectivity == 0.0
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::NOISELESS
    }
}

/// Which `Δ` enters the resource term of `Λ₂`. The closed form as published
/// uses `Δ₁` in both `Λ₁` and `Λ₂`; `Delta2` is a sensitivity toggle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Lambda2Source {
    #[default]
    Delta1,
    Delta2,
}

/// Intermediate quantities of the closed-form fidelity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityCoefficients {
    pub delta1: f64,
    pub delta2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `(1 − g̃)² (β − β*)² = −4 b² sin²φ (1 − g̃)²`.
    pub omega1_sq: f64,
    /// `(1 − g̃)² (β + β*)² = 4 b² cos²φ (1 − g̃)²`.
    pub omega2_sq: f64,
    /// Effective gain `g̃ = g T`.
    pub gain_eff: f64,
    /// Added noise `Γ = ½(1 − e^{−τ}) + g² R²`.
    pub gamma_noise: f64,
    /// `e^{−2r−τ} Δ₁`, kept separately because `Δ₁` alone grows like `e^{4r}`.
    pub scaled_delta1: f64,
    /// `e^{−2r−τ} Δ₂`.
    pub scaled_delta2: f64,
}

pub fn coefficients(
    resource: &ResourceSpec,
    input: &InputState,
    g: f64,
    noise: &NoiseSpec,
) -> Result<FidelityCoefficients> {
    coefficients_with(resource, input, g, noise, Lambda2Source::Delta1)
}

pub fn coefficients_with(
    resource: &ResourceSpec,
    input: &InputState,
    g: f64,
    noise: &NoiseSpec,
    lambda2_source: Lambda2Source,
) -> Result<FidelityCoefficients> {
    if !(0.0..=1.0).contains(&g) {
        return Err(invalid("g", format!("{g} not in [0, 1]")));
    }
    let r = resource.r;
    let tau = noise.tau;
    let refl = noise.reflectivity;

    let gt = g * noise.transmittivity();
    let gamma_noise = 0.5 * (-(-tau).exp_m1()) + g * g * refl * refl;

    // Δ₁ = (1+x)² + e^{4r}(1−x)², Δ₂ = (1+x)² − e^{4r}(1−x)², x = e^{τ/2} g̃.
    // Multiplying through by e^{−2r−τ} keeps every term O(e^{2r}).
    let x = (0.5 * tau).exp() * gt;
    let plus = (1.0 + x) * (1.0 + x);
    let minus = (1.0 - x) * (1.0 - x);
    let e4r = (4.0 * r).exp();
    let delta1 = plus + e4r * minus;
    let delta2 = plus - e4r * minus;
    let down = (-2.0 * r - tau).exp();
    let up = (2.0 * r - tau).exp();
    let scaled_delta1 = down * plus + up * minus;
    let scaled_delta2 = down * plus - up * minus;

    let gain_term = 2.0 * (1.0 + gt * gt);
    let eps2 = 2.0 * input.eps;
    let lambda1 = scaled_delta1 + gain_term * eps2.exp() + 4.0 * gamma_noise;
    let lambda2_resource = match lambda2_source {
        Lambda2Source::Delta1 => scaled_delta1,
        Lambda2Source::Delta2 => scaled_delta2,
    };
    let lambda2 = lambda2_resource + gain_term * (-eps2).exp() + 4.0 * gamma_noise;

    let loss = (1.0 - gt) * (1.0 - gt);
    let (sin_phi, cos_phi) = input.phi.sin_cos();
    let b2 = input.b * input.b;
    let omega1_sq = -4.0 * b2 * sin_phi * sin_phi * loss;
    let omega2_sq = 4.0 * b2 * cos_phi * cos_phi * loss;

    let out = FidelityCoefficients {
        delta1,
        delta2,
        lambda1,
        lambda2,
        omega1_sq,
        omega2_sq,
        gain_eff: gt,
        gamma_noise,
        scaled_delta1,
        scaled_delta2,
    };
    for (name, value) in [("lambda1", lambda1), ("lambda2", lambda2)] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveCoefficient { name, value });
        }
    }
    Ok(out)
}

/// Fidelity assembled from precomputed coefficients. `delta` is the resource
/// mixing angle.
pub fn fidelity_from_coefficients(c: &FidelityCoefficients, delta: f64) -> Result<f64> {
    let (l1, l2) = (c.lambda1, c.lambda2);
    let a = c.omega1_sq / l1;
    let d = c.omega2_sq / l2;

    let prefactor = 4.0 / (l1 * l2).sqrt() * (a - d).exp();
    let (sin_d, cos_d) = delta.sin_cos();

    let mut bracket = 1.0;
    if sin_d != 0.0 {
        let first = (1.0 + 2.0 * a) / l1 + (1.0 - 2.0 * d) / l2;
        let second = (3.0 + 12.0 * a + 4.0 * a * a) / (l1 * l1)
            + (3.0 - 12.0 * d + 4.0 * d * d) / (l2 * l2)
            + 2.0 / (l1 * l2) * (1.0 + 2.0 * a - 2.0 * d - 4.0 * a * d);
        bracket += sin_d * (c.scaled_delta2 * cos_d - c.scaled_delta1 * sin_d) * first
            + 0.25 * c.scaled_delta2 * c.scaled_delta2 * sin_d * sin_d * second;
    }

    let f = prefactor * bracket;
    if !f.is_finite() || !(-FIDELITY_SLACK..=1.0 + FIDELITY_SLACK).contains(&f) {
        return Err(Error::FidelityOutOfRange { value: f });
    }
    Ok(f.clamp(0.0, 1.0))
}

/// One-shot fidelity `⟨ψ_in|ρ_out|ψ_in⟩`. Noiseless teleportation is the
/// `NoiseSpec::NOISELESS` case of the same code path.
pub fn one_shot_fidelity(
    resource: &ResourceSpec,
    input: &InputState,
    g: f64,
    noise: &NoiseSpec,
) -> Result<f64> {
    let c = coefficients(resource, input, g, noise)?;
    fidelity_from_coefficients(&c, resource.delta)
}

pub fn one_shot_fidelity_with(
    resource: &ResourceSpec,
    input: &InputState,
    g: f64,
    noise: &NoiseSpec,
    lambda2_source: Lambda2Source,
) -> Result<f64> {
    let c = coefficients_with(resource, input, g, noise, lambda2_source)?;
    fidelity_from_coefficients(&c, resource.delta)
}
