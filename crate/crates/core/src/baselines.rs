//! Reference fidelities that an entanglement-assisted protocol must beat.

use std::fmt;

use crate::ensemble::{EnsembleKind, InputEnsemble, InputFamily};
use crate::error::{invalid, Result};
use crate::moments::{entanglement_free_baseline, MomentOptions};

/// Best average fidelity of measure-and-prepare strategies for coherent
/// states drawn with Gaussian weight `e^{−λ|α|²}`: `(1+λ)/(2+λ)`.
pub fn classical_bound_coherent_gaussian(lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(invalid("lambda", format!("must be non-negative, got {lambda}")));
    }
    if lambda.is_infinite() {
        return Ok(1.0);
    }
    Ok((1.0 + lambda) / (2.0 + lambda))
}

/// Converts the coherent width `σc` of `e^{−b²/σc}` into `λ = 1/σc`.
pub fn lambda_from_sigma(sigma_c: f64) -> Result<f64> {
    if !(sigma_c > 0.0) || sigma_c.is_infinite() {
        return Err(invalid("sigma_c", format!("must be positive and finite, got {sigma_c}")));
    }
    Ok(1.0 / sigma_c)
}

/// Known bound for squeezed inputs uniformly distributed with unbounded
/// squeezing.
pub const SQUEEZED_UNIFORM_INFINITE_BOUND: f64 = 0.815;

pub fn squeezed_uniform_infinite_bound() -> f64 {
    SQUEEZED_UNIFORM_INFINITE_BOUND
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundProvenance {
    /// `(1+λ)/(2+λ)` for Gaussian-weighted coherent states.
    CoherentGaussianFormula,
    /// Literature value for unbounded uniform squeezing.
    SqueezedUniformInfinite,
    /// Optimized fidelity of the same protocol without entanglement.
    EntanglementFreeNumeric,
    /// Supplied by the caller.
    UserSupplied,
}

impl BoundProvenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CoherentGaussianFormula => "coherent_gaussian_formula",
            Self::SqueezedUniformInfinite => "squeezed_uniform_infinite",
            Self::EntanglementFreeNumeric => "entanglement_free_numeric",
            Self::UserSupplied => "user_supplied",
        }
    }
}

impl fmt::Display for BoundProvenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalBound {
    pub value: f64,
    pub provenance: BoundProvenance,
}

impl ClassicalBound {
    pub fn user_supplied(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(invalid("bound", format!("must lie in [0, 1], got {value}")));
        }
        Ok(Self {
            value,
            provenance: BoundProvenance::UserSupplied,
        })
    }

    /// True when `fidelity` exceeds the bound by more than `margin`.
    pub fn is_beaten_by(&self, fidelity: f64, margin: f64) -> bool {
        fidelity > self.value + margin
    }
}

/// The tightest reference available for an ensemble: the analytic bound for
/// Gaussian coherent inputs, otherwise the entanglement-free fidelity.
pub fn applicable_bound(ensemble: &InputEnsemble, opts: &MomentOptions) -> Result<ClassicalBound> {
    if let (InputFamily::Coherent, EnsembleKind::GaussianSuppressed { sigma_c: Some(s), .. }) =
        (ensemble.family(), ensemble.kind())
    {
        return Ok(ClassicalBound {
            value: classical_bound_coherent_gaussian(lambda_from_sigma(s)?)?,
            provenance: BoundProvenance::CoherentGaussianFormula,
        });
    }
    Ok(ClassicalBound {
        value: entanglement_free_baseline(ensemble, opts)?.avg_fidelity,
        provenance: BoundProvenance::EntanglementFreeNumeric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_eq!(classical_bound_coherent_gaussian(0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(classical_bound_coherent_gaussian(1.0).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(classical_bound_coherent_gaussian(f64::INFINITY).unwrap(), 1.0);
        assert!(classical_bound_coherent_gaussian(-0.1).is_err());
        assert!(classical_bound_coherent_gaussian(f64::NAN).is_err());
        assert_eq!(lambda_from_sigma(5.0).unwrap(), 0.2);
        assert!(lambda_from_sigma(0.0).is_err());
    }

    proptest! {
        #[test]
        fn bound_is_increasing_in_lambda(l in 0.0f64..100.0, dl in 1e-6f64..10.0) {
            let lo = classical_bound_coherent_gaussian(l).unwrap();
            let hi = classical_bound_coherent_gaussian(l + dl).unwrap();
            prop_assert!(hi > lo);
            prop_assert!((0.5..1.0).contains(&lo));
        }
    }

    #[test]
    fn bound_selection() {
        let opts = MomentOptions::default();
        let g = InputEnsemble::gaussian_coherent(5.0).unwrap();
        let b = applicable_bound(&g, &opts).unwrap();
        assert_eq!(b.provenance, BoundProvenance::CoherentGaussianFormula);
        assert_abs_diff_eq!(b.value, 1.2 / 2.2, epsilon = 1e-15);

        let u = InputEnsemble::uniform(InputFamily::Squeezed, 1.0).unwrap();
        let b = applicable_bound(&u, &opts).unwrap();
        assert_eq!(b.provenance, BoundProvenance::EntanglementFreeNumeric);
        assert!(b.value > 0.5 && b.value < 1.0);
    }

    // No measure-and-prepare scheme can beat the optimal one, so the
    // entanglement-free protocol stays below the analytic bound.
    #[test]
    fn entanglement_free_respects_analytic_bound() {
        let opts = MomentOptions::default();
        for sigma in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let ens = InputEnsemble::gaussian_coherent(sigma).unwrap();
            let ef = entanglement_free_baseline(&ens, &opts).unwrap().avg_fidelity;
            let bound = classical_bound_coherent_gaussian(1.0 / sigma).unwrap();
            assert!(ef <= bound + 1e-3, "sigma {sigma}: {ef} > {bound}");
        }
    }

    #[test]
    fn user_bound_and_margin() {
        let b = ClassicalBound::user_supplied(0.9).unwrap();
        assert!(b.is_beaten_by(0.91, 1e-3));
        assert!(!b.is_beaten_by(0.9005, 1e-3));
        assert!(ClassicalBound::user_supplied(1.5).is_err());
        assert_eq!(squeezed_uniform_infinite_bound(), 0.815);
    }
}
