//! Average fidelity and fidelity deviation of continuous-variable quantum
//! teleportation with non-Gaussian resources, over Gaussian-suppressed and
//! energy-constrained input ensembles.
//!
//! The building blocks are:
//!
//! * [`fidelity`]: the closed-form one-shot fidelity `f(input; resource, g, noise)`;
//! * [`ensemble`]: input ensembles, their integration domains and samplers;
//! * [`moments`]: `F = ⟨f⟩`, `ΔF = √(⟨f²⟩ − F²)` by adaptive quadrature, and
//!   gain optimization;
//! * [`baselines`]: classical and entanglement-free reference fidelities;
//! * [`oracle`]: Monte Carlo estimates used to cross-check the quadrature.
//!
//! ```
//! use cvtele::{optimize_gain, InputEnsemble, MomentOptions, NoiseSpec, ResourceFamily, ResourceSpec};
//!
//! let resource = ResourceSpec::new(ResourceFamily::PhotonSubtracted, 1.0)?;
//! let ensemble = InputEnsemble::gaussian_coherent(5.0)?;
//! let best = optimize_gain(&resource, &ensemble, &NoiseSpec::NOISELESS, &MomentOptions::default())?;
//! assert!(best.avg_fidelity > 0.9);
//! # Ok::<(), cvtele::Error>(())
//! ```

pub mod baselines;
pub mod ensemble;
pub mod error;
pub mod fidelity;
pub mod moments;
pub mod optimize;
pub mod oracle;
pub mod quadrature;

pub use baselines::{
    applicable_bound, classical_bound_coherent_gaussian, lambda_from_sigma, squeezed_uniform_infinite_bound,
    BoundProvenance, ClassicalBound,
};
pub use ensemble::{
    ensemble_average_energy, gaussian_average_energy, CoherentCutoff, DomainQuadrature, EnsembleKind,
    InputEnsemble, InputFamily,
};
pub use error::{Error, Result};
pub use fidelity::{
    delta_for_family, input_energy, one_shot_fidelity, one_shot_fidelity_with, InputState, Lambda2Source,
    NoiseSpec, ResourceFamily, ResourceSpec,
};
pub use moments::{
    average_fidelity, entanglement_free_baseline, fidelity_deviation, moments, optimize_gain, second_moment,
    MomentOptions, MomentResult, Moments,
};
pub use oracle::{mc_moments, McEstimate};
