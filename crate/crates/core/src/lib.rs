//! Random pure-state ensembles and the statistics of `<psi|A|psi>` over them.
//!
//! The crate computes, for a measure over pure states and a Hermitian
//! observable `A`:
//!
//! * the ensemble mean `tr(rho A)` and the variance of the conditional
//!   expectation `Var(<psi|A|psi>)`,
//! * the bound `range(A)^2 * tr(rho^2)`,
//! * the split of the full measurement variance into the variance of the
//!   conditional expectation plus the expected conditional variance,
//!
//! exactly where closed forms exist and by seeded Monte Carlo otherwise, along
//! with unitary dynamics for checking the constants of motion.

pub mod dynamics;
pub mod ensembles;
pub mod error;
pub mod linalg;
pub mod observables;
pub mod rng;
pub mod stats;
pub mod tolerances;

pub use dynamics::{evolve_density, evolve_state, population_drift, purity_drift, Hamiltonian, PopulationDrift};
pub use ensembles::{ensemble_density, random_density, sample_state, AmplitudeProfile, Ensemble};
pub use error::{Error, Result};
pub use linalg::{
    dft_matrix, eigh, expectation, purity, spectral_range, ComplexMatrix, DensityMatrix, Observable, PureState,
    Spectrum, C64,
};
pub use observables::{fourier_linear, linear_spectrum_diagonal, projector, random_hermitian, shift_scale};
pub use rng::{RandomSeed, RNG_ALGORITHM};
pub use stats::{
    decompose, ensemble_mean, exact_expected_conditional_variance, exact_var_conditional_expectation, haar_var_conditional_expectation, mc_decompose,
    mc_mean, mc_var_conditional_expectation, reimann_bound, total_variance, EstimateMode, McEstimate, MomentReport,
    Moments,
};
