//! Numerical tolerances used across the crate.
//!
//! Every threshold lives here so that tests, validators and the experiment
//! runner agree on a single table. Where a tolerance is scale-dependent the
//! form is `abs * (1 + scale)`.

/// Hermiticity: `max |M - M^dagger| <= HERMITIAN * (1 + max |M_ij|)`.
pub const HERMITIAN: f64 = 1e-12;

/// Eigendecomposition reconstruction: `||V L V^dagger - M||_max <= RECONSTRUCTION * (1 + rho(M))`.
pub const RECONSTRUCTION: f64 = 1e-10;

/// Unitarity of eigenvector matrices and propagators.
pub const UNITARITY: f64 = 1e-10;

/// Unitarity of the discrete Fourier matrix.
pub const DFT_UNITARITY: f64 = 1e-12;

/// Unit norm of a pure state.
pub const STATE_NORM: f64 = 1e-12;

/// Sum of an amplitude profile.
pub const PROFILE_SUM: f64 = 1e-12;

/// Unit trace of a density matrix.
pub const DENSITY_TRACE: f64 = 1e-12;

/// Smallest admissible density-matrix eigenvalue is `-DENSITY_PSD`.
pub const DENSITY_PSD: f64 = 1e-10;

/// Imaginary residue of `<psi|A|psi>`, scaled by `1 + max |A_ij|`.
pub const EXPECTATION_IMAG: f64 = 1e-10;

/// Exact variances in `[-VARIANCE_CLAMP, 0)` are rounding and clamp to zero.
pub const VARIANCE_CLAMP: f64 = 1e-12;

/// Slack allowed when testing `sigma^2 <= range^2 * purity`.
pub const BOUND_SLACK: f64 = 1e-10;

/// Relative tolerance of the total-variance decomposition identity.
pub const DECOMPOSITION_REL: f64 = 1e-10;

/// Maximum drift of a conserved quantity under exact unitary propagation.
pub const CONSERVATION: f64 = 1e-10;

/// Adjacent eigenvalues closer than this are treated as one eigenspace.
pub const DEGENERACY_GAP: f64 = 1e-10;

/// Two spectra agree when every sorted eigenvalue pair differs by less than this.
pub const SPECTRUM_MATCH: f64 = 1e-9;

/// Relative agreement required against an analytic closed form.
pub const CLOSED_FORM_REL: f64 = 1e-9;

/// Monte Carlo agreement window, in standard errors.
pub const MC_SIGMAS: f64 = 4.0;

/// Absolute floor added to Monte Carlo windows. Zero-variance cells produce
/// sample variances of pure rounding noise (order 1e-32) whose standard
/// error is of the same order, so a purely relative window is meaningless
/// there.
pub const MC_ABS_FLOOR: f64 = 1e-14;
