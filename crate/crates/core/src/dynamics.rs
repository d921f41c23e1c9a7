//! Closed-system unitary evolution with `hbar = 1`, and drift checks for the
//! quantities it conserves.
//!
//! Propagation uses the spectral form `U(t) = V exp(-i L t) V^dagger`, which
//! is unitary to rounding for any `t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, purity, ComplexMatrix, DensityMatrix, Observable, PureState, C64};
use crate::tolerances;

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    operator: Observable,
}

impl Hamiltonian {
    pub fn new(operator: Observable) -> Self {
        Self { operator }
    }

    pub fn operator(&self) -> &Observable {
        &self.operator
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    /// Whether two adjacent eigenvalues are closer than [`tolerances::DEGENERACY_GAP`].
    pub fn is_degenerate(&self) -> bool {
        self.operator
            .eigenvalues()
            .windows(2)
            .any(|w| w[1] - w[0] < tolerances::DEGENERACY_GAP)
    }

    /// Index ranges of eigenvalue clusters separated by at least the degeneracy gap.
    pub fn eigenspaces(&self) -> Vec<std::ops::Range<usize>> {
        let ev = self.operator.eigenvalues();
        let mut spaces = Vec::new();
        let mut start = 0;
        for k in 1..ev.len() {
            if ev[k] - ev[k - 1] >= tolerances::DEGENERACY_GAP {
                spaces.push(start..k);
                start = k;
            }
        }
        spaces.push(start..ev.len());
        spaces
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        let spec = self.operator.spectrum();
        let v = &spec.eigenvectors;
        let n = v.dim();
        let phases: Vec<C64> = spec
            .eigenvalues
            .iter()
            .map(|e| C64::from_polar(1.0, -e * t))
            .collect();
        let scaled = ComplexMatrix::from_fn(n, |i, j| v[(i, j)] * phases[j]).expect("n >= 1");
        scaled.matmul(&v.adjoint()).expect("same dimension")
    }

    /// Coordinates of `psi` in the eigenbasis, `V^dagger psi`.
    fn eigen_coordinates(&self, psi: &[C64]) -> Vec<C64> {
        let v = &self.operator.spectrum().eigenvectors;
        let n = v.dim();
        (0..n)
            .map(|k| (0..n).map(|i| v[(i, k)].conj() * psi[i]).sum())
            .collect()
    }
}

/// `exp(-i H t) psi`, applied as `V (exp(-i L t) * (V^dagger psi))`.
pub fn evolve_state(psi: &PureState, h: &Hamiltonian, t: f64) -> Result<PureState> {
    check_dim(h.dim(), psi.dim())?;
    let spec = h.operator.spectrum();
    let coords: Vec<C64> = h
        .eigen_coordinates(psi.amplitudes())
        .into_iter()
        .zip(&spec.eigenvalues)
        .map(|(c, e)| c * C64::from_polar(1.0, -e * t))
        .collect();
    let out = spec.eigenvectors.matvec(&coords)?;
    Ok(PureState::from_amplitudes_unchecked(out))
}

/// `U rho U^dagger`.
pub fn evolve_density(rho: &DensityMatrix, h: &Hamiltonian, t: f64) -> Result<DensityMatrix> {
    check_dim(h.dim(), rho.dim())?;
    let u = h.propagator(t);
    let out = u.matmul(rho.matrix())?.matmul(&u.adjoint())?;
    // Conjugation preserves the spectrum; only rounding can break Hermiticity
    // or the trace, and those are still checked.
    DensityMatrix::checked_trace_hermitian(out)
}

/// `max_t |tr rho(t)^2 - tr rho(0)^2|`.
pub fn purity_drift(rho: &DensityMatrix, h: &Hamiltonian, times: &[f64]) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::EmptyTimes);
    }
    check_dim(h.dim(), rho.dim())?;
    let p0 = purity(rho);
    times.iter().try_fold(0.0f64, |worst, &t| {
        let pt = purity(&evolve_density(rho, h, t)?);
        Ok(worst.max((pt - p0).abs()))
    })
}

/// Occupation drift in the Hamiltonian eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationDrift {
    /// `max_{t,n} | |<h_n|psi(t)>|^2 - |<h_n|psi(0)>|^2 |` over eigenvectors.
    /// Basis-dependent when `degenerate` is set.
    pub per_vector: f64,
    /// Same maximum with occupations summed over each eigenspace.
    pub per_eigenspace: f64,
    pub degenerate: bool,
}

impl PopulationDrift {
    /// The drift that is well defined for this spectrum.
    pub fn conserved_drift(&self) -> f64 {
        if self.degenerate {
            self.per_eigenspace
        } else {
            self.per_vector
        }
    }
}

pub fn population_drift(psi: &PureState, h: &Hamiltonian, times: &[f64]) -> Result<PopulationDrift> {
    if times.is_empty() {
        return Err(Error::EmptyTimes);
    }
    check_dim(h.dim(), psi.dim())?;
    let spaces = h.eigenspaces();
    let occupations = |state: &PureState| -> (Vec<f64>, Vec<f64>) {
        let occ: Vec<f64> = h
            .eigen_coordinates(state.amplitudes())
            .iter()
            .map(|z| z.norm_sqr())
            .collect();
        let grouped = spaces.iter().map(|r| occ[r.clone()].iter().sum()).collect();
        (occ, grouped)
    };
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);

    let (occ0, grp0) = occupations(psi);
    let mut drift = PopulationDrift {
        per_vector: 0.0,
        per_eigenspace: 0.0,
        degenerate: spaces.len() < h.dim(),
    };
    for &t in times {
        let (occ, grp) = occupations(&evolve_state(psi, h, t)?);
        drift.per_vector = drift.per_vector.max(max_diff(&occ, &occ0));
        drift.per_eigenspace = drift.per_eigenspace.max(max_diff(&grp, &grp0));
    }
    if drift.degenerate {
        log::warn!("degenerate Hamiltonian spectrum: per-vector occupations depend on the chosen eigenbasis");
    }
    Ok(drift)
}
