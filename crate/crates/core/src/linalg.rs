//! Dense complex linear algebra: matrices, Hermitian observables, pure
//! states and density matrices.
//!
//! Storage is row-major `Vec<Complex64>`. Heavy kernels (matrix products and
//! the Hermitian eigensolver) are delegated to `faer`.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Index, IndexMut};
use std::sync::OnceLock;

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerances;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexMatrix")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl ComplexMatrix {
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if data.len() != dim * dim {
            return Err(Error::EntryCount {
                dim,
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    /// Builds from nested rows; every row must have the same length as the row count.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        let data: Vec<C64> = rows.iter().flatten().copied().collect();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::EntryCount {
                dim,
                expected: dim * dim,
                found: data.len(),
            });
        }
        Self::new(dim, data)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::from_fn(dim, |_, _| ZERO)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_fn(diag.len(), |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(self.data[j * n + i].conj());
            }
        }
        Self { dim: n, data }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        check_dim(self.dim, rhs.dim)?;
        Ok(Self::from_faer(&(self.to_faer() * rhs.to_faer())))
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        check_dim(self.dim, v.len())?;
        let mut out = vec![ZERO; self.dim];
        self.matvec_into(v, &mut out);
        Ok(out)
    }

    /// Unchecked `out = self * v`; lengths must equal `dim`.
    #[inline]
    pub(crate) fn matvec_into(&self, v: &[C64], out: &mut [C64]) {
        for (row, o) in self.data.chunks_exact(self.dim).zip(out.iter_mut()) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// `alpha * self + beta * I`.
    pub fn affine(&self, alpha: f64, beta: f64) -> Self {
        let n = self.dim;
        let mut out = self.clone();
        for z in &mut out.data {
            *z *= alpha;
        }
        for i in 0..n {
            out.data[i * n + i] += beta;
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `max |M_ij - conj(M_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        dev
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim;
        self.data
            .iter()
            .enumerate()
            .all(|(k, z)| k / n == k % n || *z == ZERO)
    }

    /// `max |M^dagger M - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self.adjoint().to_faer() * self.to_faer();
        let n = self.dim;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { ONE } else { ZERO };
                dev = dev.max((prod[(i, j)] - target).norm());
            }
        }
        dev
    }

    pub(crate) fn to_faer(&self) -> Mat<C64> {
        let n = self.dim;
        Mat::from_fn(n, n, |i, j| self.data[i * n + j])
    }

    pub(crate) fn from_faer(m: &Mat<C64>) -> Self {
        let n = m.nrows();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(m[(i, j)]);
            }
        }
        Self { dim: n, data }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    let deviation = m.hermitian_deviation();
    let tolerance = tolerances::HERMITIAN * (1.0 + m.max_abs());
    if deviation <= tolerance {
        Ok(())
    } else {
        Err(Error::NotHermitian {
            deviation,
            tolerance,
        })
    }
}

/// Eigenvalues in nondecreasing order with eigenvectors as matching columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn range(&self) -> f64 {
        match (self.eigenvalues.first(), self.eigenvalues.last()) {
            (Some(lo), Some(hi)) => (hi - lo).max(0.0),
            _ => 0.0,
        }
    }

    /// `V diag(lambda) V^dagger`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = self.eigenvectors.to_faer();
        let n = v.nrows();
        let scaled = Mat::from_fn(n, n, |i, j| v[(i, j)] * self.eigenvalues[j]);
        ComplexMatrix::from_faer(&(scaled * v.adjoint()))
    }
}

/// Hermitian eigendecomposition. The lower triangle is what the solver reads,
/// so Hermiticity is validated first rather than assumed.
pub fn eigh(m: &ComplexMatrix) -> Result<Spectrum> {
    check_hermitian(m)?;
    let evd = m
        .to_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let n = m.dim();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].re.total_cmp(&s[b].re));
    let eigenvalues = order.iter().map(|&k| s[k].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |i, j| u[(i, order[j])])?;
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Hermitian matrix with lazily computed spectral data.
#[derive(Debug, Clone)]
pub struct Observable {
    matrix: ComplexMatrix,
    spectrum: OnceLock<Spectrum>,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        check_hermitian(&matrix)?;
        Ok(Self {
            matrix,
            spectrum: OnceLock::new(),
        })
    }

    /// Real diagonal observable.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(values)?)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Eigendata, computed on first use.
    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| {
            eigh(&self.matrix).expect("hermiticity was validated at construction")
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum().eigenvalues
    }

    pub fn spectral_range(&self) -> f64 {
        self.spectrum().range()
    }

    /// `A^2`, which is Hermitian whenever `A` is.
    pub fn square(&self) -> Result<Self> {
        Self::new(self.matrix.matmul(&self.matrix)?)
    }
}

/// `lambda_max - lambda_min`.
pub fn spectral_range(obs: &Observable) -> f64 {
    obs.spectral_range()
}

/// Unitary DFT matrix `F_jk = exp(2 pi i jk / N) / sqrt(N)`.
pub fn dft_matrix(n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    let norm = 1.0 / (n as f64).sqrt();
    // Reduce jk mod N so the angle stays in [0, 2 pi).
    ComplexMatrix::from_fn(n, |j, k| {
        let angle = TAU * ((j * k) % n) as f64 / n as f64;
        C64::from_polar(norm, angle)
    })
}

/// Normalized amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::ZeroDimension);
        }
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > tolerances::STATE_NORM {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { amplitudes })
    }

    /// Scales an arbitrary nonzero vector to unit norm.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::ZeroDimension);
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized {
                norm_sq: norm * norm,
            });
        }
        for z in &mut amplitudes {
            *z /= norm;
        }
        Self::new(amplitudes)
    }

    /// Skips the norm check. Used for outputs of exact unitary maps, whose
    /// norm the caller verifies at its own tolerance.
    pub(crate) fn from_amplitudes_unchecked(amplitudes: Vec<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Occupations `|c_n|^2`.
    pub fn occupations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// `<psi|A|psi>`, with the imaginary residue checked and discarded.
pub fn expectation(state: &PureState, obs: &Observable) -> Result<f64> {
    check_dim(obs.dim(), state.dim())?;
    let a_psi = obs.matrix.matvec(&state.amplitudes)?;
    let raw: C64 = state
        .amplitudes
        .iter()
        .zip(&a_psi)
        .map(|(c, v)| c.conj() * v)
        .sum();
    debug_assert!(
        raw.im.abs() <= tolerances::EXPECTATION_IMAG * (1.0 + obs.matrix.max_abs()),
        "imaginary residue {} in expectation value",
        raw.im
    );
    Ok(raw.re)
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let rho = Self::checked_trace_hermitian(matrix)?;
        let lowest = eigh(&rho.matrix)?.eigenvalues[0];
        if lowest < -tolerances::DENSITY_PSD {
            return Err(Error::InvalidDensity(format!(
                "smallest eigenvalue {lowest:e} is negative"
            )));
        }
        Ok(rho)
    }

    /// Validates Hermiticity and trace only. Sound for images of a valid
    /// density matrix under unitary conjugation, which preserves the spectrum.
    pub(crate) fn checked_trace_hermitian(matrix: ComplexMatrix) -> Result<Self> {
        check_hermitian(&matrix)?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tolerances::DENSITY_TRACE || tr.im.abs() > tolerances::DENSITY_TRACE {
            return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
        }
        Ok(Self { matrix })
    }

    /// Diagonal density matrix from a probability vector.
    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        if p.iter().any(|&x| x.is_nan() || x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidDensity("negative or non-finite weight".into()));
        }
        Self::checked_trace_hermitian(ComplexMatrix::from_real_diagonal(p)?)
    }

    /// `|psi><psi|`.
    pub fn pure(state: &PureState) -> Self {
        let c = state.amplitudes();
        let n = c.len();
        let matrix = ComplexMatrix::from_fn(n, |i, j| c[i] * c[j].conj())
            .expect("pure states are nonempty");
        Self { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        Self::from_diagonal(&vec![1.0 / dim as f64; dim])
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Real diagonal, the populations in the working basis.
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }
}

/// `tr(rho^2)`, computed as the squared Frobenius norm of the Hermitian `rho`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
}
