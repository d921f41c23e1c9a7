//! Observable families.
//!
//! `linear_spectrum_diagonal` and `fourier_linear` share the spectrum
//! `0, 1, ..., N-1` but differ in eigenbasis: the first is diagonal in the
//! occupation basis, the second is conjugated by the DFT so that its
//! eigenvectors are spread evenly over every level.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dft_matrix, ComplexMatrix, Observable, C64};
use crate::rng::RandomSeed;

/// `diag(a, a + d, ..., a + (N-1) d)`.
pub fn linear_spectrum_diagonal(n: usize, a: f64, d: f64) -> Result<Observable> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    let diag: Vec<f64> = (0..n).map(|k| a + k as f64 * d).collect();
    Observable::diagonal(&diag)
}

/// `F diag(0, ..., N-1) F^dagger` with `F = dft_matrix(N)`.
pub fn fourier_linear(n: usize) -> Result<Observable> {
    let f = dft_matrix(n)?;
    let fd = ComplexMatrix::from_fn(n, |i, j| f[(i, j)] * j as f64)?;
    Observable::new(fd.matmul(&f.adjoint())?)
}

/// `|n><n|`.
pub fn projector(dim: usize, n: usize) -> Result<Observable> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    if n >= dim {
        return Err(Error::IndexOutOfRange { index: n, dim });
    }
    let mut diag = vec![0.0; dim];
    diag[n] = 1.0;
    Observable::diagonal(&diag)
}

/// `(G + G^dagger) / 2` with `G` i.i.d. standard complex Gaussian
/// (`E|G_ij|^2 = 1`), drawn at index 0 of `seed`.
pub fn random_hermitian(n: usize, seed: RandomSeed) -> Result<Observable> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    let mut rng = seed.rng(0);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g: Vec<C64> = (0..n * n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * scale, im * scale)
        })
        .collect();
    // Floating-point addition commutes, so this is exactly Hermitian.
    let m = ComplexMatrix::from_fn(n, |i, j| (g[i * n + j] + g[j * n + i].conj()) * 0.5)?;
    Observable::new(m)
}

/// `alpha A + beta I`.
pub fn shift_scale(obs: &Observable, alpha: f64, beta: f64) -> Result<Observable> {
    Observable::new(obs.matrix().affine(alpha, beta))
}
