//! Sampling measures over pure states.
//!
//! All three measures give every level an independent phase drawn uniformly
//! from `[0, 2 pi)`. They differ in how the occupations `|c_n|^2` are chosen:
//! fixed, Dirichlet distributed, or Haar (normalized complex Gaussians).

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, PureState, C64};
use crate::rng::RandomSeed;
use crate::tolerances;

pub use crate::linalg::purity;

/// Level occupations: nonnegative, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AmplitudeProfile {
    p: Vec<f64>,
}

impl AmplitudeProfile {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if let Some(bad) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidProfile(format!("entry {bad} is not a nonnegative number")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > tolerances::PROFILE_SUM {
            return Err(Error::InvalidProfile(format!("entries sum to {sum}, not 1")));
        }
        Ok(Self { p })
    }

    /// Rescales nonnegative weights to unit sum.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidProfile(format!("weights sum to {total}")));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        Self::new(vec![1.0 / dim as f64; dim])
    }

    /// All weight on level `index`.
    pub fn pure(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut p = vec![0.0; dim];
        p[index] = 1.0;
        Self::new(p)
    }

    /// One draw from `Dirichlet(alpha)` at coordinate `index` of `seed`.
    pub fn dirichlet(alpha: &[f64], seed: RandomSeed, index: u64) -> Result<Self> {
        let gammas = gamma_samplers(alpha)?;
        let mut rng = seed.rng(index);
        Self::new(draw_dirichlet(&gammas, &mut rng))
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.dim() as f64;
        self.p.iter().all(|&x| (x - u).abs() <= tolerances::PROFILE_SUM)
    }

    /// `sum p_n^2`, the purity of `diag(p)`.
    pub fn purity(&self) -> f64 {
        self.p.iter().map(|x| x * x).sum()
    }
}

impl TryFrom<Vec<f64>> for AmplitudeProfile {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<AmplitudeProfile> for Vec<f64> {
    fn from(profile: AmplitudeProfile) -> Self {
        profile.p
    }
}

/// Measure over pure states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ensemble {
    /// `c_n = sqrt(p_n) exp(i phi_n)` with fixed `p`.
    FixedAmplitude { profile: AmplitudeProfile },
    /// Occupations drawn from `Dirichlet(alpha)` for every sample.
    DirichletAmplitude { alpha: Vec<f64> },
    /// Unitarily invariant measure.
    Haar { dim: usize },
}

impl Ensemble {
    pub fn fixed(profile: AmplitudeProfile) -> Self {
        Self::FixedAmplitude { profile }
    }

    pub fn dirichlet(alpha: Vec<f64>) -> Result<Self> {
        gamma_samplers(&alpha)?;
        Ok(Self::DirichletAmplitude { alpha })
    }

    pub fn haar(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Self::Haar { dim })
    }

    /// Re-checks the payload. Needed for values built directly from the
    /// public variants or deserialized.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::FixedAmplitude { profile } => AmplitudeProfile::new(profile.p.clone()).map(|_| ()),
            Self::DirichletAmplitude { alpha } => gamma_samplers(alpha).map(|_| ()),
            Self::Haar { dim } if *dim == 0 => Err(Error::ZeroDimension),
            Self::Haar { .. } => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::FixedAmplitude { profile } => profile.dim(),
            Self::DirichletAmplitude { alpha } => alpha.len(),
            Self::Haar { dim } => *dim,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::FixedAmplitude { .. } => "fixed_amplitude",
            Self::DirichletAmplitude { .. } => "dirichlet_amplitude",
            Self::Haar { .. } => "haar",
        }
    }

    /// Mean occupations, i.e. the diagonal of the ensemble density matrix.
    pub fn mean_occupations(&self) -> Vec<f64> {
        match self {
            Self::FixedAmplitude { profile } => profile.p.clone(),
            Self::DirichletAmplitude { alpha } => {
                let total: f64 = alpha.iter().sum();
                alpha.iter().map(|a| a / total).collect()
            }
            Self::Haar { dim } => vec![1.0 / *dim as f64; *dim],
        }
    }

    /// Sampler holding the per-ensemble distributions, for tight loops.
    pub fn sampler(&self) -> Result<Sampler<'_>> {
        self.validate()?;
        let gammas = match self {
            Self::DirichletAmplitude { alpha } => gamma_samplers(alpha)?,
            _ => Vec::new(),
        };
        let sqrt_p = match self {
            Self::FixedAmplitude { profile } => profile.p.iter().map(|x| x.sqrt()).collect(),
            _ => Vec::new(),
        };
        Ok(Sampler {
            ensemble: self,
            gammas,
            sqrt_p,
            phase: Uniform::new(0.0, TAU).expect("0 < 2 pi"),
        })
    }
}

fn gamma_samplers(alpha: &[f64]) -> Result<Vec<Gamma<f64>>> {
    if alpha.is_empty() {
        return Err(Error::ZeroDimension);
    }
    alpha
        .iter()
        .map(|&a| {
            if a > 0.0 && a.is_finite() {
                Gamma::new(a, 1.0).map_err(|e| Error::InvalidAlpha(e.to_string()))
            } else {
                Err(Error::InvalidAlpha(format!("{a} is not a positive number")))
            }
        })
        .collect()
}

fn draw_dirichlet(gammas: &[Gamma<f64>], rng: &mut ChaCha20Rng) -> Vec<f64> {
    loop {
        let g: Vec<f64> = gammas.iter().map(|d| d.sample(rng)).collect();
        let total: f64 = g.iter().sum();
        // All-zero draws are possible for tiny alpha through underflow.
        if total > 0.0 {
            return g.into_iter().map(|x| x / total).collect();
        }
    }
}

/// Reusable sampler bound to one ensemble.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    ensemble: &'a Ensemble,
    gammas: Vec<Gamma<f64>>,
    sqrt_p: Vec<f64>,
    phase: Uniform<f64>,
}

impl Sampler<'_> {
    pub fn dim(&self) -> usize {
        self.ensemble.dim()
    }

    /// Writes one sample into `out` (length `dim`) from a positioned generator.
    pub fn fill(&self, rng: &mut ChaCha20Rng, out: &mut [C64]) {
        match self.ensemble {
            Ensemble::FixedAmplitude { .. } => {
                for (z, &r) in out.iter_mut().zip(&self.sqrt_p) {
                    *z = C64::from_polar(r, self.phase.sample(rng));
                }
            }
            Ensemble::DirichletAmplitude { .. } => {
                let p = draw_dirichlet(&self.gammas, rng);
                for (z, x) in out.iter_mut().zip(p) {
                    *z = C64::from_polar(x.sqrt(), self.phase.sample(rng));
                }
            }
            Ensemble::Haar { .. } => {
                for z in out.iter_mut() {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *z = C64::new(re, im);
                }
                let norm = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                for z in out.iter_mut() {
                    *z /= norm;
                }
            }
        }
    }
}

/// State number `index` of the `(seed.seed, seed.stream)` sequence.
pub fn sample_state(ens: &Ensemble, seed: RandomSeed, index: u64) -> Result<PureState> {
    let sampler = ens.sampler()?;
    let mut amps = vec![C64::new(0.0, 0.0); ens.dim()];
    sampler.fill(&mut seed.rng(index), &mut amps);
    Ok(PureState::from_amplitudes_unchecked(amps))
}

/// `E[|psi><psi|]`. Phase averaging kills every off-diagonal entry, so the
/// result is `diag(E[|c_n|^2])` for all three measures.
pub fn ensemble_density(ens: &Ensemble) -> Result<DensityMatrix> {
    ens.validate()?;
    DensityMatrix::from_diagonal(&ens.mean_occupations())
}

/// Hilbert-Schmidt random density matrix `G G^dagger / tr(G G^dagger)` with
/// complex Gaussian `G`.
pub fn random_density(dim: usize, seed: RandomSeed) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    let mut rng = seed.rng(0);
    let g = ComplexMatrix::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })?;
    let ggh = g.matmul(&g.adjoint())?;
    // Symmetrize the rounding of the product so the Hermiticity check sees
    // an exactly Hermitian input, then normalize the trace.
    let tr = ggh.trace().re;
    let m = ComplexMatrix::from_fn(dim, |i, j| (ggh[(i, j)] + ggh[(j, i)].conj()) / (2.0 * tr))?;
    DensityMatrix::checked_trace_hermitian(m)
}
