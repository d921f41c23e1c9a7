//! Moments of `A_psi = <psi|A|psi>` over a state ensemble.
//!
//! The exact path covers the fixed-amplitude measure, where averaging over
//! independent uniform phases leaves only the pairings `m = m'`, `n = n'` in
//! `E[A_psi^2]`:
//!
//! ```text
//! A_psi          = sum_n p_n A_nn + sum_{m != n} sqrt(p_m p_n) e^{i(phi_n - phi_m)} A_mn
//! Var(A_psi)     = sum_{m != n} p_m p_n |A_mn|^2
//! ```
//!
//! and the Haar measure, whose second moment is
//! `(N tr A^2 - (tr A)^2) / (N^2 (N + 1))`. The Monte Carlo estimators sample
//! the same quantities directly and serve as an independent check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{ensemble_density, AmplitudeProfile, Ensemble};
use crate::error::{Error, Result};
use crate::linalg::{check_dim, purity, DensityMatrix, Observable, C64};
use crate::rng::{position, RandomSeed};
use crate::tolerances;

/// Samples per Monte Carlo work unit. Fixed, so the merge tree does not
/// depend on how many threads run.
pub const MC_CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMode {
    Exact,
    Mc,
}

/// Every scalar statistic of an `(ensemble, observable)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mode: EstimateMode,
    pub mean: f64,
    pub var_conditional_expectation: f64,
    pub reimann_bound: f64,
    pub purity: f64,
    pub total_variance: f64,
    pub expected_conditional_variance: f64,
    pub spectral_range: f64,
    /// Present for Monte Carlo reports only.
    pub std_errors: Option<MomentStdErrors>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentStdErrors {
    pub mean: f64,
    pub var_conditional_expectation: f64,
    pub expected_conditional_variance: f64,
    /// Quadrature sum of the two term errors.
    pub total_variance: f64,
    pub n_samples: u64,
}

impl MomentReport {
    /// `sigma^2 / range^2`, or `None` for a constant observable.
    pub fn normalized_variance(&self) -> Option<f64> {
        let r2 = self.spectral_range * self.spectral_range;
        (r2 > 0.0).then(|| self.var_conditional_expectation / r2)
    }

    /// `sigma^2 / bound`, or `None` when the bound is zero.
    pub fn bound_ratio(&self) -> Option<f64> {
        (self.reimann_bound > 0.0).then(|| self.var_conditional_expectation / self.reimann_bound)
    }

    pub fn decomposition_residual(&self) -> f64 {
        (self.total_variance - self.var_conditional_expectation - self.expected_conditional_variance)
            .abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: RandomSeed,
}

impl McEstimate {
    /// `|value - target| <= sigmas * std_error + MC_ABS_FLOOR`.
    pub fn agrees_with(&self, target: f64, sigmas: f64) -> bool {
        (self.value - target).abs() <= sigmas * self.std_error + tolerances::MC_ABS_FLOOR
    }
}

/// Running central moments up to fourth order.
///
/// Updates follow Welford's recurrence extended to `M3`, `M4`; merges use the
/// pairwise formulas of Pebay (2008), so chunked accumulation is stable and
/// exact up to rounding.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let d3 = d2 * delta;
        let d4 = d2 * d2;

        let mean = self.mean + delta * nb / n;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3
            + other.m3
            + d3 * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        Self {
            count: self.count + other.count,
            mean,
            m2,
            m3,
            m4,
        }
    }

    /// Bessel-corrected sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.m2 / (self.count - 1) as f64
    }

    pub fn std_error_of_mean(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    /// Standard error of the sample variance: the sample standard deviation
    /// of the squared deviations `(x_i - mean)^2`, divided by `sqrt(n)`.
    /// Uses `sum d_i = M2` and `sum d_i^2 = M4`.
    pub fn std_error_of_variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var_d = ((self.m4 - self.m2 * self.m2 / n) / (n - 1.0)).max(0.0);
        (var_d / n).sqrt()
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Self::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

fn clamp_variance(x: f64, what: &str) -> f64 {
    if (-tolerances::VARIANCE_CLAMP..0.0).contains(&x) {
        log::debug!("clamped {what} = {x:e} to 0");
        0.0
    } else {
        x
    }
}

/// `tr(rho A) = sum_n rho_nn A_nn` for the diagonal ensemble density.
pub fn ensemble_mean(ens: &Ensemble, obs: &Observable) -> Result<f64> {
    check_dim(ens.dim(), obs.dim())?;
    ens.validate()?;
    let m = obs.matrix();
    Ok(ens
        .mean_occupations()
        .iter()
        .enumerate()
        .map(|(n, p)| p * m[(n, n)].re)
        .sum())
}

/// `sum_{m != n} p_m p_n |A_mn|^2`.
pub fn exact_var_conditional_expectation(profile: &AmplitudeProfile, obs: &Observable) -> Result<f64> {
    check_dim(profile.dim(), obs.dim())?;
    let p = profile.as_slice();
    let m = obs.matrix();
    let mut total = 0.0;
    for (i, pi) in p.iter().enumerate() {
        if *pi == 0.0 {
            continue;
        }
        let row = m.row(i);
        let inner: f64 = row
            .iter()
            .zip(p)
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, (a, pj))| pj * a.norm_sqr())
            .sum();
        total += pi * inner;
    }
    Ok(total)
}

/// `E[(A^2)_psi - A_psi^2] = Var_p(A_nn) + sum_{n != k} p_n (1 - p_k) |A_nk|^2`.
///
/// Computed without reference to the total variance, so the law of total
/// variance is a check rather than a definition.
pub fn exact_expected_conditional_variance(profile: &AmplitudeProfile, obs: &Observable) -> Result<f64> {
    check_dim(profile.dim(), obs.dim())?;
    let p = profile.as_slice();
    let m = obs.matrix();
    let mean: f64 = p.iter().enumerate().map(|(n, pn)| pn * m[(n, n)].re).sum();
    let mut diag = 0.0;
    let mut off = 0.0;
    for (n, pn) in p.iter().enumerate() {
        if *pn == 0.0 {
            continue;
        }
        diag += pn * (m[(n, n)].re - mean).powi(2);
        let inner: f64 = m
            .row(n)
            .iter()
            .zip(p)
            .enumerate()
            .filter(|(k, _)| *k != n)
            .map(|(_, (a, pk))| (1.0 - pk) * a.norm_sqr())
            .sum();
        off += pn * inner;
    }
    Ok(diag + off)
}

/// Haar-measure variance of `A_psi`: `(N tr A^2 - (tr A)^2) / (N^2 (N + 1))`.
pub fn haar_var_conditional_expectation(obs: &Observable) -> f64 {
    let n = obs.dim() as f64;
    let m = obs.matrix();
    let tr = m.trace().re;
    let tr_sq: f64 = m.as_slice().iter().map(|z| z.norm_sqr()).sum();
    clamp_variance((n * tr_sq - tr * tr) / (n * n * (n + 1.0)), "haar variance")
}

/// `range(A)^2 * tr(rho^2)`.
pub fn reimann_bound(rho: &DensityMatrix, obs: &Observable) -> Result<f64> {
    check_dim(rho.dim(), obs.dim())?;
    Ok(obs.spectral_range().powi(2) * purity(rho))
}

/// `tr(rho A^2) - tr(rho A)^2`, using `(A^2)_nn = sum_k |A_nk|^2`.
pub fn total_variance(ens: &Ensemble, obs: &Observable) -> Result<f64> {
    check_dim(ens.dim(), obs.dim())?;
    ens.validate()?;
    let m = obs.matrix();
    let rho = ens.mean_occupations();
    let mut second = 0.0;
    let mut first = 0.0;
    for (n, p) in rho.iter().enumerate() {
        first += p * m[(n, n)].re;
        second += p * m.row(n).iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    Ok(clamp_variance(second - first * first, "total variance"))
}

/// Exact moment report. Available for the fixed-amplitude and Haar measures;
/// the Dirichlet measure is Monte Carlo only. Under Haar the expected
/// conditional variance is exactly `N` times the conditional-expectation
/// variance.
pub fn decompose(ens: &Ensemble, obs: &Observable) -> Result<MomentReport> {
    check_dim(ens.dim(), obs.dim())?;
    let (var_ce, expected_cv) = match ens {
        Ensemble::FixedAmplitude { profile } => (
            exact_var_conditional_expectation(profile, obs)?,
            exact_expected_conditional_variance(profile, obs)?,
        ),
        Ensemble::Haar { .. } => {
            let v = haar_var_conditional_expectation(obs);
            (v, obs.dim() as f64 * v)
        }
        Ensemble::DirichletAmplitude { .. } => {
            return Err(Error::ExactUnavailable("dirichlet_amplitude"))
        }
    };
    let rho = ensemble_density(ens)?;
    let total = total_variance(ens, obs)?;
    Ok(MomentReport {
        mode: EstimateMode::Exact,
        mean: ensemble_mean(ens, obs)?,
        var_conditional_expectation: var_ce,
        reimann_bound: reimann_bound(&rho, obs)?,
        purity: purity(&rho),
        total_variance: total,
        expected_conditional_variance: expected_cv,
        spectral_range: obs.spectral_range(),
        std_errors: None,
    })
}

/// Accumulated samples of `A_psi` and of `(A^2)_psi - A_psi^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SampleMoments {
    pub expectation: Moments,
    pub conditional_variance: Moments,
}

impl SampleMoments {
    fn merge(&self, other: &Self) -> Self {
        Self {
            expectation: self.expectation.merge(&other.expectation),
            conditional_variance: self.conditional_variance.merge(&other.conditional_variance),
        }
    }
}

/// Draws samples `0..n` of `seed` and accumulates both per-state moments.
///
/// Work is split into fixed chunks of [`MC_CHUNK`] indices evaluated on the
/// ambient rayon pool and merged left to right, so the result is
/// bit-identical for any thread count.
pub fn sample_moments(ens: &Ensemble, obs: &Observable, n: u64, seed: RandomSeed) -> Result<SampleMoments> {
    check_dim(ens.dim(), obs.dim())?;
    let sampler = ens.sampler()?;
    let keyed = seed.keyed();
    let dim = ens.dim();
    let m = obs.matrix();
    let chunks = n.div_ceil(MC_CHUNK);

    let parts: Vec<SampleMoments> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = keyed.clone();
            let mut c = vec![C64::new(0.0, 0.0); dim];
            let mut v = vec![C64::new(0.0, 0.0); dim];
            let mut acc = SampleMoments::default();
            let end = ((chunk + 1) * MC_CHUNK).min(n);
            for index in chunk * MC_CHUNK..end {
                position(&mut rng, index);
                sampler.fill(&mut rng, &mut c);
                m.matvec_into(&c, &mut v);
                // A Hermitian: <psi|A^2|psi> = |A psi|^2.
                let a_psi: f64 = c.iter().zip(&v).map(|(x, y)| (x.conj() * y).re).sum();
                let a2_psi: f64 = v.iter().map(|y| y.norm_sqr()).sum();
                acc.expectation.push(a_psi);
                acc.conditional_variance.push(a2_psi - a_psi * a_psi);
            }
            acc
        })
        .collect();

    Ok(parts
        .iter()
        .fold(SampleMoments::default(), |acc, part| acc.merge(part)))
}

/// Sample variance of `A_psi` over `n` draws.
pub fn mc_var_conditional_expectation(
    ens: &Ensemble,
    obs: &Observable,
    n: u64,
    seed: RandomSeed,
) -> Result<McEstimate> {
    if n < 2 {
        return Err(Error::TooFewSamples(n as usize));
    }
    let s = sample_moments(ens, obs, n, seed)?.expectation;
    Ok(McEstimate {
        value: s.variance(),
        std_error: s.std_error_of_variance(),
        n_samples: n,
        seed,
    })
}

/// Sample mean of `A_psi` over `n` draws.
pub fn mc_mean(ens: &Ensemble, obs: &Observable, n: u64, seed: RandomSeed) -> Result<McEstimate> {
    if n < 2 {
        return Err(Error::TooFewSamples(n as usize));
    }
    let s = sample_moments(ens, obs, n, seed)?.expectation;
    Ok(McEstimate {
        value: s.mean,
        std_error: s.std_error_of_mean(),
        n_samples: n,
        seed,
    })
}

/// Termwise Monte Carlo decomposition. The purity, bound and range entries
/// are exact (they depend only on the ensemble density and the spectrum).
pub fn mc_decompose(ens: &Ensemble, obs: &Observable, n: u64, seed: RandomSeed) -> Result<MomentReport> {
    if n < 2 {
        return Err(Error::TooFewSamples(n as usize));
    }
    let s = sample_moments(ens, obs, n, seed)?;
    let rho = ensemble_density(ens)?;
    let term1 = s.expectation.variance();
    let term2 = s.conditional_variance.mean;
    let se1 = s.expectation.std_error_of_variance();
    let se2 = s.conditional_variance.std_error_of_mean();
    Ok(MomentReport {
        mode: EstimateMode::Mc,
        mean: s.expectation.mean,
        var_conditional_expectation: term1,
        reimann_bound: reimann_bound(&rho, obs)?,
        purity: purity(&rho),
        total_variance: term1 + term2,
        expected_conditional_variance: term2,
        spectral_range: obs.spectral_range(),
        std_errors: Some(MomentStdErrors {
            mean: s.expectation.std_error_of_mean(),
            var_conditional_expectation: se1,
            expected_conditional_variance: se2,
            total_variance: se1.hypot(se2),
            n_samples: n,
        }),
    })
}
