//! Textual ensemble and observable specifications.
//!
//! Both are parameterized by dimension: a spec is resolved to a concrete
//! [`Ensemble`] or [`Observable`] once the grid cell fixes `N`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use typlab_core::{
    fourier_linear, linear_spectrum_diagonal, projector, random_hermitian, AmplitudeProfile, ComplexMatrix, Ensemble,
    Observable, RandomSeed,
};

use crate::error::{Result, TyplabError};

#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleSpec {
    /// `gmc-uniform`: fixed amplitudes with `p_n = 1/N`.
    GmcUniform,
    /// `gmc-pure`: fixed amplitudes with all weight on level 0.
    GmcPure,
    /// `gmc:p0,p1,...`: fixed amplitudes with the given (renormalized) weights.
    GmcProfile(Vec<f64>),
    /// `dirichlet:a0,a1,...`, or `dirichlet:a` for a symmetric `alpha`.
    Dirichlet(Vec<f64>),
    /// `haar`.
    Haar,
}

impl EnsembleSpec {
    pub fn resolve(&self, n: usize) -> Result<Ensemble> {
        let ens = match self {
            Self::GmcUniform => Ensemble::fixed(AmplitudeProfile::uniform(n)?),
            Self::GmcPure => Ensemble::fixed(AmplitudeProfile::pure(n, 0)?),
            Self::GmcProfile(w) => {
                check_len("gmc profile", w.len(), n)?;
                Ensemble::fixed(AmplitudeProfile::from_weights(w)?)
            }
            Self::Dirichlet(alpha) => Ensemble::dirichlet(self.dirichlet_alpha(alpha, n)?)?,
            Self::Haar => Ensemble::haar(n)?,
        };
        Ok(ens)
    }

    pub fn dirichlet_alpha(&self, alpha: &[f64], n: usize) -> Result<Vec<f64>> {
        if alpha.len() == 1 {
            Ok(vec![alpha[0]; n])
        } else {
            check_len("dirichlet alpha", alpha.len(), n)?;
            Ok(alpha.to_vec())
        }
    }

    /// Profile used for one cell of the bound sweep: Dirichlet specs draw a
    /// fresh simplex point per cell, fixed-amplitude specs are reused as is.
    pub fn cell_profile(&self, n: usize, seed: RandomSeed, cell: u64) -> Result<AmplitudeProfile> {
        match self {
            Self::Dirichlet(alpha) => Ok(AmplitudeProfile::dirichlet(&self.dirichlet_alpha(alpha, n)?, seed, cell)?),
            Self::Haar => Err(TyplabError::Config(
                "the bound sweep needs a fixed-amplitude or dirichlet profile source, not haar".into(),
            )),
            _ => match self.resolve(n)? {
                Ensemble::FixedAmplitude { profile } => Ok(profile),
                _ => unreachable!("gmc specs resolve to fixed amplitudes"),
            },
        }
    }
}

fn check_len(what: &str, len: usize, n: usize) -> Result<()> {
    if len == n {
        Ok(())
    } else {
        Err(TyplabError::Config(format!("{what} has {len} entries but N = {n}")))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| TyplabError::Config(format!("bad number {x:?}: {e}")))
        })
        .collect()
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

impl FromStr for EnsembleSpec {
    type Err = TyplabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once(':') {
            None => match s {
                "gmc-uniform" => Ok(Self::GmcUniform),
                "gmc-pure" => Ok(Self::GmcPure),
                "haar" => Ok(Self::Haar),
                _ => Err(TyplabError::Config(format!("unknown ensemble {s:?}"))),
            },
            Some(("gmc", rest)) => Ok(Self::GmcProfile(parse_list(rest)?)),
            Some(("dirichlet", rest)) => Ok(Self::Dirichlet(parse_list(rest)?)),
            Some(_) => Err(TyplabError::Config(format!("unknown ensemble {s:?}"))),
        }
    }
}

impl fmt::Display for EnsembleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GmcUniform => f.write_str("gmc-uniform"),
            Self::GmcPure => f.write_str("gmc-pure"),
            Self::GmcProfile(w) => write!(f, "gmc:{}", fmt_list(w)),
            Self::Dirichlet(a) => write!(f, "dirichlet:{}", fmt_list(a)),
            Self::Haar => f.write_str("haar"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableSpec {
    /// `diag-linear:a,d`.
    DiagLinear { a: f64, d: f64 },
    /// `fourier-linear`.
    FourierLinear,
    /// `projector:n`.
    Projector(usize),
    /// `random-hermitian:seed`.
    RandomHermitian(u64),
    /// `identity`.
    Identity,
}

impl ObservableSpec {
    /// Concrete observable at dimension `n`. `stream` selects an independent
    /// instance for random families and is ignored by deterministic ones.
    pub fn resolve(&self, n: usize, stream: u64) -> Result<Observable> {
        let obs = match *self {
            Self::DiagLinear { a, d } => linear_spectrum_diagonal(n, a, d)?,
            Self::FourierLinear => fourier_linear(n)?,
            Self::Projector(k) => projector(n, k)?,
            Self::RandomHermitian(seed) => random_hermitian(n, RandomSeed::new(seed, stream))?,
            Self::Identity => Observable::new(ComplexMatrix::identity(n)?)?,
        };
        Ok(obs)
    }
}

impl FromStr for ObservableSpec {
    type Err = TyplabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || TyplabError::Config(format!("unknown or malformed observable {s:?}"));
        match s.split_once(':') {
            None => match s {
                "fourier-linear" => Ok(Self::FourierLinear),
                "identity" => Ok(Self::Identity),
                "diag-linear" => Ok(Self::DiagLinear { a: 0.0, d: 1.0 }),
                _ => Err(bad()),
            },
            Some(("diag-linear", rest)) => match parse_list(rest)?.as_slice() {
                [a, d] => Ok(Self::DiagLinear { a: *a, d: *d }),
                _ => Err(bad()),
            },
            Some(("projector", rest)) => rest.trim().parse().map(Self::Projector).map_err(|_| bad()),
            Some(("random-hermitian", rest)) => rest.trim().parse().map(Self::RandomHermitian).map_err(|_| bad()),
            Some(_) => Err(bad()),
        }
    }
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DiagLinear { a, d } => write!(f, "diag-linear:{a:?},{d:?}"),
            Self::FourierLinear => f.write_str("fourier-linear"),
            Self::Projector(k) => write!(f, "projector:{k}"),
            Self::RandomHermitian(s) => write!(f, "random-hermitian:{s}"),
            Self::Identity => f.write_str("identity"),
        }
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(EnsembleSpec);
string_serde!(ObservableSpec);
