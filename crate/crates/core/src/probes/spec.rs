use super::families::*;
use super::ProbeFunction;
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Serializable recipe for a probe; `build` reconstructs it deterministically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProbeSpec {
    Constant {
        #[serde(default = "one")]
        d: usize,
    },
    Optimizer {
        b: Vec<f64>,
    },
    Tangent {
        eps: f64,
        #[serde(default = "one")]
        d: usize,
    },
    Hermite {
        k: usize,
    },
    GaussianDensity {
        var: f64,
        #[serde(default = "one")]
        d: usize,
    },
    /// √ of the N(0, var·I) density in Euclidean mode.
    EuclidGaussian {
        #[serde(default = "unit")]
        var: f64,
        #[serde(default = "one")]
        d: usize,
    },
    Bump,
    Example1 {
        n: usize,
    },
    Example2 {
        a: f64,
        #[serde(default = "one")]
        d: usize,
    },
    Prop42 {
        a: f64,
        n: usize,
    },
    GnsOptimizer {
        p: f64,
        amplitude: f64,
    },
    Custom {
        probe: ProbeFunction,
    },
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl ProbeSpec {
    pub fn build(&self) -> Result<ProbeFunction> {
        match self {
            ProbeSpec::Constant { d } => make_constant_one(*d),
            ProbeSpec::Optimizer { b } => make_gaussian_optimizer(b),
            ProbeSpec::Tangent { eps, d } => make_tangent(*eps, *d),
            ProbeSpec::Hermite { k } => make_hermite(*k),
            ProbeSpec::GaussianDensity { var, d } => make_gaussian_density(*var, *d),
            ProbeSpec::EuclidGaussian { var, d } => make_gaussian_density(*var, *d)?.to_euclidean(),
            ProbeSpec::Bump => default_bump(),
            ProbeSpec::Example1 { n } => make_example1(&default_bump()?, *n),
            ProbeSpec::Example2 { a, d } => make_example2(*a, *d),
            ProbeSpec::Prop42 { a, n } => make_prop42(*a, *n),
            ProbeSpec::GnsOptimizer { p, amplitude } => make_gns_optimizer(*p, *amplitude),
            ProbeSpec::Custom { probe } => {
                ProbeFunction::new(probe.dim, probe.mode, probe.lift.clone(), probe.pieces.clone(), probe.symmetry, probe.label.clone())
            }
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| invalid(format!("probe spec: {e}")))
    }
}

/// Shape of the cutoff strip between r₀ = n/2 - 1/(2n) and n/2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffRecipe {
    /// ψ(r) = exp(n log ε · (r - r₀)), from 1 down to √ε.
    #[default]
    LogLinear,
}

/// The instability and tangent families, with their parameter domains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CounterexampleSpec {
    Example1 {
        n: usize,
        #[serde(default)]
        base: Option<Box<ProbeSpec>>,
    },
    Example2 {
        a: f64,
        #[serde(default = "one")]
        d: usize,
    },
    Tangent {
        eps: f64,
        #[serde(default = "one")]
        d: usize,
    },
    Prop42 {
        a: f64,
        n: usize,
        #[serde(default)]
        cutoff: CutoffRecipe,
    },
}

impl CounterexampleSpec {
    pub fn build(&self) -> Result<ProbeFunction> {
        match self {
            CounterexampleSpec::Example1 { n, base } => {
                let base = match base {
                    Some(spec) => spec.build()?,
                    None => default_bump()?,
                };
                make_example1(&base, *n)
            }
            CounterexampleSpec::Example2 { a, d } => make_example2(*a, *d),
            CounterexampleSpec::Tangent { eps, d } => make_tangent(*eps, *d),
            CounterexampleSpec::Prop42 { a, n, cutoff: CutoffRecipe::LogLinear } => make_prop42(*a, *n),
        }
    }
}
