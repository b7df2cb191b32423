//! Evaluation and divergence classification of the avoidability and
//! minimal-thinness criteria.
//!
//! Verdicts are `Divergent`/`Convergent` only when an analytic tail reduction
//! of a closed-form profile backs them; finite partial sums alone give
//! `Inconclusive`.

mod classify;
mod constants;
mod grid;
mod integral;
mod series;
mod wiener;

use serde::{Deserialize, Serialize};

use crate::champagne::{RadialProfile, TailExponents, WeightFunction};

pub use classify::{classify_avoidability, Classification, PointVerdict};
pub use constants::{
    aikawa_wiener_ratio, c1_empirical, c2_empirical, empirical_constants, quasi_additivity, EmpiricalConstants,
    QuasiAdditivity,
};
pub use grid::BoundaryGrid;
pub use integral::{thm2_integral, IntegralCheckpoint, Thm2Result};
pub use series::{
    classify_discrete_tail, shell_sums, thm1_series, thm1_series_grouped, GroupedSeries, SeriesTrace, ShellSums,
};
pub use wiener::{aikawa_sum, wiener_dyadic_sum, AikawaSum, DyadicShell, DyadicSum, LevelPartial};

/// Tolerance for the borderline cases `λ = 0` and `μ = -1`.
pub const BORDERLINE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictTag {
    Divergent,
    Convergent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceVerdict {
    pub tag: VerdictTag,
    pub evidence: Vec<String>,
    pub tail_model: String,
}

impl DivergenceVerdict {
    pub fn inconclusive(tail_model: impl Into<String>, evidence: Vec<String>) -> Self {
        Self {
            tag: VerdictTag::Inconclusive,
            evidence,
            tail_model: tail_model.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AggregateVerdict {
    Unavoidable,
    AvoidableCandidate,
    Inconclusive,
}

impl AggregateVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            AggregateVerdict::Unavoidable => "Unavoidable",
            AggregateVerdict::AvoidableCandidate => "AvoidableCandidate",
            AggregateVerdict::Inconclusive => "Inconclusive",
        }
    }
}

/// Closed-form description of a shell configuration used for tail reduction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailModel {
    pub profile: RadialProfile,
    #[serde(default)]
    pub weight: WeightFunction,
    /// Shell parameter `a` of the generator.
    pub a: f64,
}

impl TailModel {
    /// `φ^(d-α) M` in the variable `u = -log(1 - t)`.
    pub fn exponents(&self, dim: usize, alpha: f64) -> TailExponents {
        self.profile
            .power_exponents(dim as f64 - alpha)
            .times(&self.weight.exponents())
    }

    pub fn describe(&self) -> String {
        format!("{}, {}", self.profile.describe(), self.weight.describe())
    }
}

/// Sign of `λ`, then `μ` against `-1`, with borderline snapping.
pub(crate) fn classify_exponents(e: &TailExponents) -> (VerdictTag, String) {
    if e.lambda > BORDERLINE_TOL {
        (VerdictTag::Divergent, format!("exponential growth e^({:.6} u)", e.lambda))
    } else if e.lambda < -BORDERLINE_TOL {
        (VerdictTag::Convergent, format!("exponential decay e^({:.6} u)", e.lambda))
    } else if e.mu >= -1.0 - BORDERLINE_TOL {
        (VerdictTag::Divergent, format!("algebraic tail (1+u)^{:.6}, exponent >= -1", e.mu))
    } else {
        (VerdictTag::Convergent, format!("algebraic tail (1+u)^{:.6}, exponent < -1", e.mu))
    }
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
