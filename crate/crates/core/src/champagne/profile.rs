//! Closed-form radial profiles `φ` and weights `M`.
//!
//! Both are written in the variable `u = -log(1 - t)`, where every supported
//! form becomes `e^(λu) (1 + u)^μ`. The criteria module reads the exponents
//! off [`TailExponents`] to classify tails analytically.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Decreasing radial profile `φ : [0, 1) -> (0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    /// `φ ≡ c`.
    Constant { c: f64 },
    /// `φ(t) = (1 - t)^β`.
    Power { beta: f64 },
    /// `φ(t) = log(e / (1 - t))^(-p)`.
    Log { p: f64 },
}

/// Increasing weight `M : [0, 1) -> [1, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFunction {
    #[default]
    One,
    /// `M(t) = (1 - t)^(-γ)`.
    Power { gamma: f64 },
    /// `M(t) = log(e / (1 - t))^q`.
    Log { q: f64 },
}

/// `K e^(λu) (1 + u)^μ` with `u = -log(1 - t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailExponents {
    pub coefficient: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl TailExponents {
    pub const UNIT: TailExponents = TailExponents {
        coefficient: 1.0,
        lambda: 0.0,
        mu: 0.0,
    };

    pub fn times(&self, other: &TailExponents) -> TailExponents {
        TailExponents {
            coefficient: self.coefficient * other.coefficient,
            lambda: self.lambda + other.lambda,
            mu: self.mu + other.mu,
        }
    }

    pub fn eval_u(&self, u: f64) -> f64 {
        self.coefficient * (self.lambda * u).exp() * (1.0 + u).powf(self.mu)
    }
}

impl RadialProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RadialProfile::Constant { c } if !(c > 0.0 && c < 1.0) => {
                Err(invalid("profile", format!("constant c must lie in (0, 1), got {c}")))
            }
            RadialProfile::Power { beta } if !(beta > 0.0 && beta.is_finite()) => {
                Err(invalid("profile", format!("power beta must be positive, got {beta}")))
            }
            RadialProfile::Log { p } if !(p > 0.0 && p.is_finite()) => {
                Err(invalid("profile", format!("log exponent p must be positive, got {p}")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_complement(1.0 - t)
    }

    /// `φ(1 - s)`, accurate for small `s`.
    pub fn eval_complement(&self, s: f64) -> f64 {
        match *self {
            RadialProfile::Constant { c } => c,
            RadialProfile::Power { beta } => s.powf(beta),
            RadialProfile::Log { p } => (1.0 - s.ln()).powf(-p),
        }
    }

    /// Exponents of `φ^k` in the `u` variable.
    pub fn power_exponents(&self, k: f64) -> TailExponents {
        match *self {
            RadialProfile::Constant { c } => TailExponents {
                coefficient: c.powf(k),
                lambda: 0.0,
                mu: 0.0,
            },
            RadialProfile::Power { beta } => TailExponents {
                coefficient: 1.0,
                lambda: -beta * k,
                mu: 0.0,
            },
            RadialProfile::Log { p } => TailExponents {
                coefficient: 1.0,
                lambda: 0.0,
                mu: -p * k,
            },
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            RadialProfile::Constant { c } => format!("phi = {c}"),
            RadialProfile::Power { beta } => format!("phi = (1-t)^{beta}"),
            RadialProfile::Log { p } => format!("phi = log(e/(1-t))^-{p}"),
        }
    }

    /// Parameter columns `(kind, value)` for reports.
    pub fn parameter(&self) -> (&'static str, f64) {
        match *self {
            RadialProfile::Constant { c } => ("constant", c),
            RadialProfile::Power { beta } => ("power", beta),
            RadialProfile::Log { p } => ("log", p),
        }
    }
}

impl WeightFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightFunction::Power { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(invalid("weight", format!("power gamma must be positive, got {gamma}")))
            }
            WeightFunction::Log { q } if !(q > 0.0 && q.is_finite()) => {
                Err(invalid("weight", format!("log exponent q must be positive, got {q}")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_complement(1.0 - t)
    }

    /// `M(1 - s)`, accurate for small `s`.
    pub fn eval_complement(&self, s: f64) -> f64 {
        match *self {
            WeightFunction::One => 1.0,
            WeightFunction::Power { gamma } => s.powf(-gamma),
            WeightFunction::Log { q } => (1.0 - s.ln()).powf(q),
        }
    }

    pub fn exponents(&self) -> TailExponents {
        match *self {
            WeightFunction::One => TailExponents::UNIT,
            WeightFunction::Power { gamma } => TailExponents {
                coefficient: 1.0,
                lambda: gamma,
                mu: 0.0,
            },
            WeightFunction::Log { q } => TailExponents {
                coefficient: 1.0,
                lambda: 0.0,
                mu: q,
            },
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            WeightFunction::One => "M = 1".into(),
            WeightFunction::Power { gamma } => format!("M = (1-t)^-{gamma}"),
            WeightFunction::Log { q } => format!("M = log(e/(1-t))^{q}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DoublingCheck {
    pub holds: bool,
    pub worst_ratio: f64,
    pub worst_k: u32,
}

/// Checks `M(1 - t/2) <= c M(1 - t)` for `t = 2^-k`, `k = 1..=grid`.
pub fn check_doubling_m(m: &WeightFunction, c: f64, grid: u32) -> Result<DoublingCheck> {
    if grid < 10 {
        return Err(invalid("grid", format!("need at least 10 grid points, got {grid}")));
    }
    if !(c >= 1.0) {
        return Err(invalid("c", format!("doubling constant must be >= 1, got {c}")));
    }
    let mut worst = DoublingCheck {
        holds: true,
        worst_ratio: 0.0,
        worst_k: 1,
    };
    for k in 1..=grid {
        let t = (-(k as f64)).exp2();
        let ratio = m.eval(1.0 - t / 2.0) / m.eval(1.0 - t);
        if ratio > worst.worst_ratio {
            worst.worst_ratio = ratio;
            worst.worst_k = k;
        }
    }
    worst.holds = worst.worst_ratio <= c * (1.0 + 1e-12);
    Ok(worst)
}
