//! Monte-Carlo approximation of the censored α-stable process.
//!
//! The process is approximated by a jump-suppression chain: at each step a
//! stable increment over time `h` is proposed and dropped if it leaves `D`.
//! Convergence of this chain to the censored process is a modelling
//! assumption. The lifetime is detected as `δ_D < boundary_eps`, which can
//! only end a path early and therefore biases hitting estimates downward.

mod sampler;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::champagne::{BubbleConfig, BubbleIndex};
use crate::error::{invalid, Error, Result};
use crate::geometry::{BallDomain, Point};

pub use sampler::{stable_increment, unit_median_radius, Increment};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959964;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    pub alpha: f64,
    /// Process time step.
    pub h: f64,
    pub boundary_eps: f64,
    pub max_steps: u64,
    pub n_traj: u64,
    pub seed: u64,
    #[serde(default)]
    pub adaptive: bool,
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        sampler::check_alpha(self.alpha)?;
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(invalid("h", format!("time step must be positive, got {}", self.h)));
        }
        if !(self.boundary_eps > 0.0 && self.boundary_eps.is_finite()) {
            return Err(invalid("boundary_eps", format!("must be positive, got {}", self.boundary_eps)));
        }
        if self.max_steps < 1 {
            return Err(invalid("max_steps", "need at least one step"));
        }
        if self.n_traj < 1 {
            return Err(invalid("n_traj", "need at least one trajectory"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum OutcomeTag {
    HitBubble { k: usize, step: u64 },
    ReachedBoundary { step: u64 },
    Timeout,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryOutcome {
    pub tag: OutcomeTag,
    pub final_point: Point,
}

impl TrajectoryOutcome {
    pub fn is_hit(&self) -> bool {
        matches!(self.tag, OutcomeTag::HitBubble { .. })
    }

    pub fn steps(&self, max_steps: u64) -> u64 {
        match self.tag {
            OutcomeTag::HitBubble { step, .. } | OutcomeTag::ReachedBoundary { step } => step,
            OutcomeTag::Timeout => max_steps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitEstimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_halfwidth: f64,
    pub n: u64,
    pub hits: u64,
    pub boundary: u64,
    pub timeouts: u64,
    pub timeout_fraction: f64,
    pub params: SimParams,
}

/// Wilson score interval `(low, high)` at normal quantile `z`.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Proposed point if it stays in `D`, else `x` (suppressed jump).
pub fn step_censored(x: &Point, xi: &[f64], domain: &BallDomain) -> Result<Point> {
    domain.require_inside(x)?;
    if xi.len() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: xi.len(),
        });
    }
    let cand: Vec<f64> = x.coords().iter().zip(xi).map(|(a, b)| a + b).collect();
    Ok(if domain.contains_raw(&cand) {
        Point::new(cand)
    } else {
        x.clone()
    })
}

/// Independent substream for trajectory `traj`.
pub fn trajectory_rng(seed: u64, traj: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(traj);
    rng
}

/// Chain for a fixed target set. An optional guide set controls the
/// adaptive step size, so nested targets sharing a guide follow identical
/// paths until their first hit.
///
/// The chain runs in the coordinates `(x - c) / R` of the unit ball with
/// time step `h / R^α` and boundary threshold `boundary_eps / R`, so the
/// image of a run under `x -> a x`, `h -> a^α h` is reproduced exactly when
/// these maps are exact in floating point (for instance `a` a power of two).
pub struct Simulator {
    domain: BallDomain,
    unit: BallDomain,
    h_unit: f64,
    eps_unit: f64,
    target: BubbleIndex,
    guide: Option<BubbleIndex>,
    params: SimParams,
    median_unit: f64,
}

impl Simulator {
    pub fn new(config: &BubbleConfig, params: &SimParams) -> Result<Self> {
        params.validate()?;
        let dim = config.domain().dim();
        let domain = config.domain().clone();
        let big_r = domain.radius();
        Ok(Self {
            unit: BallDomain::unit(dim)?,
            h_unit: params.h / big_r.powf(params.alpha),
            eps_unit: params.boundary_eps / big_r,
            domain,
            target: BubbleIndex::new(&config.normalized()?)?,
            guide: None,
            params: params.clone(),
            median_unit: unit_median_radius(params.alpha, dim)?,
        })
    }

    pub fn with_guide(mut self, guide: &BubbleConfig) -> Result<Self> {
        if guide.domain() != &self.domain {
            return Err(Error::Precondition("guide configuration uses a different domain".into()));
        }
        self.guide = Some(BubbleIndex::new(&guide.normalized()?)?);
        Ok(self)
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    fn check_start(&self, x0: &Point) -> Result<()> {
        self.domain.require_inside(x0)?;
        if let Some(k) = self.target.containing(self.to_unit(x0).coords()) {
            return Err(Error::Precondition(format!("start point lies in bubble {k}")));
        }
        Ok(())
    }

    fn step_time(&self, delta: f64, local_scale: f64) -> f64 {
        let p = &self.params;
        if !p.adaptive {
            return self.h_unit;
        }
        let target = 0.25 * delta.min(local_scale);
        self.h_unit.min((target / self.median_unit).powf(p.alpha))
    }

    /// One trajectory from `x0` using the given substream.
    pub fn run(&self, x0: &Point, rng: &mut ChaCha8Rng) -> Result<TrajectoryOutcome> {
        self.check_start(x0)?;
        Ok(self.run_unchecked(x0, rng))
    }

    fn to_unit(&self, x: &Point) -> Point {
        let big_r = self.domain.radius();
        let c = self.domain.center().coords();
        Point::new(x.coords().iter().zip(c).map(|(x, c)| (x - c) / big_r).collect::<Vec<f64>>())
    }

    fn from_unit(&self, y: &[f64]) -> Point {
        let big_r = self.domain.radius();
        let c = self.domain.center().coords();
        Point::new(y.iter().zip(c).map(|(y, c)| c + big_r * y).collect::<Vec<f64>>())
    }

    fn run_unchecked(&self, x0: &Point, rng: &mut ChaCha8Rng) -> TrajectoryOutcome {
        let p = &self.params;
        let dim = self.domain.dim();
        let eps = self.eps_unit;
        let mut x: Increment = self.to_unit(x0).coords().iter().copied().collect();
        let mut cand: Increment = x.clone();
        let mut xi: Increment = x.clone();
        let guide = self.guide.as_ref().unwrap_or(&self.target);
        let mut delta = self.unit.signed_dist_raw(&x);
        let mut local = guide.probe(&x).local_scale;
        if delta < eps {
            return TrajectoryOutcome {
                tag: OutcomeTag::ReachedBoundary { step: 0 },
                final_point: self.from_unit(&x),
            };
        }
        for step in 1..=p.max_steps {
            let h = self.step_time(delta, local);
            let s = h.powf(1.0 / p.alpha);
            sampler::unit_increment_into(rng, p.alpha, &mut xi);
            for i in 0..dim {
                cand[i] = x[i] + s * xi[i];
            }
            if self.unit.contains_raw(&cand) {
                x.copy_from_slice(&cand);
            }
            let probe = self.target.probe(&x);
            if let Some(k) = probe.hit {
                return TrajectoryOutcome {
                    tag: OutcomeTag::HitBubble { k, step },
                    final_point: self.from_unit(&x),
                };
            }
            delta = self.unit.signed_dist_raw(&x);
            if delta < eps {
                return TrajectoryOutcome {
                    tag: OutcomeTag::ReachedBoundary { step },
                    final_point: self.from_unit(&x),
                };
            }
            local = match &self.guide {
                Some(g) => g.probe(&x).local_scale,
                None => probe.local_scale,
            };
        }
        TrajectoryOutcome {
            tag: OutcomeTag::Timeout,
            final_point: self.from_unit(&x),
        }
    }

    /// All `n_traj` outcomes in trajectory order.
    pub fn outcomes(&self, x0: &Point) -> Result<Vec<TrajectoryOutcome>> {
        self.check_start(x0)?;
        Ok((0..self.params.n_traj)
            .into_par_iter()
            .map(|t| self.run_unchecked(x0, &mut trajectory_rng(self.params.seed, t)))
            .collect())
    }

    pub fn estimate(&self, x0: &Point) -> Result<HitEstimate> {
        Ok(summarize(&self.outcomes(x0)?, &self.params))
    }
}

pub fn summarize(outcomes: &[TrajectoryOutcome], params: &SimParams) -> HitEstimate {
    let n = outcomes.len() as u64;
    let mut hits = 0;
    let mut boundary = 0;
    let mut timeouts = 0;
    for o in outcomes {
        match o.tag {
            OutcomeTag::HitBubble { .. } => hits += 1,
            OutcomeTag::ReachedBoundary { .. } => boundary += 1,
            OutcomeTag::Timeout => timeouts += 1,
        }
    }
    let (lo, hi) = wilson_interval(hits, n, Z95);
    let frac = |c: u64| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    HitEstimate {
        p_hat: frac(hits),
        ci_low: lo,
        ci_high: hi,
        ci_halfwidth: (hi - lo) / 2.0,
        n,
        hits,
        boundary,
        timeouts,
        timeout_fraction: frac(timeouts),
        params: params.clone(),
    }
}

/// Single trajectory with substream `traj` of `params.seed`.
pub fn run_trajectory(x0: &Point, config: &BubbleConfig, params: &SimParams, traj: u64) -> Result<TrajectoryOutcome> {
    Simulator::new(config, params)?.run(x0, &mut trajectory_rng(params.seed, traj))
}

pub fn estimate_hitting(x0: &Point, config: &BubbleConfig, params: &SimParams) -> Result<HitEstimate> {
    Simulator::new(config, params)?.estimate(x0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::champagne::Bubble;

    fn params(n: u64) -> SimParams {
        SimParams {
            alpha: 1.5,
            h: 1e-3,
            boundary_eps: 1e-3,
            max_steps: 100_000,
            n_traj: n,
            seed: 42,
            adaptive: true,
        }
    }

    #[test]
    fn censoring_step() {
        let dom = BallDomain::unit(2).unwrap();
        let x = Point::from_slice(&[0.99, 0.0]);
        assert_eq!(step_censored(&x, &[0.0, 0.0], &dom).unwrap(), x);
        assert_eq!(step_censored(&x, &[0.02, 0.0], &dom).unwrap(), x);
        let y = step_censored(&x, &[-0.5, 0.1], &dom).unwrap();
        assert!(dom.contains(&y) && y != x);
        assert!(step_censored(&Point::from_slice(&[1.5, 0.0]), &[0.0, 0.0], &dom).is_err());
    }

    #[test]
    fn wilson_matches_reference() {
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.403832).abs() < 1e-5 && (hi - 0.596168).abs() < 1e-5);
        let (lo, hi) = wilson_interval(0, 10, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.277533).abs() < 1e-5);
    }

    #[test]
    fn empty_config_never_hits() {
        let dom = BallDomain::unit(2).unwrap();
        let cfg = BubbleConfig::empty(dom);
        let est = estimate_hitting(&Point::origin(2), &cfg, &params(200)).unwrap();
        assert_eq!(est.hits, 0);
        assert_eq!(est.p_hat, 0.0);
        assert_eq!(est.hits + est.boundary + est.timeouts, 200);
    }

    #[test]
    fn determinism_and_start_checks() {
        let dom = BallDomain::unit(2).unwrap();
        let cfg = BubbleConfig::new(dom, vec![Bubble::new(Point::from_slice(&[0.5, 0.0]), 0.1)]).unwrap();
        let p = params(1);
        let a = run_trajectory(&Point::origin(2), &cfg, &p, 3).unwrap();
        let b = run_trajectory(&Point::origin(2), &cfg, &p, 3).unwrap();
        assert_eq!(a, b);
        if let OutcomeTag::HitBubble { k, .. } = a.tag {
            assert!(cfg.bubbles()[k].contains(a.final_point.coords()));
        }
        assert!(run_trajectory(&Point::from_slice(&[0.5, 0.0]), &cfg, &p, 0).is_err());
    }

    /// Staggered rings of bubbles filling the collar `δ < 0.05` down to
    /// `δ ≈ 1e-5`.
    fn collar(dom: &BallDomain) -> BubbleConfig {
        let mut bubbles = Vec::new();
        let mut delta = 0.05 / 1.3;
        let mut row = 0;
        while delta > 1e-5 {
            let r = 0.3 * delta;
            let rho = 1.0 - delta;
            let n = (2.0 * std::f64::consts::PI * rho / (2.0 * r * 1.001)).floor() as usize;
            let shift = if row % 2 == 1 { 0.5 } else { 0.0 };
            for j in 0..n {
                let th = 2.0 * std::f64::consts::PI * (j as f64 + shift) / n as f64;
                bubbles.push(Bubble::new(Point::from_slice(&[rho * th.cos(), rho * th.sin()]), r));
            }
            delta *= 0.53;
            row += 1;
        }
        BubbleConfig::new(dom.clone(), bubbles).unwrap()
    }

    #[test]
    fn boundary_collar_is_hit() {
        let dom = BallDomain::unit(2).unwrap();
        let cfg = collar(&dom);
        let est = estimate_hitting(&Point::origin(2), &cfg, &params(10_000)).unwrap();
        assert!(est.p_hat >= 0.99, "{est:?}");
    }
}
