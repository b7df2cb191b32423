use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::champagne::{shell_radii, BubbleConfig, TailExponents};
use crate::error::{invalid, Error, Result};
use crate::geometry::{distance, Point};
use crate::kernels::BOUNDARY_TOL;

use super::{CompensatedSum, VerdictTag, BORDERLINE_TOL};

#[derive(Clone, Debug, Serialize)]
pub struct SeriesTrace {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupedSeries {
    pub group_sums: Vec<f64>,
    pub total: f64,
}

fn term(config: &BubbleConfig, z: &[f64], alpha: f64, k: usize) -> Result<f64> {
    let d = config.domain().dim() as f64;
    let b = &config.bubbles()[k];
    let dist = distance(b.center.coords(), z);
    if dist == 0.0 {
        return Err(Error::Singular);
    }
    let delta = config.delta(k);
    Ok(delta.powf(2.0 * alpha - 2.0) * b.radius.powf(d - alpha) / dist.powf(d + alpha - 2.0))
}

fn check_inputs(config: &BubbleConfig, z: &Point, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("must lie in (0, 2), got {alpha}")));
    }
    config.domain().require_boundary(z, BOUNDARY_TOL)
}

/// Terms `δ(x_n)^(2α-2) r_n^(d-α) / |x_n - z|^(d+α-2)` in config order.
pub fn thm1_series(config: &BubbleConfig, z: &Point, alpha: f64) -> Result<SeriesTrace> {
    check_inputs(config, z, alpha)?;
    let terms = (0..config.len())
        .map(|k| term(config, z.coords(), alpha, k))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = terms
        .iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect();
    Ok(SeriesTrace {
        terms,
        partial_sums,
        total: acc,
    })
}

/// Compensated per-group sums; `groups` must partition `0..config.len()`.
pub fn thm1_series_grouped(
    config: &BubbleConfig,
    z: &Point,
    alpha: f64,
    groups: &[Range<usize>],
) -> Result<GroupedSeries> {
    check_inputs(config, z, alpha)?;
    let mut next = 0;
    for g in groups {
        if g.start != next || g.end < g.start {
            return Err(invalid("groups", "ranges must be consecutive and cover every bubble"));
        }
        next = g.end;
    }
    if next != config.len() {
        return Err(invalid("groups", "ranges must be consecutive and cover every bubble"));
    }
    let group_sums = groups
        .par_iter()
        .map(|g| {
            let mut s = CompensatedSum::default();
            for k in g.clone() {
                s.add(term(config, z.coords(), alpha, k)?);
            }
            Ok(s.value())
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut total = CompensatedSum::default();
    for &g in &group_sums {
        total.add(g);
    }
    Ok(GroupedSeries {
        group_sums,
        total: total.value(),
    })
}

/// Series terms summed per shell sphere `|x| = t_i`.
#[derive(Clone, Debug, Serialize)]
pub struct ShellSums {
    pub t: Vec<f64>,
    pub counts: Vec<usize>,
    pub sums: Vec<f64>,
}

/// Assigns each bubble of a unit-ball shell configuration to the sphere
/// `|x| = t_i` it lies on and sums the series per sphere.
pub fn shell_sums(config: &BubbleConfig, z: &Point, alpha: f64, a: f64) -> Result<ShellSums> {
    check_inputs(config, z, alpha)?;
    if !config.domain().is_unit_ball() {
        return Err(invalid("domain", "shell sums are defined in the unit ball"));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(invalid("a", format!("must lie in (0, 1), got {a}")));
    }
    let max_norm = config.bubbles().iter().map(|b| b.center.norm()).fold(0.0, f64::max);
    let all_t = shell_radii(a, 60);
    let n = all_t.partition_point(|&t| t < max_norm - 1e-9) + 1;
    let t = all_t[..n.min(all_t.len())].to_vec();
    let mut counts = vec![0usize; t.len()];
    let mut sums = vec![CompensatedSum::default(); t.len()];
    for (k, b) in config.bubbles().iter().enumerate() {
        let s = b.center.norm();
        let i = t
            .iter()
            .position(|&ti| (ti - s).abs() <= 1e-9)
            .ok_or_else(|| Error::Precondition(format!("bubble {k} at |x| = {s} lies on no shell of a = {a}")))?;
        counts[i] += 1;
        sums[i].add(term(config, z.coords(), alpha, k)?);
    }
    Ok(ShellSums {
        t,
        counts,
        sums: sums.iter().map(CompensatedSum::value).collect(),
    })
}

/// Convergence of `Σ_i K e^(λ v_i) (1 + v_i)^μ` with `v_i = v_0 + i h`, by
/// the ratio test and, when the ratio limit is one, comparison with
/// `Σ i^μ`.
pub fn classify_discrete_tail(e: &TailExponents, h: f64) -> (VerdictTag, String) {
    let rho = (e.lambda * h).exp();
    let tol = BORDERLINE_TOL * h;
    if rho > 1.0 + tol {
        (VerdictTag::Divergent, format!("ratio test: term ratio -> {rho:.6} > 1"))
    } else if rho < 1.0 - tol {
        (VerdictTag::Convergent, format!("ratio test: term ratio -> {rho:.6} < 1"))
    } else {
        let p = -e.mu;
        if p <= 1.0 + BORDERLINE_TOL {
            (VerdictTag::Divergent, format!("p-series comparison: terms ~ i^-{p:.6}, p <= 1"))
        } else {
            (VerdictTag::Convergent, format!("p-series comparison: terms ~ i^-{p:.6}, p > 1"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::champagne::{generate_shell_config, Bubble, RadialProfile};
    use crate::geometry::BallDomain;

    #[test]
    fn single_bubble_term() {
        let dom = BallDomain::unit(2).unwrap();
        let cfg = BubbleConfig::new(dom, vec![Bubble::new(Point::from_slice(&[0.9, 0.0]), 0.01)]).unwrap();
        let s = thm1_series(&cfg, &Point::from_slice(&[1.0, 0.0]), 1.5).unwrap();
        let expect = 0.1f64 * 0.01f64.sqrt() / 0.1f64.powf(1.5);
        assert!((s.total - expect).abs() < 1e-12 * expect);
        assert!((s.total - 0.31623).abs() < 1e-5);
    }

    #[test]
    fn empty_and_errors() {
        let dom = BallDomain::unit(2).unwrap();
        let cfg = BubbleConfig::empty(dom);
        let z = Point::from_slice(&[0.0, 1.0]);
        assert_eq!(thm1_series(&cfg, &z, 1.5).unwrap().total, 0.0);
        assert!(thm1_series(&cfg, &Point::from_slice(&[0.0, 0.5]), 1.5).is_err());
        assert!(thm1_series_grouped(&cfg, &z, 1.5, &[0..1]).is_err());
    }

    #[test]
    fn grouped_matches_direct() {
        let dom = BallDomain::unit(2).unwrap();
        let sc = generate_shell_config(&dom, RadialProfile::Constant { c: 0.3 }, 0.5, 5, 0).unwrap();
        let z = Point::from_slice(&[0.6, 0.8]);
        let direct = thm1_series(&sc.config, &z, 1.5).unwrap();
        let grouped = thm1_series_grouped(&sc.config, &z, 1.5, &sc.ranges).unwrap();
        assert!((direct.total - grouped.total).abs() <= 1e-12 * direct.total);
        assert!(direct.partial_sums.windows(2).all(|w| w[1] >= w[0]));
        let shells = shell_sums(&sc.config, &z, 1.5, 0.5).unwrap();
        assert_eq!(shells.sums.len(), 5);
        for (s, g) in shells.sums.iter().zip(&grouped.group_sums) {
            assert!((s - g).abs() <= 1e-13 * g);
        }
    }

    #[test]
    fn discrete_tail_tests() {
        let e = |lambda, mu| TailExponents {
            coefficient: 1.0,
            lambda,
            mu,
        };
        assert_eq!(classify_discrete_tail(&e(0.0, 0.0), 1.0).0, VerdictTag::Divergent);
        assert_eq!(classify_discrete_tail(&e(-0.5, 3.0), 1.0).0, VerdictTag::Convergent);
        assert_eq!(classify_discrete_tail(&e(0.0, -1.0), 1.0).0, VerdictTag::Divergent);
        assert_eq!(classify_discrete_tail(&e(0.0, -2.0), 1.0).0, VerdictTag::Convergent);
    }
}
