use rayon::prelude::*;
use serde::Serialize;

use crate::champagne::{check_separation_thm1, BubbleConfig};
use crate::error::Result;
use crate::geometry::Point;
use crate::kernels::Constants;

use super::series::{classify_discrete_tail, shell_sums, thm1_series_grouped};
use super::{AggregateVerdict, BoundaryGrid, DivergenceVerdict, TailModel, VerdictTag};

/// Largest accepted spread `max/min` of the measured shell sums against the
/// tail model `φ(t_i)^(d-α) M(t_i)`.
pub const SHELL_RATIO_SPREAD_LIMIT: f64 = 100.0;

#[derive(Clone, Debug, Serialize)]
pub struct PointVerdict {
    pub index: usize,
    pub z: Point,
    pub weight: f64,
    pub series_total: f64,
    pub shell_sums: Vec<f64>,
    /// `(min, max)` of shell sum over tail-model term.
    pub shell_ratio_range: Option<(f64, f64)>,
    pub verdict: DivergenceVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub points: Vec<PointVerdict>,
    pub aggregate: AggregateVerdict,
    pub separation: f64,
    pub notes: Vec<String>,
}

fn point_verdict(
    config: &BubbleConfig,
    consts: &Constants,
    tail: Option<&TailModel>,
    index: usize,
    z: &Point,
    weight: f64,
) -> Result<PointVerdict> {
    let alpha = consts.alpha;
    let total = thm1_series_grouped(config, z, alpha, &[0..config.len()])?.total;
    let mut out = PointVerdict {
        index,
        z: z.clone(),
        weight,
        series_total: total,
        shell_sums: Vec::new(),
        shell_ratio_range: None,
        verdict: DivergenceVerdict::inconclusive(
            "none",
            vec![format!("partial sum {total:.6e} over {} terms; no analytic tail", config.len())],
        ),
    };
    let Some(tail) = tail else { return Ok(out) };
    let dim = config.domain().dim();
    out.verdict.tail_model = tail.describe();
    if !config.domain().is_unit_ball() {
        out.verdict.evidence.push("tail model requires the unit ball".into());
        return Ok(out);
    }
    let ss = match shell_sums(config, z, alpha, tail.a) {
        Ok(s) => s,
        Err(e) => {
            out.verdict.evidence.push(format!("shell reduction failed: {e}"));
            return Ok(out);
        }
    };
    let e = tail.exponents(dim, alpha);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (i, (&t, &s)) in ss.t.iter().zip(&ss.sums).enumerate() {
        if ss.counts[i] == 0 {
            out.verdict.evidence.push(format!("shell {} is empty", i + 1));
            out.shell_sums = ss.sums;
            return Ok(out);
        }
        let r = s / e.eval_u(-(-t).ln_1p());
        lo = lo.min(r);
        hi = hi.max(r);
    }
    out.shell_sums = ss.sums;
    out.shell_ratio_range = Some((lo, hi));
    let h = ((1.0 + tail.a) / (1.0 - tail.a)).ln();
    let (tag, reason) = classify_discrete_tail(&e, h);
    let spread = hi / lo;
    out.verdict.evidence = vec![
        format!("partial sum {total:.6e} over {} shells", out.shell_sums.len()),
        format!("shell sum / tail term in [{lo:.4e}, {hi:.4e}] (spread {spread:.3})"),
        reason,
    ];
    if spread.is_finite() && spread <= SHELL_RATIO_SPREAD_LIMIT {
        out.verdict.tag = tag;
    } else {
        out.verdict
            .evidence
            .push(format!("spread exceeds {SHELL_RATIO_SPREAD_LIMIT}; tail model not supported by the sums"));
    }
    Ok(out)
}

pub fn classify_avoidability(
    config: &BubbleConfig,
    consts: &Constants,
    grid: &BoundaryGrid,
    tail_model: Option<&TailModel>,
) -> Result<Classification> {
    consts.validate()?;
    let points = grid
        .points
        .par_iter()
        .zip(&grid.weights)
        .enumerate()
        .map(|(i, (z, &w))| point_verdict(config, consts, tail_model, i, z, w))
        .collect::<Result<Vec<_>>>()?;
    let separation = check_separation_thm1(config, consts.alpha)?;
    let mut notes = vec![format!(
        "almost-every boundary point is approximated by {} grid points",
        grid.len()
    )];
    let count = |tag| points.iter().filter(|p| p.verdict.tag == tag).count();
    let div = count(VerdictTag::Divergent);
    let conv_weight: f64 = points
        .iter()
        .filter(|p| p.verdict.tag == VerdictTag::Convergent)
        .map(|p| p.weight)
        .sum();
    let aggregate = if config.is_empty() {
        notes.push("empty configuration".into());
        AggregateVerdict::AvoidableCandidate
    } else if tail_model.is_none() {
        notes.push("no analytic tail model; partial sums only".into());
        AggregateVerdict::Inconclusive
    } else if div == points.len() && !points.is_empty() {
        if separation > 0.0 {
            AggregateVerdict::Unavoidable
        } else {
            notes.push("series diverges but the separation condition fails".into());
            AggregateVerdict::Inconclusive
        }
    } else if div > 0 {
        notes.push("verdicts differ across grid points".into());
        AggregateVerdict::Inconclusive
    } else if conv_weight > 0.0 {
        AggregateVerdict::AvoidableCandidate
    } else {
        AggregateVerdict::Inconclusive
    };
    Ok(Classification {
        points,
        aggregate,
        separation,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::champagne::{generate_shell_config, RadialProfile, WeightFunction};
    use crate::geometry::BallDomain;

    fn run(phi: RadialProfile, with_tail: bool) -> Classification {
        let dom = BallDomain::unit(2).unwrap();
        let sc = generate_shell_config(&dom, phi, 0.5, 5, 0).unwrap();
        let grid = BoundaryGrid::new(&dom, 16).unwrap();
        let tail = TailModel {
            profile: phi,
            weight: WeightFunction::One,
            a: 0.5,
        };
        let consts = Constants::comparison(1.5).unwrap();
        classify_avoidability(&sc.config, &consts, &grid, with_tail.then_some(&tail)).unwrap()
    }

    #[test]
    fn constant_profile_is_unavoidable() {
        let c = run(RadialProfile::Constant { c: 0.3 }, true);
        assert_eq!(c.aggregate, AggregateVerdict::Unavoidable);
        assert!(c.points.iter().all(|p| p.verdict.tag == VerdictTag::Divergent));
        assert!(c.separation > 0.0);
    }

    #[test]
    fn power_profile_is_avoidable_candidate() {
        let c = run(RadialProfile::Power { beta: 0.5 }, true);
        assert_eq!(c.aggregate, AggregateVerdict::AvoidableCandidate);
        assert!(c.points.iter().all(|p| p.verdict.tag == VerdictTag::Convergent));
    }

    #[test]
    fn no_tail_is_inconclusive_and_empty_is_avoidable() {
        let c = run(RadialProfile::Constant { c: 0.3 }, false);
        assert_eq!(c.aggregate, AggregateVerdict::Inconclusive);
        let dom = BallDomain::unit(2).unwrap();
        let grid = BoundaryGrid::new(&dom, 4).unwrap();
        let c = classify_avoidability(
            &BubbleConfig::empty(dom),
            &Constants::comparison(1.5).unwrap(),
            &grid,
            None,
        )
        .unwrap();
        assert_eq!(c.aggregate, AggregateVerdict::AvoidableCandidate);
    }
}
