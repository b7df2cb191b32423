//! Empirical values of the unspecified comparison constants.

use serde::Serialize;

use crate::champagne::BubbleConfig;
use crate::error::Result;
use crate::geometry::{distance, Point};
use crate::kernels::{Constants, BOUNDARY_TOL};
use crate::whitney::WhitneyDecomposition;

use super::wiener::bubble_cubes;
use super::{AikawaSum, DyadicSum};

/// `Σ_j g(x_j)^2 Σ_{k: B_k ∩ Q_j ≠ ∅} r_k^(d-α)` and its `1/m`, min-weight
/// lower companion, both divided by `Σ_k g(x_k)^2 r_k^(d-α)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuasiAdditivity {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalConstants {
    pub c2_empirical: usize,
    pub c2_bound: usize,
    pub c1_empirical: f64,
    pub quasi_additivity: QuasiAdditivity,
    pub covered_bubbles: usize,
}

/// Largest number of cubes met by a covered bubble.
pub fn c2_empirical(dec: &WhitneyDecomposition, config: &BubbleConfig) -> Result<usize> {
    let (lists, _) = bubble_cubes(dec, config)?;
    Ok(lists.iter().flatten().map(Vec::len).max().unwrap_or(0))
}

fn spread(a: f64, b: f64) -> f64 {
    (a / b).max(b / a)
}

/// Largest distortion `max(ρ, 1/ρ)` of `dist(Q_j, ∂D) / δ(x_k)` and
/// `dist(z, Q_j) / |x_k - z|` over covered bubbles and the cubes they meet.
pub fn c1_empirical(dec: &WhitneyDecomposition, config: &BubbleConfig, z: &Point) -> Result<f64> {
    config.domain().require_boundary(z, BOUNDARY_TOL)?;
    let (lists, _) = bubble_cubes(dec, config)?;
    let mut worst = 1.0f64;
    for (k, ids) in lists.iter().enumerate() {
        let Some(ids) = ids else { continue };
        let b = &config.bubbles()[k];
        let delta = config.delta(k);
        let rz = distance(b.center.coords(), z.coords());
        for &j in ids {
            let q = dec.cube(j);
            worst = worst
                .max(spread(q.dist_boundary, delta))
                .max(spread(q.dist_to_point(z.coords()), rz));
        }
    }
    Ok(worst)
}

pub fn quasi_additivity(dec: &WhitneyDecomposition, config: &BubbleConfig, consts: &Constants) -> Result<QuasiAdditivity> {
    consts.validate()?;
    let domain = config.domain();
    let (lists, m) = bubble_cubes(dec, config)?;
    let k_exp = domain.dim() as f64 - consts.alpha;
    let g2 = |x: &[f64]| domain.signed_dist_raw(x).powf(2.0 * (consts.alpha - 1.0));
    let (mut num, mut low, mut den) = (0.0, 0.0, 0.0);
    for (k, ids) in lists.iter().enumerate() {
        let Some(ids) = ids else { continue };
        let b = &config.bubbles()[k];
        let cap = b.radius.powf(k_exp);
        den += g2(b.center.coords()) * cap;
        let mut min_w = f64::INFINITY;
        for &j in ids {
            let w = g2(dec.cube(j).center().coords());
            num += w * cap;
            min_w = min_w.min(w);
        }
        if min_w.is_finite() {
            low += min_w * cap / m as f64;
        }
    }
    if den == 0.0 {
        return Ok(QuasiAdditivity { lower: 1.0, upper: 1.0 });
    }
    Ok(QuasiAdditivity {
        lower: low / den,
        upper: num / den,
    })
}

pub fn empirical_constants(
    dec: &WhitneyDecomposition,
    config: &BubbleConfig,
    z: &Point,
    consts: &Constants,
) -> Result<EmpiricalConstants> {
    let (lists, _) = bubble_cubes(dec, config)?;
    Ok(EmpiricalConstants {
        c2_empirical: lists.iter().flatten().map(Vec::len).max().unwrap_or(0),
        c2_bound: dec.c2_bound(),
        c1_empirical: c1_empirical(dec, config, z)?,
        quasi_additivity: quasi_additivity(dec, config, consts)?,
        covered_bubbles: lists.iter().flatten().count(),
    })
}

/// Ratio of the upper envelopes of the cube-wise and dyadic sums.
pub fn aikawa_wiener_ratio(aikawa: &AikawaSum, dyadic: &DyadicSum) -> f64 {
    aikawa.total.upper / dyadic.total.upper
}
