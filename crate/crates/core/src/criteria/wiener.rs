//! Cube-wise minimal-thinness sums for bubble unions.
//!
//! `Cap(A ∩ Q_j)` is unknown, so each sum is an envelope. The upper bound
//! uses `Cap(A ∩ Q_j) <= Σ_{k: B_k ∩ Q_j ≠ ∅} Cap(B_k)`. The lower bound
//! uses monotonicity and subadditivity: with at most `m` bubbles meeting any
//! cube, `Σ_j w_j Cap(A ∩ Q_j) >= (1/m) Σ_k min_{j ∈ J_k} w_j Cap(B_k)`,
//! where `J_k` are the cubes meeting `B_k`. Bubbles reaching into the
//! uncovered collar are left out of the lower bound.

use std::collections::BTreeMap;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::champagne::{check_lemma62, BubbleConfig};
use crate::error::{Error, Result};
use crate::geometry::{distance, Point};
use crate::kernels::{capacity_ball_envelope, g_envelope, Constants, Envelope, BOUNDARY_TOL};
use crate::whitney::WhitneyDecomposition;

#[derive(Clone, Debug, Serialize)]
pub struct LevelPartial {
    pub level: i32,
    pub contribution: Envelope,
    pub cumulative: Envelope,
}

#[derive(Clone, Debug, Serialize)]
pub struct AikawaSum {
    /// Contributions grouped by cube level, coarse to fine.
    pub levels: Vec<LevelPartial>,
    pub total: Envelope,
    /// Bubbles not contained in the covered region.
    pub truncated_bubbles: Vec<usize>,
    pub max_bubbles_per_cube: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DyadicShell {
    pub n: u32,
    pub contribution: Envelope,
    pub cumulative: Envelope,
    pub bubbles: usize,
    /// Some bubble of this shell reaches into the uncovered collar; its
    /// contribution is the bubble surrogate `g(x_k)^2 Cap(B_k)`.
    pub truncated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DyadicSum {
    pub shells: Vec<DyadicShell>,
    pub total: Envelope,
    pub max_bubbles_per_cube: usize,
}

/// Cubes meeting each bubble (`None` when the bubble is not covered) and
/// the largest number of bubbles meeting a single cube.
pub(crate) fn bubble_cubes(dec: &WhitneyDecomposition, config: &BubbleConfig) -> Result<(Vec<Option<Vec<usize>>>, usize)> {
    if dec.domain() != config.domain() {
        return Err(Error::Precondition("decomposition and configuration use different domains".into()));
    }
    let lists = config
        .bubbles()
        .par_iter()
        .map(|b| {
            if dec.covers_ball(&b.center, b.radius) {
                dec.intersecting_cubes(&b.center, b.radius).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut per_cube: FxHashMap<usize, usize> = FxHashMap::default();
    for ids in lists.iter().flatten() {
        for &j in ids {
            *per_cube.entry(j).or_default() += 1;
        }
    }
    let m = per_cube.values().copied().max().unwrap_or(0);
    Ok((lists, m))
}

fn cumulate<K: Copy>(parts: BTreeMap<K, Envelope>) -> Vec<(K, Envelope, Envelope)> {
    let mut acc = Envelope::ZERO;
    parts
        .into_iter()
        .map(|(k, c)| {
            acc = acc.add(&c);
            (k, c, acc)
        })
        .collect()
}

pub fn aikawa_sum(
    dec: &WhitneyDecomposition,
    config: &BubbleConfig,
    z: &Point,
    consts: &Constants,
) -> Result<AikawaSum> {
    consts.validate()?;
    let domain = config.domain();
    domain.require_boundary(z, BOUNDARY_TOL)?;
    let dim = domain.dim();
    let d = dim as f64;
    let alpha = consts.alpha;
    let mut warnings = Vec::new();
    if !config.is_empty() {
        let rep = check_lemma62(config, consts)?;
        if !rep.cond_i {
            warnings.push(format!(
                "small-radius condition fails: max radius {:.3e} exceeds {:.3e}",
                rep.max_radius, rep.radius_threshold
            ));
        }
    }
    let (lists, m) = bubble_cubes(dec, config)?;
    let weight = |j: usize| {
        let q = dec.cube(j);
        q.dist_boundary.powf(2.0 * (alpha - 1.0)) / q.dist_to_point(z.coords()).powf(d + alpha - 2.0)
    };
    let mut parts: BTreeMap<i32, Envelope> = BTreeMap::new();
    let mut truncated = Vec::new();
    for (k, b) in config.bubbles().iter().enumerate() {
        let cap = capacity_ball_envelope(consts, b.radius, dim)?;
        let Some(ids) = &lists[k] else {
            truncated.push(k);
            continue;
        };
        let mut best: Option<(f64, i32)> = None;
        for &j in ids {
            let w = weight(j);
            let level = dec.cube(j).level;
            let e = parts.entry(level).or_insert(Envelope::ZERO);
            e.upper += w * cap.upper;
            if best.is_none_or(|(bw, _)| w < bw) {
                best = Some((w, level));
            }
        }
        if let Some((w, level)) = best {
            parts.get_mut(&level).expect("level present").lower += w * cap.lower / m as f64;
        }
    }
    let levels: Vec<LevelPartial> = cumulate(parts)
        .into_iter()
        .map(|(level, contribution, cumulative)| LevelPartial {
            level,
            contribution,
            cumulative,
        })
        .collect();
    let total = levels.last().map_or(Envelope::ZERO, |l| l.cumulative);
    if !truncated.is_empty() {
        warnings.push(format!(
            "{} bubbles reach into the uncovered collar and are omitted",
            truncated.len()
        ));
    }
    Ok(AikawaSum {
        levels,
        total,
        truncated_bubbles: truncated,
        max_bubbles_per_cube: m,
        warnings,
    })
}

/// Dyadic shell of `ρ = |x - z|`: `2^(-n-1) <= ρ < 2^-n`.
fn shell_index(rho: f64) -> i64 {
    (-rho.log2()).floor() as i64
}

pub fn wiener_dyadic_sum(
    dec: &WhitneyDecomposition,
    config: &BubbleConfig,
    z: &Point,
    consts: &Constants,
    n_max: u32,
) -> Result<DyadicSum> {
    consts.validate()?;
    if n_max < 1 {
        return Err(crate::error::invalid("n_max", "need at least one dyadic shell"));
    }
    let domain = config.domain();
    domain.require_boundary(z, BOUNDARY_TOL)?;
    let dim = domain.dim();
    let d = dim as f64;
    let (lists, m) = bubble_cubes(dec, config)?;
    let g2 = |x: &Point| -> Result<Envelope> {
        let g = g_envelope(domain, consts, x)?;
        Ok(g.mul(&g))
    };
    let mut parts: BTreeMap<u32, (Envelope, usize, bool)> = BTreeMap::new();
    for (k, b) in config.bubbles().iter().enumerate() {
        let rho = distance(b.center.coords(), z.coords());
        let n_lo = shell_index(rho + b.radius).max(1);
        let n_hi = shell_index(rho - b.radius).min(n_max as i64);
        if n_lo > n_hi {
            continue;
        }
        let inside = n_lo == n_hi && shell_index(rho + b.radius) == shell_index(rho - b.radius);
        let cap = capacity_ball_envelope(consts, b.radius, dim)?;
        let (upper, lower, truncated) = match &lists[k] {
            Some(ids) => {
                let mut up = 0.0;
                let mut lo = f64::INFINITY;
                for &j in ids {
                    let e = g2(&dec.cube(j).center())?;
                    up += e.upper;
                    lo = lo.min(e.lower);
                }
                (up * cap.upper, lo * cap.lower / m as f64, false)
            }
            None => {
                let e = g2(&b.center)?.mul(&cap);
                (e.upper, e.lower, true)
            }
        };
        for n in n_lo..=n_hi {
            let f = (n as f64 * (d + consts.alpha - 2.0)).exp2();
            let entry = parts.entry(n as u32).or_insert((Envelope::ZERO, 0, false));
            entry.0.upper += f * upper;
            if inside && lower.is_finite() {
                entry.0.lower += f * lower;
            }
            entry.1 += 1;
            entry.2 |= truncated;
        }
    }
    let threshold = dec.coverage_threshold();
    let mut acc = Envelope::ZERO;
    let shells: Vec<DyadicShell> = parts
        .into_iter()
        .map(|(n, (c, count, truncated))| {
            acc = acc.add(&c);
            DyadicShell {
                n,
                contribution: c,
                cumulative: acc,
                bubbles: count,
                truncated: truncated || (-(n as f64)).exp2() <= threshold,
            }
        })
        .collect();
    Ok(DyadicSum {
        total: acc,
        shells,
        max_bubbles_per_cube: m,
    })
}
