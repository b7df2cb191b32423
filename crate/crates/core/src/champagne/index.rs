//! Spatial index over bubble centers.
//!
//! Bubbles are bucketed by the dyadic level `m = floor(-log2 δ(x_k))` of
//! their center and hashed into cells of side `h_m = 2^(-m-1)`. Since
//! `r_k < δ(x_k)/2 <= h_m`, a bubble containing `x` has its center in one of
//! the `3^d` cells around `x` at its own level; those neighbourhoods are
//! precomputed as blocks.

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::error::{invalid, Result};
use crate::geometry::{distance, BallDomain};

use super::BubbleConfig;

/// Largest dimension supported by the fixed-width cell keys.
pub const MAX_INDEX_DIM: usize = 4;

type CellKey = [i32; MAX_INDEX_DIM + 1];

#[derive(Clone, Debug)]
struct Block {
    ids: SmallVec<[u32; 8]>,
}

#[derive(Clone, Debug)]
struct Level {
    level: i32,
    ids: Vec<u32>,
    max_radius: f64,
}

/// Result of [`BubbleIndex::probe`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub hit: Option<usize>,
    /// `min_k max(dist(x, B_k), r_k)` over nearby bubbles, or `∞`: each
    /// bubble limits the step by its radius once `x` is within that
    /// distance of it, and by its distance otherwise.
    pub local_scale: f64,
}

#[derive(Clone, Debug)]
pub struct BubbleIndex {
    domain: BallDomain,
    dim: usize,
    centers: Vec<f64>,
    radii: Vec<f64>,
    levels: Vec<Level>,
    cells: FxHashMap<CellKey, SmallVec<[u32; 4]>>,
    blocks: FxHashMap<CellKey, Block>,
}

#[inline]
pub(crate) fn level_of(delta: f64) -> i32 {
    (-delta.log2()).floor() as i32
}

#[inline]
fn cell_side(level: i32) -> f64 {
    (-(level as f64) - 1.0).exp2()
}

impl BubbleIndex {
    pub fn new(config: &BubbleConfig) -> Result<Self> {
        let domain = config.domain().clone();
        let dim = domain.dim();
        if dim > MAX_INDEX_DIM {
            return Err(invalid(
                "dimension",
                format!("spatial index supports d <= {MAX_INDEX_DIM}, got {dim}"),
            ));
        }
        let n = config.len();
        let mut centers = Vec::with_capacity(n * dim);
        let mut radii = Vec::with_capacity(n);
        let mut by_level: FxHashMap<i32, Vec<u32>> = FxHashMap::default();
        let mut cells: FxHashMap<CellKey, SmallVec<[u32; 4]>> = FxHashMap::default();
        for (k, b) in config.bubbles().iter().enumerate() {
            centers.extend_from_slice(b.center.coords());
            radii.push(b.radius);
            let m = level_of(domain.signed_dist_raw(b.center.coords()));
            by_level.entry(m).or_default().push(k as u32);
            cells.entry(key(m, b.center.coords())).or_default().push(k as u32);
        }
        let mut levels: Vec<Level> = by_level
            .into_iter()
            .map(|(level, ids)| {
                let max_radius = ids.iter().map(|&k| radii[k as usize]).fold(0.0, f64::max);
                Level { level, ids, max_radius }
            })
            .collect();
        levels.sort_unstable_by_key(|l| l.level);

        let mut blocks: FxHashMap<CellKey, Block> = FxHashMap::default();
        let offsets = neighbour_offsets(dim);
        for (cell, ids) in &cells {
            for off in &offsets {
                let mut k = *cell;
                for (i, o) in off.iter().enumerate() {
                    k[i + 1] += o;
                }
                let block = blocks.entry(k).or_insert_with(|| Block { ids: SmallVec::new() });
                block.ids.extend_from_slice(ids);
            }
        }
        for b in blocks.values_mut() {
            b.ids.sort_unstable();
        }
        Ok(Self {
            domain,
            dim,
            centers,
            radii,
            levels,
            cells,
            blocks,
        })
    }

    pub fn domain(&self) -> &BallDomain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    #[inline]
    pub fn center(&self, k: usize) -> &[f64] {
        &self.centers[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn radius(&self, k: usize) -> f64 {
        self.radii[k]
    }

    /// Bubble containing `x` (closed ball) and the local step scale.
    pub fn probe(&self, x: &[f64]) -> Probe {
        let mut out = Probe {
            hit: None,
            local_scale: f64::INFINITY,
        };
        if self.radii.is_empty() {
            return out;
        }
        let delta = self.domain.signed_dist_raw(x);
        if delta <= 0.0 {
            return out;
        }
        let m0 = level_of(delta);
        for m in m0 - 2..=m0 + 2 {
            let Some(block) = self.blocks.get(&key(m, x)) else {
                continue;
            };
            let near = (m - m0).abs() <= 1;
            if !near && out.hit.is_some() {
                continue;
            }
            for &id in &block.ids {
                let k = id as usize;
                let r = self.radii[k];
                let gap = distance(x, self.center(k)) - r;
                if gap <= 0.0 && out.hit.is_none() {
                    out.hit = Some(k);
                }
                if near {
                    out.local_scale = out.local_scale.min(gap.max(r));
                }
            }
        }
        out
    }

    /// Bubble whose closed ball contains `x`, if any.
    pub fn containing(&self, x: &[f64]) -> Option<usize> {
        self.probe(x).hit
    }

    /// Calls `f(k)` for every center with `|x_k - x| < rho`.
    pub fn for_each_within(&self, x: &[f64], rho: f64, mut f: impl FnMut(usize, f64)) {
        if self.radii.is_empty() || !(rho > 0.0) {
            return;
        }
        let delta = self.domain.signed_dist_raw(x);
        let hi = delta + rho;
        let lo = delta - rho;
        let m_min = level_of(hi) - 1;
        let m_max = if lo > 0.0 { level_of(lo) + 1 } else { i32::MAX };
        let start = self.levels.partition_point(|l| l.level < m_min);
        for lvl in self.levels[start..].iter().take_while(|l| l.level <= m_max) {
            self.scan_level(lvl, x, rho, &mut f);
        }
    }

    fn scan_level(&self, lvl: &Level, x: &[f64], rho: f64, f: &mut impl FnMut(usize, f64)) {
        let h = cell_side(lvl.level);
        let reach = (rho / h).ceil();
        let per_axis = 2.0 * reach + 1.0;
        let n_cells = per_axis.powi(self.dim as i32);
        if n_cells >= lvl.ids.len() as f64 {
            for &id in &lvl.ids {
                let k = id as usize;
                let r = distance(x, self.center(k));
                if r < rho {
                    f(k, r);
                }
            }
            return;
        }
        let reach = reach as i32;
        let base = key(lvl.level, x);
        let mut cur = base;
        for i in 0..self.dim {
            cur[i + 1] -= reach;
        }
        loop {
            if let Some(ids) = self.cells.get(&cur) {
                for &id in ids {
                    let k = id as usize;
                    let r = distance(x, self.center(k));
                    if r < rho {
                        f(k, r);
                    }
                }
            }
            let mut axis = 0;
            while axis < self.dim {
                if cur[axis + 1] < base[axis + 1] + reach {
                    cur[axis + 1] += 1;
                    break;
                }
                cur[axis + 1] = base[axis + 1] - reach;
                axis += 1;
            }
            if axis == self.dim {
                break;
            }
        }
    }

    /// Number of centers with `|x_k - x| < rho`.
    pub fn count_within(&self, x: &[f64], rho: f64) -> usize {
        let mut n = 0;
        self.for_each_within(x, rho, |_, _| n += 1);
        n
    }

    /// Nearest other center to bubble `k` and its distance.
    pub fn nearest_other(&self, k: usize) -> Option<(usize, f64)> {
        let x = self.center(k);
        let delta = self.domain.signed_dist_raw(x);
        let mut rho = (delta / 4.0).max(self.domain.radius() * 1e-12);
        let limit = 4.0 * self.domain.radius();
        loop {
            let mut best: Option<(usize, f64)> = None;
            self.for_each_within(x, rho, |j, r| {
                if j != k && best.is_none_or(|(bj, br)| r < br || (r == br && j < bj)) {
                    best = Some((j, r));
                }
            });
            if best.is_some() {
                return best;
            }
            if rho > limit {
                return None;
            }
            rho *= 2.0;
        }
    }

    /// Smallest-index pair `(i, j)`, `i < j`, whose closed balls are not
    /// separated by more than `slack (r_i + r_j)`; also returns the gap.
    pub fn first_overlap(&self, slack: f64) -> Option<(usize, usize, f64)> {
        use rayon::prelude::*;
        (0..self.len()).into_par_iter().find_map_first(|i| {
            let x = self.center(i);
            let ri = self.radii[i];
            let mi = level_of(self.domain.signed_dist_raw(x));
            let mut best: Option<(usize, f64)> = None;
            let start = self.levels.partition_point(|l| l.level < mi - 2);
            for lvl in self.levels[start..].iter().take_while(|l| l.level <= mi + 2) {
                let rho = ri + lvl.max_radius;
                self.scan_level(lvl, x, rho * (1.0 + 1e-9), &mut |j, r| {
                    if j > i {
                        let gap = r - ri - self.radii[j];
                        if gap <= slack * (ri + self.radii[j]) && best.is_none_or(|(bj, _)| j < bj) {
                            best = Some((j, gap));
                        }
                    }
                });
            }
            best.map(|(j, gap)| (i, j, gap))
        })
    }
}

#[inline]
fn key(level: i32, x: &[f64]) -> CellKey {
    let h = cell_side(level);
    let mut k = [0i32; MAX_INDEX_DIM + 1];
    k[0] = level;
    for (i, c) in x.iter().enumerate() {
        k[i + 1] = (c / h).floor() as i32;
    }
    k
}

fn neighbour_offsets(dim: usize) -> Vec<SmallVec<[i32; MAX_INDEX_DIM]>> {
    let mut out = vec![SmallVec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p: SmallVec<[i32; MAX_INDEX_DIM]>| {
                (-1..=1).map(move |o| {
                    let mut q = p.clone();
                    q.push(o);
                    q
                })
            })
            .collect();
    }
    out
}
