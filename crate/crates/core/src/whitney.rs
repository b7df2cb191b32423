//! Dyadic Whitney decomposition of a ball.
//!
//! A dyadic cube `Q` is emitted iff `diam(Q) <= dist(Q, ∂D)` while its dyadic
//! parent fails that inequality. The condition is inherited by children, so
//! the emitted cubes are exactly the maximal admissible ones and are pairwise
//! disjoint. `dist(Q, ∂D) <= 3 diam(Q) <= 4 diam(Q)` then follows from the
//! parent failing; [`WhitneyDecomposition::check_sandwich`] verifies it.
//!
//! The decomposition stops at `max_level`; points closer to the boundary than
//! [`WhitneyDecomposition::coverage_threshold`] may be left uncovered.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};
use crate::geometry::{BallDomain, Coords, Point};

pub type CubeIndex = SmallVec<[i32; 4]>;

/// A dyadic cube `prod [k_i 2^-l, (k_i + 1) 2^-l)` of a decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct WhitneyCube {
    pub level: i32,
    pub index: CubeIndex,
    pub dist_boundary: f64,
}

impl WhitneyCube {
    #[inline]
    pub fn side(&self) -> f64 {
        side_at(self.level)
    }

    #[inline]
    pub fn diam(&self) -> f64 {
        self.side() * (self.index.len() as f64).sqrt()
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn center(&self) -> Point {
        let s = self.side();
        Point::new(
            self.index
                .iter()
                .map(|&k| (k as f64 + 0.5) * s)
                .collect::<Vec<_>>(),
        )
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim() as i32)
    }

    /// Closed box `[lo, hi]`.
    pub fn closed_box(&self) -> AxisBox {
        let s = self.side();
        AxisBox {
            lo: self.index.iter().map(|&k| k as f64 * s).collect(),
            hi: self.index.iter().map(|&k| (k as f64 + 1.0) * s).collect(),
        }
    }

    /// Concentric box of twice the side, `Q*`.
    pub fn doubled(&self) -> AxisBox {
        let s = self.side();
        AxisBox {
            lo: self.index.iter().map(|&k| (k as f64 - 0.5) * s).collect(),
            hi: self.index.iter().map(|&k| (k as f64 + 1.5) * s).collect(),
        }
    }

    /// Whether `x` lies in the half-open box.
    pub fn contains(&self, x: &[f64]) -> bool {
        let s = self.side();
        self.index
            .iter()
            .zip(x)
            .all(|(&k, &c)| (c / s).floor() == k as f64)
    }

    /// Euclidean distance from `z` to the closed cube.
    pub fn dist_to_point(&self, z: &[f64]) -> f64 {
        self.closed_box().dist_to_point(z)
    }
}

/// Axis-aligned closed box.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxisBox {
    pub lo: Coords,
    pub hi: Coords,
}

impl AxisBox {
    pub fn side(&self) -> f64 {
        self.hi[0] - self.lo[0]
    }

    pub fn center(&self) -> Point {
        Point::new(
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(a, b)| 0.5 * (a + b))
                .collect::<Vec<_>>(),
        )
    }

    pub fn contains_closed(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(c, (a, b))| *a <= *c && *c <= *b)
    }

    /// Distance from `z` to the box (zero inside), by clamping `z` into it.
    pub fn dist_to_point(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(c, (a, b))| {
                let e = c - c.clamp(*a, *b);
                e * e
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest distance from `center` to a point of the box.
    pub fn farthest_from(&self, center: &[f64]) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(center)
            .map(|((a, b), c)| {
                let e = (a - c).abs().max((b - c).abs());
                e * e
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[inline]
fn side_at(level: i32) -> f64 {
    (-level as f64).exp2()
}

/// `dist(Q, ∂D)` for the dyadic box at (`level`, `index`); negative when the
/// box is not contained in `D`.
fn box_dist(domain: &BallDomain, level: i32, index: &[i32]) -> f64 {
    let s = side_at(level);
    let c = domain.center().coords();
    let far2: f64 = index
        .iter()
        .zip(c)
        .map(|(&k, &ci)| {
            let lo = k as f64 * s - ci;
            let hi = (k as f64 + 1.0) * s - ci;
            let e = lo.abs().max(hi.abs());
            e * e
        })
        .sum();
    domain.radius() - far2.sqrt()
}

/// Distance from the domain center to the nearest point of the box.
fn box_near(domain: &BallDomain, level: i32, index: &[i32]) -> f64 {
    let s = side_at(level);
    let c = domain.center().coords();
    index
        .iter()
        .zip(c)
        .map(|(&k, &ci)| {
            let lo = k as f64 * s;
            let hi = lo + s;
            let e = ci - ci.clamp(lo, hi);
            e * e
        })
        .sum::<f64>()
        .sqrt()
}

#[inline]
fn admissible(domain: &BallDomain, level: i32, index: &[i32]) -> (bool, f64) {
    let dist = box_dist(domain, level, index);
    let diam = side_at(level) * (index.len() as f64).sqrt();
    (diam <= dist, dist)
}

fn cmp_key(level_a: i32, a: &[i32], level_b: i32, b: &[i32]) -> Ordering {
    level_a.cmp(&level_b).then_with(|| a.cmp(b))
}

/// Result of [`WhitneyDecomposition::locate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Cube(usize),
    NotCovered,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SandwichReport {
    pub cubes: usize,
    pub lower_violations: usize,
    pub upper_violations: usize,
    pub outside_domain: usize,
    pub parent_admissible: usize,
    /// Largest observed `dist(Q, ∂D) / diam(Q)`.
    pub max_ratio: f64,
    pub min_ratio: f64,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.cubes > 0
            && self.lower_violations == 0
            && self.upper_violations == 0
            && self.outside_domain == 0
            && self.parent_admissible == 0
    }
}

/// Summary row per level, exported alongside criteria runs.
#[derive(Clone, Debug, Serialize)]
pub struct LevelCount {
    pub level: i32,
    pub cubes: usize,
}

#[derive(Clone, Debug)]
pub struct WhitneyDecomposition {
    domain: BallDomain,
    max_level: i32,
    cubes: Vec<WhitneyCube>,
    /// `(level, start, end)` ranges into `cubes`.
    level_ranges: Vec<(i32, usize, usize)>,
}

impl WhitneyDecomposition {
    /// Builds the maximal-cube decomposition down to `max_level`.
    pub fn decompose(domain: &BallDomain, max_level: i32) -> Result<Self> {
        if max_level < 2 {
            return Err(invalid("max_level", format!("must be >= 2, got {max_level}")));
        }
        let dim = domain.dim();
        let radius = domain.radius();
        let c = domain.center().coords();
        let extent = c.iter().map(|x| x.abs()).fold(0.0, f64::max) + radius;
        if extent * side_at(-max_level) >= i32::MAX as f64 / 2.0 {
            return Err(invalid("max_level", "dyadic indices would overflow i32"));
        }
        // Top level: side >= 2R, so diam > R >= dist for every cube.
        let top = -(radius.log2().ceil() as i32) - 1;
        let s = side_at(top);
        let ranges: Vec<(i32, i32)> = c
            .iter()
            .map(|&ci| (((ci - radius) / s).floor() as i32, ((ci + radius) / s).floor() as i32))
            .collect();
        let mut frontier: Vec<CubeIndex> = vec![CubeIndex::new()];
        for &(lo, hi) in &ranges {
            frontier = frontier
                .into_iter()
                .flat_map(|prefix| {
                    (lo..=hi).map(move |k| {
                        let mut p = prefix.clone();
                        p.push(k);
                        p
                    })
                })
                .collect();
        }
        let min_diam = side_at(max_level) * (dim as f64).sqrt();
        let prune = |level: i32, index: &[i32]| radius - box_near(domain, level, index) < min_diam;

        // Expand a few levels sequentially to get enough parallel work.
        let mut level = top;
        let mut emitted: Vec<WhitneyCube> = Vec::new();
        while frontier.len() < 256 && level < max_level {
            let mut next = Vec::new();
            for idx in &frontier {
                for child in children(idx) {
                    let (ok, dist) = admissible(domain, level + 1, &child);
                    if ok {
                        emitted.push(WhitneyCube {
                            level: level + 1,
                            index: child,
                            dist_boundary: dist,
                        });
                    } else if level + 1 < max_level && !prune(level + 1, &child) {
                        next.push(child);
                    }
                }
            }
            frontier = next;
            level += 1;
        }

        let start_level = level;
        let deeper: Vec<WhitneyCube> = frontier
            .par_iter()
            .flat_map_iter(|idx| {
                let mut out = Vec::new();
                let mut stack = vec![(start_level, idx.clone())];
                while let Some((l, idx)) = stack.pop() {
                    for child in children(&idx) {
                        let (ok, dist) = admissible(domain, l + 1, &child);
                        if ok {
                            out.push(WhitneyCube {
                                level: l + 1,
                                index: child,
                                dist_boundary: dist,
                            });
                        } else if l + 1 < max_level && !prune(l + 1, &child) {
                            stack.push((l + 1, child));
                        }
                    }
                }
                out
            })
            .collect();
        emitted.extend(deeper);
        if emitted.is_empty() {
            return Err(Error::EmptyDecomposition { max_level });
        }
        emitted.par_sort_unstable_by(|a, b| cmp_key(a.level, &a.index, b.level, &b.index));

        let mut level_ranges = Vec::new();
        let mut start = 0;
        for i in 1..=emitted.len() {
            if i == emitted.len() || emitted[i].level != emitted[start].level {
                level_ranges.push((emitted[start].level, start, i));
                start = i;
            }
        }
        Ok(Self {
            domain: domain.clone(),
            max_level,
            cubes: emitted,
            level_ranges,
        })
    }

    pub fn domain(&self) -> &BallDomain {
        &self.domain
    }

    pub fn max_level(&self) -> i32 {
        self.max_level
    }

    pub fn cubes(&self) -> &[WhitneyCube] {
        &self.cubes
    }

    pub fn cube(&self, id: usize) -> &WhitneyCube {
        &self.cubes[id]
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// `5 sqrt(d) 2^-max_level`: every point with at least this distance to
    /// the boundary lies in some cube.
    pub fn coverage_threshold(&self) -> f64 {
        5.0 * (self.domain.dim() as f64).sqrt() * side_at(self.max_level)
    }

    pub fn level_counts(&self) -> Vec<LevelCount> {
        self.level_ranges
            .iter()
            .map(|&(level, a, b)| LevelCount { level, cubes: b - a })
            .collect()
    }

    /// Id of the cube at (`level`, `index`), if emitted.
    pub fn find(&self, level: i32, index: &[i32]) -> Option<usize> {
        let &(_, a, b) = self.level_ranges.iter().find(|r| r.0 == level)?;
        self.cubes[a..b]
            .binary_search_by(|q| q.index.as_slice().cmp(index))
            .ok()
            .map(|i| a + i)
    }

    /// The cube whose half-open box contains `x`.
    pub fn locate(&self, x: &Point) -> Result<Location> {
        self.domain.require_inside(x)?;
        let min_level = self.level_ranges[0].0;
        let mut index = CubeIndex::with_capacity(x.dim());
        for level in min_level..=self.max_level {
            let s = side_at(level);
            index.clear();
            index.extend(x.coords().iter().map(|&c| (c / s).floor() as i32));
            if admissible(&self.domain, level, &index).0 {
                return Ok(match self.find(level, &index) {
                    Some(id) => Location::Cube(id),
                    None => Location::NotCovered,
                });
            }
        }
        Ok(Location::NotCovered)
    }

    /// Ids of the cubes whose closed box meets the closed ball `B̄(center, r)`.
    /// Requires `r < delta(center) / 2`.
    pub fn intersecting_cubes(&self, center: &Point, r: f64) -> Result<Vec<usize>> {
        let delta = self.domain.require_inside(center)?;
        if !(r > 0.0 && r < delta / 2.0) {
            return Err(Error::Precondition(format!(
                "ball radius must satisfy 0 < r < delta/2 (r = {r}, delta = {delta})"
            )));
        }
        let dim = center.dim();
        let sqrt_d = (dim as f64).sqrt();
        // Emitted cubes meeting the ball have diam in (delta/10, 3 delta/2).
        let fine = ((10.0 * sqrt_d / delta).log2().floor() as i32 + 1).min(self.max_level);
        let coarse = (sqrt_d / (1.5 * delta)).log2().ceil() as i32 - 1;
        let x = center.coords();
        let mut out = Vec::new();
        let mut index = CubeIndex::with_capacity(dim);
        for level in coarse..=fine {
            let Some(&(_, a, b)) = self.level_ranges.iter().find(|q| q.0 == level) else {
                continue;
            };
            let s = side_at(level);
            let lo: SmallVec<[i32; 4]> = x.iter().map(|&c| ((c - r) / s).floor() as i32).collect();
            let hi: SmallVec<[i32; 4]> = x.iter().map(|&c| ((c + r) / s).floor() as i32).collect();
            index.clear();
            index.extend_from_slice(&lo);
            loop {
                if let Ok(i) = self.cubes[a..b].binary_search_by(|q| q.index.as_slice().cmp(&index)) {
                    let id = a + i;
                    if self.cubes[id].dist_to_point(x) <= r {
                        out.push(id);
                    }
                }
                // odometer increment
                let mut axis = 0;
                while axis < dim {
                    if index[axis] < hi[axis] {
                        index[axis] += 1;
                        break;
                    }
                    index[axis] = lo[axis];
                    axis += 1;
                }
                if axis == dim {
                    break;
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Whether the closed ball is guaranteed to lie in the covered region.
    pub fn covers_ball(&self, center: &Point, r: f64) -> bool {
        self.domain
            .dist_to_boundary(center)
            .map(|delta| delta - r >= self.coverage_threshold())
            .unwrap_or(false)
    }

    /// A-priori bound on the number of cubes meeting a ball `B̄(x, r)` with
    /// `r < delta(x)/2`: at most four admissible levels, each contributing at
    /// most `(ceil(10 sqrt d) + 1)^d` boxes.
    pub fn c2_bound(&self) -> usize {
        let d = self.domain.dim();
        let per_axis = (10.0 * (d as f64).sqrt()).ceil() as usize + 1;
        4 * per_axis.pow(d as u32)
    }

    /// Machine check of `diam <= dist <= 4 diam`, containment in `D`, and
    /// maximality (the parent fails the lower inequality).
    pub fn check_sandwich(&self) -> SandwichReport {
        let mut rep = SandwichReport {
            cubes: self.cubes.len(),
            min_ratio: f64::INFINITY,
            ..Default::default()
        };
        for q in &self.cubes {
            let diam = q.diam();
            let dist = box_dist(&self.domain, q.level, &q.index);
            if q.closed_box().farthest_from(self.domain.center().coords()) >= self.domain.radius() {
                rep.outside_domain += 1;
            }
            if !(diam <= dist) {
                rep.lower_violations += 1;
            }
            if !(dist <= 4.0 * diam) {
                rep.upper_violations += 1;
            }
            let parent: CubeIndex = q.index.iter().map(|&k| k.div_euclid(2)).collect();
            if admissible(&self.domain, q.level - 1, &parent).0 {
                rep.parent_admissible += 1;
            }
            let ratio = dist / diam;
            rep.max_ratio = rep.max_ratio.max(ratio);
            rep.min_ratio = rep.min_ratio.min(ratio);
        }
        rep
    }

    /// Number of pairs with intersecting interiors: duplicates within a level
    /// and emitted dyadic ancestors across levels.
    pub fn count_overlaps(&self) -> usize {
        let mut overlaps = 0;
        for &(_, a, b) in &self.level_ranges {
            overlaps += self.cubes[a..b]
                .windows(2)
                .filter(|w| w[0].index == w[1].index)
                .count();
        }
        let levels: Vec<i32> = self.level_ranges.iter().map(|r| r.0).collect();
        overlaps
            + self
                .cubes
                .par_iter()
                .map(|q| {
                    levels
                        .iter()
                        .filter(|&&l| l < q.level)
                        .filter(|&&l| {
                            let shift = q.level - l;
                            let anc: CubeIndex = q.index.iter().map(|&k| k >> shift).collect();
                            self.find(l, &anc).is_some()
                        })
                        .count()
                })
                .sum::<usize>()
    }

    /// Number of doubled cubes `Q*` containing `x` (closed boxes).
    pub fn doubled_multiplicity(&self, x: &[f64]) -> usize {
        let dim = x.len();
        let mut count = 0;
        let mut index = CubeIndex::with_capacity(dim);
        for &(level, a, b) in &self.level_ranges {
            let s = side_at(level);
            // Q* contains x iff |x - center| <= s per axis, i.e. k in [x/s - 3/2, x/s + 1/2].
            let lo: SmallVec<[i32; 4]> = x.iter().map(|&c| (c / s - 1.5).ceil() as i32).collect();
            let hi: SmallVec<[i32; 4]> = x.iter().map(|&c| (c / s + 0.5).floor() as i32).collect();
            if lo.iter().zip(&hi).any(|(l, h)| l > h) {
                continue;
            }
            index.clear();
            index.extend_from_slice(&lo);
            loop {
                if self.cubes[a..b]
                    .binary_search_by(|q| q.index.as_slice().cmp(&index))
                    .is_ok()
                {
                    count += 1;
                }
                let mut axis = 0;
                while axis < dim {
                    if index[axis] < hi[axis] {
                        index[axis] += 1;
                        break;
                    }
                    index[axis] = lo[axis];
                    axis += 1;
                }
                if axis == dim {
                    break;
                }
            }
        }
        count
    }

    /// CSV export: `level, index_1..d, center_1..d, side, dist_boundary`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.domain.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["level".to_string()];
        header.extend((1..=d).map(|i| format!("index_{i}")));
        header.extend((1..=d).map(|i| format!("center_{i}")));
        header.push("side".into());
        header.push("dist_boundary".into());
        w.write_record(&header)?;
        let mut row: Vec<String> = Vec::with_capacity(2 * d + 3);
        for q in &self.cubes {
            row.clear();
            row.push(q.level.to_string());
            row.extend(q.index.iter().map(|k| k.to_string()));
            row.extend(q.center().coords().iter().map(|c| format!("{c:?}")));
            row.push(format!("{:?}", q.side()));
            row.push(format!("{:?}", q.dist_boundary));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn children(index: &[i32]) -> impl Iterator<Item = CubeIndex> + '_ {
    let d = index.len();
    (0u32..(1 << d)).map(move |mask| {
        index
            .iter()
            .enumerate()
            .map(|(i, &k)| 2 * k + ((mask >> i) & 1) as i32)
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn unit(d: usize) -> BallDomain {
        BallDomain::unit(d).unwrap()
    }

    #[test]
    fn level6_sandwich_holds() {
        let dec = WhitneyDecomposition::decompose(&unit(2), 6).unwrap();
        let rep = dec.check_sandwich();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.max_ratio <= 3.0 + 1e-12);
        assert_eq!(dec.count_overlaps(), 0);
    }

    #[test]
    fn rejects_small_max_level() {
        assert!(WhitneyDecomposition::decompose(&unit(2), 1).is_err());
        // A tiny ball whose cubes only appear below level 2.
        let tiny = BallDomain::new(Point::from_slice(&[0.3, 0.3]), 1e-3).unwrap();
        assert!(matches!(
            WhitneyDecomposition::decompose(&tiny, 2),
            Err(Error::EmptyDecomposition { .. })
        ));
    }

    #[test]
    fn counts_grow_by_two_per_level_in_the_plane() {
        let dec = WhitneyDecomposition::decompose(&unit(2), 10).unwrap();
        let counts = dec.level_counts();
        let n = counts.len();
        let last: Vec<usize> = counts[n - 4..].iter().map(|c| c.cubes).collect();
        assert!(last.windows(2).all(|w| w[1] > w[0]), "{last:?}");
        // Growth ratio over the last three steps.
        let ratio = (last[3] as f64 / last[0] as f64).powf(1.0 / 3.0);
        assert!((ratio - 2.0).abs() <= 0.3 * 2.0, "ratio {ratio}");
    }

    #[test]
    fn volume_sum_is_bounded_by_ball_and_collar() {
        let dec = WhitneyDecomposition::decompose(&unit(2), 8).unwrap();
        let vol: f64 = dec.cubes().iter().map(|q| q.volume()).sum();
        let tau = dec.coverage_threshold();
        let collar = PI * (1.0 - (1.0 - tau).powi(2));
        assert!(vol <= PI, "{vol}");
        assert!(vol >= PI - collar, "{vol} vs {}", PI - collar);
    }

    #[test]
    fn locate_examples() {
        let dec = WhitneyDecomposition::decompose(&unit(2), 7).unwrap();
        let center = Point::origin(2);
        match dec.locate(&center).unwrap() {
            Location::Cube(id) => {
                let q = dec.cube(id);
                assert!(q.dist_boundary >= 0.25);
                assert!(q.contains(center.coords()));
            }
            Location::NotCovered => panic!("center must be covered"),
        }
        let near = Point::from_slice(&[1.0 - 1e-4, 0.0]);
        assert!(1e-4 < dec.coverage_threshold());
        assert_eq!(dec.locate(&near).unwrap(), Location::NotCovered);
        let a = Point::from_slice(&[0.3001, 0.2001]);
        let b = Point::from_slice(&[0.3002, 0.2002]);
        assert_eq!(dec.locate(&a).unwrap(), dec.locate(&b).unwrap());
        assert!(dec.locate(&Point::from_slice(&[1.5, 0.0])).is_err());
    }

    #[test]
    fn locate_agrees_with_containment_and_covers() {
        let dec = WhitneyDecomposition::decompose(&unit(2), 8).unwrap();
        let tau = dec.coverage_threshold();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5000 {
            let x = Point::from_slice(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            let Ok(delta) = dec.domain().require_inside(&x) else { continue };
            match dec.locate(&x).unwrap() {
                Location::Cube(id) => assert!(dec.cube(id).contains(x.coords())),
                Location::NotCovered => assert!(delta < tau, "uncovered at delta {delta}"),
            }
        }
    }

    #[test]
    fn doubled_cube_examples() {
        let q = WhitneyCube {
            level: 5,
            index: CubeIndex::from_slice(&[3, -2]),
            dist_boundary: 0.0,
        };
        let b = q.doubled();
        assert_eq!(b.side(), 1.0 / 16.0);
        assert_eq!(b.center(), q.center());
    }

    #[test]
    fn doubled_cubes_lie_in_domain() {
        let dec = WhitneyDecomposition::decompose(&unit(2), 8).unwrap();
        let c = dec.domain().center().coords().to_vec();
        assert!(dec
            .cubes()
            .iter()
            .all(|q| q.doubled().farthest_from(&c) < 1.0));
    }

    #[test]
    fn doubled_overlap_is_bounded() {
        let dec = WhitneyDecomposition::decompose(&unit(2), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0;
        let mut n = 0;
        while n < 100_000 {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            if x[0] * x[0] + x[1] * x[1] >= 1.0 {
                continue;
            }
            n += 1;
            worst = worst.max(dec.doubled_multiplicity(&x));
        }
        assert!(worst >= 1 && worst <= 12, "multiplicity {worst}");
    }

    #[test]
    fn intersecting_cube_examples() {
        let dec = WhitneyDecomposition::decompose(&unit(2), 8).unwrap();
        // Tiny ball in the interior of the cube containing (0.1, 0.1).
        let Location::Cube(id) = dec.locate(&Point::from_slice(&[0.1, 0.1])).unwrap() else {
            panic!()
        };
        let center = dec.cube(id).center();
        assert_eq!(dec.intersecting_cubes(&center, 1e-3).unwrap(), vec![id]);

        // Ball centered at a dyadic corner shared by emitted cubes.
        let q = dec
            .cubes()
            .iter()
            .find(|q| q.level == 5 && q.index[0] > 0 && q.index[1] > 0)
            .unwrap();
        let corner = Point::new(q.closed_box().lo.to_vec());
        let delta = dec.domain().dist_to_boundary(&corner).unwrap();
        let hits = dec.intersecting_cubes(&corner, 0.01 * delta).unwrap();
        assert!(hits.len() >= 2 && hits.len() <= 4, "{hits:?}");

        assert!(dec.intersecting_cubes(&Point::from_slice(&[0.9, 0.0]), 0.06).is_err());
    }

    #[test]
    fn intersecting_matches_brute_force() {
        let dec = WhitneyDecomposition::decompose(&unit(2), 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let rho = rng.random_range(0.0..0.9);
            let th = rng.random_range(0.0..2.0 * PI);
            let x = Point::from_slice(&[rho * th.cos(), rho * th.sin()]);
            let r = rng.random_range(0.01..0.49) * (1.0 - rho);
            let fast = dec.intersecting_cubes(&x, r).unwrap();
            let brute: Vec<usize> = (0..dec.len())
                .filter(|&j| dec.cube(j).dist_to_point(x.coords()) <= r)
                .collect();
            assert_eq!(fast, brute);
            assert!(fast.len() <= dec.c2_bound());
        }
    }

    #[test]
    fn csv_has_expected_columns() {
        let dec = WhitneyDecomposition::decompose(&unit(2), 3).unwrap();
        let mut buf = Vec::new();
        dec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "level,index_1,index_2,center_1,center_2,side,dist_boundary"
        );
        assert_eq!(lines.count(), dec.len());
    }

    #[test]
    fn translated_domain_decomposes() {
        let d = BallDomain::new(Point::from_slice(&[0.37, -0.21]), 0.8).unwrap();
        let dec = WhitneyDecomposition::decompose(&d, 7).unwrap();
        assert!(dec.check_sandwich().passed());
        assert_eq!(dec.count_overlaps(), 0);
    }
}
