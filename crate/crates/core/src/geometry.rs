//! Ball-shaped state spaces.
//!
//! Every quantity the criteria need from the domain is the distance to the
//! boundary and the interior tangent ball; both are closed-form for balls,
//! which is why the domain model is restricted to them.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};

pub type Coords = SmallVec<[f64; 4]>;

/// A point of `R^d`, `d >= 2`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    coords: Coords,
}

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Self {
            coords: SmallVec::from_vec(coords.into()),
        }
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Self {
            coords: SmallVec::from_slice(coords),
        }
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: SmallVec::from_elem(0.0, dim),
        }
    }

    /// `e_axis * value`.
    pub fn on_axis(dim: usize, axis: usize, value: f64) -> Self {
        let mut p = Self::origin(dim);
        p.coords[axis] = value;
        p
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        distance(&self.coords, &other.coords)
    }

    pub fn scaled(&self, a: f64) -> Point {
        Point {
            coords: self.coords.iter().map(|c| c * a).collect(),
        }
    }

    pub fn add(&self, other: &Point) -> Point {
        Point {
            coords: self
                .coords
                .iter()
                .zip(other.coords.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point {
            coords: self
                .coords
                .iter()
                .zip(other.coords.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords.iter()).finish()
    }
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    // V_d = V_{d-2} * 2 pi / d, with V_0 = 1 and V_1 = 2.
    let mut v = if dim % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if dim % 2 == 0 { 2 } else { 3 };
    while k <= dim {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

/// Surface area of the unit sphere in `R^d`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}

/// An open ball `B(center, radius)` used as the state space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallDomain {
    center: Point,
    radius: f64,
}

impl BallDomain {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if center.dim() < 2 {
            return Err(invalid("dimension", format!("need d >= 2, got {}", center.dim())));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", format!("must be positive and finite, got {radius}")));
        }
        if center.coords().iter().any(|c| !c.is_finite()) {
            return Err(invalid("center", "coordinates must be finite"));
        }
        Ok(Self { center, radius })
    }

    /// `B(0, 1)` in `R^dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(Point::origin(dim), 1.0)
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Interior-ball radius `R(D)`; for a ball it is the radius itself.
    pub fn interior_ball_radius(&self) -> f64 {
        self.radius
    }

    /// True for `B(0, 1)`, up to exact equality.
    pub fn is_unit_ball(&self) -> bool {
        self.radius == 1.0 && self.center.coords().iter().all(|&c| c == 0.0)
    }

    pub fn check_dim(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// `radius - |x - center|`: positive inside, negative outside.
    pub fn signed_dist_to_boundary(&self, x: &Point) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.signed_dist_raw(x.coords()))
    }

    /// Distance to the boundary, clamped at zero outside `D`.
    pub fn dist_to_boundary(&self, x: &Point) -> Result<f64> {
        Ok(self.signed_dist_to_boundary(x)?.max(0.0))
    }

    /// Unchecked signed distance on raw coordinates (hot paths).
    #[inline]
    pub fn signed_dist_raw(&self, x: &[f64]) -> f64 {
        self.radius - distance(x, self.center.coords())
    }

    #[inline]
    pub fn contains_raw(&self, x: &[f64]) -> bool {
        let r2: f64 = x
            .iter()
            .zip(self.center.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        r2 < self.radius * self.radius
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.dim() == self.dim() && self.contains_raw(x.coords())
    }

    /// Whether `x` lies on the sphere `|x - center| = radius` within `tol`.
    pub fn boundary_offset(&self, x: &Point) -> Result<f64> {
        self.check_dim(x)?;
        Ok(distance(x.coords(), self.center.coords()) - self.radius)
    }

    pub fn require_boundary(&self, z: &Point, tol: f64) -> Result<()> {
        let offset = self.boundary_offset(z)?;
        if offset.abs() > tol {
            return Err(Error::NotOnBoundary { offset });
        }
        Ok(())
    }

    pub fn require_inside(&self, x: &Point) -> Result<f64> {
        let s = self.signed_dist_to_boundary(x)?;
        if s <= 0.0 {
            return Err(Error::OutsideDomain { signed_distance: s });
        }
        Ok(s)
    }

    /// Image of the domain under `x -> a x`.
    pub fn scale(&self, a: f64) -> Result<BallDomain> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid("a", format!("scale factor must be positive, got {a}")));
        }
        BallDomain::new(self.center.scaled(a), self.radius * a)
    }

    /// Boundary point nearest to `x`, and the center of the interior tangent
    /// ball of radius `R(D)` touching there. Undefined at the center itself.
    pub fn interior_tangent_ball(&self, x: &Point) -> Result<(Point, Point)> {
        self.check_dim(x)?;
        let offset = x.sub(&self.center);
        let len = offset.norm();
        if len == 0.0 {
            return Err(Error::Precondition(
                "the center has no unique nearest boundary point".into(),
            ));
        }
        let z0 = self.center.add(&offset.scaled(self.radius / len));
        // y0 = z0 + R (x0 - z0)/|x0 - z0|, which is the center for a ball.
        let inward = x.sub(&z0);
        let inward_len = inward.norm();
        let y0 = if inward_len > 0.0 {
            z0.add(&inward.scaled(self.interior_ball_radius() / inward_len))
        } else {
            self.center.clone()
        };
        Ok((z0, y0))
    }

    /// Point `x~` at distance `3/4 r_star` from `x0` on the segment towards
    /// the interior tangent ball center, so that
    /// `B(x~, theta r_star) ⊂ B(x0, r_star) ∩ D` for every `theta <= 1/4`.
    pub fn interior_ball_point(&self, x0: &Point, r: f64, r_star: f64, theta: f64) -> Result<Point> {
        self.check_dim(x0)?;
        let big_r = self.interior_ball_radius();
        let delta = self.signed_dist_raw(x0.coords());
        let fail = |what: String| Err(Error::Precondition(what));
        if !(theta > 0.0 && theta <= 0.25) {
            return fail(format!("0 < theta <= 1/4 (theta = {theta})"));
        }
        if !(r > 0.0) {
            return fail(format!("0 < r (r = {r})"));
        }
        if !(2.0 * r <= r_star) {
            return fail(format!("2r <= r_star (2r = {}, r_star = {r_star})", 2.0 * r));
        }
        if !(r_star < big_r / 2.0) {
            return fail(format!("r_star < R/2 (r_star = {r_star}, R/2 = {})", big_r / 2.0));
        }
        if !(delta < big_r / 2.0) {
            return fail(format!("delta(x0) < R/2 (delta = {delta}, R/2 = {})", big_r / 2.0));
        }
        if !(r <= delta) {
            return fail(format!("B(x0, r) inside D, i.e. r <= delta(x0) (r = {r}, delta = {delta})"));
        }
        let (_, y0) = self.interior_tangent_ball(x0)?;
        let toward = y0.sub(x0);
        let len = toward.norm();
        Ok(x0.add(&toward.scaled(0.75 * r_star / len)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[f64]) -> Point {
        Point::from_slice(c)
    }

    #[test]
    fn distance_examples() {
        let d = BallDomain::unit(2).unwrap();
        assert_eq!(d.dist_to_boundary(&p(&[0.0, 0.0])).unwrap(), 1.0);
        assert_eq!(d.dist_to_boundary(&p(&[0.5, 0.0])).unwrap(), 0.5);
        assert_eq!(d.dist_to_boundary(&p(&[1.0, 0.0])).unwrap(), 0.0);
        assert_eq!(d.dist_to_boundary(&p(&[0.0, 2.0])).unwrap(), 0.0);
        assert_eq!(d.signed_dist_to_boundary(&p(&[0.0, 2.0])).unwrap(), -1.0);
        assert!(matches!(
            d.dist_to_boundary(&p(&[0.0, 0.0, 0.0])),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(BallDomain::new(p(&[0.0]), 1.0).is_err());
        assert!(BallDomain::new(p(&[0.0, 0.0]), 0.0).is_err());
        assert!(BallDomain::unit(2).unwrap().scale(0.0).is_err());
        assert!(BallDomain::unit(2).unwrap().scale(-1.0).is_err());
    }

    #[test]
    fn scale_examples() {
        let unit = BallDomain::unit(2).unwrap();
        let two = unit.scale(2.0).unwrap();
        assert_eq!(two.radius(), 2.0);
        assert_eq!(two.interior_ball_radius(), 2.0);
        assert_eq!(two.scale(0.5).unwrap(), unit);
    }

    #[test]
    fn interior_point_examples() {
        let d = BallDomain::unit(2).unwrap();
        let x = d.interior_ball_point(&p(&[0.9, 0.0]), 0.005, 0.1, 0.125).unwrap();
        assert!((x.coords()[0] - 0.825).abs() < 1e-15 && x.coords()[1].abs() < 1e-15);
        let x = d.interior_ball_point(&p(&[0.0, 0.9]), 0.01, 0.2, 0.25).unwrap();
        assert!(x.coords()[0].abs() < 1e-15 && (x.coords()[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn interior_point_names_failed_inequality() {
        let d = BallDomain::unit(2).unwrap();
        let err = d.interior_ball_point(&p(&[0.9, 0.0]), 0.06, 0.1, 0.125).unwrap_err();
        assert!(err.to_string().contains("2r <= r_star"), "{err}");
        let err = d.interior_ball_point(&p(&[0.2, 0.0]), 0.01, 0.1, 0.125).unwrap_err();
        assert!(err.to_string().contains("delta(x0) < R/2"), "{err}");
        let err = d.interior_ball_point(&p(&[0.9, 0.0]), 0.01, 0.6, 0.125).unwrap_err();
        assert!(err.to_string().contains("r_star < R/2"), "{err}");
        let err = d.interior_ball_point(&p(&[0.9, 0.0]), 0.01, 0.1, 0.3).unwrap_err();
        assert!(err.to_string().contains("theta"), "{err}");
    }

    #[test]
    fn tangent_ball_of_ball_is_centered() {
        let d = BallDomain::new(p(&[1.0, -2.0]), 3.0).unwrap();
        let (z0, y0) = d.interior_tangent_ball(&p(&[3.5, -2.0])).unwrap();
        assert!(z0.distance(&p(&[4.0, -2.0])) < 1e-14);
        assert!(y0.distance(d.center()) < 1e-14);
    }

    proptest! {
        #[test]
        fn one_lipschitz(ax in -1.5f64..1.5, ay in -1.5f64..1.5, bx in -1.5f64..1.5, by in -1.5f64..1.5) {
            let d = BallDomain::new(p(&[0.1, -0.2]), 0.9).unwrap();
            let (a, b) = (p(&[ax, ay]), p(&[bx, by]));
            let lhs = (d.dist_to_boundary(&a).unwrap() - d.dist_to_boundary(&b).unwrap()).abs();
            prop_assert!(lhs <= a.distance(&b) + 1e-15);
        }

        #[test]
        fn scaling_of_distance(s in 0.01f64..100.0, x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
            let d = BallDomain::new(p(&[0.3, 0.1, -0.2]), 1.3).unwrap();
            let pt = p(&[x, y, z]);
            let lhs = d.scale(s).unwrap().signed_dist_to_boundary(&pt.scaled(s)).unwrap();
            let rhs = s * d.signed_dist_to_boundary(&pt).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (rhs.abs() + s));
        }
    }
}
