use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::geometry::{unit_sphere_area, BallDomain, Point};

/// Quadrature grid on `∂D` with weights summing to the surface area.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryGrid {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl BoundaryGrid {
    /// `n` equally spaced points (d=2) or about `n` points in equal-area
    /// latitude bands (d=3).
    pub fn new(domain: &BallDomain, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(invalid("grid", "need at least one boundary point"));
        }
        let dim = domain.dim();
        let dirs: Vec<(Vec<f64>, f64)> = match dim {
            2 => (0..n)
                .map(|j| {
                    let th = 2.0 * PI * j as f64 / n as f64;
                    (vec![th.cos(), th.sin()], 2.0 * PI / n as f64)
                })
                .collect(),
            3 => {
                let bands = ((n as f64 / 2.0).sqrt().round() as usize).max(1);
                let per_band = n.div_ceil(bands).max(1);
                let w = 4.0 * PI / (bands * per_band) as f64;
                let mut out = Vec::with_capacity(bands * per_band);
                for b in 0..bands {
                    let cz = 1.0 - 2.0 * (b as f64 + 0.5) / bands as f64;
                    let s = (1.0 - cz * cz).sqrt();
                    let shift = if b % 2 == 1 { 0.5 } else { 0.0 };
                    for j in 0..per_band {
                        let ph = 2.0 * PI * (j as f64 + shift) / per_band as f64;
                        out.push((vec![s * ph.cos(), s * ph.sin(), cz], w));
                    }
                }
                out
            }
            _ => return Err(invalid("dimension", format!("boundary grids exist for d = 2, 3, got {dim}"))),
        };
        let r = domain.radius();
        let c = domain.center().coords();
        let scale = r.powi(dim as i32 - 1);
        let (points, weights) = dirs
            .into_iter()
            .map(|(v, w)| {
                let p: Vec<f64> = v.iter().zip(c).map(|(a, b)| b + r * a).collect();
                (Point::new(p), w * scale)
            })
            .unzip();
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Surface area of `∂D`.
    pub fn surface_area(domain: &BallDomain) -> f64 {
        unit_sphere_area(domain.dim()) * domain.radius().powi(domain.dim() as i32 - 1)
    }
}
