//! Bubble configurations, the shell generator, and the counting and
//! separation predicates.

mod index;
mod predicates;
mod profile;
mod shells;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, BallDomain, Point};

pub use index::{BubbleIndex, Probe, MAX_INDEX_DIM};
pub use predicates::{
    check_lemma62, check_separation_thm1, check_separation_thm1_brute, check_separation_thm2,
    count_centers_na, count_centers_na_brute, Lemma62Report,
};
pub use profile::{check_doubling_m, DoublingCheck, RadialProfile, TailExponents, WeightFunction};
pub use shells::{generate_shell_config, shell_radii, ShellConfig, ShellParams, MAX_SHELL_BUBBLES};

/// Relative slack of the disjointness test: closed balls count as disjoint
/// when `|x_i - x_j| - r_i - r_j > DISJOINT_SLACK (r_i + r_j)`.
pub const DISJOINT_SLACK: f64 = 1e-12;

/// Closed ball `B̄(center, radius)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub center: Point,
    pub radius: f64,
}

impl Bubble {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        distance(self.center.coords(), x) <= self.radius
    }
}

/// Finite family of disjoint closed balls in `D` with `r_k / δ(x_k) < 1/2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubbleConfig {
    domain: BallDomain,
    bubbles: Vec<Bubble>,
    ratio_sup: f64,
}

impl BubbleConfig {
    pub fn new(domain: BallDomain, bubbles: Vec<Bubble>) -> Result<Self> {
        let mut ratio_sup = 0.0f64;
        for (k, b) in bubbles.iter().enumerate() {
            domain.check_dim(&b.center)?;
            if !(b.radius > 0.0 && b.radius.is_finite()) {
                return Err(crate::error::invalid(
                    "radius",
                    format!("bubble {k} has non-positive radius {}", b.radius),
                ));
            }
            let delta = domain.signed_dist_raw(b.center.coords());
            if !(delta - b.radius > 0.0) {
                return Err(Error::BubbleOutside { index: k });
            }
            let ratio = b.radius / delta;
            if !(ratio < 0.5) {
                return Err(Error::RatioTooLarge { index: k, ratio });
            }
            ratio_sup = ratio_sup.max(ratio);
        }
        let config = Self {
            domain,
            bubbles,
            ratio_sup,
        };
        if let Some((first, second, gap)) = config.first_overlap()? {
            return Err(Error::Overlap { first, second, gap });
        }
        Ok(config)
    }

    pub fn empty(domain: BallDomain) -> Self {
        Self {
            domain,
            bubbles: Vec::new(),
            ratio_sup: 0.0,
        }
    }

    fn first_overlap(&self) -> Result<Option<(usize, usize, f64)>> {
        if self.domain.dim() <= MAX_INDEX_DIM {
            return Ok(BubbleIndex::new(self)?.first_overlap(DISJOINT_SLACK));
        }
        for i in 0..self.bubbles.len() {
            for j in i + 1..self.bubbles.len() {
                let (a, b) = (&self.bubbles[i], &self.bubbles[j]);
                let gap = a.center.distance(&b.center) - a.radius - b.radius;
                if gap <= DISJOINT_SLACK * (a.radius + b.radius) {
                    return Ok(Some((i, j, gap)));
                }
            }
        }
        Ok(None)
    }

    pub fn domain(&self) -> &BallDomain {
        &self.domain
    }

    pub fn bubbles(&self) -> &[Bubble] {
        &self.bubbles
    }

    pub fn len(&self) -> usize {
        self.bubbles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bubbles.is_empty()
    }

    pub fn ratio_sup(&self) -> f64 {
        self.ratio_sup
    }

    pub fn delta(&self, k: usize) -> f64 {
        self.domain.signed_dist_raw(self.bubbles[k].center.coords())
    }

    /// Sub-family with the given bubble ids, in the given order.
    pub fn subset(&self, ids: &[usize]) -> BubbleConfig {
        let bubbles: Vec<Bubble> = ids.iter().map(|&k| self.bubbles[k].clone()).collect();
        let ratio_sup = ids
            .iter()
            .map(|&k| self.bubbles[k].radius / self.delta(k))
            .fold(0.0, f64::max);
        BubbleConfig {
            domain: self.domain.clone(),
            bubbles,
            ratio_sup,
        }
    }

    /// Image under `x -> a x`.
    pub fn scaled(&self, a: f64) -> Result<BubbleConfig> {
        let domain = self.domain.scale(a)?;
        let bubbles = self
            .bubbles
            .iter()
            .map(|b| Bubble::new(b.center.scaled(a), b.radius * a))
            .collect();
        Ok(BubbleConfig {
            domain,
            bubbles,
            ratio_sup: self.ratio_sup,
        })
    }

    /// Image under `x -> (x - c) / R` in the unit ball at the origin.
    pub fn normalized(&self) -> Result<BubbleConfig> {
        let c = self.domain.center();
        let big_r = self.domain.radius();
        let domain = BallDomain::unit(self.domain.dim())?;
        let bubbles = self
            .bubbles
            .iter()
            .map(|b| {
                let x: Vec<f64> = b.center.coords().iter().zip(c.coords()).map(|(x, c)| (x - c) / big_r).collect();
                Bubble::new(Point::new(x), b.radius / big_r)
            })
            .collect();
        Ok(BubbleConfig {
            domain,
            bubbles,
            ratio_sup: self.ratio_sup,
        })
    }

    /// Columns `k, x_1..x_d, r`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.domain.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["k".to_string()];
        header.extend((1..=d).map(|i| format!("x_{i}")));
        header.push("r".into());
        w.write_record(&header)?;
        for (k, b) in self.bubbles.iter().enumerate() {
            let mut row = vec![k.to_string()];
            row.extend(b.center.coords().iter().map(|c| format!("{c:?}")));
            row.push(format!("{:?}", b.radius));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(domain: BallDomain, input: R) -> Result<Self> {
        let d = domain.dim();
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers()?.clone();
        if header.len() != d + 2 {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: header.len().saturating_sub(2),
            });
        }
        let mut bubbles = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad number `{}`: {e}", &rec[i])))
            };
            let coords = (1..=d).map(parse).collect::<Result<Vec<f64>>>()?;
            bubbles.push(Bubble::new(Point::new(coords), parse(d + 1)?));
        }
        Self::new(domain, bubbles)
    }
}
