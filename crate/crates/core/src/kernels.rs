//! Two-sided comparison envelopes.
//!
//! Green function, Martin kernel, `g`, and ball capacities are only known up
//! to multiplicative constants, so every quantity here is an [`Envelope`].
//! With all constants equal to one ([`Constants::comparison`]) the envelopes
//! collapse to the comparison functions themselves.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{unit_ball_volume, BallDomain, Point};
use crate::whitney::WhitneyCube;

/// Comparison constants. `g_factor = None` selects `C_G 2^(d+1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    pub alpha: f64,
    #[serde(default = "one")]
    pub c_g: f64,
    #[serde(default = "one")]
    pub c_m: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "one")]
    pub c_h: f64,
    #[serde(default = "one")]
    pub c_1: f64,
    #[serde(default)]
    pub g_factor: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl Constants {
    /// All constants one except the `g` factor, which follows `C_G`.
    pub fn new(alpha: f64) -> Result<Self> {
        let c = Self {
            alpha,
            c_g: 1.0,
            c_m: 1.0,
            c: 1.0,
            c_h: 1.0,
            c_1: 1.0,
            g_factor: None,
        };
        c.validate()?;
        Ok(c)
    }

    /// Comparison-function mode: every constant, including the `g` factor, is one.
    pub fn comparison(alpha: f64) -> Result<Self> {
        let mut c = Self::new(alpha)?;
        c.g_factor = Some(1.0);
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0 && self.alpha < 2.0) {
            return Err(invalid("alpha", format!("must lie in (1, 2), got {}", self.alpha)));
        }
        let named = [
            ("c_g", self.c_g),
            ("c_m", self.c_m),
            ("c", self.c),
            ("c_h", self.c_h),
            ("c_1", self.c_1),
        ];
        for (name, v) in named {
            if !(v >= 1.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be a finite value >= 1, got {v}")));
            }
        }
        if let Some(g) = self.g_factor {
            if !(g >= 1.0 && g.is_finite()) {
                return Err(invalid("g_factor", format!("must be a finite value >= 1, got {g}")));
            }
        }
        Ok(())
    }

    pub fn g_factor(&self, dim: usize) -> f64 {
        self.g_factor
            .unwrap_or_else(|| self.c_g * 2f64.powi(dim as i32 + 1))
    }
}

/// Closed interval `[lower, upper]` with `0 <= lower <= upper`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub lower: f64,
    pub upper: f64,
}

impl Envelope {
    pub const ZERO: Envelope = Envelope { lower: 0.0, upper: 0.0 };
    pub const INFINITE: Envelope = Envelope {
        lower: f64::INFINITY,
        upper: f64::INFINITY,
    };

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower >= 0.0 && lower <= upper) {
            return Err(Error::Precondition(format!(
                "envelope needs 0 <= lower <= upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn exact(v: f64) -> Self {
        Self { lower: v, upper: v }
    }

    /// `[v / c, c v]`.
    pub fn around(v: f64, c: f64) -> Self {
        Self {
            lower: v / c,
            upper: v * c,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lower >= 0.0 && self.lower <= self.upper
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn add(&self, other: &Envelope) -> Envelope {
        Envelope {
            lower: self.lower + other.lower,
            upper: self.upper + other.upper,
        }
    }

    pub fn mul(&self, other: &Envelope) -> Envelope {
        Envelope {
            lower: self.lower * other.lower,
            upper: self.upper * other.upper,
        }
    }

    pub fn scale(&self, k: f64) -> Envelope {
        debug_assert!(k >= 0.0);
        Envelope {
            lower: self.lower * k,
            upper: self.upper * k,
        }
    }

    /// `upper / lower`; one for exact values.
    pub fn spread(&self) -> f64 {
        if self.upper == self.lower {
            1.0
        } else {
            self.upper / self.lower
        }
    }
}

impl std::iter::Sum for Envelope {
    fn sum<I: Iterator<Item = Envelope>>(iter: I) -> Self {
        iter.fold(Envelope::ZERO, |a, b| a.add(&b))
    }
}

/// Weight `u` in `σ_u`: `u ≡ 1` or `u = G(·, x0) ∧ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum WeightChoice {
    One,
    GreenAtBase { base_point: Point },
}

/// `F(x, y)` of the Green estimate, without constants.
pub fn green_comparison(alpha: f64, dim: usize, delta_x: f64, delta_y: f64, dist: f64) -> f64 {
    let p = alpha - 1.0;
    let fx = (delta_x / dist).powf(p).min(1.0);
    let fy = (delta_y / dist).powf(p).min(1.0);
    fx * fy * dist.powf(alpha - dim as f64)
}

pub fn green_envelope(domain: &BallDomain, consts: &Constants, x: &Point, y: &Point) -> Result<Envelope> {
    let dx = domain.require_inside(x)?;
    let dy = domain.require_inside(y)?;
    let r = x.distance(y);
    if r == 0.0 {
        return Err(Error::Singular);
    }
    let f = green_comparison(consts.alpha, domain.dim(), dx, dy, r);
    Ok(Envelope::around(f, consts.c_g))
}

/// Boundary tolerance for Martin-kernel poles.
pub const BOUNDARY_TOL: f64 = 1e-9;

pub fn martin_envelope(domain: &BallDomain, consts: &Constants, x: &Point, z: &Point) -> Result<Envelope> {
    let delta = domain.require_inside(x)?;
    domain.require_boundary(z, BOUNDARY_TOL)?;
    let d = domain.dim() as f64;
    let a = consts.alpha;
    let v = delta.powf(a - 1.0) / x.distance(z).powf(d + a - 2.0);
    Ok(Envelope::around(v, consts.c_m))
}

pub fn g_envelope(domain: &BallDomain, consts: &Constants, y: &Point) -> Result<Envelope> {
    let delta = domain.require_inside(y)?;
    Ok(Envelope::around(
        delta.powf(consts.alpha - 1.0),
        consts.g_factor(domain.dim()),
    ))
}

/// `[C^-1 r^(d-α), C r^(d-α)]`.
pub fn capacity_ball_envelope(consts: &Constants, r: f64, dim: usize) -> Result<Envelope> {
    if !(r > 0.0) {
        return Err(invalid("r", format!("radius must be positive, got {r}")));
    }
    Ok(Envelope::around(r.powf(dim as f64 - consts.alpha), consts.c))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EtaRadii {
    pub eta_l: f64,
    pub eta_u: f64,
    pub eta_star_l: f64,
    pub eta_star_u: f64,
}

pub fn eta_radii(consts: &Constants, r: f64, dim: usize) -> EtaRadii {
    let d = dim as f64;
    let base = unit_ball_volume(dim).powf(-1.0 / d) * r.powf(1.0 - consts.alpha / d);
    let k = consts.c.powf(1.0 / d);
    let eta_l = base / k;
    let eta_u = base * k;
    EtaRadii {
        eta_l,
        eta_u,
        eta_star_l: eta_l.max(16.0 * r),
        eta_star_u: eta_u.max(16.0 * r),
    }
}

/// Envelope of `u` at `y`.
pub fn weight_envelope(domain: &BallDomain, consts: &Constants, u: &WeightChoice, y: &Point) -> Result<Envelope> {
    match u {
        WeightChoice::One => Ok(Envelope::exact(1.0)),
        WeightChoice::GreenAtBase { base_point } => match green_envelope(domain, consts, y, base_point) {
            Ok(e) => Ok(Envelope {
                lower: e.lower.min(1.0),
                upper: e.upper.min(1.0),
            }),
            Err(Error::Singular) => Ok(Envelope::exact(1.0)),
            Err(e) => Err(e),
        },
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaTrace {
    pub value: Envelope,
    pub points_per_axis: usize,
    pub converged: bool,
}

/// `∫_Q u² δ^-α` by tensor midpoint rule, doubling points per axis from 2
/// until the relative change drops below `1e-4` or `quad_points` is reached.
pub fn sigma_u_cube(
    domain: &BallDomain,
    consts: &Constants,
    u: &WeightChoice,
    q: &WhitneyCube,
    quad_points: usize,
) -> Result<Envelope> {
    Ok(sigma_u_cube_trace(domain, consts, u, q, quad_points)?.value)
}

pub fn sigma_u_cube_trace(
    domain: &BallDomain,
    consts: &Constants,
    u: &WeightChoice,
    q: &WhitneyCube,
    quad_points: usize,
) -> Result<SigmaTrace> {
    if quad_points < 2 {
        return Err(invalid("quad_points", format!("need at least 2, got {quad_points}")));
    }
    let dim = domain.dim();
    if q.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: q.dim(),
        });
    }
    let bx = q.closed_box();
    if bx.farthest_from(domain.center().coords()) >= domain.radius() {
        return Err(Error::Precondition("cube is not inside the domain".into()));
    }
    let mut n = 2;
    let mut prev = midpoint_rule(domain, consts, u, &bx.lo, bx.side(), n)?;
    loop {
        let next_n = (2 * n).min(quad_points);
        if next_n == n {
            return Ok(SigmaTrace {
                value: prev,
                points_per_axis: n,
                converged: false,
            });
        }
        let cur = midpoint_rule(domain, consts, u, &bx.lo, bx.side(), next_n)?;
        n = next_n;
        let change = ((cur.upper - prev.upper) / cur.upper)
            .abs()
            .max(((cur.lower - prev.lower) / cur.lower).abs());
        prev = cur;
        if change < 1e-4 {
            return Ok(SigmaTrace {
                value: prev,
                points_per_axis: n,
                converged: true,
            });
        }
    }
}

fn midpoint_rule(
    domain: &BallDomain,
    consts: &Constants,
    u: &WeightChoice,
    lo: &[f64],
    side: f64,
    n: usize,
) -> Result<Envelope> {
    let dim = lo.len();
    let h = side / n as f64;
    let cell = h.powi(dim as i32);
    let mut idx = vec![0usize; dim];
    let mut y = Point::origin(dim);
    let mut acc = Envelope::ZERO;
    loop {
        for (k, c) in y.coords_mut().iter_mut().enumerate() {
            *c = lo[k] + (idx[k] as f64 + 0.5) * h;
        }
        let delta = domain.signed_dist_raw(y.coords());
        let w = delta.powf(-consts.alpha);
        let ue = weight_envelope(domain, consts, u, &y)?;
        acc.lower += ue.lower * ue.lower * w;
        acc.upper += ue.upper * ue.upper * w;
        let mut axis = 0;
        while axis < dim {
            idx[axis] += 1;
            if idx[axis] < n {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
        if axis == dim {
            break;
        }
    }
    Ok(acc.scale(cell))
}
