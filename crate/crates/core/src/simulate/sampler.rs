//! Isotropic α-stable increments by Gaussian subordination.
//!
//! `X = sqrt(2S) G` with `G` standard normal in `R^d` and `S` a positive
//! `α/2`-stable variable with `E e^(-λS) = e^(-λ^(α/2))` (Kanter's
//! representation), so `E e^(i<ξ, X>) = e^(-|ξ|^α)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use smallvec::SmallVec;

use crate::error::{invalid, Result};

pub type Increment = SmallVec<[f64; 4]>;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("must lie in (1, 2), got {alpha}")));
    }
    Ok(())
}

/// Positive `β`-stable variable, `β ∈ (0, 1)`.
#[inline]
pub(crate) fn positive_stable<R: Rng + ?Sized>(rng: &mut R, beta: f64) -> f64 {
    let u = PI * rng.random::<f64>();
    let e: f64 = Exp1.sample(rng);
    let a = (beta * u).sin().powf(beta / (1.0 - beta)) * ((1.0 - beta) * u).sin() / u.sin().powf(1.0 / (1.0 - beta));
    (a / e).powf((1.0 - beta) / beta)
}

/// Writes a unit-time increment into `out`.
#[inline]
pub(crate) fn unit_increment_into<R: Rng + ?Sized>(rng: &mut R, alpha: f64, out: &mut [f64]) {
    let s = positive_stable(rng, alpha / 2.0);
    let k = (2.0 * s).sqrt();
    for v in out.iter_mut() {
        let g: f64 = StandardNormal.sample(rng);
        *v = k * g;
    }
}

/// Increment over process time `h`: `h^(1/α) X_1`.
pub fn stable_increment<R: Rng + ?Sized>(rng: &mut R, alpha: f64, dim: usize, h: f64) -> Result<Increment> {
    check_alpha(alpha)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", format!("time step must be positive, got {h}")));
    }
    if dim < 1 {
        return Err(invalid("dimension", "need d >= 1"));
    }
    let mut out: Increment = SmallVec::from_elem(0.0, dim);
    unit_increment_into(rng, alpha, &mut out);
    let s = h.powf(1.0 / alpha);
    for v in out.iter_mut() {
        *v *= s;
    }
    Ok(out)
}

/// Median of `|X_1|` from a fixed-seed sample.
pub fn unit_median_radius(alpha: f64, dim: usize) -> Result<f64> {
    use rand::SeedableRng;
    check_alpha(alpha)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_a1fa);
    let n = 1 << 17;
    let mut buf = vec![0.0; dim];
    let mut r: Vec<f64> = (0..n)
        .map(|_| {
            unit_increment_into(&mut rng, alpha, &mut buf);
            buf.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect();
    let mid = n / 2;
    let (_, m, _) = r.select_nth_unstable_by(mid, f64::total_cmp);
    Ok(*m)
}
