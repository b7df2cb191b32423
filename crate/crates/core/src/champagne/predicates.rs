//! Separation, counting and smallness predicates.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{unit_ball_volume, BallDomain, Point};
use crate::kernels::Constants;

use super::{BubbleConfig, BubbleIndex, RadialProfile};

fn nearest_distances(config: &BubbleConfig) -> Result<Vec<f64>> {
    let idx = BubbleIndex::new(config)?;
    Ok((0..config.len())
        .into_par_iter()
        .map(|k| idx.nearest_other(k).map_or(f64::INFINITY, |(_, r)| r))
        .collect())
}

fn min_ratio(nn: &[f64], denom: impl Fn(usize) -> f64 + Sync) -> f64 {
    nn.par_iter()
        .enumerate()
        .map(|(k, &r)| r / denom(k))
        .reduce(|| f64::INFINITY, f64::min)
}

fn thm1_denominator(config: &BubbleConfig, alpha: f64, k: usize) -> f64 {
    let d = config.domain().dim() as f64;
    let r = config.bubbles()[k].radius;
    r.powf(1.0 - alpha / d) * config.delta(k).powf(alpha / d)
}

/// `inf_{j≠k} |x_j - x_k| / (r_k^(1-α/d) δ(x_k)^(α/d))`; `+∞` below two bubbles.
pub fn check_separation_thm1(config: &BubbleConfig, alpha: f64) -> Result<f64> {
    let nn = nearest_distances(config)?;
    Ok(min_ratio(&nn, |k| thm1_denominator(config, alpha, k)))
}

/// Quadratic-time reference for [`check_separation_thm1`].
pub fn check_separation_thm1_brute(config: &BubbleConfig, alpha: f64) -> f64 {
    let b = config.bubbles();
    let mut best = f64::INFINITY;
    for k in 0..b.len() {
        let mut nn = f64::INFINITY;
        for j in 0..b.len() {
            if j != k {
                nn = nn.min(b[j].center.distance(&b[k].center));
            }
        }
        best = best.min(nn / thm1_denominator(config, alpha, k));
    }
    best
}

/// `inf_{m≠n} |x_m - x_n| / (φ(|x_n|)^(1-α/d) (1 - |x_n|))` in the unit ball.
pub fn check_separation_thm2(config: &BubbleConfig, phi: &RadialProfile, alpha: f64) -> Result<f64> {
    if !config.domain().is_unit_ball() {
        return Err(invalid("domain", "the profile separation is defined in the unit ball"));
    }
    let d = config.domain().dim() as f64;
    for (k, b) in config.bubbles().iter().enumerate() {
        let s = b.center.norm();
        let expect = (1.0 - s) * phi.eval(s);
        if (b.radius - expect).abs() > 1e-9 * expect {
            return Err(Error::Precondition(format!(
                "bubble {k}: radius {} differs from (1-|x|) phi(|x|) = {expect}",
                b.radius
            )));
        }
    }
    let nn = nearest_distances(config)?;
    Ok(min_ratio(&nn, |k| {
        let s = config.bubbles()[k].center.norm();
        phi.eval(s).powf(1.0 - alpha / d) * (1.0 - s)
    }))
}

fn na_radius(config_domain: &BallDomain, x: &Point, a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(invalid("a", format!("must lie in (0, 1), got {a}")));
    }
    Ok(a * config_domain.require_inside(x)?)
}

/// `N_a(x)`: number of centers with `|x_n - x| < a δ(x)`.
pub fn count_centers_na(index: &BubbleIndex, x: &Point, a: f64) -> Result<usize> {
    let rho = na_radius(index.domain(), x, a)?;
    Ok(index.count_within(x.coords(), rho))
}

pub fn count_centers_na_brute(config: &BubbleConfig, x: &Point, a: f64) -> Result<usize> {
    let rho = na_radius(config.domain(), x, a)?;
    Ok(config
        .bubbles()
        .iter()
        .filter(|b| b.center.distance(x) < rho)
        .count())
}

/// Hypotheses of the capacity lower-bound lemmas. Margins are
/// `observed / threshold` (or its inverse for upper bounds), so a margin
/// of at least one means the condition holds.
#[derive(Clone, Debug, Serialize)]
pub struct Lemma62Report {
    pub cond_i: bool,
    pub cond_ii: bool,
    pub cond_63: bool,
    pub radius_threshold: f64,
    pub max_radius: f64,
    pub margin_i: f64,
    pub separation_ii_threshold: f64,
    pub min_separation_ii: f64,
    pub margin_ii: f64,
    pub separation_63_threshold: f64,
    pub min_separation_63: f64,
    pub margin_63: f64,
}

pub fn check_lemma62(config: &BubbleConfig, consts: &Constants) -> Result<Lemma62Report> {
    consts.validate()?;
    let dim = config.domain().dim();
    let d = dim as f64;
    let alpha = consts.alpha;
    let sigma = unit_ball_volume(dim);
    let radius_threshold = (16f64.powi(dim as i32) * consts.c * sigma).powf(-1.0 / alpha);
    let sep_ii = 2.0 * consts.c.powf(1.0 / d) * sigma.powf(-1.0 / d);
    let sep_63 = 32.0 * consts.c.powf(2.0 / d) * consts.c_1.powf(2.0 * alpha / d);
    let max_radius = config.bubbles().iter().map(|b| b.radius).fold(0.0, f64::max);
    let nn = nearest_distances(config)?;
    let min_ii = min_ratio(&nn, |k| config.bubbles()[k].radius.powf(1.0 - alpha / d));
    let min_63 = min_ratio(&nn, |k| thm1_denominator(config, alpha, k));
    let margin_i = if max_radius > 0.0 {
        radius_threshold / max_radius
    } else {
        f64::INFINITY
    };
    Ok(Lemma62Report {
        cond_i: max_radius <= radius_threshold,
        cond_ii: min_ii >= sep_ii,
        cond_63: min_63 >= sep_63,
        radius_threshold,
        max_radius,
        margin_i,
        separation_ii_threshold: sep_ii,
        min_separation_ii: min_ii,
        margin_ii: min_ii / sep_ii,
        separation_63_threshold: sep_63,
        min_separation_63: min_63,
        margin_63: min_63 / sep_63,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::champagne::{generate_shell_config, Bubble};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(c: &[f64]) -> Point {
        Point::from_slice(c)
    }

    fn unit2() -> BallDomain {
        BallDomain::unit(2).unwrap()
    }

    fn random_config(n: usize, seed: u64) -> BubbleConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bubbles: Vec<Bubble> = Vec::new();
        while bubbles.len() < n {
            let x = p(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            let delta = 1.0 - x.norm();
            if delta <= 0.0 {
                continue;
            }
            let r = delta * rng.random_range(0.001..0.05);
            if bubbles
                .iter()
                .all(|b| b.center.distance(&x) > (b.radius + r) * (1.0 + 1e-9))
            {
                bubbles.push(Bubble::new(x, r));
            }
        }
        BubbleConfig::new(unit2(), bubbles).unwrap()
    }

    #[test]
    fn thm1_examples() {
        let one = BubbleConfig::new(unit2(), vec![Bubble::new(p(&[0.5, 0.0]), 0.01)]).unwrap();
        assert_eq!(check_separation_thm1(&one, 1.5).unwrap(), f64::INFINITY);
        // both centers at δ = 0.1 with |x_1 - x_2| = 0.05
        let th = 2.0 * (0.05f64 / 1.8).asin();
        let two = BubbleConfig::new(
            unit2(),
            vec![
                Bubble::new(p(&[0.9, 0.0]), 0.001),
                Bubble::new(p(&[0.9 * th.cos(), 0.9 * th.sin()]), 0.001),
            ],
        )
        .unwrap();
        let got = check_separation_thm1(&two, 1.5).unwrap();
        assert!((got - 1.5811).abs() < 1e-4, "{got}");
        assert_eq!(got, check_separation_thm1_brute(&two, 1.5));
    }

    #[test]
    fn thm1_matches_brute_force() {
        for seed in 0..3 {
            let c = random_config(200, seed);
            assert_eq!(check_separation_thm1(&c, 1.5).unwrap(), check_separation_thm1_brute(&c, 1.5));
        }
    }

    #[test]
    fn thm2_examples() {
        let phi = RadialProfile::Constant { c: 0.3 };
        let one = BubbleConfig::new(unit2(), vec![Bubble::new(p(&[0.5, 0.0]), 0.15)]).unwrap();
        assert_eq!(check_separation_thm2(&one, &phi, 1.5).unwrap(), f64::INFINITY);
        let bad = BubbleConfig::new(unit2(), vec![Bubble::new(p(&[0.5, 0.0]), 0.1)]).unwrap();
        assert!(check_separation_thm2(&bad, &phi, 1.5).is_err());
    }

    #[test]
    fn thm2_plateau_and_domination() {
        let phi = RadialProfile::Constant { c: 0.3 };
        let vals: Vec<f64> = (2..=6)
            .map(|s| {
                let sc = generate_shell_config(&unit2(), phi, 0.5, s, 0).unwrap();
                check_separation_thm2(&sc.config, &phi, 1.5).unwrap()
            })
            .collect();
        assert!(vals.iter().all(|&v| v > 0.0 && v.is_finite()));
        let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(hi / lo < 1.5, "{vals:?}");
        // strong separation inf |x_j - x_k|/(1-|x_k|) is dominated termwise
        let sc = generate_shell_config(&unit2(), phi, 0.5, 4, 0).unwrap();
        let strong = (0..sc.config.len())
            .map(|k| {
                let b = &sc.config.bubbles()[k];
                let nn = sc
                    .config
                    .bubbles()
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, o)| o.center.distance(&b.center))
                    .fold(f64::INFINITY, f64::min);
                nn / (1.0 - b.center.norm())
            })
            .fold(f64::INFINITY, f64::min);
        assert!(strong > 0.0);
        assert!(check_separation_thm2(&sc.config, &phi, 1.5).unwrap() >= strong);
    }

    #[test]
    fn na_examples() {
        let empty = BubbleConfig::empty(unit2());
        let idx = BubbleIndex::new(&empty).unwrap();
        assert_eq!(count_centers_na(&idx, &p(&[0.3, 0.0]), 0.5).unwrap(), 0);
        let sc = generate_shell_config(&unit2(), RadialProfile::Constant { c: 0.3 }, 0.5, 3, 0).unwrap();
        let idx = BubbleIndex::new(&sc.config).unwrap();
        let c = sc.config.bubbles()[0].center.clone();
        assert!(count_centers_na(&idx, &c, 0.5).unwrap() >= 1);
        assert!(count_centers_na(&idx, &p(&[1.0, 0.0]), 0.5).is_err());
    }

    #[test]
    fn na_matches_brute_force() {
        let c = random_config(300, 4);
        let idx = BubbleIndex::new(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut checked = 0;
        while checked < 1000 {
            let x = p(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            if x.norm() >= 1.0 {
                continue;
            }
            checked += 1;
            let a = rng.random_range(0.05..0.95);
            assert_eq!(count_centers_na(&idx, &x, a).unwrap(), count_centers_na_brute(&c, &x, a).unwrap());
        }
    }

    #[test]
    fn lemma62_examples() {
        let c = Constants::comparison(1.5).unwrap();
        let far = BubbleConfig::new(
            unit2(),
            vec![Bubble::new(p(&[0.5, 0.0]), 0.001), Bubble::new(p(&[-0.5, 0.0]), 0.001)],
        )
        .unwrap();
        let rep = check_lemma62(&far, &c).unwrap();
        assert!(rep.cond_i && rep.cond_ii, "{rep:?}");
        assert!((rep.radius_threshold - 0.0116).abs() < 1e-4);
        assert!((rep.separation_ii_threshold - 1.128).abs() < 1e-3);

        let big = BubbleConfig::new(BallDomain::new(Point::origin(2), 2.0).unwrap(), vec![Bubble::new(p(&[0.0, 0.0]), 0.5)])
            .unwrap();
        assert!(!check_lemma62(&big, &c).unwrap().cond_i);
    }

    #[test]
    fn lemma62_margins_shrink_with_scale() {
        let c = Constants::comparison(1.5).unwrap();
        let centers = [p(&[0.5, 0.0]), p(&[0.0, 0.5]), p(&[-0.3, -0.3])];
        let mut prev: Option<Lemma62Report> = None;
        for s in [1e-4, 1e-3, 5e-3, 1e-2, 5e-2] {
            let cfg = BubbleConfig::new(
                unit2(),
                centers.iter().map(|x| Bubble::new(x.clone(), s)).collect(),
            )
            .unwrap();
            let rep = check_lemma62(&cfg, &c).unwrap();
            if let Some(p) = prev {
                assert!(rep.margin_i < p.margin_i);
                assert!(rep.margin_ii < p.margin_ii);
                assert!(rep.margin_63 < p.margin_63);
            }
            prev = Some(rep);
        }
    }
}
