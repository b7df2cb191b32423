//! Shell configurations in the unit ball.
//!
//! Centers sit on the spheres `|x| = t_i`, `t_i = 1 - ½((1-a)/(1+a))^i`,
//! with radii `r = (1 - t_i) φ(t_i)`. Each sphere carries the smallest
//! lattice whose points are within `a(1 - t_i)` of every point of the sphere,
//! so `N_a(x) >= 1` whenever `|x| = t_i`.

use std::f64::consts::PI;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{BallDomain, Point};

use super::{Bubble, BubbleConfig, RadialProfile, WeightFunction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellParams {
    pub a: f64,
    pub shells: usize,
    #[serde(default)]
    pub seed: u64,
    /// Random rotation of each shell lattice, drawn from `seed`.
    #[serde(default)]
    pub jitter: bool,
    /// Multiply the lattice density on shell `i` by `ceil(M(t_i))`.
    #[serde(default)]
    pub multiplicity: WeightFunction,
}

impl ShellParams {
    pub fn new(a: f64, shells: usize) -> Self {
        Self {
            a,
            shells,
            seed: 0,
            jitter: false,
            multiplicity: WeightFunction::One,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(invalid("a", format!("must lie in (0, 1), got {}", self.a)));
        }
        if self.shells < 1 {
            return Err(invalid("shells", "need at least one shell"));
        }
        if self.shells > 60 {
            return Err(invalid("shells", format!("at most 60 shells supported, got {}", self.shells)));
        }
        self.multiplicity.validate()
    }
}

/// Upper limit on the number of generated bubbles.
pub const MAX_SHELL_BUBBLES: usize = 5_000_000;

/// Shell radii `t_1..t_shells`.
pub fn shell_radii(a: f64, shells: usize) -> Vec<f64> {
    let q = (1.0 - a) / (1.0 + a);
    (1..=shells).map(|i| 1.0 - 0.5 * q.powi(i as i32)).collect()
}

/// A generated configuration with its shell structure.
#[derive(Clone, Debug, Serialize)]
pub struct ShellConfig {
    pub config: BubbleConfig,
    pub profile: RadialProfile,
    pub params: ShellParams,
    pub t: Vec<f64>,
    /// Bubble id range of each shell.
    pub ranges: Vec<Range<usize>>,
}

impl ShellConfig {
    pub fn shell_of(&self, k: usize) -> usize {
        self.ranges.partition_point(|r| r.end <= k)
    }

    /// Shells `0..n` only.
    pub fn truncated(&self, n: usize) -> ShellConfig {
        let n = n.min(self.ranges.len());
        let end = if n == 0 { 0 } else { self.ranges[n - 1].end };
        let ids: Vec<usize> = (0..end).collect();
        let mut params = self.params.clone();
        params.shells = n;
        ShellConfig {
            config: self.config.subset(&ids),
            profile: self.profile,
            params,
            t: self.t[..n].to_vec(),
            ranges: self.ranges[..n].to_vec(),
        }
    }
}

/// Shell generator with default parameters (no jitter, unit multiplicity).
pub fn generate_shell_config(
    domain: &BallDomain,
    phi: RadialProfile,
    a: f64,
    shells: usize,
    seed: u64,
) -> Result<ShellConfig> {
    let mut params = ShellParams::new(a, shells);
    params.seed = seed;
    ShellConfig::generate(domain, phi, &params)
}

impl ShellConfig {
    pub fn generate(domain: &BallDomain, phi: RadialProfile, params: &ShellParams) -> Result<ShellConfig> {
        params.validate()?;
        phi.validate()?;
        if !domain.is_unit_ball() {
            return Err(invalid("domain", "shell configurations live in the unit ball B(0, 1)"));
        }
        let dim = domain.dim();
        if dim != 2 && dim != 3 {
            return Err(invalid("dimension", format!("shell lattices exist for d = 2, 3, got {dim}")));
        }
        let t = shell_radii(params.a, params.shells);
        let estimate: f64 = t
            .iter()
            .map(|&ti| {
                let cap = 2.0 * (params.a * (1.0 - ti) / (2.0 * ti)).min(1.0).asin();
                let mult = params.multiplicity.eval(ti).ceil().max(1.0);
                if dim == 2 {
                    (PI / cap + 1.0) * mult
                } else {
                    let c = cap / mult.sqrt();
                    (PI / c + 1.0) * (2.0 * PI / c + 1.0)
                }
            })
            .sum();
        if estimate > MAX_SHELL_BUBBLES as f64 {
            return Err(invalid(
                "shells",
                format!("about {estimate:.3e} bubbles exceed the limit of {MAX_SHELL_BUBBLES}"),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut bubbles = Vec::new();
        let mut ranges = Vec::with_capacity(t.len());
        for &ti in &t {
            let u = 1.0 - ti;
            let mult = params.multiplicity.eval(ti).ceil().max(1.0);
            // angular radius of the spherical cap of chord a u
            let cap = 2.0 * (params.a * u / (2.0 * ti)).min(1.0).asin();
            let radius = u * phi.eval(ti);
            let start = bubbles.len();
            let dirs = if dim == 2 {
                circle_lattice(cap, mult, params.jitter.then(|| rng.random::<f64>()))
            } else {
                sphere_lattice(cap / mult.sqrt(), params.jitter.then(|| random_rotation(&mut rng)))
            };
            for dir in dirs {
                let c: Vec<f64> = dir.iter().map(|v| v * ti).collect();
                bubbles.push(Bubble::new(Point::new(c), radius));
            }
            ranges.push(start..bubbles.len());
        }
        let config = BubbleConfig::new(domain.clone(), bubbles)?;
        Ok(ShellConfig {
            config,
            profile: phi,
            params: params.clone(),
            t,
            ranges,
        })
    }
}

/// `n = floor(π / cap) + 1` equally spaced directions, so the half gap
/// `π / n` is below `cap / 2`, times the multiplicity.
fn circle_lattice(cap: f64, mult: f64, offset: Option<f64>) -> Vec<Vec<f64>> {
    let n = ((PI / cap).floor() as usize + 1) * mult as usize;
    let step = 2.0 * PI / n as f64;
    let theta0 = offset.map_or(0.0, |f| f * step);
    (0..n)
        .map(|j| {
            let th = theta0 + j as f64 * step;
            vec![th.cos(), th.sin()]
        })
        .collect()
}

/// Latitude bands of width `Δ <= cap`; band `k` holds
/// `floor(2π sin θ_k / cap) + 1` points. Any direction is within `Δ/2` of a
/// band and within `π sin θ_k / n_k < cap/2` along it, hence within `cap`.
fn sphere_lattice(cap: f64, rotation: Option<[[f64; 3]; 3]>) -> Vec<Vec<f64>> {
    let bands = (PI / cap).ceil() as usize;
    let width = PI / bands as f64;
    let mut out = Vec::new();
    for k in 0..bands {
        let th = (k as f64 + 0.5) * width;
        let n = (2.0 * PI * th.sin() / cap).floor() as usize + 1;
        let shift = if k % 2 == 1 { 0.5 } else { 0.0 };
        for j in 0..n {
            let ps = 2.0 * PI * (j as f64 + shift) / n as f64;
            let v = [th.sin() * ps.cos(), th.sin() * ps.sin(), th.cos()];
            let v = match rotation {
                Some(m) => [
                    m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
                    m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
                    m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
                ],
                None => v,
            };
            out.push(v.to_vec());
        }
    }
    out
}

/// Uniform rotation from a normalized Gaussian quaternion.
fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    use rand_distr::{Distribution, StandardNormal};
    let mut q = [0.0f64; 4];
    for v in &mut q {
        *v = StandardNormal.sample(rng);
    }
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::champagne::{count_centers_na, count_centers_na_brute, BubbleIndex};
    use crate::error::Error;
    use rand::Rng;

    fn unit(d: usize) -> BallDomain {
        BallDomain::unit(d).unwrap()
    }

    #[test]
    fn shell_radius_examples() {
        let t = shell_radii(0.5, 3);
        let expect = [1.0 - 1.0 / 6.0, 1.0 - 1.0 / 18.0, 1.0 - 1.0 / 54.0];
        for (a, b) in t.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((t[0] - 0.83333).abs() < 1e-5);
        assert!((t[1] - 0.94444).abs() < 1e-5);
        assert!((t[2] - 0.98148).abs() < 1e-5);
    }

    #[test]
    fn shell_recursion_holds() {
        for a in [0.1, 0.5, 0.9] {
            let t = shell_radii(a, 30);
            for w in t.windows(2) {
                let lhs = w[1] - w[0];
                let rhs = 2.0 * a / (1.0 + a) * (1.0 - w[0]);
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300) + 1e-16, "{a}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn constant_profile_ratio() {
        let sc = generate_shell_config(&unit(2), RadialProfile::Constant { c: 0.4 }, 0.5, 6, 0).unwrap();
        for k in 0..sc.config.len() {
            let ratio = sc.config.bubbles()[k].radius / sc.config.delta(k);
            assert!((ratio - 0.4).abs() < 1e-9);
        }
        assert!(sc.config.ratio_sup() < 0.5);
    }

    #[test]
    fn disjoint_by_brute_force() {
        for (d, shells, phi) in [(2, 4, RadialProfile::Constant { c: 0.3 }), (3, 2, RadialProfile::Constant { c: 0.15 })] {
            let sc = generate_shell_config(&unit(d), phi, 0.5, shells, 0).unwrap();
            let b = sc.config.bubbles();
            for i in 0..b.len() {
                for j in i + 1..b.len() {
                    assert!(b[i].center.distance(&b[j].center) > b[i].radius + b[j].radius);
                }
            }
        }
    }

    #[test]
    fn overlap_is_reported() {
        let err = generate_shell_config(&unit(2), RadialProfile::Constant { c: 0.49 }, 0.3, 3, 0).unwrap_err();
        assert!(matches!(err, Error::Overlap { .. }), "{err}");
        assert!(err.to_string().contains("bubbles"));
    }

    #[test]
    fn rejects_bad_domains_and_dims() {
        let phi = RadialProfile::Constant { c: 0.3 };
        let shifted = BallDomain::new(Point::from_slice(&[0.1, 0.0]), 1.0).unwrap();
        assert!(generate_shell_config(&shifted, phi, 0.5, 2, 0).is_err());
        assert!(generate_shell_config(&unit(4), phi, 0.5, 2, 0).is_err());
        assert!(generate_shell_config(&unit(2), phi, 1.5, 2, 0).is_err());
    }

    fn check_na_on_spheres(d: usize, phi: RadialProfile, params: &ShellParams, samples: usize) {
        let mut params = params.clone();
        if d == 3 {
            params.shells = params.shells.min(3);
        }
        let params = &params;
        let sc = ShellConfig::generate(&unit(d), phi, params).unwrap();
        let idx = BubbleIndex::new(&sc.config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for s in 0..samples {
            let t = sc.t[s % sc.t.len()];
            let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            v.iter_mut().for_each(|c| *c *= t / n);
            let x = Point::new(v);
            let na = count_centers_na(&idx, &x, params.a).unwrap();
            assert!(na >= 1, "N_a = 0 at |x| = {t}");
            if s % 10 == 0 {
                assert_eq!(na, count_centers_na_brute(&sc.config, &x, params.a).unwrap());
            }
        }
    }

    #[test]
    fn na_at_least_one_on_shells() {
        let mut p = ShellParams::new(0.5, 5);
        check_na_on_spheres(2, RadialProfile::Constant { c: 0.3 }, &p, 10_000);
        check_na_on_spheres(3, RadialProfile::Constant { c: 0.1 }, &p, 4_000);
        p.jitter = true;
        p.seed = 7;
        check_na_on_spheres(2, RadialProfile::Constant { c: 0.3 }, &p, 5_000);
        check_na_on_spheres(3, RadialProfile::Constant { c: 0.1 }, &p, 2_000);
    }

    #[test]
    fn radial_gap_between_shells() {
        // Halfway point in the sense 1 - |x| = u_i/(1+a): both neighbouring
        // shells sit at distance exactly a(1 - |x|).
        let a = 0.5;
        let sc = generate_shell_config(&unit(2), RadialProfile::Constant { c: 0.3 }, a, 3, 0).unwrap();
        let w = (1.0 - sc.t[0]) / (1.0 + a);
        let step = 2.0 * PI / sc.ranges[0].len() as f64;
        let x = Point::from_slice(&[(1.0 - w) * (0.5 * step).cos(), (1.0 - w) * (0.5 * step).sin()]);
        assert_eq!(count_centers_na_brute(&sc.config, &x, a).unwrap(), 0);
    }

    #[test]
    fn multiplicity_scales_counts() {
        let phi = RadialProfile::Power { beta: 1.5 };
        let base = ShellConfig::generate(&unit(2), phi, &ShellParams::new(0.5, 4)).unwrap();
        let mut p = ShellParams::new(0.5, 4);
        p.multiplicity = WeightFunction::Power { gamma: 0.5 };
        let dense = ShellConfig::generate(&unit(2), phi, &p).unwrap();
        for (i, t) in base.t.iter().enumerate() {
            let m = ((1.0 - t).powf(-0.5)).ceil() as usize;
            assert_eq!(dense.ranges[i].len(), m * base.ranges[i].len());
        }
    }

    #[test]
    fn seeded_jitter_is_deterministic() {
        let mut p = ShellParams::new(0.5, 2);
        p.jitter = true;
        p.seed = 42;
        let phi = RadialProfile::Constant { c: 0.1 };
        let a = ShellConfig::generate(&unit(3), phi, &p).unwrap();
        let b = ShellConfig::generate(&unit(3), phi, &p).unwrap();
        assert_eq!(a.config, b.config);
        p.seed = 43;
        let c = ShellConfig::generate(&unit(3), phi, &p).unwrap();
        assert_ne!(a.config, c.config);
    }

    #[test]
    fn truncation_keeps_inner_shells() {
        let sc = generate_shell_config(&unit(2), RadialProfile::Constant { c: 0.3 }, 0.5, 5, 0).unwrap();
        let tr = sc.truncated(2);
        assert_eq!(tr.config.len(), sc.ranges[1].end);
        assert_eq!(tr.shell_of(tr.config.len() - 1), 1);
    }
}
