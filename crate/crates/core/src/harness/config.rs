use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::champagne::{BubbleConfig, RadialProfile, ShellConfig, ShellParams, WeightFunction};
use crate::criteria::TailModel;
use crate::error::{Error, Result};
use crate::geometry::{BallDomain, Point};
use crate::kernels::Constants;
use crate::simulate::SimParams;

pub const FORMAT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl DomainSpec {
    pub fn unit(dim: usize) -> Self {
        Self {
            center: vec![0.0; dim],
            radius: 1.0,
        }
    }
}

/// Shell generator settings; the seed comes from [`RunConfig::seed`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSpec {
    pub a: f64,
    pub shells: usize,
    #[serde(default)]
    pub jitter: bool,
    #[serde(default)]
    pub multiplicity: WeightFunction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaSpec {
    pub grid_points: usize,
    pub max_level: i32,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    /// Use the profile and weight as analytic tail model.
    #[serde(default = "yes")]
    pub tail_model: bool,
    /// Lower end of the profile integral.
    #[serde(default = "default_t0")]
    pub t0: f64,
}

fn default_n_max() -> u32 {
    20
}

fn default_t0() -> f64 {
    0.5
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub h: f64,
    pub boundary_eps: f64,
    pub max_steps: u64,
    pub n_traj: u64,
    #[serde(default)]
    pub adaptive: bool,
    /// Start point; the domain center when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Also write one CSV row per trajectory.
    #[serde(default)]
    pub trajectories_csv: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: String,
    pub domain: DomainSpec,
    pub constants: Constants,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub profile: Option<RadialProfile>,
    #[serde(default)]
    pub weight: WeightFunction,
    #[serde(default)]
    pub shells: Option<ShellSpec>,
    /// Bubble CSV (`k, x_1..x_d, r`) used instead of the shell generator.
    #[serde(default)]
    pub bubbles_csv: Option<PathBuf>,
    #[serde(default)]
    pub criteria: Option<CriteriaSpec>,
    #[serde(default)]
    pub sim: Option<SimSpec>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Prefixes an error with the config field it came from.
fn field<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| bad(format!("{name}: {e}")))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| bad(format!("parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(bad(format!(
                "format_version: expected \"{FORMAT_VERSION}\", got \"{}\"",
                self.format_version
            )));
        }
        let domain = field("domain", self.build_domain())?;
        field("constants", self.constants.validate())?;
        if let Some(p) = &self.profile {
            field("profile", p.validate())?;
        }
        field("weight", self.weight.validate())?;
        if let Some(s) = &self.shells {
            field("shells", self.shell_params(s).validate())?;
            if !domain.is_unit_ball() {
                return Err(bad("shells: the shell generator needs the unit ball domain"));
            }
        }
        if let Some(c) = &self.criteria {
            if c.grid_points < 1 {
                return Err(bad("criteria.grid_points: need at least one point"));
            }
            if !(1..=30).contains(&c.max_level) {
                return Err(bad(format!("criteria.max_level: must lie in 1..=30, got {}", c.max_level)));
            }
            if c.n_max < 1 {
                return Err(bad("criteria.n_max: need at least one dyadic shell"));
            }
            if !(c.t0 > 0.0 && c.t0 < 1.0) {
                return Err(bad(format!("criteria.t0: must lie in (0, 1), got {}", c.t0)));
            }
        }
        if let Some(s) = &self.sim {
            field("sim", self.sim_params(s).validate())?;
            if let Some(x0) = &s.x0 {
                if x0.len() != domain.dim() {
                    return Err(bad(format!("sim.x0: expected {} coordinates, got {}", domain.dim(), x0.len())));
                }
                field("sim.x0", domain.require_inside(&Point::from_slice(x0)).map(|_| ()))?;
            }
        }
        Ok(())
    }

    pub fn build_domain(&self) -> Result<BallDomain> {
        if self.domain.center.is_empty() {
            return Err(bad("domain.center: need at least one coordinate"));
        }
        BallDomain::new(Point::from_slice(&self.domain.center), self.domain.radius)
    }

    pub fn shell_params(&self, s: &ShellSpec) -> ShellParams {
        ShellParams {
            a: s.a,
            shells: s.shells,
            seed: self.seed,
            jitter: s.jitter,
            multiplicity: s.multiplicity,
        }
    }

    pub fn sim_params(&self, s: &SimSpec) -> SimParams {
        SimParams {
            alpha: self.constants.alpha,
            h: s.h,
            boundary_eps: s.boundary_eps,
            max_steps: s.max_steps,
            n_traj: s.n_traj,
            seed: self.seed,
            adaptive: s.adaptive,
        }
    }

    pub fn require_profile(&self) -> Result<RadialProfile> {
        self.profile.ok_or_else(|| bad("profile: missing radial profile"))
    }

    pub fn require_shells(&self) -> Result<&ShellSpec> {
        self.shells.as_ref().ok_or_else(|| bad("shells: missing shell parameters"))
    }

    pub fn require_criteria(&self) -> Result<&CriteriaSpec> {
        self.criteria.as_ref().ok_or_else(|| bad("criteria: missing criteria section"))
    }

    pub fn require_sim(&self) -> Result<&SimSpec> {
        self.sim.as_ref().ok_or_else(|| bad("sim: missing simulation section"))
    }

    /// Shell configuration from the generator settings.
    pub fn generate_shells(&self) -> Result<ShellConfig> {
        let phi = self.require_profile()?;
        let s = self.require_shells()?;
        ShellConfig::generate(&self.build_domain()?, phi, &self.shell_params(s))
    }

    /// Bubbles from `bubbles_csv` when given, else from the generator.
    pub fn bubbles(&self) -> Result<BubbleConfig> {
        match &self.bubbles_csv {
            Some(path) => {
                let f = std::fs::File::open(path)
                    .map_err(|e| bad(format!("bubbles_csv: cannot open {}: {e}", path.display())))?;
                BubbleConfig::read_csv(self.build_domain()?, f)
            }
            None => Ok(self.generate_shells()?.config),
        }
    }

    /// Analytic tail model, when profile and shells are present and enabled.
    pub fn tail_model(&self) -> Option<TailModel> {
        let enabled = self.criteria.as_ref().is_none_or(|c| c.tail_model);
        match (enabled, self.profile, &self.shells, &self.bubbles_csv) {
            (true, Some(profile), Some(s), None) => Some(TailModel {
                profile,
                weight: self.weight,
                a: s.a,
            }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> RunConfig {
        RunConfig {
            format_version: FORMAT_VERSION.into(),
            domain: DomainSpec::unit(2),
            constants: Constants::comparison(1.5).unwrap(),
            seed: 7,
            profile: Some(RadialProfile::Constant { c: 0.3 }),
            weight: WeightFunction::One,
            shells: Some(ShellSpec {
                a: 0.5,
                shells: 3,
                jitter: false,
                multiplicity: WeightFunction::One,
            }),
            bubbles_csv: None,
            criteria: Some(CriteriaSpec {
                grid_points: 8,
                max_level: 9,
                n_max: 12,
                tail_model: true,
                t0: 0.5,
            }),
            sim: Some(SimSpec {
                h: 0.01,
                boundary_eps: 1e-3,
                max_steps: 10_000,
                n_traj: 50,
                adaptive: true,
                x0: None,
                trajectories_csv: false,
            }),
            output_dir: None,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let mut c = sample();
        c.constants.c_g = 1.1 + 0.2;
        c.sim.as_mut().unwrap().h = 1.0 / 3.0;
        let text = c.to_json();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), text);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(back.sim.unwrap().h.to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn invalid_fields_are_named() {
        let mut c = sample();
        c.profile = None;
        let err = c.generate_shells().unwrap_err().to_string();
        assert!(err.contains("profile"), "{err}");
        let mut c = sample();
        c.format_version = "0".into();
        assert!(c.validate().unwrap_err().to_string().contains("format_version"));
        let mut c = sample();
        c.shells.as_mut().unwrap().a = 1.5;
        assert!(c.validate().unwrap_err().to_string().contains("shells"));
        let text = sample().to_json().replace("\"seed\": 7", "\"seed\": 7, \"bogus\": 1");
        assert!(RunConfig::from_json(&text).is_err());
    }
}
