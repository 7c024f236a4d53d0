use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hamiltonian::Boundary;
use crate::propagator::{KrylovConfig, PropagatorKind, TimeGrid};
use crate::states::Preset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Xxz,
    /// Two-spin dephasing model; ignores the chain length, couplings and disorder.
    TwoSpin,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xxz" => Ok(Self::Xxz),
            "two_spin" | "phen" => Ok(Self::TwoSpin),
            other => Err(Error::Parse(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(rename = "L")]
    pub chain_len: usize,
    pub delta: f64,
    pub hopping: f64,
    pub boundary: Boundary,
    pub v_int: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Xxz,
            chain_len: 10,
            delta: 1.0,
            hopping: 1.0,
            boundary: Boundary::Periodic,
            v_int: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisorderConfig {
    #[serde(rename = "W")]
    pub strengths: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
}

impl Default for DisorderConfig {
    fn default() -> Self {
        Self {
            strengths: vec![0.1, 1.0, 5.0, 10.0],
            realizations: 200,
            seed: 2019,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GridSpec {
    Log {
        t_min: f64,
        t_max: f64,
        points_per_decade: usize,
    },
    Uniform { dt: f64, t_max: f64 },
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::log_preset()
    }
}

impl GridSpec {
    pub fn log_preset() -> Self {
        Self::Log {
            t_min: 0.1,
            t_max: 1e4,
            points_per_decade: 1000,
        }
    }

    pub fn uniform_preset() -> Self {
        Self::Uniform { dt: 0.1, t_max: 400.0 }
    }

    pub fn build(&self) -> Result<TimeGrid> {
        match *self {
            GridSpec::Log {
                t_min,
                t_max,
                points_per_decade,
            } => TimeGrid::logarithmic(t_min, t_max, points_per_decade),
            GridSpec::Uniform { dt, t_max } => TimeGrid::uniform(dt, t_max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagatorConfig {
    pub kind: PropagatorKind,
    pub sector_blocked: bool,
    #[serde(flatten)]
    pub krylov: KrylovConfig,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            kind: PropagatorKind::Krylov,
            sector_blocked: false,
            krylov: KrylovConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservableConfig {
    pub half_chain: bool,
}

impl Default for ObservableConfig {
    fn default() -> Self {
        Self { half_chain: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Nothing is written when unset.
    pub dir: Option<PathBuf>,
    /// Worker threads; 0 lets the thread pool decide.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub state: Preset,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            state: Preset::NeelX,
        }
    }
}

/// Everything that defines an ensemble run. Serialized as TOML with one
/// table per section.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub disorder: DisorderConfig,
    pub initial: InitialConfig,
    pub grid: GridSpec,
    pub propagator: PropagatorConfig,
    pub observables: ObservableConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.disorder.realizations == 0 {
            return bad("at least one realization is required".into());
        }
        if self.disorder.strengths.is_empty() {
            return bad("disorder list is empty".into());
        }
        if let Some(w) = self.disorder.strengths.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return bad(format!("disorder strength {w} must be finite and >= 0"));
        }
        if self.model.kind == ModelKind::Xxz && self.model.chain_len < 2 {
            return bad(format!("chain length {} below 2", self.model.chain_len));
        }
        crate::hilbert::check_len(self.chain_len())?;
        if self.propagator.kind == PropagatorKind::Exact && self.chain_len() > 12 {
            return bad("exact propagation is limited to L <= 12".into());
        }
        self.propagator.krylov.validate()?;
        self.grid.build()?;
        Ok(())
    }

    /// Effective chain length (2 for the two-spin model).
    pub fn chain_len(&self) -> usize {
        match self.model.kind {
            ModelKind::Xxz => self.model.chain_len,
            ModelKind::TwoSpin => 2,
        }
    }

    /// SHA-256 of the physics-defining part of the configuration (output
    /// location and worker count excluded).
    pub fn hash(&self) -> String {
        let mut physics = self.clone();
        physics.output = OutputConfig::default();
        let json = serde_json::to_vec(&physics).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.disorder.strengths, vec![0.1, 1.0, 5.0, 10.0]);
        assert_eq!(cfg.propagator.krylov.subspace_dim, 30);
    }

    #[test]
    fn toml_sections_round_trip() {
        let text = r#"
            [model]
            L = 8
            delta = 0.5
            boundary = "open"

            [disorder]
            W = [5.0, 10.0]
            realizations = 12
            seed = 7

            [initial]
            state = "domains_y"

            [grid]
            kind = "uniform"
            dt = 0.1
            t_max = 50.0

            [propagator]
            kind = "exact"
            tolerance = 1e-9
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.model.chain_len, 8);
        assert_eq!(cfg.model.boundary, Boundary::Open);
        assert_eq!(cfg.model.hopping, 1.0);
        assert_eq!(cfg.initial.state, Preset::DomainsY);
        assert_eq!(cfg.grid, GridSpec::Uniform { dt: 0.1, t_max: 50.0 });
        assert_eq!(cfg.propagator.kind, PropagatorKind::Exact);
        assert_eq!(cfg.propagator.krylov.tolerance, 1e-9);
        cfg.validate().unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ExperimentConfig::from_toml("[model]\nspins = 3\n").is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.disorder.realizations = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.disorder.strengths = vec![-1.0];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.grid = GridSpec::Uniform { dt: -0.1, t_max: 1.0 };
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.model.chain_len = 14;
        cfg.propagator.kind = PropagatorKind::Exact;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output.dir = Some("/tmp/elsewhere".into());
        b.output.workers = 3;
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.disorder.seed += 1;
        assert_ne!(a.hash(), c.hash());
    }
}
