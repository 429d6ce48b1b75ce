//! Run configuration: one JSON document naming the environment, the policy
//! network and the abstraction settings.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::MilpConfig;
use crate::envmodel::{EnvError, EnvSpec, Environment};
use crate::geometry::{GeometryError, Template};
use crate::imdp::{verify, AbstractionConfig, Imdp, ImdpError, VerifyReport};
use crate::neural::{Network, NetworkError};
use crate::refine::RefineConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
    #[error("network {path}: {source}")]
    Network { path: PathBuf, source: NetworkError },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Imdp(#[from] ImdpError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TemplateSpec {
    Rect,
    Oct,
    Custom { directions: Vec<Vec<f64>> },
}

impl TemplateSpec {
    pub fn build(&self, dim: usize) -> Result<Arc<Template>, ConfigError> {
        match self {
            TemplateSpec::Rect => Ok(Template::rect(dim)),
            TemplateSpec::Oct => Ok(Template::octagon(dim)),
            TemplateSpec::Custom { directions } => {
                if directions.iter().any(|d| d.len() != dim) {
                    return Err(ConfigError::Invalid(format!(
                        "custom template directions must have {dim} entries"
                    )));
                }
                Ok(Template::custom(directions.clone())?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Leaves per refined abstract state.
    pub leaves: usize,
    /// Abstract states in the whole unfolding.
    pub states: usize,
    /// Branch-and-bound nodes per optimised logit.
    pub bnb_nodes: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            leaves: 4096,
            states: 100_000,
            bnb_nodes: 10_000,
        }
    }
}

fn default_template() -> TemplateSpec {
    TemplateSpec::Rect
}

fn default_true() -> bool {
    true
}

fn default_samples() -> usize {
    1000
}

fn default_bins() -> usize {
    10
}

fn default_min_frac() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub environment: EnvSpec,
    /// Network JSON, relative to the config file's directory.
    pub network: PathBuf,
    #[serde(default = "default_template")]
    pub template: TemplateSpec,
    pub horizon: usize,
    pub phi: f64,
    #[serde(default)]
    pub p_safe: Option<f64>,
    #[serde(default = "default_true")]
    pub containment: bool,
    #[serde(default)]
    pub conservative: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_min_frac")]
    pub min_frac: f64,
    /// Global big-M constant; derived per neuron when absent.
    #[serde(default)]
    pub big_m: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse and validate; the network path is resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        if cfg.network.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.network = dir.join(&cfg.network);
            }
        }
        if !cfg.network.exists() {
            return Err(ConfigError::Invalid(format!(
                "network file {} does not exist",
                cfg.network.display()
            )));
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return Err(ConfigError::Invalid("phi must be in (0,1]".into()));
        }
        if self.horizon < 1 {
            return Err(ConfigError::Invalid("horizon k must be >= 1".into()));
        }
        if let Some(p) = self.p_safe {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::Invalid("p_safe must be in [0,1]".into()));
            }
        }
        if let Some(m) = self.big_m {
            if !(m > 0.0 && m.is_finite()) {
                return Err(ConfigError::Invalid("big_m must be positive".into()));
            }
        }
        self.abstraction().validate().map_err(|e| match e {
            ImdpError::InvalidConfig(m) => ConfigError::Invalid(m),
            other => ConfigError::Imdp(other),
        })
    }

    pub fn abstraction(&self) -> AbstractionConfig {
        AbstractionConfig {
            horizon: self.horizon,
            phi: self.phi,
            containment: self.containment,
            conservative: self.conservative,
            seed: self.seed,
            state_budget: self.budgets.states,
            refine: RefineConfig {
                samples: self.samples,
                bins: self.bins,
                min_frac: self.min_frac,
                leaf_budget: self.budgets.leaves,
            },
            milp: MilpConfig {
                big_m: self.big_m,
                node_budget: self.budgets.bnb_nodes,
                ..MilpConfig::default()
            },
            ..AbstractionConfig::default()
        }
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }

    pub fn environment(&self) -> Result<Environment, ConfigError> {
        Ok(Environment::from_spec(&self.environment)?)
    }

    pub fn load_network(&self) -> Result<Network, ConfigError> {
        Network::load(&self.network).map_err(|source| ConfigError::Network {
            path: self.network.clone(),
            source,
        })
    }

    /// Load everything and run the verification.
    pub fn run(&self) -> Result<(VerifyReport, Imdp), ConfigError> {
        let env = self.environment()?;
        let net = self.load_network()?;
        let template = self.template.build(env.dim())?;
        let (mut report, imdp) = verify(&env, &net, template, &self.abstraction(), self.p_safe)?;
        report.config = self.echo();
        Ok((report, imdp))
    }
}
