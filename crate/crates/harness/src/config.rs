//! Campaign configuration, read from TOML.
//!
//! ```toml
//! master_seed = 7
//! trials_per_point = 5000
//! schemes = ["cost-aware", "classic", "bit-per-buck"]
//! delta_grid = [1e-2, 1e-4]        # optional; sorted descending on load
//! output_dir = "out"
//!
//! [instance]
//! kind = "paper"
//! seed = 7
//! ```
//!
//! An explicit instance uses `kind = "inline"` with `costs`, an optional
//! `prior` and a hypotheses x actions `models` array of tables such as
//! `{ family = "gaussian", mean = 2.0, variance = 1.0 }` or
//! `{ family = "categorical", probabilities = [0.2, 0.8] }`.

use std::fs;
use std::path::{Path, PathBuf};

use nhsht_core::engine::DEFAULT_SAMPLE_CAP;
use nhsht_core::{EtaRule, ObservationModel, ProblemInstance, Scheme};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::instance::{generate_paper_instance_with_noise, DEFAULT_NOISE};

pub const DEFAULT_TRIALS: u64 = 50_000;
pub const DEFAULT_EPSILON: f64 = 3.0;
/// LLR second-moment bound quoted for the benchmark instance.
pub const DEFAULT_BETA: f64 = 361.0;

/// `10^-1, 10^-2, ..., 10^-10`.
pub fn default_delta_grid() -> Vec<f64> {
    (1..=10).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceSpec {
    Paper {
        seed: u64,
        #[serde(default = "default_noise")]
        noise: f64,
    },
    Inline {
        costs: Vec<f64>,
        models: Vec<Vec<ObservationModel<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prior: Option<Vec<f64>>,
    },
}

fn default_noise() -> f64 {
    DEFAULT_NOISE
}

impl InstanceSpec {
    pub fn build(&self) -> Result<ProblemInstance<f64>, HarnessError> {
        match self {
            InstanceSpec::Paper { seed, noise } => {
                if !(noise.is_finite() && *noise >= 0.0) {
                    return Err(HarnessError::Config(format!("noise {noise} must be finite and nonnegative")));
                }
                Ok(generate_paper_instance_with_noise(*seed, *noise))
            }
            InstanceSpec::Inline { costs, models, prior } => Ok(match prior {
                Some(p) => ProblemInstance::with_prior(costs.clone(), models.clone(), p.clone())?,
                None => ProblemInstance::new(costs.clone(), models.clone())?,
            }),
        }
    }
}

fn default_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}
fn default_trials() -> u64 {
    DEFAULT_TRIALS
}
fn default_sample_cap() -> u64 {
    DEFAULT_SAMPLE_CAP
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_beta() -> f64 {
    DEFAULT_BETA
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_delta_grid")]
    pub delta_grid: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials_per_point: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_sample_cap")]
    pub sample_cap: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// LLR second-moment bound used in the full lower bound.
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub eta_rule: EtaRule,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Benchmark campaign with every scheme and the default grid.
    pub fn paper(seed: u64, trials_per_point: u64, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            instance: InstanceSpec::Paper { seed, noise: DEFAULT_NOISE },
            schemes: default_schemes(),
            delta_grid: default_delta_grid(),
            trials_per_point,
            master_seed: seed,
            sample_cap: DEFAULT_SAMPLE_CAP,
            epsilon: DEFAULT_EPSILON,
            beta: DEFAULT_BETA,
            eta_rule: EtaRule::default(),
            output_dir: output_dir.into(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.resolve()
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Validates every field and sorts the grid in descending order.
    pub fn resolve(mut self) -> Result<Self, HarnessError> {
        if self.delta_grid.is_empty() {
            return Err(HarnessError::Config("delta_grid is empty".into()));
        }
        if let Some(d) = self.delta_grid.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(HarnessError::Config(format!("delta {d} must lie strictly inside (0, 1)")));
        }
        self.delta_grid.sort_by(|a, b| b.total_cmp(a));
        if self.delta_grid.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::Config("delta_grid contains duplicates".into()));
        }
        if self.delta_grid.len() >= 1 << 16 {
            return Err(HarnessError::Config("delta_grid is too long".into()));
        }
        if self.trials_per_point == 0 || self.trials_per_point >= 1 << 40 {
            return Err(HarnessError::Config("trials_per_point must be in [1, 2^40)".into()));
        }
        if self.schemes.is_empty() {
            return Err(HarnessError::Config("at least one scheme is required".into()));
        }
        let mut seen = Vec::new();
        for s in &self.schemes {
            if seen.contains(s) {
                return Err(HarnessError::Config(format!("scheme {s} listed twice")));
            }
            seen.push(*s);
        }
        if self.sample_cap == 0 {
            return Err(HarnessError::Config("sample_cap must be at least 1".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(HarnessError::Config(format!("epsilon {} must be positive", self.epsilon)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(HarnessError::Config(format!("beta {} must be positive", self.beta)));
        }
        self.eta_rule.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_toml_str("[instance]\nkind = \"paper\"\nseed = 3\n").unwrap();
        assert_eq!(c.trials_per_point, 50_000);
        assert_eq!(c.delta_grid.len(), 10);
        assert_eq!(c.delta_grid[0], 0.1);
        assert_eq!(c.delta_grid[9], 1e-10);
        assert_eq!(c.schemes.len(), 3);
        assert_eq!(c.epsilon, 3.0);
        assert_eq!(c.eta_rule, EtaRule::CubeRoot);
        assert_eq!(c.instance, InstanceSpec::Paper { seed: 3, noise: 0.1 });
    }

    #[test]
    fn grid_sorted_descending() {
        let c =
            ExperimentConfig::from_toml_str("delta_grid = [1e-5, 0.1, 1e-3]\n[instance]\nkind = \"paper\"\nseed = 1\n")
                .unwrap();
        assert_eq!(c.delta_grid, vec![0.1, 1e-3, 1e-5]);
    }

    #[test]
    fn rejects_invalid_grids_and_fields() {
        let base = "[instance]\nkind = \"paper\"\nseed = 1\n";
        for prefix in [
            "delta_grid = []\n",
            "delta_grid = [0.0]\n",
            "delta_grid = [1.0]\n",
            "delta_grid = [0.1, 0.1]\n",
            "trials_per_point = 0\n",
            "schemes = []\n",
            "schemes = [\"greedy\"]\n",
            "epsilon = -1.0\n",
            "eta_rule = { fixed = 2.0 }\n",
            "unknown_key = 1\n",
        ] {
            let text = format!("{prefix}{base}");
            assert!(ExperimentConfig::from_toml_str(&text).is_err(), "{prefix}");
        }
    }

    #[test]
    fn inline_instance() {
        let text = r#"
schemes = ["classic", "cost-aware-chernoff"]
eta_rule = { fixed = 0.25 }

[instance]
kind = "inline"
costs = [1.0, 3.0]
models = [
  [{ family = "gaussian", mean = 0.0, variance = 1.0 }, { family = "gaussian", mean = 0.0, variance = 1.0 }],
  [{ family = "gaussian", mean = 1.0, variance = 1.0 }, { family = "gaussian", mean = 0.0, variance = 1.0 }],
  [{ family = "gaussian", mean = 0.0, variance = 1.0 }, { family = "gaussian", mean = 2.0, variance = 1.0 }],
]
"#;
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(c.schemes, vec![Scheme::ClassicChernoff, Scheme::CostAwareChernoff]);
        assert_eq!(c.eta_rule, EtaRule::Fixed(0.25));
        let inst = c.instance.build().unwrap();
        assert_eq!(inst.num_hypotheses(), 3);
        assert_eq!(inst.costs(), &[1.0, 3.0]);
    }

    #[test]
    fn inline_instance_validation_errors_surface() {
        let text = r#"
[instance]
kind = "inline"
costs = [0.0]
models = [[{ family = "gaussian", mean = 0.0, variance = 1.0 }]]
"#;
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        assert!(c.instance.build().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::paper(5, 100, "x");
        let text = toml::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
    }
}
