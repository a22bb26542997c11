//! Experiment configuration: a flat TOML table.
//!
//! | key              | used by            | meaning                                        |
//! |------------------|--------------------|------------------------------------------------|
//! | `experiment`     | all                | `bound_sweep`, `sensor` or `images`            |
//! | `sources`        | all                | N                                              |
//! | `field_orders`   | all                | field sizes q to run (each >= alphabet size)   |
//! | `alphabet_size`  | bound_sweep        | source alphabet size (default: smallest q)     |
//! | `p_values`       | bound_sweep/images | Laplacian parameters (images: one per pair)    |
//! | `betas`          | sensor             | correlation decay constants                    |
//! | `bits`           | sensor/images      | quantizer bits / retained bit depth            |
//! | `l_values`       | all                | numbers of received symbols                    |
//! | `deltas`         | bound_sweep        | target error probabilities for the L/N curves  |
//! | `samples`        | sensor/images      | Monte Carlo trials (images: coding-matrix runs) |
//! | `max_iterations` | sensor/images      | decoder iteration cap                          |
//! | `seed`           | all                | master seed (overridden by `--seed`)           |
//! | `output`         | all                | CSV path (overridden by `--out`)               |
//! | `frames_dir`     | images             | directory of binary PGM frames                 |
//! | `window`         | images             | correlation window width (default N)           |
//! | `matrix_mode`    | sensor/images      | `per_trial`, `per_sequence` or `fixed`         |
//! | `prior_mode`     | images             | `empirical` or `uniform` symbol priors         |
//! | `prior_factor`   | sensor/images      | keep the prior as a factor in every update     |
//! | `workers`        | sensor/images      | worker threads, 0 = all cores                  |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    BoundSweep,
    Sensor,
    Images,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::BoundSweep => "bound_sweep",
            ExperimentKind::Sensor => "sensor",
            ExperimentKind::Images => "images",
        }
    }
}

/// How coding matrices are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixMode {
    /// A fresh matrix per trial, shared by all sequences of that trial.
    #[default]
    PerTrial,
    /// A fresh matrix for every source sequence.
    PerSequence,
    /// One matrix for the whole run; for debugging.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// Per-frame symbol histograms.
    #[default]
    Empirical,
    Uniform,
}

fn default_samples() -> usize {
    1000
}

fn default_max_iterations() -> usize {
    corrnet_core::decode::DEFAULT_MAX_ITERATIONS
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub sources: usize,
    pub field_orders: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet_size: Option<usize>,
    #[serde(default)]
    pub p_values: Vec<f64>,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<u32>,
    pub l_values: Vec<usize>,
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default)]
    pub matrix_mode: MatrixMode,
    #[serde(default)]
    pub prior_mode: PriorMode,
    #[serde(default = "default_true")]
    pub prior_factor: bool,
    #[serde(default)]
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Alphabet size of the bound-sweep source.
    pub fn resolved_alphabet(&self) -> usize {
        self.alphabet_size
            .unwrap_or_else(|| self.field_orders.iter().copied().min().unwrap_or(2))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if self.sources == 0 {
            return fail("sources must be at least 1".into());
        }
        if self.field_orders.is_empty() {
            return fail("field_orders must not be empty".into());
        }
        if let Some(&q) = self
            .field_orders
            .iter()
            .find(|&&q| !(2..=256).contains(&q) || !q.is_power_of_two())
        {
            return fail(format!("field order {q} is not a power of two in 2..=256"));
        }
        if self.l_values.is_empty() {
            return fail("l_values must not be empty".into());
        }
        if self.samples == 0 {
            return fail("samples must be at least 1".into());
        }
        if self.max_iterations == 0 {
            return fail("max_iterations must be at least 1".into());
        }
        if let Some(&p) = self.p_values.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return fail(format!("p = {p} is outside (0, 1)"));
        }
        let min_q = *self.field_orders.iter().min().expect("non-empty");
        match self.experiment {
            ExperimentKind::BoundSweep => {
                if self.p_values.is_empty() {
                    return fail("bound_sweep needs p_values".into());
                }
                let k = self.resolved_alphabet();
                if k < 2 || k > min_q {
                    return fail(format!("alphabet_size {k} must be in 2..={min_q}"));
                }
                if let Some(&d) = self.deltas.iter().find(|&&d| !(d > 0.0 && d < 1.0)) {
                    return fail(format!("delta = {d} is outside (0, 1)"));
                }
            }
            ExperimentKind::Sensor | ExperimentKind::Images => {
                let Some(bits) = self.bits else {
                    return fail(format!("{} needs bits", self.experiment.as_str()));
                };
                if !(1..=8).contains(&bits) || (1usize << bits) > min_q {
                    return fail(format!("bits = {bits} needs 2^bits <= every field order"));
                }
                if self.experiment == ExperimentKind::Sensor {
                    if self.sources < 2 {
                        return fail("sensor needs at least 2 sources".into());
                    }
                    if self.betas.is_empty() {
                        return fail("sensor needs betas".into());
                    }
                    if let Some(&b) = self.betas.iter().find(|&&b| !(b > 0.0 && b.is_finite())) {
                        return fail(format!("beta = {b} must be positive"));
                    }
                } else {
                    if self.frames_dir.is_none() {
                        return fail("images needs frames_dir".into());
                    }
                    let pairs = self.sources * (self.sources - 1) / 2;
                    if !self.p_values.is_empty() && self.p_values.len() != 1 && self.p_values.len() != pairs {
                        return fail(format!(
                            "images takes 1 or {pairs} p_values (one per source pair), got {}",
                            self.p_values.len()
                        ));
                    }
                    if self.window == Some(0) {
                        return fail("window must be at least 1".into());
                    }
                }
            }
        }
        Ok(())
    }

    /// The resolved config as TOML, for embedding in outputs.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// `# `-prefixed lines of the resolved config. The output path is left
    /// out so that the file content does not depend on where it is written.
    pub fn comment_lines(&self) -> Vec<String> {
        let resolved = ExperimentConfig {
            output: None,
            ..self.clone()
        };
        resolved.to_toml().lines().map(|l| format!("# {l}")).collect()
    }
}
