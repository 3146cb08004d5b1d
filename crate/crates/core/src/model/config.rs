//! JSON configuration documents.
//!
//! ```json
//! {
//!   "source": [[0.0005, 0.0095], [0.0005, 0.9895]],
//!   "channel": {"example": {"k1": 0.045, "k2": 0.01}},
//!   "bank": [[[0,0,0,0,0.5,0.5], [0.25,0.25,0.25,0.25,0,0]],
//!            [[0,0,0,0,0.5,0.5], [0.25,0.25,0.25,0.25,0,0]]],
//!   "solver": {"gamma_tol": 1e-6}
//! }
//! ```
//!
//! `channel` is either `{"example": {...}}` or an explicit `w[x₁][x₂][y]`
//! array. `bank[ν][i]` is the input distribution of user `ν` for class `i`
//! (both 0-based in the file). `solver` is optional; see [`SolverConfig`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{example_channel, validate_instance, Component, Instance, ModelError, Violation, Violations};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleChannel {
    pub k1: f64,
    pub k2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    Example { example: ExampleChannel },
    Tensor(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub source: Vec<Vec<f64>>,
    pub channel: ChannelSpec,
    pub bank: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Builds and validates the instance described by the document.
    pub fn instance(&self) -> Result<Instance, ConfigError> {
        let tensor = match &self.channel {
            ChannelSpec::Tensor(t) => t.clone(),
            ChannelSpec::Example { example } => example_channel(example.k1, example.k2)?.to_tensor(),
        };
        let bank = self.bank_array()?;
        Ok(validate_instance(&self.source, &tensor, &bank)?)
    }

    fn bank_array(&self) -> Result<[[Vec<f64>; 2]; 2], ModelError> {
        let shape_ok = self.bank.len() == 2 && self.bank.iter().all(|b| b.len() == 2);
        if !shape_ok {
            return Err(ModelError::Invalid(Violations(vec![Violation::Malformed {
                component: Component::Bank { user: 0, class: 0 },
                detail: "bank must hold exactly two distributions for each of two users".into(),
            }])));
        }
        let b = &self.bank;
        Ok([[b[0][0].clone(), b[0][1].clone()], [b[1][0].clone(), b[1][1].clone()]])
    }

    /// The bundled example as a configuration document.
    pub fn example() -> Self {
        let high = vec![0.0, 0.0, 0.0, 0.0, 0.5, 0.5];
        let low = vec![0.25, 0.25, 0.25, 0.25, 0.0, 0.0];
        Config {
            source: vec![vec![0.0005, 0.0095], vec![0.0005, 0.9895]],
            channel: ChannelSpec::Example { example: ExampleChannel { k1: 0.045, k2: 0.01 } },
            bank: vec![vec![high.clone(), low.clone()], vec![high, low]],
            solver: SolverConfig::default(),
        }
    }
}
