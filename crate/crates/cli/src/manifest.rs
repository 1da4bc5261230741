//! The model manifest.
//!
//! ```json
//! {
//!   "models": ["ping.scxml", "pong.scxml"],
//!   "properties": "properties.xml",
//!   "capacities": {"internal": 8, "external": 8},
//!   "quantum": "1/10",
//!   "horizon": 10000,
//!   "smc": {"epsilon": "0.05", "delta": "0.05", "seed": 7}
//! }
//! ```
//!
//! Relative paths are resolved against the manifest's directory. Models are
//! either state-chart documents (`.scxml`) or a single channel system in the
//! JSON graph format (`.json`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tpsmc_core::kernel::Rational;
use tpsmc_core::program_graph::TimeGrid;
use tpsmc_core::smc::SmcConfig;
use tpsmc_scxml::CompileOptions;

use crate::diagnostics::{CliError, Diagnostic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub models: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub properties: Option<PathBuf>,
    #[serde(default)]
    pub capacities: Capacities,
    #[serde(default = "default_quantum")]
    pub quantum: Rational,
    /// Longest wait, in quanta, before a run counts as time-locked.
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default)]
    pub smc: SmcOverrides,
    #[serde(skip)]
    pub base: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Capacities {
    #[serde(default = "default_capacity")]
    pub internal: usize,
    /// Also bounds parameter channels.
    #[serde(default = "default_capacity")]
    pub external: usize,
}

impl Default for Capacities {
    fn default() -> Self {
        Capacities {
            internal: default_capacity(),
            external: default_capacity(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl SmcOverrides {
    /// Fields set in `other` win.
    pub fn overlay(&self, other: &SmcOverrides) -> SmcOverrides {
        SmcOverrides {
            epsilon: other.epsilon.or(self.epsilon),
            delta: other.delta.or(self.delta),
            max_samples: other.max_samples.or(self.max_samples),
            max_steps: other.max_steps.or(self.max_steps),
            seed: other.seed.or(self.seed),
            workers: other.workers.or(self.workers),
        }
    }
}

fn default_capacity() -> usize {
    8
}

fn default_quantum() -> Rational {
    Rational::ONE
}

fn default_horizon() -> u64 {
    TimeGrid::default().horizon
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Scxml,
    Graphs,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, base)
    }

    pub fn from_json(text: &str, base: PathBuf) -> Result<Self, CliError> {
        let mut m: Manifest = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(vec![Diagnostic::new("manifest", e.to_string())]))?;
        m.base = base;
        m.check()?;
        Ok(m)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn model_paths(&self) -> Vec<PathBuf> {
        self.models.iter().map(|p| self.resolve(p)).collect()
    }

    pub fn property_path(&self) -> Option<PathBuf> {
        self.properties.as_ref().map(|p| self.resolve(p))
    }

    pub fn kind(&self) -> ModelKind {
        if self.models.iter().all(|p| p.extension().is_some_and(|e| e == "json")) {
            ModelKind::Graphs
        } else {
            ModelKind::Scxml
        }
    }

    fn check(&self) -> Result<(), CliError> {
        let mut diags = Vec::new();
        let mut bad = |m: String| diags.push(Diagnostic::new("manifest", m));
        if self.models.is_empty() {
            bad("no model files listed".into());
        }
        let json = self.models.iter().filter(|p| p.extension().is_some_and(|e| e == "json")).count();
        if json > 0 && (json > 1 || self.models.len() > 1) {
            bad("a JSON graph model must be the only model file".into());
        }
        if self.capacities.internal == 0 || self.capacities.external == 0 {
            bad("queue capacities must be at least 1".into());
        }
        if self.quantum <= Rational::ZERO {
            bad(format!("time quantum must be positive, got {}", self.quantum));
        }
        if !diags.is_empty() {
            return Err(CliError::Validation(diags));
        }
        // Missing files are usage errors, like a wrong path on the command line.
        for p in self.model_paths().into_iter().chain(self.property_path()) {
            if !p.is_file() {
                return Err(CliError::Usage(format!("file not found: {}", p.display())));
            }
        }
        Ok(())
    }

    pub fn compile_options(&self) -> CompileOptions {
        CompileOptions {
            internal_capacity: self.capacities.internal,
            external_capacity: self.capacities.external,
        }
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid {
            quantum: self.quantum,
            horizon: self.horizon,
        }
    }

    /// Configuration from the defaults, the manifest and then `flags`.
    pub fn smc_config(&self, flags: &SmcOverrides) -> SmcConfig {
        let o = self.smc.overlay(flags);
        let d = SmcConfig::default();
        SmcConfig {
            epsilon: o.epsilon.unwrap_or(d.epsilon),
            delta: o.delta.unwrap_or(d.delta),
            max_samples: o.max_samples.unwrap_or(d.max_samples),
            max_trace_length: o.max_steps.unwrap_or(d.max_trace_length),
            seed: o.seed.unwrap_or(d.seed),
            workers: o.workers.unwrap_or(d.workers),
            grid: self.grid(),
        }
    }
}
