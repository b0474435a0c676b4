//! Versioned run configuration. Every field has a default; unknown keys are
//! rejected so a typo cannot silently fall back to a default.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arch::{ArchConfig, Layout};
use crate::error::{Error, Result};
use crate::network::ModelConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// Q7.8 words with 8-bit traces.
    #[default]
    Fxp16,
    /// Q15.16 words with 8-bit traces.
    Fxp32,
    /// IEEE single precision with real-valued traces.
    Float,
}

impl Precision {
    pub const ALL: [Precision; 3] = [Precision::Fxp16, Precision::Fxp32, Precision::Float];

    pub fn name(self) -> &'static str {
        match self {
            Precision::Fxp16 => "fxp16",
            Precision::Fxp32 => "fxp32",
            Precision::Float => "float",
        }
    }

    /// Width of one stored parameter.
    pub fn word_bits(self) -> u32 {
        match self {
            Precision::Fxp16 => 16,
            Precision::Fxp32 | Precision::Float => 32,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fxp16" => Ok(Precision::Fxp16),
            "fxp32" => Ok(Precision::Fxp32),
            "float" | "float32" => Ok(Precision::Float),
            _ => Err(Error::Config(format!("unknown precision '{s}' (expected fxp16, fxp32 or float)"))),
        }
    }
}

/// Which model executes training and evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// The accelerator model, with a cycle ledger.
    #[default]
    Arch,
    /// The functional reference; bit-identical results, no ledger.
    Reference,
}

impl FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arch" => Ok(Engine::Arch),
            "reference" => Ok(Engine::Reference),
            _ => Err(Error::Config(format!("unknown engine '{s}' (expected arch or reference)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Directory holding the four MNIST IDX files.
    pub path: PathBuf,
    pub n_train: usize,
    pub n_test: usize,
    pub timesteps: usize,
    /// Spike probability per step of a white pixel.
    pub r_max: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            path: PathBuf::from("data/mnist"),
            n_train: 10_000,
            n_test: 2_500,
            timesteps: 50,
            r_max: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub precision: Precision,
    pub engine: Engine,
    /// First seed; seed `i` of a multi-seed run is `seed + i`.
    pub seed: u64,
    pub seeds: usize,
    /// Worker threads for multi-seed runs; 0 uses every core.
    pub threads: usize,
    /// Evaluate every seen task after each task, not only at the end.
    pub track_history: bool,
    /// Training samples replayed by the memory-layout bench.
    pub bench_samples: usize,
    pub data: DataConfig,
    pub arch: ArchConfig,
    pub model: ModelConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            precision: Precision::default(),
            engine: Engine::default(),
            seed: 1,
            seeds: 5,
            threads: 0,
            track_history: false,
            bench_samples: 200,
            data: DataConfig::default(),
            arch: ArchConfig::default(),
            model: ModelConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Every problem found, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            out.push(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.seeds == 0 {
            out.push("seeds must be at least 1".into());
        }
        let d = &self.data;
        if d.timesteps == 0 {
            out.push("data.timesteps must be at least 1".into());
        }
        if !(d.r_max > 0.0 && d.r_max <= 1.0) {
            out.push(format!("data.r_max {} outside (0, 1]", d.r_max));
        }
        if d.n_train == 0 || !d.n_train.is_multiple_of(10) || d.n_test == 0 || !d.n_test.is_multiple_of(10) {
            out.push(format!(
                "data.n_train ({}) and data.n_test ({}) must be positive multiples of 10",
                d.n_train, d.n_test
            ));
        }
        if let Err(e) = self.arch.validate() {
            out.push(format!("arch: {e}"));
        }
        if let Err(e) = self.model.validate() {
            out.push(format!("model: {e}"));
        }
        if self.model.n_input != 256 {
            out.push(format!("model.n_input {} must be 256 for 16x16 images", self.model.n_input));
        }
        if self.model.n_output != 2 {
            out.push(format!("model.n_output {} must be 2 for binary tasks", self.model.n_output));
        }
        if self.model.n_input.max(self.model.n_hidden).max(2 * self.model.n_output) > self.arch.fifo_capacity {
            out.push(format!(
                "arch.fifo_capacity {} is smaller than the widest spike vector",
                self.arch.fifo_capacity
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    /// Seeds of every run, in order.
    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.seed + i).collect()
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn with_layout(mut self, layout: Layout) -> Self {
        self.arch.layout = layout;
        self
    }
}
