//! Machine-readable run reports. Reports carry no wall-clock data so that
//! identical runs produce identical bytes; timings go to a sidecar file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arch::CycleLedger;
use crate::config::{Precision, RunConfig};
use crate::error::{Error, Result};
use crate::network::ModelConfig;

/// Parameter storage of a network at a given precision.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub precision: Precision,
    pub synapses: usize,
    /// Weight plus metaplasticity parameter.
    pub bits_per_synapse: u32,
    pub synapse_bytes: usize,
    pub feedback_bytes: usize,
    pub neuron_state_bytes: usize,
    pub total_bytes: usize,
}

impl MemoryReport {
    pub fn new(m: &ModelConfig, precision: Precision) -> Self {
        let word = precision.word_bits() as usize / 8;
        let trace = match precision {
            Precision::Float => 4,
            _ => 1,
        };
        let synapses = m.synapse_count();
        let bits_per_synapse = 2 * precision.word_bits();
        let synapse_bytes = synapses * bits_per_synapse as usize / 8;
        let feedback_bytes = m.n_output * m.n_hidden * word;
        // current, voltage and dendrite words, trace, refractory counter
        let lif = (m.n_hidden + m.n_output) * (3 * word + trace + 1);
        // current and voltage words, refractory counter
        let error = 2 * m.n_output * (2 * word + 1);
        let neuron_state_bytes = lif + error + m.n_input * trace;
        Self {
            precision,
            synapses,
            bits_per_synapse,
            synapse_bytes,
            feedback_bytes,
            neuron_state_bytes,
            total_bytes: synapse_bytes + feedback_bytes + neuron_state_bytes,
        }
    }
}

/// Result of one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    /// Accuracy on every task after training on the last one.
    pub per_task_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Row `i`: accuracy on tasks `0..=i` after training on task `i`.
    pub accuracy_history: Vec<Vec<f64>>,
    pub ledger: Option<CycleLedger>,
    pub train_samples: usize,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub precision: Precision,
    pub metaplasticity: bool,
    pub config_hash: String,
    pub seeds: Vec<SeedResult>,
    /// Per task, averaged over seeds.
    pub per_task_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    /// Summed over seeds when the accelerator engine ran.
    pub ledger: Option<CycleLedger>,
    pub memory: MemoryReport,
    pub config: RunConfig,
}

impl RunReport {
    pub fn new(command: &str, config: &RunConfig, seeds: Vec<SeedResult>) -> Self {
        let n_tasks = seeds.first().map_or(0, |s| s.per_task_accuracy.len());
        let per_task_accuracy = (0..n_tasks)
            .map(|t| mean(&seeds.iter().map(|s| s.per_task_accuracy[t]).collect::<Vec<_>>()))
            .collect();
        let means: Vec<f64> = seeds.iter().map(|s| s.mean_accuracy).collect();
        let ledger = seeds.iter().try_fold(CycleLedger::default(), |mut acc, s| {
            acc.merge(s.ledger.as_ref()?);
            Some(acc)
        });
        Self {
            command: command.to_string(),
            precision: config.precision,
            metaplasticity: config.model.metaplasticity,
            config_hash: config.hash(),
            per_task_accuracy,
            mean_accuracy: mean(&means),
            std_accuracy: std_dev(&means),
            ledger,
            memory: MemoryReport::new(&config.model, config.precision),
            config: config.clone(),
            seeds,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Whether the embedded hash matches both the embedded config and `cfg`.
    pub fn matches_config(&self, cfg: &RunConfig) -> bool {
        self.config_hash == self.config.hash() && self.config_hash == cfg.hash()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Wall-clock timings, kept out of the report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub command: String,
    pub wall_seconds: f64,
    pub per_seed_seconds: Vec<f64>,
}
