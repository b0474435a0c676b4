//! The commands behind the command-line tool: continual-learning runs,
//! snapshot evaluation, dataflow and memory-layout benches, and the memory
//! footprint report.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arch::{Accelerator, CycleLedger, Layout, Phase};
use crate::config::{Engine, Precision, RunConfig};
use crate::data::{build_stream, encode_poisson, load_mnist, rescale_16, SampleKey, TaskStream};
use crate::dataflow;
use crate::error::{Error, Result};
use crate::fxp::{Scalar, Q15_16, Q7_8};
use crate::learning::Synapse;
use crate::network::{Learner, ModelConfig, Network, Parameters, SampleOutcome};
use crate::report::{mean, MemoryReport, RunReport, SeedResult, Timing};

/// Rescaled MNIST images and labels.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub train_images: Vec<Vec<u8>>,
    pub train_labels: Vec<u8>,
    pub test_images: Vec<Vec<u8>>,
    pub test_labels: Vec<u8>,
}

impl Dataset {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let m = load_mnist(dir)?;
        let images = |s: &crate::data::MnistSplit| (0..s.len()).map(|i| rescale_16(s.image(i))).collect();
        Ok(Self {
            train_images: images(&m.train),
            test_images: images(&m.test),
            train_labels: m.train.labels,
            test_labels: m.test.labels,
        })
    }
}

/// Either execution engine behind one interface.
enum Model<S: Scalar> {
    Arch(Box<Accelerator<S>>),
    Reference(Box<Network<S>>),
}

impl<S: Scalar> Model<S> {
    fn new(cfg: &RunConfig, p: &Parameters<S>) -> Result<Self> {
        Ok(match cfg.engine {
            Engine::Arch => Model::Arch(Box::new(Accelerator::from_parameters(&cfg.model, &cfg.arch, p)?)),
            Engine::Reference => Model::Reference(Box::new(Network::from_parameters(&cfg.model, p.clone())?)),
        })
    }

    fn parameters(&self) -> Parameters<S> {
        match self {
            Model::Arch(a) => a.parameters(),
            Model::Reference(n) => n.parameters(),
        }
    }

    fn ledger(&self) -> Option<CycleLedger> {
        match self {
            Model::Arch(a) => Some(a.ledger.clone()),
            Model::Reference(_) => None,
        }
    }
}

impl<S: Scalar> Learner for Model<S> {
    fn run_sample(&mut self, frames: &[Vec<bool>], label: usize, learn: bool) -> Result<SampleOutcome> {
        match self {
            Model::Arch(a) => a.run_sample(frames, label, learn),
            Model::Reference(n) => n.run_sample(frames, label, learn),
        }
    }
}

fn task_label(stream: &TaskStream, task: usize, digit: u8) -> Result<usize> {
    stream.tasks[task]
        .label_of(digit)
        .ok_or_else(|| Error::Simulation(format!("digit {digit} does not belong to task {task}")))
}

fn evaluate<S: Scalar>(
    model: &mut Model<S>,
    cfg: &RunConfig,
    data: &Dataset,
    stream: &TaskStream,
    tasks: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut accs = Vec::with_capacity(tasks);
    for t in 0..tasks {
        let mut correct = 0usize;
        for &i in &stream.tasks[t].test {
            let label = task_label(stream, t, data.test_labels[i])?;
            let frames = encode_poisson(&data.test_images[i], cfg.data.timesteps, cfg.data.r_max, seed, SampleKey::test(i));
            correct += (model.run_sample(&frames, label, false)?.prediction == label) as usize;
        }
        accs.push(correct as f64 / stream.tasks[t].test.len() as f64);
    }
    Ok(accs)
}

/// Trained parameters of one seed, stored bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub precision: Precision,
    pub seed: u64,
    pub model: ModelConfig,
    /// Packed `{w | m}` words.
    pub hidden: Vec<u64>,
    pub output: Vec<u64>,
    pub feedback: Vec<u64>,
}

impl ModelSnapshot {
    pub fn capture<S: Scalar>(precision: Precision, seed: u64, model: &ModelConfig, p: &Parameters<S>) -> Self {
        Self {
            precision,
            seed,
            model: model.clone(),
            hidden: p.hidden.iter().map(|s| s.pack()).collect(),
            output: p.output.iter().map(|s| s.pack()).collect(),
            feedback: p.feedback.iter().map(|r| r.to_bits()).collect(),
        }
    }

    pub fn parameters<S: Scalar>(&self) -> Parameters<S> {
        Parameters {
            hidden: self.hidden.iter().map(|&w| Synapse::unpack(w)).collect(),
            output: self.output.iter().map(|&w| Synapse::unpack(w)).collect(),
            feedback: self.feedback.iter().map(|&b| S::from_bits(b)).collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Train one seed over the task sequence and evaluate every task at the end.
pub fn train_seed<S: Scalar>(cfg: &RunConfig, data: &Dataset, seed: u64) -> Result<(SeedResult, ModelSnapshot)> {
    let stream = build_stream(&data.train_labels, &data.test_labels, seed, cfg.data.n_train, cfg.data.n_test)?;
    let init = crate::network::InitialParams::draw(&cfg.model, seed).convert::<S>();
    let mut model = Model::new(cfg, &init)?;
    let mut history = Vec::new();
    let mut samples = 0;
    for (t, task) in stream.tasks.iter().enumerate() {
        for &i in &task.train {
            let label = task_label(&stream, t, data.train_labels[i])?;
            let frames = encode_poisson(&data.train_images[i], cfg.data.timesteps, cfg.data.r_max, seed, SampleKey::train(i));
            model.run_sample(&frames, label, true)?;
            samples += 1;
        }
        if cfg.track_history && t + 1 < stream.tasks.len() {
            history.push(evaluate(&mut model, cfg, data, &stream, t + 1, seed)?);
        }
    }
    let ledger = model.ledger();
    let fin = evaluate(&mut model, cfg, data, &stream, stream.tasks.len(), seed)?;
    history.push(fin.clone());
    let snapshot = ModelSnapshot::capture(cfg.precision, seed, &cfg.model, &model.parameters());
    let result = SeedResult {
        seed,
        mean_accuracy: mean(&fin),
        per_task_accuracy: fin,
        accuracy_history: history,
        ledger,
        train_samples: samples,
    };
    Ok((result, snapshot))
}

/// Evaluate a stored snapshot on the test split of its seed.
pub fn eval_snapshot<S: Scalar>(cfg: &RunConfig, data: &Dataset, snap: &ModelSnapshot) -> Result<SeedResult> {
    if snap.precision != cfg.precision {
        return Err(Error::Config(format!(
            "snapshot precision {} differs from configured {}",
            snap.precision, cfg.precision
        )));
    }
    if snap.model != cfg.model {
        return Err(Error::Config("snapshot model parameters differ from the configuration".into()));
    }
    let stream = build_stream(&data.train_labels, &data.test_labels, snap.seed, cfg.data.n_train, cfg.data.n_test)?;
    let mut model = Model::new(cfg, &snap.parameters::<S>())?;
    let fin = evaluate(&mut model, cfg, data, &stream, stream.tasks.len(), snap.seed)?;
    Ok(SeedResult {
        seed: snap.seed,
        mean_accuracy: mean(&fin),
        per_task_accuracy: fin.clone(),
        accuracy_history: vec![fin],
        ledger: model.ledger(),
        train_samples: 0,
    })
}

fn pool(cfg: &RunConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Simulation(format!("thread pool: {e}")))
}

fn by_precision<T>(
    p: Precision,
    q16: impl FnOnce() -> Result<T>,
    q32: impl FnOnce() -> Result<T>,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    match p {
        Precision::Fxp16 => q16(),
        Precision::Fxp32 => q32(),
        Precision::Float => f(),
    }
}

/// Train every configured seed; results come back in seed order.
pub fn train(cfg: &RunConfig, data: &Dataset) -> Result<(RunReport, Vec<ModelSnapshot>, Timing)> {
    cfg.validate()?;
    let start = Instant::now();
    let runs: Vec<Result<(SeedResult, ModelSnapshot, f64)>> = pool(cfg)?.install(|| {
        cfg.seed_list()
            .into_par_iter()
            .map(|seed| {
                let t0 = Instant::now();
                let (r, s) = by_precision(
                    cfg.precision,
                    || train_seed::<Q7_8>(cfg, data, seed),
                    || train_seed::<Q15_16>(cfg, data, seed),
                    || train_seed::<f32>(cfg, data, seed),
                )?;
                Ok((r, s, t0.elapsed().as_secs_f64()))
            })
            .collect()
    });
    let mut results = Vec::new();
    let mut snaps = Vec::new();
    let mut per_seed_seconds = Vec::new();
    for run in runs {
        let (r, s, secs) = run?;
        results.push(r);
        snaps.push(s);
        per_seed_seconds.push(secs);
    }
    let timing = Timing {
        command: "train".into(),
        wall_seconds: start.elapsed().as_secs_f64(),
        per_seed_seconds,
    };
    Ok((RunReport::new("train", cfg, results), snaps, timing))
}

pub fn eval(cfg: &RunConfig, data: &Dataset, snaps: &[ModelSnapshot]) -> Result<(RunReport, Timing)> {
    cfg.validate()?;
    let start = Instant::now();
    let results: Result<Vec<SeedResult>> = pool(cfg)?.install(|| {
        snaps
            .par_iter()
            .map(|s| {
                by_precision(
                    cfg.precision,
                    || eval_snapshot::<Q7_8>(cfg, data, s),
                    || eval_snapshot::<Q15_16>(cfg, data, s),
                    || eval_snapshot::<f32>(cfg, data, s),
                )
            })
            .collect()
    });
    let timing = Timing {
        command: "eval".into(),
        wall_seconds: start.elapsed().as_secs_f64(),
        per_seed_seconds: Vec::new(),
    };
    Ok((RunReport::new("eval", cfg, results?), timing))
}

/// Ledgers of one layout over a training workload, with per-sample
/// update-phase reads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutRun {
    pub layout: Layout,
    pub ledger: CycleLedger,
    pub update_reads_per_sample: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryBench {
    pub samples: usize,
    pub co_located: LayoutRun,
    pub split: LayoutRun,
    /// Split update reads over co-located update reads.
    pub update_read_ratio: f64,
    pub update_reads_halved_every_sample: bool,
    /// `1 - co-located / split` total training cycles.
    pub cycle_reduction: f64,
}

impl MemoryBench {
    pub fn new(co_located: LayoutRun, split: LayoutRun) -> Self {
        let co_reads = co_located.ledger.update.reads;
        let split_reads = split.ledger.update.reads;
        let halved = co_located.update_reads_per_sample.len() == split.update_reads_per_sample.len()
            && co_located
                .update_reads_per_sample
                .iter()
                .zip(&split.update_reads_per_sample)
                .all(|(c, s)| 2 * c == *s);
        let co_total = co_located.ledger.total().cycles as f64;
        let split_total = split.ledger.total().cycles as f64;
        Self {
            samples: co_located.update_reads_per_sample.len(),
            update_read_ratio: if co_reads == 0 { 1.0 } else { split_reads as f64 / co_reads as f64 },
            update_reads_halved_every_sample: halved,
            cycle_reduction: if split_total == 0.0 { 0.0 } else { 1.0 - co_total / split_total },
            co_located,
            split,
        }
    }
}

/// Train the same sample sequence under one layout on the accelerator.
pub fn run_layout<S: Scalar>(
    cfg: &RunConfig,
    layout: Layout,
    samples: &[(Vec<Vec<bool>>, usize)],
    seed: u64,
) -> Result<LayoutRun> {
    let arch = crate::arch::ArchConfig { layout, ..cfg.arch.clone() };
    let mut acc = Accelerator::<S>::new(&cfg.model, &arch, seed)?;
    let mut per_sample = Vec::with_capacity(samples.len());
    for (frames, label) in samples {
        let before = acc.ledger.phase(Phase::Update).reads;
        acc.run_sample(frames, *label, true)?;
        per_sample.push(acc.ledger.phase(Phase::Update).reads - before);
    }
    Ok(LayoutRun {
        layout,
        ledger: acc.ledger.clone(),
        update_reads_per_sample: per_sample,
    })
}

/// The first `cfg.bench_samples` training samples of the first seed, taken
/// round-robin across tasks so every task is represented.
pub fn bench_workload(cfg: &RunConfig, data: &Dataset) -> Result<Vec<(Vec<Vec<bool>>, usize)>> {
    let seed = cfg.seed;
    let stream = build_stream(&data.train_labels, &data.test_labels, seed, cfg.data.n_train, cfg.data.n_test)?;
    let mut out = Vec::with_capacity(cfg.bench_samples);
    let n_tasks = stream.tasks.len();
    for k in 0..cfg.bench_samples {
        let t = k * n_tasks / cfg.bench_samples.max(1);
        let task = &stream.tasks[t];
        let i = task.train[k % task.train.len()];
        let label = task_label(&stream, t, data.train_labels[i])?;
        let frames = encode_poisson(&data.train_images[i], cfg.data.timesteps, cfg.data.r_max, seed, SampleKey::train(i));
        out.push((frames, label));
    }
    Ok(out)
}

pub fn bench_memory(cfg: &RunConfig, samples: &[(Vec<Vec<bool>>, usize)]) -> Result<MemoryBench> {
    cfg.validate()?;
    let run = |layout| {
        by_precision(
            cfg.precision,
            || run_layout::<Q7_8>(cfg, layout, samples, cfg.seed),
            || run_layout::<Q15_16>(cfg, layout, samples, cfg.seed),
            || run_layout::<f32>(cfg, layout, samples, cfg.seed),
        )
    };
    Ok(MemoryBench::new(run(Layout::CoLocated)?, run(Layout::Split)?))
}

pub fn write_memory_bench_csv(b: &MemoryBench, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["layout", "phase", "cycles", "reads", "writes", "bank_conflicts", "fifo_peak", "saturations"])?;
    for run in [&b.co_located, &b.split] {
        let total = run.ledger.total();
        let rows = Phase::ALL
            .iter()
            .map(|p| (p.name(), *run.ledger.phase(*p)))
            .chain(std::iter::once(("total", total)));
        for (name, c) in rows {
            w.write_record([
                run.layout.name().to_string(),
                name.to_string(),
                c.cycles.to_string(),
                c.reads.to_string(),
                c.writes.to_string(),
                c.bank_conflicts.to_string(),
                c.fifo_peak.to_string(),
                c.saturations.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Footprint of the configured network at every precision.
pub fn report_memory(cfg: &RunConfig) -> Vec<MemoryReport> {
    Precision::ALL.iter().map(|&p| MemoryReport::new(&cfg.model, p)).collect()
}

pub fn write_memory_csv(reports: &[MemoryReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "precision",
        "synapses",
        "bits_per_synapse",
        "synapse_bytes",
        "feedback_bytes",
        "neuron_state_bytes",
        "total_bytes",
    ])?;
    for r in reports {
        w.write_record([
            r.precision.name().to_string(),
            r.synapses.to_string(),
            r.bits_per_synapse.to_string(),
            r.synapse_bytes.to_string(),
            r.feedback_bytes.to_string(),
            r.neuron_state_bytes.to_string(),
            r.total_bytes.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_accuracy_csv(report: &RunReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["seed", "after_task", "task", "accuracy"])?;
    for s in &report.seeds {
        let n = s.accuracy_history.len();
        let offset = s.per_task_accuracy.len() - n;
        for (row, accs) in s.accuracy_history.iter().enumerate() {
            for (task, a) in accs.iter().enumerate() {
                w.write_record([s.seed.to_string(), (row + offset).to_string(), task.to_string(), format!("{a:.4}")])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Create `dir` and return the path of `name` inside it.
pub fn out_path(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir.join(name))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

pub fn bench_dataflow() -> Result<Vec<dataflow::CompareRow>> {
    let (geoms, shapes) = dataflow::default_sweep();
    dataflow::compare(&geoms, &shapes)
}
