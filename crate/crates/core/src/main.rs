use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use metaspike::arch::Layout;
use metaspike::config::{Precision, RunConfig};
use metaspike::dataflow;
use metaspike::experiment::{self, Dataset, ModelSnapshot};
use metaspike::{Error, Result};

#[derive(Parser)]
#[command(name = "metaspike", version, about = "Spiking continual-learning accelerator simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train over the Split-MNIST task sequence and report accuracies.
    Train(Common),
    /// Evaluate the snapshots written by a previous train run.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Directory of the train run (defaults to --out).
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Compare AER latency against systolic OS/WS/IS baselines.
    BenchDataflow(Common),
    /// Replay one training workload in co-located and split layout.
    BenchMemory(Common),
    /// Parameter memory footprint at every precision.
    ReportMemory(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// First seed (overrides the configuration).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// fxp16, fxp32 or float.
    #[arg(long)]
    precision: Option<Precision>,
    #[arg(long)]
    no_metaplasticity: bool,
    /// co-located or split.
    #[arg(long)]
    layout: Option<Layout>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(p) = self.precision {
            cfg.precision = p;
        }
        if self.no_metaplasticity {
            cfg.model.metaplasticity = false;
        }
        if let Some(l) = self.layout {
            cfg.arch.layout = l;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn dataset(cfg: &RunConfig) -> Result<Dataset> {
    eprintln!("loading MNIST from {}", cfg.data.path.display());
    Dataset::load(&cfg.data.path)
}

fn save_config(out: &Path, cfg: &RunConfig) -> Result<()> {
    experiment::write_text(&experiment::out_path(out, "config.toml")?, &cfg.to_toml())
}

fn train(c: &Common) -> Result<()> {
    let cfg = c.config()?;
    let data = dataset(&cfg)?;
    eprintln!(
        "training {} seed(s), {} precision, metaplasticity {}",
        cfg.seeds,
        cfg.precision,
        if cfg.model.metaplasticity { "on" } else { "off" }
    );
    let (report, snaps, timing) = experiment::train(&cfg, &data)?;
    save_config(&c.out, &cfg)?;
    experiment::write_json(&experiment::out_path(&c.out, "report.json")?, &report)?;
    experiment::write_json(&experiment::out_path(&c.out, "timing.json")?, &timing)?;
    experiment::write_accuracy_csv(&report, &experiment::out_path(&c.out, "accuracy.csv")?)?;
    if let Some(ledger) = &report.ledger {
        let f = std::fs::File::create(experiment::out_path(&c.out, "ledger.csv")?)
            .map_err(|e| Error::Config(format!("ledger.csv: {e}")))?;
        ledger.write_csv(f)?;
    }
    let dir = c.out.join("snapshots");
    for s in &snaps {
        experiment::write_json(&experiment::out_path(&dir, &format!("model_seed{}.json", s.seed))?, s)?;
    }
    print_accuracy(&report);
    Ok(())
}

fn print_accuracy(r: &metaspike::report::RunReport) {
    for s in &r.seeds {
        let tasks: Vec<String> = s.per_task_accuracy.iter().map(|a| format!("{:.1}", 100.0 * a)).collect();
        println!("seed {:>3}: [{}] mean {:.2}%", s.seed, tasks.join(", "), 100.0 * s.mean_accuracy);
    }
    println!(
        "mean accuracy {:.2}% +- {:.2} over {} seed(s)",
        100.0 * r.mean_accuracy,
        100.0 * r.std_accuracy,
        r.seeds.len()
    );
}

fn eval(c: &Common, from: Option<&Path>) -> Result<()> {
    let cfg = c.config()?;
    let dir = from.unwrap_or(&c.out).join("snapshots");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| Error::Config(format!("cannot read snapshots in {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("no snapshots in {}", dir.display())));
    }
    let snaps = paths.iter().map(ModelSnapshot::load).collect::<Result<Vec<_>>>()?;
    let data = dataset(&cfg)?;
    let (report, timing) = experiment::eval(&cfg, &data, &snaps)?;
    experiment::write_json(&experiment::out_path(&c.out, "eval_report.json")?, &report)?;
    experiment::write_json(&experiment::out_path(&c.out, "eval_timing.json")?, &timing)?;
    print_accuracy(&report);
    Ok(())
}

fn bench_dataflow(c: &Common) -> Result<()> {
    c.config()?;
    let rows = experiment::bench_dataflow()?;
    let csv_path = experiment::out_path(&c.out, "dataflow.csv")?;
    let f = std::fs::File::create(&csv_path).map_err(|e| Error::Config(format!("{}: {e}", csv_path.display())))?;
    dataflow::write_csv(&rows, f)?;
    experiment::write_json(&experiment::out_path(&c.out, "dataflow.json")?, &rows)?;
    dataflow::write_csv(&rows, std::io::stdout())?;
    Ok(())
}

fn bench_memory(c: &Common) -> Result<()> {
    let cfg = c.config()?;
    let data = dataset(&cfg)?;
    let samples = experiment::bench_workload(&cfg, &data)?;
    eprintln!("replaying {} training samples in both layouts", samples.len());
    let b = experiment::bench_memory(&cfg, &samples)?;
    experiment::write_memory_bench_csv(&b, &experiment::out_path(&c.out, "memory_bench.csv")?)?;
    experiment::write_json(&experiment::out_path(&c.out, "memory_bench.json")?, &b)?;
    let (co, sp) = (b.co_located.ledger.total(), b.split.ledger.total());
    println!("layout      cycles        reads       writes");
    println!("co-located  {:<12}  {:<11}  {}", co.cycles, co.reads, co.writes);
    println!("split       {:<12}  {:<11}  {}", sp.cycles, sp.reads, sp.writes);
    println!(
        "update-phase reads split/co-located {:.3}, halved on every sample: {}",
        b.update_read_ratio, b.update_reads_halved_every_sample
    );
    println!("training cycle reduction {:.1}%", 100.0 * b.cycle_reduction);
    Ok(())
}

fn report_memory(c: &Common) -> Result<()> {
    let cfg = c.config()?;
    let reports = experiment::report_memory(&cfg);
    experiment::write_memory_csv(&reports, &experiment::out_path(&c.out, "memory.csv")?)?;
    experiment::write_json(&experiment::out_path(&c.out, "memory.json")?, &reports)?;
    println!("precision  synapses  synapse_bytes  total_bytes");
    for r in &reports {
        println!("{:<9}  {:<8}  {:<13}  {}", r.precision.name(), r.synapses, r.synapse_bytes, r.total_bytes);
    }
    Ok(())
}

fn exit_code(e: &Error) -> (u8, &'static str) {
    match e {
        Error::Config(_) => (2, "config"),
        Error::Ingestion { .. } => (3, "ingestion"),
        Error::Io { .. } => (3, "io"),
        Error::Simulation(_) => (4, "simulation"),
        Error::Json(_) | Error::Csv(_) => (5, "output"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(c) => train(c),
        Command::Eval { common, from } => eval(common, from.as_deref()),
        Command::BenchDataflow(c) => bench_dataflow(c),
        Command::BenchMemory(c) => bench_memory(c),
        Command::ReportMemory(c) => report_memory(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = exit_code(&e);
            eprintln!("error: {e}");
            let diag = serde_json::json!({ "error": kind, "message": e.to_string(), "exit_code": code });
            eprintln!("{diag}");
            ExitCode::from(code)
        }
    }
}
