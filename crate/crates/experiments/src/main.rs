//! Command-line front end: single training runs, parameter sweeps and
//! result summaries.
//!
//! Exit codes: 0 success, 1 usage error, 2 configuration/input error,
//! 3 trend verdict failure (`summarize` only).

use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use swarm_mec::trainer::Mode;
use swarm_mec::{SimConfig, Trainer};
use swarm_mec_experiments::{
    load_config, load_sweep_spec, parse_csv, render, rows_to_csv, run_sweep, summarize,
};

#[derive(Parser)]
#[command(
    name = "swarm-mec",
    about = "UAV swarm mobile-edge-computing simulator and training harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write its metrics.
    Run(RunArgs),
    /// Run a sweep specification across values, modes and seeds.
    Sweep(SweepArgs),
    /// Aggregate a result CSV and check the expected trend.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (defaults apply when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Training mode.
    #[arg(long, default_value = "rldc")]
    mode: String,
    /// Override the number of training episodes.
    #[arg(long)]
    loops: Option<u32>,
    /// Override the slots per episode.
    #[arg(long)]
    slots: Option<u32>,
    /// Write a per-slot trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep specification file.
    #[arg(long)]
    spec: PathBuf,
    /// Base configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Parallel cells (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Result CSV produced by `run` or `sweep`.
    csv: PathBuf,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Summarize(args) => summarize_cmd(args),
    }
}

fn load_base_config(path: &Option<PathBuf>) -> Result<SimConfig, String> {
    match path {
        Some(p) => load_config(p).map_err(|e| e.to_string()),
        None => Ok(SimConfig::default()),
    }
}

fn run(args: RunArgs) -> i32 {
    let mut cfg = match load_base_config(&args.config) {
        Ok(c) => c,
        Err(e) => return config_error(&e),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(loops) = args.loops {
        cfg.episodes = loops;
    }
    if let Some(slots) = args.slots {
        cfg.slots_per_episode = slots;
    }
    let mode: Mode = match args.mode.parse() {
        Ok(m) => m,
        Err(e) => return config_error(&e),
    };
    if let Err(e) = cfg.validate() {
        return config_error(&e.to_string());
    }
    if let Err(e) = fs::create_dir_all(&args.out) {
        return config_error(&format!("cannot create {}: {e}", args.out.display()));
    }

    let mut trainer = match Trainer::new(&cfg, mode) {
        Ok(t) => t,
        Err(e) => return config_error(&e.to_string()),
    };
    if let Some(path) = &args.trace {
        match fs::File::create(path) {
            Ok(f) => trainer.set_trace(Box::new(std::io::BufWriter::new(f))),
            Err(e) => return config_error(&format!("cannot create {}: {e}", path.display())),
        }
    }
    let start = std::time::Instant::now();
    let out = trainer.train();
    let wall = start.elapsed().as_secs_f64();

    let row = swarm_mec_experiments::ResultRow {
        param: "none".into(),
        value: 0.0,
        mode: mode.as_str().into(),
        seed: cfg.seed,
        mean_effi: out.mean_effi,
        sum_over_loop: out.sum_over_loop,
        bits_served: out.bits_served,
        joules_total: out.energy_j,
        wall_s: wall,
    };
    let results = args.out.join("results.csv");
    if let Err(e) = fs::write(&results, rows_to_csv(std::slice::from_ref(&row))) {
        return config_error(&format!("cannot write {}: {e}", results.display()));
    }
    let episodes_path = args.out.join("episodes.csv");
    let mut episodes = String::from(
        "episode,effi_sum,effi_mean,bits_served,energy_j,depot_visits,reclusters\n",
    );
    for e in &out.episodes {
        episodes.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.episode,
            e.effi_sum,
            e.effi_mean,
            e.bits_served,
            e.energy_j,
            e.depot_visits,
            e.reclusters
        ));
    }
    if let Err(e) = fs::write(&episodes_path, episodes) {
        return config_error(&format!("cannot write {}: {e}", episodes_path.display()));
    }
    println!(
        "mode {} seed {}: mean_effi {:.4} bit/J, sum/loop {:.2}, served {:.3e} bits, \
         energy {:.3e} J, depot visits {}, wall {:.2}s",
        mode, cfg.seed, out.mean_effi, out.sum_over_loop, out.bits_served, out.energy_j,
        out.depot_visits, wall
    );
    0
}

fn sweep(args: SweepArgs) -> i32 {
    let base = match load_base_config(&args.config) {
        Ok(c) => c,
        Err(e) => return config_error(&e),
    };
    let spec = match load_sweep_spec(&args.spec) {
        Ok(s) => s,
        Err(e) => return config_error(&e.to_string()),
    };
    if let Err(e) = fs::create_dir_all(&args.out) {
        return config_error(&format!("cannot create {}: {e}", args.out.display()));
    }
    let rows = match run_sweep(&spec, &base, args.jobs) {
        Ok(r) => r,
        Err(e) => return config_error(&e.to_string()),
    };
    let path = args.out.join("sweep.csv");
    if let Err(e) = fs::write(&path, rows_to_csv(&rows)) {
        return config_error(&format!("cannot write {}: {e}", path.display()));
    }
    println!("{} rows -> {}", rows.len(), path.display());
    0
}

fn summarize_cmd(args: SummarizeArgs) -> i32 {
    let text = match fs::read_to_string(&args.csv) {
        Ok(t) => t,
        Err(e) => return config_error(&format!("cannot read {}: {e}", args.csv.display())),
    };
    let rows = match parse_csv(&text) {
        Ok(r) => r,
        Err(e) => return config_error(&e.to_string()),
    };
    let summary = summarize(&rows);
    print!("{}", render(&summary));
    if summary.gate_ok {
        0
    } else {
        3
    }
}

fn config_error(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    2
}
