//! Command-line front end for the collaborative-MIMO experiment drivers.

use clap::{Parser, Subcommand};
use comimo::composite::Structure;
use comimo::harness::{
    emit_outputs, run_distance_sweep, run_histogram_experiment, run_snr_sweep,
    run_trajectory_experiment, ExperimentOutput, ScenarioSpec,
};
use comimo::optimize::{power_consumption, trial_count, Algorithm};
use comimo::spectrum::{secular_roots, singular_shift, SecularProblem};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "comimo", version, about = "Collaborative-MIMO relay simulation and phase optimization")]
struct Cli {
    /// Scenario config file (flat `key = value` format).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte-Carlo trial count override.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Output directory (records.csv, summary.json, plotdata/).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker thread count (defaults to the number of cores). Outputs are
    /// byte-identical at any setting.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Run the histogram experiment at the full published scale
    /// (q = 8, Nc = 4; 16.7M enumerations per channel draw).
    #[arg(long, global = true)]
    full_fig2: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// SE distribution of joint vs separate exhaustive search.
    Histogram,
    /// Blind-greedy percentile-rank trajectory vs the separate-search population.
    Trajectory,
    /// Mean SE vs SNR for the full system comparison set.
    SnrSweep,
    /// SNR/SE/RI/TP vs collaborator distance (needs path loss).
    DistanceSweep,
    /// Prints the reference secular-equation instance: roots, intervals, shifts.
    SecularDemo,
    /// Prints the search trial-count table and the relay power figures.
    Tables,
}

fn base_spec(cli: &Cli) -> Result<ScenarioSpec, comimo::Error> {
    let mut spec = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| comimo::Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            ScenarioSpec::parse_config(&text)?
        }
        None => ScenarioSpec::default(),
    };
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    if let Some(trials) = cli.trials {
        spec.trials = trials;
    }
    Ok(spec)
}

fn run_experiment(cli: &Cli) -> Result<Option<ExperimentOutput>, comimo::Error> {
    let mut spec = base_spec(cli)?;
    let output = match cli.command {
        Command::Histogram => {
            if cli.full_fig2 {
                spec.q = 8;
                spec.nc = 4;
            } else if cli.config.is_none() {
                // Desk-scale default: 4 levels, 3 chains (4096 enumerations
                // per draw instead of 16.7M).
                spec.nc = 3;
            }
            Some(run_histogram_experiment(&spec)?)
        }
        Command::Trajectory => {
            if cli.config.is_none() {
                spec.q = 8;
            }
            Some(run_trajectory_experiment(&spec)?)
        }
        Command::SnrSweep => {
            if cli.config.is_none() {
                spec.q = 8;
            }
            Some(run_snr_sweep(&spec)?)
        }
        Command::DistanceSweep => {
            if cli.config.is_none() {
                spec.q = 8;
                spec.path_loss = true;
                spec.rho = 100.0;
                spec.co_ue_position = [1.0, 1.0, 1.0];
            }
            Some(run_distance_sweep(&spec)?)
        }
        Command::SecularDemo => {
            secular_demo();
            None
        }
        Command::Tables => {
            tables();
            None
        }
    };
    Ok(output)
}

fn secular_demo() {
    let problem = SecularProblem::new(vec![4.0, 3.0, 2.0, 1.0], vec![0.25; 4]).unwrap();
    let roots = secular_roots(&problem);
    let shifts = singular_shift(&problem, &roots);
    println!("secular equation: 1 + sum_i w_i / (d_i - x) = 0");
    println!("poles d (squared base singular values): {:?}", problem.poles());
    println!("weights w: {:?}", problem.weights());
    println!();
    println!("{:>4} {:>22} {:>18} {:>22} {:>22}", "i", "interval", "root x_i", "delta_i", "d_i + shift_i");
    let d = problem.poles();
    let sum_w: f64 = problem.weights().iter().sum();
    for (i, &root) in roots.values().iter().enumerate() {
        let interval = if i == 0 {
            format!("({}, {}]", d[0], d[0] + sum_w)
        } else {
            format!("({}, {})", d[i], d[i - 1])
        };
        println!(
            "{:>4} {:>22} {:>18.12} {:>22.12} {:>22.12}",
            i + 1,
            interval,
            root,
            shifts.deltas[i],
            d[i] + shifts.shifts[i]
        );
    }
}

fn tables() {
    println!("search trial counts (q = 8, Nc = 4, I = 2):");
    println!("  joint ES    {:>12}", trial_count(Algorithm::JointEs, 8, 4, 2));
    println!("  separate ES {:>12}", trial_count(Algorithm::SeparateEs, 8, 4, 2));
    println!("  blind greedy{:>12}", trial_count(Algorithm::Bg, 8, 4, 2));
    println!();
    println!("relay power consumption (mW):");
    for nc in [1usize, 4] {
        println!(
            "  Nc = {nc}: structure 1 = {:.1}, structure 2 = {:.1}",
            power_consumption(Structure::S1, nc),
            power_consumption(Structure::S2, nc)
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let pool = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(p) => Some(p),
            Err(e) => {
                eprintln!("error: failed to build thread pool: {e}");
                return ExitCode::FAILURE;
            }
        },
        None => None,
    };

    let run = || run_experiment(&cli);
    let result = match &pool {
        Some(p) => p.install(run),
        None => run(),
    };

    match result {
        Ok(Some(output)) => {
            if let Err(e) = emit_outputs(&output, &cli.out) {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
            println!(
                "{}: {} trials -> {}",
                output.name,
                output.records.rows.len(),
                cli.out.display()
            );
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
