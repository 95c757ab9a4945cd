use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pose_attack::evaluation::{align_origin, parse_kitti_poses, rpe};
use pose_attack::harness::{
    generate_synthetic_sequence, load_config, read_results, run_experiment, write_synthetic_sequence,
    ResultRecord, SyntheticSpec,
};
use pose_attack::models::ToyWeights;
use pose_attack::Result;

#[derive(Parser)]
#[command(name = "pose-attack", version, about = "Adversarial attacks on monocular pose and depth models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (attack, epsilon) of an experiment config.
    Attack {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's worker count (0 = one per core).
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Relative pose error of a KITTI pose file against a reference.
    Evaluate {
        #[arg(long)]
        estimated: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value_t = 1)]
        delta: usize,
    },
    /// Table of a results.csv (or of the results.csv inside a directory).
    Report { results: PathBuf },
    /// Writes seeded toy model weights.
    GenToyWeights {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Frame height the pose model accepts.
        #[arg(long, default_value_t = 32)]
        height: usize,
        /// Frame width the pose model accepts.
        #[arg(long, default_value_t = 32)]
        width: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Renders a textured sequence with known motion, depth and poses.
    GenSyntheticSequence {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        frames: usize,
        #[arg(long, default_value_t = 32)]
        height: usize,
        #[arg(long, default_value_t = 32)]
        width: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        forward_step: f64,
        #[arg(long, default_value_t = 0.05)]
        yaw_step: f64,
        #[arg(long, default_value_t = 5.0)]
        wall_depth: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Pose,
    Depth,
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

fn print_table(records: &[ResultRecord]) {
    println!(
        "{:<14} {:>7} {:<10} {:>10} {:>10} {:>10} {:>10}  status",
        "attack", "eps", "model", "rpe_m", "ratio_m", "ratio_deg", "depth_rat"
    );
    for r in records {
        println!(
            "{:<14} {:>7} {:<10} {:>10} {:>10} {:>10} {:>10}  {}",
            r.attack,
            r.epsilon,
            r.model,
            fmt(r.rpe_m),
            fmt(r.ratio_m),
            fmt(r.ratio_deg),
            fmt(r.depth_rmse_ratio),
            r.status
        );
    }
}

fn attack(config: &Path, out: Option<PathBuf>, parallelism: Option<usize>) -> Result<i32> {
    let mut cfg = load_config(config)?;
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    if let Some(p) = parallelism {
        cfg.parallelism = p;
    }
    let outcome = run_experiment(&cfg)?;
    print_table(&outcome.records);
    eprintln!("results written to {}", outcome.output_dir.display());
    Ok(outcome.exit_code())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Attack { config, out, parallelism } => attack(&config, out, parallelism),
        Command::Evaluate { estimated, reference, delta } => {
            let reference = parse_kitti_poses(&reference)?;
            let estimated = align_origin(&parse_kitti_poses(&estimated)?, &reference);
            let report = rpe(&estimated, &reference, delta)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
        Command::Report { results } => {
            let path = if results.is_dir() { results.join("results.csv") } else { results };
            print_table(&read_results(&path)?);
            Ok(0)
        }
        Command::GenToyWeights { kind, seed, height, width, out } => {
            let weights = match kind {
                Kind::Pose => ToyWeights::seeded_pose(seed, height, width),
                Kind::Depth => ToyWeights::seeded_depth(seed),
            };
            weights.save(&out)?;
            Ok(0)
        }
        Command::GenSyntheticSequence { out, frames, height, width, seed, forward_step, yaw_step, wall_depth } => {
            let spec = SyntheticSpec { frames, height, width, seed, forward_step, yaw_step, wall_depth };
            write_synthetic_sequence(&generate_synthetic_sequence(&spec)?, &out)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
