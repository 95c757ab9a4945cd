//! Full experiment on a rendered synthetic sequence: write frames, depth
//! and poses, run an attack grid, and read the result table back.

use pose_attack::attack::AttackKind;
use pose_attack::harness::{
    generate_synthetic_sequence, read_results, run_experiment, write_synthetic_sequence, ExperimentConfig,
    SyntheticSpec,
};

fn main() -> pose_attack::Result<()> {
    let root = std::env::temp_dir().join("pose-attack-experiment");
    let seq_dir = root.join("synthetic");
    write_synthetic_sequence(&generate_synthetic_sequence(&SyntheticSpec::default())?, &seq_dir)?;

    let mut cfg = ExperimentConfig::for_sequence(&seq_dir);
    cfg.sequence_id = "synthetic".into();
    cfg.ground_truth = Some(seq_dir.join("poses.txt"));
    cfg.ground_truth_depth = Some(seq_dir.join("depth"));
    cfg.attacks = vec![AttackKind::Untargeted, AttackKind::InvertYaw];
    cfg.epsilons = vec![1.0, 4.0];
    cfg.calibrate = true;
    cfg.parallelism = 0;
    cfg.output_dir = root.join("results");
    println!("{}", cfg.dump()?);

    let outcome = run_experiment(&cfg)?;
    for r in read_results(&outcome.output_dir.join("results.csv"))? {
        println!(
            "{:<11} eps {:>3}: RPE ratio {:.3} m, {:.3} deg",
            r.attack,
            r.epsilon,
            r.ratio_m.unwrap_or(f64::NAN),
            r.ratio_deg.unwrap_or(f64::NAN)
        );
    }
    println!("exit code {}, outputs in {}", outcome.exit_code(), outcome.output_dir.display());
    Ok(())
}
