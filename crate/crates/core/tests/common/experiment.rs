//! Synthetic sequences on disk and configs that run on them.

use std::path::{Path, PathBuf};

use pose_attack::attack::AttackKind;
use pose_attack::harness::{generate_synthetic_sequence, write_synthetic_sequence, ExperimentConfig, SyntheticSpec};

/// Writes the default synthetic sequence at `size x size` into `dir/seq`.
pub fn write_sequence(dir: &Path, frames: usize, size: usize) -> PathBuf {
    let seq = dir.join("seq");
    let spec = SyntheticSpec {
        frames,
        height: size,
        width: size,
        ..SyntheticSpec::default()
    };
    write_synthetic_sequence(&generate_synthetic_sequence(&spec).unwrap(), &seq).unwrap();
    seq
}

pub fn config(seq: &Path, out: &Path, attacks: &[AttackKind], epsilons: &[f64]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_sequence(seq);
    cfg.sequence_id = "synthetic".into();
    cfg.ground_truth = Some(seq.join("poses.txt"));
    cfg.ground_truth_depth = Some(seq.join("depth"));
    cfg.attacks = attacks.to_vec();
    cfg.epsilons = epsilons.to_vec();
    cfg.output_dir = out.to_path_buf();
    cfg
}

/// Every file under `dir`, relative path and bytes, sorted by path.
pub fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
