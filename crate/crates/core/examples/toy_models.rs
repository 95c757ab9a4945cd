//! Seeded toy pose and depth networks: prediction and the weight file.

use pose_attack::harness::{generate_synthetic_sequence, SyntheticSpec};
use pose_attack::models::{predict_depth, predict_pose, ToyDepthModel, ToyPoseModel, ToyWeights};

fn main() -> pose_attack::Result<()> {
    let seq = generate_synthetic_sequence(&SyntheticSpec {
        height: 16,
        width: 16,
        ..SyntheticSpec::default()
    })?;
    let pose = ToyPoseModel::new(ToyWeights::seeded_pose(42, 16, 16))?;
    let depth = ToyDepthModel::new(ToyWeights::seeded_depth(43))?;

    let p = predict_pose(&pose, &seq.frames[0], &seq.frames[1])?;
    println!("pose [tx ty tz roll pitch yaw] = {:?}", p.to_array());
    let d = predict_depth(&depth, &seq.frames[0])?;
    let (lo, hi) = d.data().iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    println!("depth range [{lo:.4}, {hi:.4}]");

    let dir = std::env::temp_dir().join("pose-attack-toy-models");
    std::fs::create_dir_all(&dir).map_err(|e| pose_attack::Error::Input(e.to_string()))?;
    let path = dir.join("pose.pawt");
    pose.weights().save(&path)?;
    let reloaded = ToyPoseModel::new(ToyWeights::load(&path)?)?;
    assert_eq!(predict_pose(&reloaded, &seq.frames[0], &seq.frames[1])?, p);
    println!("weights round-trip through {}", path.display());
    Ok(())
}
