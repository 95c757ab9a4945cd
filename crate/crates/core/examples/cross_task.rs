//! Cross-task evaluation: frames attacked through the pose network are fed
//! to the depth network, and depth attacks push toward flipped depth maps.

use pose_attack::attack::{
    attack_sequence, cross_task_depth_inputs, AttackBudget, AttackKind, AttackModels, AttackSpec,
};
use pose_attack::evaluation::depth_rmse;
use pose_attack::harness::{generate_synthetic_sequence, SyntheticSpec};
use pose_attack::losses::LossWeights;
use pose_attack::models::{predict_depth, ToyDepthModel, ToyPoseModel, ToyWeights};

fn main() -> pose_attack::Result<()> {
    let seq = generate_synthetic_sequence(&SyntheticSpec {
        height: 16,
        width: 16,
        ..SyntheticSpec::default()
    })?;
    let pose = ToyPoseModel::new(ToyWeights::seeded_pose(3, 16, 16))?;
    let depth = ToyDepthModel::new(ToyWeights::seeded_depth(4))?;
    let models = AttackModels {
        pose: &pose,
        depth: Some(&depth),
    };
    let clean = seq
        .frames
        .iter()
        .map(|f| predict_depth(&depth, f))
        .collect::<pose_attack::Result<Vec<_>>>()?;

    for kind in [AttackKind::InvertPose, AttackKind::DepthFlipH, AttackKind::DepthFlipV] {
        let spec = AttackSpec::new(kind, AttackBudget::from_epsilon(4.0)?);
        let pairs = attack_sequence(&spec, &seq.frames, models, &LossWeights::default(), &seq.intrinsics, false)?;
        // One depth input per frame of the sequence.
        let inputs = cross_task_depth_inputs(&pairs)?;
        let mut clean_err = 0.0;
        let mut adv_err = 0.0;
        for ((frame, truth), clean_map) in inputs.iter().zip(&seq.depths).zip(&clean) {
            clean_err += depth_rmse(clean_map, truth)?;
            adv_err += depth_rmse(&predict_depth(&depth, frame)?, truth)?;
        }
        println!(
            "{:<12} {} depth inputs, RMSE ratio {:.4}",
            kind.name(),
            inputs.len(),
            adv_err / clean_err
        );
    }
    Ok(())
}
