//! Targeted attacks: invert the yaw, reverse the forward motion, or invert
//! the whole relative pose.

use pose_attack::attack::{attack_pair, AttackBudget, AttackKind, AttackModels, AttackSpec};
use pose_attack::harness::{generate_synthetic_sequence, SyntheticSpec};
use pose_attack::image::ImagePair;
use pose_attack::losses::LossWeights;
use pose_attack::models::{predict_pose, ToyPoseModel, ToyWeights};

fn main() -> pose_attack::Result<()> {
    let seq = generate_synthetic_sequence(&SyntheticSpec {
        height: 16,
        width: 16,
        ..SyntheticSpec::default()
    })?;
    let pair = ImagePair::new(seq.frames[0].clone(), seq.frames[1].clone())?;
    let pose = ToyPoseModel::new(ToyWeights::seeded_pose(5, 16, 16))?;
    let models = AttackModels { pose: &pose, depth: None };
    let clean = predict_pose(&pose, &pair.first, &pair.second)?;
    println!("clean      {:+.5?}", clean.to_array());

    for kind in [AttackKind::InvertYaw, AttackKind::MoveBackwards, AttackKind::InvertPose] {
        let spec = AttackSpec::new(kind, AttackBudget::from_epsilon(4.0)?);
        let out = attack_pair(&spec, &pair, models, &LossWeights::default(), &seq.intrinsics)?;
        let adv = predict_pose(&pose, &out.adversarial.first, &out.adversarial.second)?;
        println!(
            "{:<14} {:+.5?}  target loss {:.5} -> {:.5}",
            kind.name(),
            adv.to_array(),
            out.initial_loss,
            out.final_loss()
        );
    }
    Ok(())
}
