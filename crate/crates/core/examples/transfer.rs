//! Transferability: adversarial pairs crafted against one pose network are
//! evaluated on a second, independently seeded one.

use pose_attack::attack::{attack_sequence, transfer_eval, AttackBudget, AttackKind, AttackModels, AttackSpec};
use pose_attack::harness::{generate_synthetic_sequence, SyntheticSpec};
use pose_attack::image::ImagePair;
use pose_attack::losses::LossWeights;
use pose_attack::models::{ToyPoseModel, ToyWeights};

fn main() -> pose_attack::Result<()> {
    let seq = generate_synthetic_sequence(&SyntheticSpec {
        height: 16,
        width: 16,
        ..SyntheticSpec::default()
    })?;
    let source = ToyPoseModel::new(ToyWeights::seeded_pose(10, 16, 16))?;
    let other = ToyPoseModel::new(ToyWeights::seeded_pose(11, 16, 16))?;
    let models = AttackModels { pose: &source, depth: None };
    let spec = AttackSpec::new(AttackKind::InvertYaw, AttackBudget::from_epsilon(8.0)?);
    let attacked = attack_sequence(&spec, &seq.frames, models, &LossWeights::default(), &seq.intrinsics, true)?;

    let clean: Vec<ImagePair> = attacked.iter().map(|p| p.clean.clone()).collect();
    let adversarial: Vec<ImagePair> = attacked.iter().map(|p| p.adversarial.clone()).collect();
    for (name, model) in [("source", &source), ("other", &other)] {
        let before = transfer_eval(&clean, model)?;
        let after = transfer_eval(&adversarial, model)?;
        for (i, (b, a)) in before.iter().zip(&after).enumerate() {
            println!("{name:<6} pair {i}: yaw {:+.5} -> {:+.5}", b.yaw(), a.yaw());
        }
    }
    Ok(())
}
