//! Untargeted attack: raise the self-supervised training loss of a pair.

use pose_attack::attack::{attack_pair, AttackBudget, AttackKind, AttackModels, AttackSpec};
use pose_attack::harness::{generate_synthetic_sequence, SyntheticSpec};
use pose_attack::image::ImagePair;
use pose_attack::losses::LossWeights;
use pose_attack::models::{predict_pose, ToyDepthModel, ToyPoseModel, ToyWeights};

fn main() -> pose_attack::Result<()> {
    let seq = generate_synthetic_sequence(&SyntheticSpec {
        height: 16,
        width: 16,
        ..SyntheticSpec::default()
    })?;
    let pair = ImagePair::new(seq.frames[0].clone(), seq.frames[1].clone())?;
    let pose = ToyPoseModel::new(ToyWeights::seeded_pose(1, 16, 16))?;
    let depth = ToyDepthModel::new(ToyWeights::seeded_depth(2))?;
    let models = AttackModels {
        pose: &pose,
        depth: Some(&depth),
    };

    for eps in [1.0, 4.0, 16.0] {
        let spec = AttackSpec::new(AttackKind::Untargeted, AttackBudget::from_epsilon(eps)?);
        let out = attack_pair(&spec, &pair, models, &LossWeights::default(), &seq.intrinsics)?;
        let adv = predict_pose(&pose, &out.adversarial.first, &out.adversarial.second)?;
        println!(
            "eps {eps:>4}: {} steps, loss {:.5} -> {:.5}, max |delta| {:.2}, tz {:+.5}",
            spec.budget.iterations,
            out.initial_loss,
            out.final_loss(),
            out.max_perturbation(),
            adv.to_array()[2]
        );
    }
    Ok(())
}
