mod common;

use common::attacks::{contract, effectiveness, linear_monotone, Toy, SIZE};
use common::proptest_config;
use pose_attack::attack::{
    attack_sequence, cross_task_depth_inputs, iterations_for, AttackBudget, AttackKind, AttackSpec,
};
use pose_attack::autodiff::Tape;
use pose_attack::image::ImageTensor;
use pose_attack::losses::{targeted_loss, LossWeights, TargetedLossKind};
use pose_attack::models::{predict_depth, predict_pose, PoseModel};
use proptest::prelude::*;

#[test]
fn iteration_schedule() {
    let got: Vec<usize> = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|&e| iterations_for(e)).collect();
    assert_eq!(got, [1, 1, 2, 3, 5, 10, 20]);
}

#[test]
fn untargeted_attack_raises_the_training_loss() {
    let ok = effectiveness(AttackKind::Untargeted, 4.0, 0..100).unwrap();
    assert!(ok >= 95, "{ok}/100");
}

#[test]
fn targeted_attacks_reduce_their_losses() {
    for kind in [AttackKind::InvertYaw, AttackKind::MoveBackwards, AttackKind::InvertPose] {
        let ok = effectiveness(kind, 4.0, 0..100).unwrap();
        assert!(ok >= 95, "{kind}: {ok}/100");
    }
}

#[test]
fn depth_attacks_reduce_their_losses() {
    for kind in [AttackKind::DepthFlipH, AttackKind::DepthFlipV] {
        let ok = effectiveness(kind, 4.0, 0..20).unwrap();
        assert!(ok >= 19, "{kind}: {ok}/20");
    }
}

#[test]
fn linear_surrogate_descends_monotonically() {
    for seed in 0..20 {
        linear_monotone(seed).unwrap();
    }
}

#[test]
fn zero_budget_returns_the_clean_pair() {
    let toy = Toy::new(3);
    for kind in AttackKind::ALL {
        let out = toy.attack(kind, 0.0);
        assert_eq!(out.adversarial, out.clean, "{kind}");
    }
}

#[test]
fn larger_budget_does_at_least_as_much_damage() {
    let ok = (0..20)
        .filter(|&s| {
            let toy = Toy::new(s);
            toy.attack(AttackKind::Untargeted, 8.0).final_loss() >= toy.attack(AttackKind::Untargeted, 1.0).final_loss()
        })
        .count();
    assert!(ok >= 18, "{ok}/20");
}

#[test]
fn attacks_are_reproducible() {
    let (a, b) = (Toy::new(9), Toy::new(9));
    for kind in AttackKind::ALL {
        assert_eq!(a.attack(kind, 2.0).adversarial, b.attack(kind, 2.0).adversarial, "{kind}");
    }
}

#[test]
fn contract_holds_at_every_default_budget() {
    let toy = Toy::new(4);
    for eps in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        for kind in AttackKind::ALL {
            contract(&toy.attack(kind, eps), eps).unwrap();
        }
    }
}

fn frames(n: usize) -> Vec<ImageTensor> {
    (0..n)
        .map(|i| {
            let v = common::texture(&mut common::rng(77), SIZE, SIZE, 0.4 * i as f64);
            common::image(&v, SIZE, SIZE)
        })
        .collect()
}

#[test]
fn serial_and_parallel_sequences_agree() {
    let toy = Toy::new(5);
    let seq = frames(5);
    for kind in [AttackKind::Untargeted, AttackKind::InvertPose, AttackKind::DepthFlipV] {
        let spec = AttackSpec::new(kind, AttackBudget::from_epsilon(2.0).unwrap());
        let run = |parallel| {
            attack_sequence(&spec, &seq, toy.models(), &LossWeights::default(), &toy.intrinsics, parallel).unwrap()
        };
        let (serial, parallel) = (run(false), run(true));
        assert_eq!(serial.len(), 4);
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.adversarial, b.adversarial);
            assert_eq!(a.loss_trace, b.loss_trace);
        }
    }
}

#[test]
fn cross_task_inputs_cover_every_frame() {
    let toy = Toy::new(6);
    for n in 2..6 {
        let seq = frames(n);
        let spec = AttackSpec::new(AttackKind::InvertYaw, AttackBudget::from_epsilon(1.0).unwrap());
        let pairs = attack_sequence(&spec, &seq, toy.models(), &LossWeights::default(), &toy.intrinsics, false).unwrap();
        let inputs = cross_task_depth_inputs(&pairs).unwrap();
        assert_eq!(inputs.len(), n);
        assert_eq!(inputs[0], pairs[0].adversarial.first);
        assert_eq!(inputs[n - 1], pairs[n - 2].adversarial.second);
    }
}

#[test]
fn predictions_are_bitwise_deterministic() {
    let toy = Toy::new(8);
    let a = predict_pose(&toy.pose, &toy.pair.first, &toy.pair.second).unwrap();
    let b = predict_pose(&toy.pose, &toy.pair.first, &toy.pair.second).unwrap();
    assert_eq!(a.to_array().map(f64::to_bits), b.to_array().map(f64::to_bits));
}

#[test]
fn targeted_pixel_gradients_are_finite_and_nonzero() {
    for seed in 0..20 {
        let toy = Toy::new(seed);
        let clean = predict_pose(&toy.pose, &toy.pair.first, &toy.pair.second).unwrap();
        for (kind, loss) in [
            (AttackKind::InvertYaw, TargetedLossKind::Rotation),
            (AttackKind::MoveBackwards, TargetedLossKind::Translation),
            (AttackKind::InvertPose, TargetedLossKind::Pose),
        ] {
            let target = pose_attack::attack::make_target(kind, &clean).unwrap();
            let tape = Tape::new();
            let a = toy.pair.first.to_tape(&tape).unwrap();
            let b = toy.pair.second.to_tape(&tape).unwrap();
            let l = targeted_loss(loss, toy.pose.forward(a, b).unwrap(), &target).unwrap();
            let g = tape.backward(l).unwrap();
            let all: Vec<f64> = g.wrt(a).into_iter().chain(g.wrt(b)).collect();
            assert!(all.iter().all(|v| v.is_finite()), "seed {seed} {kind}");
            assert!(all.iter().any(|&v| v != 0.0), "seed {seed} {kind}");
        }
    }
}

proptest! {
    #![proptest_config(proptest_config(32))]

    #[test]
    fn depth_is_positive_on_any_image(
        pixels in prop::collection::vec(0.0f32..=255.0, SIZE * SIZE * 3),
        seed in 0u64..1000,
    ) {
        let toy = Toy::new(seed);
        let image = ImageTensor::new(SIZE, SIZE, 3, pixels).unwrap();
        let d = predict_depth(&toy.depth, &image).unwrap();
        prop_assert!(d.data().iter().all(|&v| v > 0.0 && v.is_finite()));
    }
}
