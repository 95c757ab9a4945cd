mod common;

use common::{proptest_config, rng, texture};
use pose_attack::autodiff::Tape;
use pose_attack::geometry::{DiffTransform, EulerPose, TransformSE3};
use pose_attack::image::DepthMap;
use pose_attack::losses::{
    depth_attack_value, geometric_consistency_loss, photometric_loss, smoothness_loss, synthesize_view,
    targeted_loss_value, Intrinsics, TargetedLossKind,
};
use proptest::prelude::*;

const KINDS: [TargetedLossKind; 3] = [TargetedLossKind::Rotation, TargetedLossKind::Translation, TargetedLossKind::Pose];

fn small_pose() -> impl Strategy<Value = EulerPose> {
    let t = -2.0..2.0f64;
    let a = -1.0..1.0f64;
    (t.clone(), t.clone(), t, a.clone(), a.clone(), a)
        .prop_map(|(x, y, z, r, p, w)| EulerPose::new(x, y, z, r, p, w).unwrap())
}

proptest! {
    #![proptest_config(proptest_config(64))]

    #[test]
    fn image_losses_are_nonnegative_and_vanish_on_equal_inputs(
        seed in 0u64..10_000, h in 4usize..12, w in 4usize..12, lambda in 0.0..=1.0f64,
    ) {
        let mut r = rng(seed);
        let a = texture(&mut r, h, w, 0.0);
        let b = texture(&mut r, h, w, 0.5);
        let tape = Tape::new();
        let (va, vb) = (tape.leaf(a.clone(), &[h, w, 3]).unwrap(), tape.leaf(b, &[h, w, 3]).unwrap());
        let valid = vec![true; h * w];
        prop_assert!(photometric_loss(va, vb, &valid, lambda).unwrap().item() >= 0.0);
        prop_assert_eq!(photometric_loss(va, va, &valid, lambda).unwrap().item(), 0.0);

        let depth: Vec<f64> = a.iter().step_by(3).map(|v| 1.0 + v / 50.0).collect();
        let d = tape.leaf(depth.clone(), &[h, w]).unwrap();
        prop_assert!(smoothness_loss(d, va).unwrap().item() >= 0.0);
        let flat = tape.leaf(vec![3.0; h * w], &[h, w]).unwrap();
        prop_assert_eq!(smoothness_loss(flat, va).unwrap().item(), 0.0);

        let d2 = tape.leaf(depth.iter().rev().copied().collect(), &[h * w]).unwrap();
        let d1 = d.reshape(&[h * w]).unwrap();
        prop_assert!(geometric_consistency_loss(d1, d2, &valid).unwrap().item() >= 0.0);
        prop_assert_eq!(geometric_consistency_loss(d1, d1, &valid).unwrap().item(), 0.0);

        let dm = DepthMap::new(h, w, depth).unwrap();
        prop_assert_eq!(depth_attack_value(&dm, &dm).unwrap(), 0.0);
    }

    #[test]
    fn identity_warp_reproduces_the_source(seed in 0u64..10_000, h in 3usize..12, w in 3usize..12, z in 0.1..100.0f64) {
        let src = texture(&mut rng(seed), h, w, 0.0);
        let tape = Tape::new();
        let image = tape.leaf(src.clone(), &[h, w, 3]).unwrap();
        let depth = tape.leaf(vec![z; h * w], &[h, w]).unwrap();
        let pose = DiffTransform::constant(&tape, &TransformSE3::identity()).unwrap();
        let warp = synthesize_view(image, depth, &pose, &Intrinsics::default_for(h, w)).unwrap();
        prop_assert!(warp.valid.iter().all(|&v| v));
        prop_assert_eq!(warp.image.values(), src);
    }

    #[test]
    fn targeted_losses_are_nonnegative_and_zero_on_target(p in small_pose(), q in small_pose()) {
        for kind in KINDS {
            prop_assert!(targeted_loss_value(kind, &p, &q.to_transform()) >= 0.0);
            prop_assert_eq!(targeted_loss_value(kind, &p, &p.to_transform()), 0.0);
        }
    }

    #[test]
    fn targeted_losses_depend_only_on_the_residual(p in small_pose(), q in small_pose(), m in small_pose()) {
        let m = m.to_transform();
        let moved = m.compose(&p.to_transform()).to_euler();
        prop_assume!(moved.is_ok());
        let moved = moved.unwrap();
        for kind in KINDS {
            let before = targeted_loss_value(kind, &p, &q.to_transform());
            let after = targeted_loss_value(kind, &moved, &m.compose(&q.to_transform()));
            prop_assert!((before - after).abs() < 1e-9, "{kind:?}: {before} vs {after}");
        }
    }
}
