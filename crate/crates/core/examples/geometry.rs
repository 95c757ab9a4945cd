//! Euler poses, SE(3) composition, relative transforms and the two error
//! functionals used as targeted losses.

use pose_attack::geometry::{EulerPose, TransformSE3};

fn main() -> pose_attack::Result<()> {
    let step = EulerPose::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.1)?;
    let t = step.to_transform();
    println!("R = {}", t.rotation());
    println!("t = {}", t.translation().transpose());

    let two = t.compose(&t);
    println!("two steps: {:?}", two.to_euler()?.to_array());

    // Residual between a prediction and an inverted-yaw target.
    let target = step.with_yaw(-step.yaw()).to_transform();
    let residual = t.relative_to(&target);
    println!(
        "residual rotation {:.4} rad, translation {:.4}",
        residual.rotation_error(),
        residual.translation_error()
    );

    let back = t.compose(&t.inverse());
    assert!(back.rotation_error() < 1e-12 && back.translation_error() < 1e-12);
    assert_eq!(TransformSE3::identity().rotation_error(), 0.0);
    Ok(())
}
