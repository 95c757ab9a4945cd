//! Trajectories from relative poses, origin alignment, relative pose error,
//! ratio reports and KITTI pose files.

use pose_attack::evaluation::{
    align_origin, format_kitti_poses, integrate_trajectory, parse_kitti_str, ratio_report, rpe,
};
use pose_attack::geometry::EulerPose;

fn main() -> pose_attack::Result<()> {
    let truth: Vec<_> = (0..10)
        .map(|_| EulerPose::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.02).map(|p| p.to_transform()))
        .collect::<Result<_, _>>()?;
    let noisy = |amplitude: f64| -> pose_attack::Result<Vec<_>> {
        (0..10)
            .map(|i| {
                let wobble = if i % 2 == 0 { amplitude } else { -amplitude };
                Ok(EulerPose::new(wobble, 0.0, 1.0 + amplitude, 0.0, 0.0, 0.02 + wobble)?.to_transform())
            })
            .collect()
    };

    let reference = integrate_trajectory(&truth)?;
    let estimate = align_origin(&integrate_trajectory(&noisy(0.01)?)?, &reference);
    let clean = rpe(&estimate, &reference, 1)?;
    println!("RPE {:.4} m, {:.4} deg over {} frames", clean.translation_m, clean.rotation_deg, estimate.len());

    let degraded = align_origin(&integrate_trajectory(&noisy(0.05)?)?, &reference);
    let worse = rpe(&degraded, &reference, 1)?;
    let report = ratio_report("rpe_deg", worse.rotation_deg, clean.rotation_deg)?;
    println!("ratio {}: {:.3}", report.metric, report.ratio);

    let text = format_kitti_poses(&reference);
    let parsed = parse_kitti_str(&text)?;
    println!("KITTI text, first line: {}", text.lines().next().unwrap_or(""));
    assert_eq!(parsed.len(), reference.len());
    Ok(())
}
