//! Trajectory integration, origin alignment, relative pose error, depth RMSE
//! and adversarial/clean ratios.

mod kitti;

use serde::{Deserialize, Serialize};

use crate::geometry::TransformSE3;
use crate::image::DepthMap;
use crate::{Error, Result};

pub use kitti::{format_kitti_poses, parse_kitti_poses, parse_kitti_str, write_kitti_poses, ORTHONORMALIZE_TOLERANCE};

/// Global camera-to-world poses, one per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    poses: Vec<TransformSE3>,
}

impl Trajectory {
    pub fn new(poses: Vec<TransformSE3>) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::Contract("a trajectory needs at least one pose".into()));
        }
        Ok(Self { poses })
    }

    pub fn poses(&self) -> &[TransformSE3] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// `poses[i]^-1 * poses[i + 1]` for every consecutive pair.
    pub fn relatives(&self) -> Vec<TransformSE3> {
        self.poses.windows(2).map(|w| w[0].relative_to(&w[1])).collect()
    }
}

/// `G_0 = I`, `G_{i+1} = G_i * T_i`.
pub fn integrate_trajectory(relatives: &[TransformSE3]) -> Result<Trajectory> {
    if relatives.is_empty() {
        return Err(Error::Contract("no relative poses to integrate".into()));
    }
    let mut poses = Vec::with_capacity(relatives.len() + 1);
    poses.push(TransformSE3::identity());
    for rel in relatives {
        let next = poses.last().expect("non-empty").compose(rel);
        poses.push(next);
    }
    Trajectory::new(poses)
}

/// Left-multiplies `t` by the rigid motion taking its first pose onto the
/// reference's first pose; the first poses then coincide exactly.
pub fn align_origin(t: &Trajectory, reference: &Trajectory) -> Trajectory {
    let (first, target) = (t.poses[0], reference.poses[0]);
    if first == target {
        return t.clone();
    }
    let m = target.compose(&first.inverse());
    let mut poses: Vec<TransformSE3> = t.poses.iter().map(|p| m.compose(p)).collect();
    poses[0] = target;
    Trajectory { poses }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpeReport {
    pub delta: usize,
    /// Mean translational error, scene units (meters).
    pub translation_m: f64,
    /// Mean rotational error, degrees.
    pub rotation_deg: f64,
    pub translation_series: Vec<f64>,
    pub rotation_series: Vec<f64>,
}

/// Relative pose error of `estimated` against `reference` over frame gap
/// `delta`: `E_i = (Q_i^-1 Q_{i+d})^-1 (P_i^-1 P_{i+d})`.
pub fn rpe(estimated: &Trajectory, reference: &Trajectory, delta: usize) -> Result<RpeReport> {
    let n = estimated.len();
    if reference.len() != n {
        return Err(Error::Contract(format!(
            "trajectory lengths differ: {n} vs {}",
            reference.len()
        )));
    }
    if delta == 0 || n < delta + 1 {
        return Err(Error::Contract(format!(
            "delta {delta} needs delta >= 1 and at least delta + 1 poses, got {n}"
        )));
    }
    let (p, q) = (&estimated.poses, &reference.poses);
    let (translation_series, rotation_series): (Vec<f64>, Vec<f64>) = (0..n - delta)
        .map(|i| {
            let est = p[i].relative_to(&p[i + delta]);
            let gt = q[i].relative_to(&q[i + delta]);
            let e = gt.relative_to(&est);
            (e.translation_error(), e.rotation_error().to_degrees())
        })
        .unzip();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(RpeReport {
        delta,
        translation_m: mean(&translation_series),
        rotation_deg: mean(&rotation_series),
        translation_series,
        rotation_series,
    })
}

/// `sqrt(mean((pred - reference)^2))`.
pub fn depth_rmse(pred: &DepthMap, reference: &DepthMap) -> Result<f64> {
    if (pred.height(), pred.width()) != (reference.height(), reference.width()) {
        return Err(Error::Shape(format!(
            "depth maps {}x{} vs {}x{}",
            pred.height(),
            pred.width(),
            reference.height(),
            reference.width()
        )));
    }
    let sq: f64 = pred
        .data()
        .iter()
        .zip(reference.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sq / pred.data().len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub metric: String,
    pub adversarial: f64,
    pub clean: f64,
    pub ratio: f64,
}

pub fn ratio_report(metric: &str, adversarial: f64, clean: f64) -> Result<RatioReport> {
    if !(clean > 0.0 && clean.is_finite()) {
        return Err(Error::DivisionGuard {
            metric: metric.to_string(),
            clean,
        });
    }
    Ok(RatioReport {
        metric: metric.to_string(),
        adversarial,
        clean,
        ratio: adversarial / clean,
    })
}
