//! Synthetic sequences with known motion: a camera moving toward a textured
//! wall at constant forward speed and constant yaw rate.

use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::evaluation::{integrate_trajectory, write_kitti_poses, Trajectory};
use crate::geometry::{EulerPose, TransformSE3};
use crate::image::{DepthMap, ImageTensor};
use crate::losses::Intrinsics;
use crate::{Error, Result};

use super::io::{write_depth, write_ppm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
    /// Forward (`+z`) motion per frame.
    pub forward_step: f64,
    /// Yaw increment per frame, radians.
    pub yaw_step: f64,
    /// Distance of the wall plane `z = wall_depth` from the first camera.
    pub wall_depth: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            frames: 6,
            height: 32,
            width: 32,
            seed: 0,
            forward_step: 0.1,
            yaw_step: 0.05,
            wall_depth: 5.0,
        }
    }
}

pub struct SyntheticSequence {
    pub frames: Vec<ImageTensor>,
    /// Camera-to-world poses, first frame at the identity.
    pub poses: Trajectory,
    /// Per-frame depth along the optical axis.
    pub depths: Vec<DepthMap>,
    pub intrinsics: Intrinsics,
}

struct Wave {
    amplitude: f64,
    frequency: f64,
    direction: (f64, f64),
    phase: f64,
}

/// Smooth seeded colour texture on the wall plane, inside `[7.5, 247.5]`.
struct Texture {
    channels: [Vec<Wave>; 3],
}

impl Texture {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let mut channel = || -> Vec<Wave> {
            (0..3)
                .map(|_| {
                    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    Wave {
                        amplitude: 40.0,
                        frequency: rng.random_range(2.0..6.0),
                        direction: (angle.cos(), angle.sin()),
                        phase: rng.random_range(0.0..std::f64::consts::TAU),
                    }
                })
                .collect()
        };
        Self {
            channels: [channel(), channel(), channel()],
        }
    }

    fn sample(&self, x: f64, y: f64, c: usize) -> f64 {
        127.5
            + self.channels[c]
                .iter()
                .map(|w| w.amplitude * (w.frequency * (w.direction.0 * x + w.direction.1 * y) + w.phase).sin())
                .sum::<f64>()
    }
}

pub fn generate_synthetic_sequence(spec: &SyntheticSpec) -> Result<SyntheticSequence> {
    if spec.frames < 2 || spec.height == 0 || spec.width == 0 {
        return Err(Error::Input(format!("need >= 2 frames of non-empty size: {spec:?}")));
    }
    let travel = spec.forward_step * (spec.frames - 1) as f64;
    if !(spec.wall_depth > 0.0 && travel.abs() < spec.wall_depth * 0.9) {
        return Err(Error::Input(format!(
            "camera path ({travel}) must stay well in front of the wall ({})",
            spec.wall_depth
        )));
    }
    let step = EulerPose::new(0.0, 0.0, spec.forward_step, 0.0, 0.0, spec.yaw_step)?.to_transform();
    let poses = integrate_trajectory(&vec![step; spec.frames - 1])?;
    let k = Intrinsics::default_for(spec.height, spec.width);
    let texture = Texture::new(&mut ChaCha8Rng::seed_from_u64(spec.seed));

    let (h, w) = (spec.height, spec.width);
    let mut frames = Vec::with_capacity(spec.frames);
    let mut depths = Vec::with_capacity(spec.frames);
    for pose in poses.poses() {
        let mut pixels = Vec::with_capacity(h * w * 3);
        let mut depth = Vec::with_capacity(h * w);
        for v in 0..h {
            for u in 0..w {
                let ray = Vector3::new((u as f64 - k.cx) / k.fx, (v as f64 - k.cy) / k.fy, 1.0);
                let dir = pose.rotation() * ray;
                let origin = pose.translation();
                let s = (spec.wall_depth - origin.z) / dir.z;
                let hit = origin + dir * s;
                depth.push(s);
                for c in 0..3 {
                    pixels.push(texture.sample(hit.x, hit.y, c).round() as f32);
                }
            }
        }
        frames.push(ImageTensor::new(h, w, 3, pixels)?);
        depths.push(DepthMap::new(h, w, depth)?);
    }
    Ok(SyntheticSequence {
        frames,
        poses,
        depths,
        intrinsics: k,
    })
}

/// Writes `NNNNNN.ppm` frames, `poses.txt` and `depth/NNNNNN.patt`.
pub fn write_synthetic_sequence(seq: &SyntheticSequence, dir: &Path) -> Result<()> {
    let depth_dir = dir.join("depth");
    std::fs::create_dir_all(&depth_dir).map_err(|e| Error::io(&depth_dir, e))?;
    for (i, (frame, depth)) in seq.frames.iter().zip(&seq.depths).enumerate() {
        write_ppm(frame, &dir.join(format!("{i:06}.ppm")))?;
        write_depth(depth, &depth_dir.join(format!("{i:06}.patt")))?;
    }
    write_kitti_poses(&seq.poses, &dir.join("poses.txt"))
}

/// Relative ground-truth motion between consecutive frames.
pub fn ground_truth_relatives(seq: &SyntheticSequence) -> Vec<TransformSE3> {
    seq.poses.relatives()
}
