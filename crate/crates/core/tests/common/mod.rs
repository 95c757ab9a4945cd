//! Fixtures and oracles shared by the integration tests.
#![allow(dead_code)]

pub mod attacks;
pub mod checks;
pub mod gradcheck;
pub mod experiment;

use nalgebra::Vector3;
use pose_attack::geometry::{EulerPose, TransformSE3};
use pose_attack::image::{ImagePair, ImageTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth random texture in `[10, 245]`, sampled with a horizontal offset.
pub fn texture(rng: &mut ChaCha8Rng, h: usize, w: usize, shift: f64) -> Vec<f64> {
    let waves: Vec<[f64; 4]> = (0..4)
        .map(|_| {
            [
                rng.random_range(0.2..1.0),
                rng.random_range(0.2..1.0),
                rng.random_range(0.0..6.3),
                rng.random_range(20.0..28.0),
            ]
        })
        .collect();
    let mut out = Vec::with_capacity(h * w * 3);
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let (x, y) = (x as f64 + shift, y as f64);
                let v: f64 = waves
                    .iter()
                    .map(|[a, b, p, amp]| amp * (a * x + b * y + p + c as f64).sin())
                    .sum();
                out.push((127.5 + v).clamp(10.0, 245.0));
            }
        }
    }
    out
}

pub fn image(values: &[f64], h: usize, w: usize) -> ImageTensor {
    ImageTensor::new(h, w, 3, values.iter().map(|&v| v as f32).collect()).unwrap()
}

/// Two frames of one texture, the second shifted by under a pixel.
pub fn textured_pair(seed: u64, h: usize, w: usize) -> ImagePair {
    let mut r = rng(seed);
    let shift = r.random_range(0.3..0.9);
    let mut r2 = r.clone();
    let a = texture(&mut r, h, w, 0.0);
    let b = texture(&mut r2, h, w, shift);
    ImagePair::new(image(&a, h, w), image(&b, h, w)).unwrap()
}

/// Pose with angles well inside the non-degenerate range.
pub fn random_pose(rng: &mut ChaCha8Rng) -> EulerPose {
    let t = |r: &mut ChaCha8Rng| r.random_range(-5.0..5.0);
    let a = |r: &mut ChaCha8Rng, lim: f64| r.random_range(-lim..lim);
    EulerPose::new(t(rng), t(rng), t(rng), a(rng, 3.1), a(rng, 1.5), a(rng, 3.1)).unwrap()
}

pub fn random_transform(rng: &mut ChaCha8Rng) -> TransformSE3 {
    random_pose(rng).to_transform()
}

pub fn max_entry_diff(a: &TransformSE3, b: &TransformSE3) -> f64 {
    (a.to_matrix() - b.to_matrix()).abs().max()
}

pub fn unit(v: Vector3<f64>) -> Vector3<f64> {
    v / v.norm()
}

/// `|a - n| / max(|a|, |n|, 1e-6)`; the floor keeps near-zero gradients
/// from dividing by nothing.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Fixed-seed proptest configuration without failure persistence files.
pub fn proptest_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..proptest::test_runner::Config::default()
    }
}
