//! Adversarial attacks against differentiable monocular pose and depth
//! estimators, with trajectory-level evaluation.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: SE(3) transforms, Euler poses, rotation/translation errors.
//! - [`autodiff`]: a small reverse-mode tape over dense `f64` tensors.
//! - [`image`]: pixel and depth containers.
//! - [`models`]: the pose/depth model traits and tiny seeded toy networks.
//! - [`losses`]: view synthesis, the training objective, targeted pose losses.
//! - [`attack`]: the projected sign-gradient engine and attack orchestration.
//! - [`evaluation`]: trajectories, relative pose error, ratio reports, KITTI IO.
//! - [`harness`]: configuration, sequence IO and the experiment runner.

pub mod attack;
pub mod autodiff;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod harness;
pub mod image;
pub mod losses;
pub mod models;

pub use error::{Error, Result};
