//! Scalar objectives: the unsupervised view-synthesis loss, the targeted
//! relative-pose losses and the flipped-depth objective.
//!
//! The smoothness and geometric-consistency terms follow the usual
//! unsupervised structure-from-motion forms; both can be switched off through
//! [`LossWeights`].

mod depth;
mod photometric;
mod targeted;
mod view_synthesis;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::geometry::DiffTransform;
use crate::image::ImagePair;
use crate::models::{DepthModel, PoseModel};
use crate::{Error, Result};

pub use depth::{depth_attack_loss, depth_attack_value, flip_depth_target};
pub use photometric::{
    geometric_consistency_loss, photometric_loss, smoothness_loss, ssim_map, SSIM_C1, SSIM_C2,
};
pub use targeted::{
    targeted_loss, targeted_loss_pose, targeted_loss_translation, targeted_loss_value,
    targeted_loss_yaw, TargetedLossKind,
};
pub use view_synthesis::{resample_map, synthesize_view, Warp, MIN_PROJECTED_DEPTH};

/// Pinhole camera intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let k = Self { fx, fy, cx, cy };
        k.validate(None)?;
        Ok(k)
    }

    /// Focal length equal to the image width, principal point at the centre.
    pub fn default_for(height: usize, width: usize) -> Self {
        Self {
            fx: width as f64,
            fy: width as f64,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
        }
    }

    /// Checks positivity and, when a size is given, that the principal point
    /// lies inside the image.
    pub fn validate(&self, size: Option<(usize, usize)>) -> Result<()> {
        let all = [self.fx, self.fy, self.cx, self.cy];
        if all.iter().any(|v| !v.is_finite()) || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::Input(format!("invalid intrinsics {self:?}")));
        }
        if let Some((h, w)) = size {
            let inside = (0.0..=(w as f64 - 1.0)).contains(&self.cx)
                && (0.0..=(h as f64 - 1.0)).contains(&self.cy);
            if !inside {
                return Err(Error::Input(format!(
                    "principal point ({}, {}) outside a {h}x{w} image",
                    self.cx, self.cy
                )));
            }
        }
        Ok(())
    }
}

/// Term weights of the unsupervised loss and the L1/SSIM mix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub lambda_p: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 0.1,
            w3: 0.5,
            lambda_p: 0.85,
        }
    }
}

impl LossWeights {
    pub fn new(w1: f64, w2: f64, w3: f64, lambda_p: f64) -> Result<Self> {
        let w = Self { w1, w2, w3, lambda_p };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let terms = [self.w1, self.w2, self.w3];
        if terms.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Input(format!("loss weights must be finite and >= 0: {self:?}")));
        }
        if !(0.0..=1.0).contains(&self.lambda_p) {
            return Err(Error::Input(format!("lambda_p must lie in [0, 1], got {}", self.lambda_p)));
        }
        Ok(())
    }
}

/// `w1 * photometric + w2 * smoothness + w3 * geometric consistency` for the
/// pair `(first, second)`, with `second` warped into `first`'s view.
///
/// Terms with zero weight are not built; all-zero weights give a constant 0.
pub fn untargeted_loss<'t>(
    tape: &'t Tape,
    first: Var<'t>,
    second: Var<'t>,
    depth_model: &dyn DepthModel,
    pose_model: &dyn PoseModel,
    weights: &LossWeights,
    k: &Intrinsics,
) -> Result<Var<'t>> {
    weights.validate()?;
    let mut total = tape.scalar(0.0)?;
    if weights.w1 == 0.0 && weights.w2 == 0.0 && weights.w3 == 0.0 {
        return Ok(total);
    }
    let depth_first = depth_model.forward(first)?;
    if weights.w2 > 0.0 {
        let ls = smoothness_loss(depth_first, first)?;
        total = total.add(ls.scale(weights.w2)?)?;
    }
    if weights.w1 == 0.0 && weights.w3 == 0.0 {
        return Ok(total);
    }
    let pose = DiffTransform::from_pose(pose_model.forward(first, second)?)?;
    let warp = synthesize_view(second, depth_first, &pose, k)?;
    if weights.w1 > 0.0 {
        let lp = photometric_loss(first, warp.image, &warp.valid, weights.lambda_p)?;
        total = total.add(lp.scale(weights.w1)?)?;
    }
    if weights.w3 > 0.0 {
        let depth_second = depth_model.forward(second)?;
        let resampled = resample_map(depth_second, warp.coords)?;
        let lg = geometric_consistency_loss(warp.projected_depth, resampled, &warp.valid)?;
        total = total.add(lg.scale(weights.w3)?)?;
    }
    Ok(total)
}

/// Numeric value of [`untargeted_loss`] on a stored pair.
pub fn untargeted_loss_value(
    pair: &ImagePair,
    depth_model: &dyn DepthModel,
    pose_model: &dyn PoseModel,
    weights: &LossWeights,
    k: &Intrinsics,
) -> Result<f64> {
    let tape = Tape::new();
    let a = pair.first.to_tape(&tape)?;
    let b = pair.second.to_tape(&tape)?;
    Ok(untargeted_loss(&tape, a, b, depth_model, pose_model, weights, k)?.item())
}
