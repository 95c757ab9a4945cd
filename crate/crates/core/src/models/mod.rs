//! The differentiable model boundary.
//!
//! A [`PoseModel`] maps two `[h, w, 3]` frames to a `[6]` tensor laid out as
//! `[tx, ty, tz, roll, pitch, yaw]`; a [`DepthModel`] maps one frame to a
//! strictly positive `[h, w]` depth map. Both record onto the caller's tape
//! so losses can be back-propagated to the input pixels.

mod toy;
mod weights;

use crate::autodiff::{Tape, Var};
use crate::geometry::EulerPose;
use crate::image::{DepthMap, ImagePair, ImageTensor};
use crate::{Error, Result};

pub use toy::{OutputScaling, ToyDepthModel, ToyPoseModel};
pub use weights::{ModelKind, ToyWeights, MAGIC as WEIGHTS_MAGIC, VERSION as WEIGHTS_VERSION};

pub trait PoseModel: Send + Sync {
    /// Records the prediction for the ordered pair `(first, second)`.
    fn forward<'t>(&self, first: Var<'t>, second: Var<'t>) -> Result<Var<'t>>;

    /// Per-frame `[h, w, c]` shape the model accepts, if fixed.
    fn input_shape(&self) -> Option<[usize; 3]> {
        None
    }
}

pub trait DepthModel: Send + Sync {
    fn forward<'t>(&self, image: Var<'t>) -> Result<Var<'t>>;
}

pub(crate) fn check_frame_shape(model: Option<[usize; 3]>, got: &[usize]) -> Result<()> {
    if got.len() != 3 {
        return Err(Error::Shape(format!("expected [h, w, c] frame, got {got:?}")));
    }
    if let Some(expected) = model {
        if got != expected {
            return Err(Error::Shape(format!(
                "model expects frames of shape {expected:?}, got {got:?}"
            )));
        }
    }
    Ok(())
}

/// Prediction for a pair together with its tape handle.
pub fn predict_pose_on_tape<'t>(
    model: &dyn PoseModel,
    tape: &'t Tape,
    pair: &ImagePair,
) -> Result<(EulerPose, Var<'t>)> {
    let a = pair.first.to_tape(tape)?;
    let b = pair.second.to_tape(tape)?;
    let out = model.forward(a, b)?;
    let v = out.values();
    if v.len() != 6 {
        return Err(Error::Shape(format!("pose output has {} values", v.len())));
    }
    let pose = EulerPose::from_array([v[0], v[1], v[2], v[3], v[4], v[5]])?;
    Ok((pose, out))
}

pub fn predict_pose(model: &dyn PoseModel, first: &ImageTensor, second: &ImageTensor) -> Result<EulerPose> {
    let pair = ImagePair::new(first.clone(), second.clone())?;
    let tape = Tape::new();
    Ok(predict_pose_on_tape(model, &tape, &pair)?.0)
}

pub fn predict_depth(model: &dyn DepthModel, image: &ImageTensor) -> Result<DepthMap> {
    let tape = Tape::new();
    let d = model.forward(image.to_tape(&tape)?)?;
    DepthMap::new(image.height(), image.width(), d.values())
}
