use serde::{Deserialize, Serialize};

use crate::autodiff::Var;
use crate::geometry::{DiffTransform, EulerPose, TransformSE3};
use crate::Result;

/// Which residual of `prediction^-1 * target` is penalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetedLossKind {
    /// Rotation angle of the residual.
    Rotation,
    /// Translation norm of the residual.
    Translation,
    /// Sum of both.
    Pose,
}

fn residual<'t>(prediction: Var<'t>, target: &TransformSE3) -> Result<DiffTransform<'t>> {
    let tape = prediction.tape();
    let pred = DiffTransform::from_pose(prediction)?;
    Ok(pred.relative_to(&DiffTransform::constant(tape, target)?)?)
}

/// Residual rotation angle between a `[6]` pose prediction and a fixed target.
pub fn targeted_loss_yaw<'t>(prediction: Var<'t>, target: &TransformSE3) -> Result<Var<'t>> {
    Ok(residual(prediction, target)?.rotation_error()?)
}

/// Residual translation norm between a `[6]` pose prediction and a fixed target.
pub fn targeted_loss_translation<'t>(prediction: Var<'t>, target: &TransformSE3) -> Result<Var<'t>> {
    Ok(residual(prediction, target)?.translation_error()?)
}

/// Residual translation norm plus residual rotation angle.
pub fn targeted_loss_pose<'t>(prediction: Var<'t>, target: &TransformSE3) -> Result<Var<'t>> {
    let rel = residual(prediction, target)?;
    Ok(rel.translation_error()?.add(rel.rotation_error()?)?)
}

pub fn targeted_loss<'t>(
    kind: TargetedLossKind,
    prediction: Var<'t>,
    target: &TransformSE3,
) -> Result<Var<'t>> {
    match kind {
        TargetedLossKind::Rotation => targeted_loss_yaw(prediction, target),
        TargetedLossKind::Translation => targeted_loss_translation(prediction, target),
        TargetedLossKind::Pose => targeted_loss_pose(prediction, target),
    }
}

/// Exact (unsmoothed) value of a targeted loss.
pub fn targeted_loss_value(kind: TargetedLossKind, prediction: &EulerPose, target: &TransformSE3) -> f64 {
    let rel = prediction.to_transform().relative_to(target);
    match kind {
        TargetedLossKind::Rotation => rel.rotation_error(),
        TargetedLossKind::Translation => rel.translation_error(),
        TargetedLossKind::Pose => rel.translation_error() + rel.rotation_error(),
    }
}
