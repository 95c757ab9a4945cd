use crate::autodiff::{Tape, Var};
use crate::image::{DepthMap, FlipAxis};
use crate::{Error, Result};

/// Mirrored copy of a depth prediction, used as an attack target.
pub fn flip_depth_target(depth: &DepthMap, axis: FlipAxis) -> DepthMap {
    depth.flipped(axis)
}

/// Mean absolute difference between a `[h, w]` prediction and a fixed target.
pub fn depth_attack_loss<'t>(prediction: Var<'t>, target: &DepthMap) -> Result<Var<'t>> {
    let shape = prediction.shape();
    if shape != [target.height(), target.width()] {
        return Err(Error::Shape(format!(
            "depth prediction {shape:?} vs target {}x{}",
            target.height(),
            target.width()
        )));
    }
    let t = target.to_tape(prediction.tape())?;
    Ok(prediction.sub(t)?.abs()?.mean()?)
}

/// Numeric value of [`depth_attack_loss`].
pub fn depth_attack_value(prediction: &DepthMap, target: &DepthMap) -> Result<f64> {
    let tape = Tape::new();
    Ok(depth_attack_loss(prediction.to_tape(&tape)?, target)?.item())
}
