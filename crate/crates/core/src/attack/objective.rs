use crate::autodiff::{Tape, Var};
use crate::geometry::TransformSE3;
use crate::image::DepthMap;
use crate::losses::{self, depth_attack_loss, Intrinsics, LossWeights, TargetedLossKind};
use crate::models::{DepthModel, PoseModel};
use crate::{Error, Result};

/// A scalar loss over an ordered frame pair, differentiable in both frames.
pub trait AdversarialObjective: Sync {
    fn loss<'t>(&self, tape: &'t Tape, first: Var<'t>, second: Var<'t>) -> Result<Var<'t>>;
}

/// The unsupervised training loss of the attacked pose/depth pair.
pub struct UntargetedObjective<'m> {
    pub pose: &'m dyn PoseModel,
    pub depth: &'m dyn DepthModel,
    pub weights: LossWeights,
    pub intrinsics: Intrinsics,
}

impl AdversarialObjective for UntargetedObjective<'_> {
    fn loss<'t>(&self, tape: &'t Tape, first: Var<'t>, second: Var<'t>) -> Result<Var<'t>> {
        losses::untargeted_loss(
            tape,
            first,
            second,
            self.depth,
            self.pose,
            &self.weights,
            &self.intrinsics,
        )
    }
}

/// Distance from the pose prediction to a fixed target transform.
pub struct TargetedPoseObjective<'m> {
    pub pose: &'m dyn PoseModel,
    pub target: TransformSE3,
    pub loss: TargetedLossKind,
}

impl AdversarialObjective for TargetedPoseObjective<'_> {
    fn loss<'t>(&self, _tape: &'t Tape, first: Var<'t>, second: Var<'t>) -> Result<Var<'t>> {
        losses::targeted_loss(self.loss, self.pose.forward(first, second)?, &self.target)
    }
}

/// Mean of the depth-target losses of both frames.
pub struct DepthTargetObjective<'m> {
    pub depth: &'m dyn DepthModel,
    pub first_target: DepthMap,
    pub second_target: DepthMap,
}

impl AdversarialObjective for DepthTargetObjective<'_> {
    fn loss<'t>(&self, _tape: &'t Tape, first: Var<'t>, second: Var<'t>) -> Result<Var<'t>> {
        let a = depth_attack_loss(self.depth.forward(first)?, &self.first_target)?;
        let b = depth_attack_loss(self.depth.forward(second)?, &self.second_target)?;
        Ok(a.add(b)?.scale(0.5)?)
    }
}

/// `w . [first, second]`, the analytic surrogate with a known gradient.
pub struct LinearObjective {
    pub weights: Vec<f64>,
}

impl AdversarialObjective for LinearObjective {
    fn loss<'t>(&self, tape: &'t Tape, first: Var<'t>, second: Var<'t>) -> Result<Var<'t>> {
        let x = tape.concat(&[first, second])?;
        if x.len() != self.weights.len() {
            return Err(Error::Shape(format!(
                "linear objective has {} weights for {} pixels",
                self.weights.len(),
                x.len()
            )));
        }
        let w = tape.leaf(self.weights.clone(), &[x.len()])?;
        Ok(x.mul(w)?.sum()?)
    }
}
