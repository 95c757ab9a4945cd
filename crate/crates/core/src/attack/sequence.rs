use rayon::prelude::*;

use crate::geometry::EulerPose;
use crate::image::{ImagePair, ImageTensor};
use crate::losses::{flip_depth_target, Intrinsics, LossWeights};
use crate::models::{predict_depth, predict_pose, DepthModel, PoseModel};
use crate::{Error, Result};

use super::{
    make_target, pgd_attack, AdversarialPair, AttackKind, AttackSpec, DepthTargetObjective,
    TargetedPoseObjective, UntargetedObjective,
};

/// The models an attack may differentiate through.
#[derive(Clone, Copy)]
pub struct AttackModels<'m> {
    pub pose: &'m dyn PoseModel,
    pub depth: Option<&'m dyn DepthModel>,
}

impl<'m> AttackModels<'m> {
    fn depth(&self, kind: AttackKind) -> Result<&'m dyn DepthModel> {
        self.depth
            .ok_or_else(|| Error::Contract(format!("{kind} needs a depth model")))
    }
}

/// Attacks one pair; targets come from the clean predictions of this pair.
pub fn attack_pair(
    spec: &AttackSpec,
    pair: &ImagePair,
    models: AttackModels<'_>,
    weights: &LossWeights,
    k: &Intrinsics,
) -> Result<AdversarialPair> {
    let (budget, direction) = (&spec.budget, spec.direction);
    match spec.kind {
        AttackKind::Untargeted => {
            let objective = UntargetedObjective {
                pose: models.pose,
                depth: models.depth(spec.kind)?,
                weights: *weights,
                intrinsics: *k,
            };
            pgd_attack(&objective, pair, budget, direction)
        }
        AttackKind::InvertYaw | AttackKind::MoveBackwards | AttackKind::InvertPose => {
            let clean = predict_pose(models.pose, &pair.first, &pair.second)?;
            let target = make_target(spec.kind, &clean)?;
            let objective = TargetedPoseObjective {
                pose: models.pose,
                target,
                loss: spec.kind.targeted_loss().expect("pose-targeted kind"),
            };
            let mut out = pgd_attack(&objective, pair, budget, direction)?;
            out.target = Some(target);
            Ok(out)
        }
        AttackKind::DepthFlipH | AttackKind::DepthFlipV => {
            let depth = models.depth(spec.kind)?;
            let axis = spec.kind.flip_axis().expect("depth kind");
            let objective = DepthTargetObjective {
                depth,
                first_target: flip_depth_target(&predict_depth(depth, &pair.first)?, axis),
                second_target: flip_depth_target(&predict_depth(depth, &pair.second)?, axis),
            };
            pgd_attack(&objective, pair, budget, direction)
        }
    }
}

/// One attack per consecutive frame pair, returned in frame order.
pub fn attack_sequence(
    spec: &AttackSpec,
    frames: &[ImageTensor],
    models: AttackModels<'_>,
    weights: &LossWeights,
    k: &Intrinsics,
    parallel: bool,
) -> Result<Vec<AdversarialPair>> {
    if frames.len() < 2 {
        return Err(Error::Contract(format!(
            "a sequence needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    let run = |i: usize| -> Result<AdversarialPair> {
        let pair = ImagePair::new(frames[i].clone(), frames[i + 1].clone())?;
        attack_pair(spec, &pair, models, weights, k)
    };
    if parallel {
        (0..frames.len() - 1).into_par_iter().map(run).collect()
    } else {
        (0..frames.len() - 1).map(run).collect()
    }
}

/// Depth inputs for an attacked sequence: the first adversarial frame of
/// every pair, then the second frame of the last pair.
pub fn cross_task_depth_inputs(pairs: &[AdversarialPair]) -> Result<Vec<ImageTensor>> {
    let last = pairs
        .last()
        .ok_or_else(|| Error::Contract("no adversarial pairs".into()))?;
    let mut images: Vec<ImageTensor> = pairs.iter().map(|p| p.adversarial.first.clone()).collect();
    images.push(last.adversarial.second.clone());
    Ok(images)
}

/// Predictions of `model` on the given pairs (typically another model's
/// adversarial pairs).
pub fn transfer_eval(pairs: &[ImagePair], model: &dyn PoseModel) -> Result<Vec<EulerPose>> {
    pairs
        .iter()
        .map(|p| {
            if let Some(shape) = model.input_shape() {
                if p.first.shape() != shape {
                    return Err(Error::Input(format!(
                        "transfer model expects {shape:?}, pair has {:?}",
                        p.first.shape()
                    )));
                }
            }
            predict_pose(model, &p.first, &p.second)
        })
        .collect()
}
