//! Projected sign-gradient attacks and their orchestration over sequences.
//!
//! Every attack starts at the clean pair, takes `iterations` steps of size
//! `alpha` along the sign of the loss gradient and projects back into the
//! `epsilon` max-norm ball around the clean pixels and into `[0, 255]`.
//! Pose targets are computed once from the clean prediction and stay fixed.

mod objective;
mod pgd;
mod sequence;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::{EulerPose, TransformSE3};
use crate::image::FlipAxis;
use crate::losses::TargetedLossKind;
use crate::{Error, Result};

pub use objective::{
    AdversarialObjective, DepthTargetObjective, LinearObjective, TargetedPoseObjective,
    UntargetedObjective,
};
pub use pgd::{pgd_attack, AdversarialPair, STAGNATION_ITERATIONS};
pub use sequence::{
    attack_pair, attack_sequence, cross_task_depth_inputs, transfer_eval, AttackModels,
};

/// Default strengths, in pixel units.
pub const DEFAULT_EPSILONS: [f64; 7] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];

/// Step count for a budget: `floor(min(eps + 4, ceil(1.25 eps)))`, at least 1.
pub fn iterations_for(epsilon: f64) -> usize {
    let n = (epsilon + 4.0).min((1.25 * epsilon).ceil()).floor();
    if n.is_finite() && n >= 1.0 {
        n as usize
    } else {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackBudget {
    pub epsilon: f64,
    pub alpha: f64,
    pub iterations: usize,
}

impl AttackBudget {
    /// `alpha = 1` and the derived iteration count.
    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 1.0, iterations_for(epsilon))
    }

    /// `epsilon = 0` is accepted and yields the clean pair unchanged.
    pub fn new(epsilon: f64, alpha: f64, iterations: usize) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::Input(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::Input(format!("alpha must be finite and > 0, got {alpha}")));
        }
        if iterations == 0 {
            return Err(Error::Input("iterations must be positive".into()));
        }
        Ok(Self {
            epsilon,
            alpha,
            iterations,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Untargeted,
    InvertYaw,
    MoveBackwards,
    InvertPose,
    DepthFlipH,
    DepthFlipV,
}

impl AttackKind {
    pub const ALL: [AttackKind; 6] = [
        AttackKind::Untargeted,
        AttackKind::InvertYaw,
        AttackKind::MoveBackwards,
        AttackKind::InvertPose,
        AttackKind::DepthFlipH,
        AttackKind::DepthFlipV,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Untargeted => "untargeted",
            AttackKind::InvertYaw => "invert_yaw",
            AttackKind::MoveBackwards => "move_backwards",
            AttackKind::InvertPose => "invert_pose",
            AttackKind::DepthFlipH => "depth_flip_h",
            AttackKind::DepthFlipV => "depth_flip_v",
        }
    }

    /// Loss used by the pose-targeted kinds.
    pub fn targeted_loss(self) -> Option<TargetedLossKind> {
        match self {
            AttackKind::InvertYaw => Some(TargetedLossKind::Rotation),
            AttackKind::MoveBackwards => Some(TargetedLossKind::Translation),
            AttackKind::InvertPose => Some(TargetedLossKind::Pose),
            _ => None,
        }
    }

    pub fn flip_axis(self) -> Option<FlipAxis> {
        match self {
            AttackKind::DepthFlipH => Some(FlipAxis::Horizontal),
            AttackKind::DepthFlipV => Some(FlipAxis::Vertical),
            _ => None,
        }
    }

    /// Untargeted ascends its loss; every targeted kind descends toward its target.
    pub fn default_direction(self) -> Direction {
        match self {
            AttackKind::Untargeted => Direction::Ascend,
            _ => Direction::Descend,
        }
    }

    pub fn needs_depth_model(self) -> bool {
        matches!(
            self,
            AttackKind::Untargeted | AttackKind::DepthFlipH | AttackKind::DepthFlipV
        )
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AttackKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Contract(format!("unknown attack kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Step against the gradient.
    Descend,
    /// Step along the gradient.
    Ascend,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Descend => -1.0,
            Direction::Ascend => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub budget: AttackBudget,
    pub direction: Direction,
}

impl AttackSpec {
    /// Spec with the kind's default direction.
    pub fn new(kind: AttackKind, budget: AttackBudget) -> Self {
        Self {
            kind,
            budget,
            direction: kind.default_direction(),
        }
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }
}

/// Fixed pose target for a pose-targeted kind, built from the clean prediction.
pub fn make_target(kind: AttackKind, clean: &EulerPose) -> Result<TransformSE3> {
    match kind {
        AttackKind::InvertYaw => Ok(clean.with_yaw(-clean.yaw()).to_transform()),
        AttackKind::MoveBackwards => Ok(clean.with_tz(-clean.translation().z).to_transform()),
        AttackKind::InvertPose => Ok(clean.to_transform().inverse()),
        other => Err(Error::Contract(format!("{other} has no pose target"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iteration_schedule() {
        let got: Vec<usize> = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
            .into_iter()
            .map(iterations_for)
            .collect();
        assert_eq!(got, [1, 1, 2, 3, 5, 10, 20]);
        assert_eq!(iterations_for(0.0), 1);
    }

    #[test]
    fn budget_validation() {
        assert!(AttackBudget::from_epsilon(-1.0).is_err());
        assert!(AttackBudget::new(1.0, 0.0, 1).is_err());
        assert!(AttackBudget::new(1.0, 1.0, 0).is_err());
        assert_eq!(AttackBudget::from_epsilon(4.0).unwrap().iterations, 5);
    }

    #[test]
    fn targets() {
        let zero_yaw = EulerPose::new(0.1, 0.2, 0.3, 0.05, -0.02, 0.0).unwrap();
        assert_eq!(
            make_target(AttackKind::InvertYaw, &zero_yaw).unwrap(),
            zero_yaw.to_transform()
        );

        let fwd = EulerPose::new(0.0, 0.0, 0.5, 0.0, 0.0, 0.0).unwrap();
        let back = make_target(AttackKind::MoveBackwards, &fwd).unwrap();
        assert_eq!(back.translation().z, -0.5);
        assert_eq!(back.rotation(), fwd.to_transform().rotation());

        let p = EulerPose::new(0.3, -0.1, 0.7, 0.2, 0.1, -0.4).unwrap();
        let twice = make_target(AttackKind::InvertPose, &p).unwrap().inverse();
        let diff = (twice.to_matrix() - p.to_transform().to_matrix()).abs().max();
        assert!(diff < 1e-9);

        assert!(matches!(
            make_target(AttackKind::Untargeted, &p),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in AttackKind::ALL {
            assert_eq!(k.name().parse::<AttackKind>().unwrap(), k);
        }
        assert!("sideways".parse::<AttackKind>().is_err());
    }
}
