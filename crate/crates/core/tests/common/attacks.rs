//! Seeded toy attack instances and the PGD contract check.

use pose_attack::attack::{
    attack_pair, pgd_attack, AdversarialPair, AttackBudget, AttackKind, AttackModels, AttackSpec, Direction,
    LinearObjective,
};
use pose_attack::image::{ImagePair, PIXEL_MAX};
use pose_attack::losses::{Intrinsics, LossWeights};
use pose_attack::models::{ToyDepthModel, ToyPoseModel, ToyWeights};
use rand::Rng;

use super::checks::Check;

pub const SIZE: usize = 16;

pub struct Toy {
    pub pose: ToyPoseModel,
    pub depth: ToyDepthModel,
    pub pair: ImagePair,
    pub intrinsics: Intrinsics,
}

impl Toy {
    pub fn new(seed: u64) -> Self {
        Self {
            pose: ToyPoseModel::new(ToyWeights::seeded_pose(seed, SIZE, SIZE)).unwrap(),
            depth: ToyDepthModel::new(ToyWeights::seeded_depth(seed + 1000)).unwrap(),
            pair: super::textured_pair(seed, SIZE, SIZE),
            intrinsics: Intrinsics::default_for(SIZE, SIZE),
        }
    }

    pub fn models(&self) -> AttackModels<'_> {
        AttackModels {
            pose: &self.pose,
            depth: Some(&self.depth),
        }
    }

    pub fn attack(&self, kind: AttackKind, epsilon: f64) -> AdversarialPair {
        let spec = AttackSpec::new(kind, AttackBudget::from_epsilon(epsilon).unwrap());
        attack_pair(&spec, &self.pair, self.models(), &LossWeights::default(), &self.intrinsics).unwrap()
    }
}

/// `||x_adv - x||_inf <= eps` and every pixel inside `[0, 255]`.
pub fn contract(out: &AdversarialPair, epsilon: f64) -> Check {
    let frames = [
        (&out.clean.first, &out.adversarial.first),
        (&out.clean.second, &out.adversarial.second),
    ];
    for (clean, adv) in frames {
        for (&c, &a) in clean.data().iter().zip(adv.data()) {
            if !(0.0..=PIXEL_MAX).contains(&a) {
                return Err(format!("pixel {a} outside [0, 255]"));
            }
            let d = (f64::from(a) - f64::from(c)).abs();
            if d > epsilon {
                return Err(format!("perturbation {d} exceeds epsilon {epsilon}"));
            }
        }
    }
    Ok(())
}

/// Whether the attack moved its objective in the intended direction.
pub fn effective(kind: AttackKind, out: &AdversarialPair) -> bool {
    match kind.default_direction() {
        Direction::Ascend => out.final_loss() > out.initial_loss,
        Direction::Descend => out.final_loss() < out.initial_loss,
    }
}

/// Successes over `seeds`, failing on any contract violation.
pub fn effectiveness(kind: AttackKind, epsilon: f64, seeds: std::ops::Range<u64>) -> Result<usize, String> {
    let mut ok = 0;
    for seed in seeds {
        let out = Toy::new(seed).attack(kind, epsilon);
        contract(&out, epsilon).map_err(|e| format!("{kind} seed {seed}: {e}"))?;
        ok += usize::from(effective(kind, &out));
    }
    Ok(ok)
}

/// Descent on `w . x` over a random pair: the trace never rises and the
/// loss falls by exactly `alpha * sum|w|` while no pixel is clipped.
pub fn linear_monotone(seed: u64) -> Check {
    let mut r = super::rng(seed);
    // Integer pixels keep every unit step exact in f32.
    let round = |img: &pose_attack::image::ImageTensor| {
        pose_attack::image::ImageTensor::new(6, 5, 3, img.data().iter().map(|v| v.round()).collect()).unwrap()
    };
    let textured = super::textured_pair(seed, 6, 5);
    let pair = ImagePair::new(round(&textured.first), round(&textured.second)).unwrap();
    let n = 2 * 6 * 5 * 3;
    let weights: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let l1: f64 = weights.iter().map(|w| w.abs()).sum();
    let objective = LinearObjective { weights };
    let epsilon = 8.0;
    let budget = AttackBudget::new(epsilon, 1.0, 6).unwrap();
    let out = pgd_attack(&objective, &pair, &budget, Direction::Descend).map_err(|e| e.to_string())?;
    contract(&out, epsilon)?;
    let mut previous = out.initial_loss;
    for (i, &v) in out.loss_trace.iter().enumerate() {
        let drop = previous - v;
        // Texture pixels sit in [10, 245]: 6 unit steps never clip.
        if (drop - l1).abs() > 1e-9 * l1 {
            return Err(format!("step {i}: loss fell by {drop}, expected {l1}"));
        }
        previous = v;
    }
    Ok(())
}
