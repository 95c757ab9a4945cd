use crate::autodiff::{grad_sign, Tape};
use crate::geometry::TransformSE3;
use crate::image::{ImagePair, ImageTensor, PIXEL_MAX};
use crate::Result;

use super::{AdversarialObjective, AttackBudget, Direction};

/// Consecutive all-zero gradients that trigger a stagnation warning.
pub const STAGNATION_ITERATIONS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialPair {
    pub clean: ImagePair,
    pub adversarial: ImagePair,
    /// Objective at the clean pair.
    pub initial_loss: f64,
    /// Objective after each step; one entry per iteration.
    pub loss_trace: Vec<f64>,
    /// Whether the gradient vanished for a run of iterations.
    pub stagnated: bool,
    /// Frozen pose target, for pose-targeted attacks.
    pub target: Option<TransformSE3>,
}

impl AdversarialPair {
    pub fn final_loss(&self) -> f64 {
        self.loss_trace.last().copied().unwrap_or(self.initial_loss)
    }

    /// Largest per-pixel deviation from the clean pair.
    pub fn max_perturbation(&self) -> f64 {
        self.clean
            .first
            .max_abs_diff(&self.adversarial.first)
            .max(self.clean.second.max_abs_diff(&self.adversarial.second))
    }
}

/// Projects `value` onto `[clean - eps, clean + eps] ∩ [0, 255]` and rounds
/// to `f32` without leaving the ball.
fn project(value: f64, clean: f32, epsilon: f64) -> f32 {
    let c = f64::from(clean);
    let v = value.clamp(c - epsilon, c + epsilon).clamp(0.0, f64::from(PIXEL_MAX));
    let mut out = v as f32;
    while (f64::from(out) - c).abs() > epsilon {
        out = if out > clean { out.next_down() } else { out.next_up() };
    }
    out
}

fn step(current: &ImageTensor, clean: &ImageTensor, grad: &[f64], scale: f64, epsilon: f64) -> Result<ImageTensor> {
    let data = current
        .data()
        .iter()
        .zip(clean.data())
        .zip(grad_sign(grad))
        .map(|((&x, &x0), s)| project(f64::from(x) + scale * s, x0, epsilon))
        .collect();
    ImageTensor::new(current.height(), current.width(), current.channels(), data)
}

/// Pixel gradients of the first and second image.
type PairGrad = (Vec<f64>, Vec<f64>);

fn evaluate(objective: &dyn AdversarialObjective, pair: &ImagePair, with_grad: bool) -> Result<(f64, Option<PairGrad>)> {
    let tape = Tape::new();
    let a = pair.first.to_tape(&tape)?;
    let b = pair.second.to_tape(&tape)?;
    let loss = objective.loss(&tape, a, b)?;
    let value = loss.item();
    if !with_grad {
        return Ok((value, None));
    }
    let g = tape.backward(loss)?;
    Ok((value, Some((g.wrt(a), g.wrt(b)))))
}

/// Iterated sign-gradient steps on both frames of `pair`, projected after
/// every step.
pub fn pgd_attack(
    objective: &dyn AdversarialObjective,
    pair: &ImagePair,
    budget: &AttackBudget,
    direction: Direction,
) -> Result<AdversarialPair> {
    let scale = direction.sign() * budget.alpha;
    let mut current = pair.clone();
    let mut trace = Vec::with_capacity(budget.iterations);
    let mut initial_loss = None;
    let mut zero_run = 0;
    let mut stagnated = false;

    for i in 0..budget.iterations {
        let (loss, grads) = evaluate(objective, &current, true)?;
        let (ga, gb) = grads.expect("gradient requested");
        if i == 0 {
            initial_loss = Some(loss);
        } else {
            trace.push(loss);
        }
        if ga.iter().chain(&gb).all(|g| *g == 0.0) {
            zero_run += 1;
            if zero_run == STAGNATION_ITERATIONS {
                stagnated = true;
                log::warn!("gradient has been zero for {zero_run} consecutive iterations");
            }
        } else {
            zero_run = 0;
        }
        current = ImagePair {
            first: step(&current.first, &pair.first, &ga, scale, budget.epsilon)?,
            second: step(&current.second, &pair.second, &gb, scale, budget.epsilon)?,
        };
    }
    trace.push(evaluate(objective, &current, false)?.0);

    Ok(AdversarialPair {
        clean: pair.clone(),
        adversarial: current,
        initial_loss: initial_loss.expect("at least one iteration"),
        loss_trace: trace,
        stagnated,
        target: None,
    })
}
