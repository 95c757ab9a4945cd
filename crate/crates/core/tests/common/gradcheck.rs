//! Reverse-mode gradients against central finite differences.

use pose_attack::attack::make_target;
use pose_attack::attack::AttackKind;
use pose_attack::autodiff::{Tape, Var};
use pose_attack::image::FlipAxis;
use pose_attack::losses::{
    depth_attack_loss, flip_depth_target, targeted_loss, untargeted_loss, Intrinsics, LossWeights, TargetedLossKind,
};
use pose_attack::models::{predict_depth, predict_pose, DepthModel, PoseModel, ToyDepthModel, ToyPoseModel, ToyWeights};
use rand::Rng;

use super::{rel_err, rng, texture};

type Primitive = for<'t> fn(&'t Tape, Var<'t>) -> pose_attack::autodiff::Result<Var<'t>>;

pub struct Case {
    pub name: &'static str,
    pub inputs: fn(&mut rand_chacha::ChaCha8Rng) -> Vec<f64>,
    pub op: Primitive,
}

fn uniform(r: &mut rand_chacha::ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(lo..hi)).collect()
}

/// Magnitudes in `[lo, hi]` with random sign.
fn away_from_zero(r: &mut rand_chacha::ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|_| r.random_range(lo..hi) * if r.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect()
}

fn halves<'t>(x: Var<'t>) -> pose_attack::autodiff::Result<(Var<'t>, Var<'t>)> {
    let n = x.len() / 2;
    let a: Vec<usize> = (0..n).collect();
    let b: Vec<usize> = (n..2 * n).collect();
    Ok((x.gather(&a, &[n])?, x.gather(&b, &[n])?))
}

/// One case per tape primitive.
pub fn primitives() -> Vec<Case> {
    vec![
        Case { name: "add", inputs: |r| uniform(r, 8, -2.0, 2.0), op: |_, x| { let (a, b) = halves(x)?; a.add(b) } },
        Case { name: "sub", inputs: |r| uniform(r, 8, -2.0, 2.0), op: |_, x| { let (a, b) = halves(x)?; a.sub(b) } },
        Case { name: "mul", inputs: |r| uniform(r, 8, -2.0, 2.0), op: |_, x| { let (a, b) = halves(x)?; a.mul(b) } },
        Case {
            name: "div",
            inputs: |r| {
                let mut v = uniform(r, 4, -2.0, 2.0);
                v.extend(away_from_zero(r, 4, 0.5, 2.0));
                v
            },
            op: |_, x| { let (a, b) = halves(x)?; a.div(b) },
        },
        Case {
            name: "broadcast_mul",
            inputs: |r| uniform(r, 5, -2.0, 2.0),
            op: |_, x| {
                let s = x.gather(&[4], &[1])?;
                x.gather(&[0, 1, 2, 3], &[4])?.mul(s)
            },
        },
        Case {
            name: "matmul",
            inputs: |r| uniform(r, 12, -1.0, 1.0),
            op: |_, x| {
                let a = x.gather(&(0..6).collect::<Vec<_>>(), &[2, 3])?;
                let b = x.gather(&(6..12).collect::<Vec<_>>(), &[3, 2])?;
                a.matmul(b)
            },
        },
        Case { name: "neg", inputs: |r| uniform(r, 4, -2.0, 2.0), op: |_, x| x.neg() },
        Case { name: "scale", inputs: |r| uniform(r, 4, -2.0, 2.0), op: |_, x| x.scale(-1.7) },
        Case { name: "shift", inputs: |r| uniform(r, 4, -2.0, 2.0), op: |_, x| x.shift(0.3) },
        Case { name: "sin", inputs: |r| uniform(r, 4, -3.0, 3.0), op: |_, x| x.sin() },
        Case { name: "cos", inputs: |r| uniform(r, 4, -3.0, 3.0), op: |_, x| x.cos() },
        Case { name: "acos", inputs: |r| uniform(r, 4, -0.9, 0.9), op: |_, x| x.acos() },
        Case { name: "sqrt", inputs: |r| uniform(r, 4, 0.2, 3.0), op: |_, x| x.sqrt() },
        Case { name: "abs", inputs: |r| away_from_zero(r, 4, 0.05, 2.0), op: |_, x| x.abs() },
        Case { name: "exp", inputs: |r| uniform(r, 4, -2.0, 2.0), op: |_, x| x.exp() },
        Case { name: "ln", inputs: |r| uniform(r, 4, 0.2, 3.0), op: |_, x| x.ln() },
        Case { name: "tanh", inputs: |r| uniform(r, 4, -2.0, 2.0), op: |_, x| x.tanh() },
        Case { name: "softplus", inputs: |r| uniform(r, 4, -3.0, 3.0), op: |_, x| x.softplus() },
        Case {
            name: "clamp",
            inputs: |r| {
                let mut v = away_from_zero(r, 3, 0.0, 0.4);
                v.extend(away_from_zero(r, 3, 0.6, 1.0));
                v
            },
            op: |_, x| x.clamp(-0.5, 0.5),
        },
        Case { name: "sum", inputs: |r| uniform(r, 5, -2.0, 2.0), op: |_, x| x.sum() },
        Case { name: "mean", inputs: |r| uniform(r, 5, -2.0, 2.0), op: |_, x| x.mean() },
        Case { name: "reshape", inputs: |r| uniform(r, 6, -2.0, 2.0), op: |_, x| x.reshape(&[2, 3]) },
        Case { name: "gather", inputs: |r| uniform(r, 4, -2.0, 2.0), op: |_, x| x.gather(&[3, 0, 0, 2, 1], &[5]) },
        Case {
            name: "gather_padded",
            inputs: |r| uniform(r, 4, -2.0, 2.0),
            op: |_, x| x.gather_padded(&[Some(1), None, Some(1), Some(3)], &[4]),
        },
        Case {
            name: "concat",
            inputs: |r| uniform(r, 6, -2.0, 2.0),
            op: |t, x| {
                let (a, b) = halves(x)?;
                t.concat(&[b, a.sin()?])
            },
        },
        Case {
            name: "bilinear_sample",
            inputs: |r| {
                let mut v = uniform(r, 3 * 3 * 2, 0.0, 255.0);
                // Sample points kept clear of integer coordinates.
                for _ in 0..4 {
                    v.push(r.random_range(0.0..2.0f64).floor() + r.random_range(0.1..0.9));
                }
                v
            },
            op: |_, x| {
                let img = x.gather(&(0..18).collect::<Vec<_>>(), &[3, 3, 2])?;
                let xy = x.gather(&(18..22).collect::<Vec<_>>(), &[1, 2, 2])?;
                Ok(img.bilinear_sample(xy)?.0)
            },
        },
    ]
}

/// `sum(w * op(x))` for fixed random weights `w`.
fn weighted(op: Primitive, x: &[f64], w: &[f64]) -> (f64, Vec<f64>) {
    let tape = Tape::new();
    let v = tape.leaf(x.to_vec(), &[x.len()]).unwrap();
    let y = op(&tape, v).unwrap();
    let n = y.len();
    let wv = tape.leaf(w[..n].to_vec(), &y.shape()).unwrap();
    let loss = y.mul(wv).unwrap().sum().unwrap();
    let g = tape.backward(loss).unwrap().wrt(v);
    (loss.item(), g)
}

/// Largest relative error over every input coordinate of `case`.
pub fn primitive_error(case: &Case, seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = (case.inputs)(&mut r);
    let w = uniform(&mut r, 64, -1.0, 1.0);
    let (_, analytic) = weighted(case.op, &x, &w);
    // Small enough for truncation error, large enough that cancellation
    // against weighted sums of pixel-scale values stays below 1e-9.
    let h = 1e-4;
    (0..x.len())
        .map(|i| {
            let (mut up, mut down) = (x.clone(), x.clone());
            up[i] += h;
            down[i] -= h;
            let numeric = (weighted(case.op, &up, &w).0 - weighted(case.op, &down, &w).0) / (2.0 * h);
            rel_err(analytic[i], numeric)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Untargeted,
    InvertYaw,
    MoveBackwards,
    /// Depth network toward its horizontally flipped clean output.
    DepthFlip,
}

pub const PIPELINES: [Pipeline; 3] = [Pipeline::Untargeted, Pipeline::InvertYaw, Pipeline::MoveBackwards];

struct Instance {
    h: usize,
    w: usize,
    first: Vec<f64>,
    second: Vec<f64>,
    pose: ToyPoseModel,
    depth: ToyDepthModel,
    target: pose_attack::geometry::TransformSE3,
}

fn instance(pipeline: Pipeline, seed: u64) -> Instance {
    let mut r = rng(seed);
    let h = r.random_range(6..=12);
    let w = r.random_range(6..=12);
    let shift = r.random_range(0.3..0.9);
    let mut r2 = r.clone();
    let first = texture(&mut r, h, w, 0.0);
    let second = texture(&mut r2, h, w, shift);
    let pose = ToyPoseModel::new(ToyWeights::seeded_pose(seed, h, w)).unwrap();
    let depth = ToyDepthModel::new(ToyWeights::seeded_depth(seed + 1)).unwrap();
    let kind = match pipeline {
        Pipeline::MoveBackwards => AttackKind::MoveBackwards,
        _ => AttackKind::InvertYaw,
    };
    let clean = predict_pose(&pose, &super::image(&first, h, w), &super::image(&second, h, w)).unwrap();
    let target = make_target(kind, &clean).unwrap();
    Instance { h, w, first, second, pose, depth, target }
}

fn pipeline_loss(p: Pipeline, inst: &Instance, first: &[f64], second: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let tape = Tape::new();
    let shape = [inst.h, inst.w, 3];
    let a = tape.leaf(first.to_vec(), &shape).unwrap();
    let b = tape.leaf(second.to_vec(), &shape).unwrap();
    let k = Intrinsics::default_for(inst.h, inst.w);
    let loss = match p {
        Pipeline::Untargeted => {
            untargeted_loss(&tape, a, b, &inst.depth, &inst.pose, &LossWeights::default(), &k).unwrap()
        }
        Pipeline::InvertYaw => {
            targeted_loss(TargetedLossKind::Rotation, inst.pose.forward(a, b).unwrap(), &inst.target).unwrap()
        }
        Pipeline::MoveBackwards => {
            targeted_loss(TargetedLossKind::Translation, inst.pose.forward(a, b).unwrap(), &inst.target).unwrap()
        }
        Pipeline::DepthFlip => {
            let clean = predict_depth(&inst.depth, &super::image(&inst.first, inst.h, inst.w)).unwrap();
            let target = flip_depth_target(&clean, FlipAxis::Horizontal);
            depth_attack_loss(inst.depth.forward(a).unwrap(), &target).unwrap()
        }
    };
    let g = tape.backward(loss).unwrap();
    (loss.item(), g.wrt(a), g.wrt(b))
}

/// Largest relative error of the pixel gradient of `pipeline`: a random
/// +-1 directional derivative plus four single pixels.
pub fn pipeline_error(pipeline: Pipeline, seed: u64) -> f64 {
    let inst = instance(pipeline, seed);
    let (_, ga, gb) = pipeline_loss(pipeline, &inst, &inst.first, &inst.second);
    let n = inst.first.len();
    let mut r = rng(seed ^ 0x9e37_79b9);
    let mut directions: Vec<Vec<f64>> = vec![(0..2 * n).map(|_| if r.random_bool(0.5) { 1.0 } else { -1.0 }).collect()];
    for _ in 0..4 {
        let mut d = vec![0.0; 2 * n];
        d[r.random_range(0..2 * n)] = 1.0;
        directions.push(d);
    }
    // Flipped depth targets leave zero residuals (the centre column of odd
    // widths), where smoothed |.| bends on a 1e-6 scale.
    let h = if pipeline == Pipeline::DepthFlip { 1e-5 } else { 1e-3 };
    let eval = |d: &[f64], s: f64| {
        let a: Vec<f64> = inst.first.iter().zip(&d[..n]).map(|(x, d)| x + s * d).collect();
        let b: Vec<f64> = inst.second.iter().zip(&d[n..]).map(|(x, d)| x + s * d).collect();
        pipeline_loss(pipeline, &inst, &a, &b).0
    };
    directions
        .iter()
        .map(|d| {
            let analytic: f64 = ga.iter().chain(&gb).zip(d).map(|(g, d)| g * d).sum();
            let numeric = (eval(d, h) - eval(d, -h)) / (2.0 * h);
            rel_err(analytic, numeric)
        })
        .fold(0.0, f64::max)
}
