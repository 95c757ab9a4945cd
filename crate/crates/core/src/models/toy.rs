//! Tiny seeded convolutional networks standing in for the pose and depth
//! networks.
//!
//! Pose: pixels scaled to `[-0.5, 0.5]`, the two frames stacked into six
//! channels, two 3x3 stride-2 tanh convolutions and a dense head producing
//! six raw outputs. Translations are `translation * raw`; angles are
//! `pi * tanh(angle * raw / pi)`, which has slope `angle` at zero and stays
//! inside `(-pi, pi)`.
//!
//! Depth: one 3x3 tanh convolution, one 3x3 linear convolution to a single
//! channel, then softplus.

use std::f64::consts::PI;

use crate::autodiff::{Tape, Var};
use crate::geometry::EulerPose;
use crate::image::ImagePair;
use crate::{Error, Result};

use super::weights::{strided, ModelKind, ToyWeights};
use super::{check_frame_shape, DepthModel, PoseModel};

/// Output maps of the toy pose head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputScaling {
    pub translation: f64,
    pub angle: f64,
}

impl Default for OutputScaling {
    fn default() -> Self {
        Self {
            translation: 0.01,
            angle: 0.01,
        }
    }
}

/// im2col gather for a same-padded 3x3 convolution over `[h, w, cin]`.
fn im2col_index(h: usize, w: usize, cin: usize, stride: usize) -> (Vec<Option<usize>>, usize, usize) {
    let (ho, wo) = if stride == 1 { (h, w) } else { (strided(h), strided(w)) };
    let mut idx = Vec::with_capacity(ho * wo * 9 * cin);
    for oy in 0..ho {
        for ox in 0..wo {
            for ky in 0..3 {
                for kx in 0..3 {
                    let iy = (oy * stride + ky) as isize - 1;
                    let ix = (ox * stride + kx) as isize - 1;
                    let inside = iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w;
                    for ci in 0..cin {
                        idx.push(inside.then(|| (iy as usize * w + ix as usize) * cin + ci));
                    }
                }
            }
        }
    }
    (idx, ho, wo)
}

struct Conv {
    weight: (usize, usize),
    bias: (usize, usize),
    cin: usize,
    cout: usize,
    stride: usize,
}

impl Conv {
    fn new(offset: &mut usize, cin: usize, cout: usize, stride: usize) -> Self {
        let w = (*offset, 9 * cin * cout);
        *offset += w.1;
        let b = (*offset, cout);
        *offset += b.1;
        Conv {
            weight: w,
            bias: b,
            cin,
            cout,
            stride,
        }
    }

    /// `[h, w, cin]` to `[ho, wo, cout]`.
    fn apply<'t>(&self, params: &[f32], x: Var<'t>, h: usize, w: usize) -> Result<(Var<'t>, usize, usize)> {
        let tape = x.tape();
        let (idx, ho, wo) = im2col_index(h, w, self.cin, self.stride);
        let cols = x.gather_padded(&idx, &[ho * wo, 9 * self.cin])?;
        let weight = leaf(tape, params, self.weight, &[9 * self.cin, self.cout])?;
        let bias = leaf(tape, params, self.bias, &[self.cout])?;
        let tile: Vec<usize> = (0..ho * wo * self.cout).map(|i| i % self.cout).collect();
        let out = cols
            .matmul(weight)?
            .add(bias.gather(&tile, &[ho * wo, self.cout])?)?
            .reshape(&[ho, wo, self.cout])?;
        Ok((out, ho, wo))
    }
}

fn leaf<'t>(tape: &'t Tape, params: &[f32], (start, len): (usize, usize), shape: &[usize]) -> Result<Var<'t>> {
    let v = params[start..start + len].iter().map(|&p| f64::from(p)).collect();
    Ok(tape.leaf(v, shape)?)
}

/// Scales pixels from `[0, 255]` to `[-0.5, 0.5]`.
fn normalize(x: Var<'_>) -> Result<Var<'_>> {
    Ok(x.scale(1.0 / 255.0)?.shift(-0.5)?)
}

pub struct ToyPoseModel {
    weights: ToyWeights,
    scaling: OutputScaling,
    height: usize,
    width: usize,
    conv1: Conv,
    conv2: Conv,
    dense: ((usize, usize), (usize, usize), usize),
    stack_index: Vec<usize>,
}

impl ToyPoseModel {
    pub fn new(weights: ToyWeights) -> Result<Self> {
        Self::with_scaling(weights, OutputScaling::default())
    }

    pub fn with_scaling(weights: ToyWeights, scaling: OutputScaling) -> Result<Self> {
        if weights.kind() != ModelKind::Pose {
            return Err(Error::Input("toy pose model needs pose weights".into()));
        }
        let d: Vec<usize> = weights.dims().iter().map(|&v| v as usize).collect();
        let (h, w, c1, c2) = (d[0], d[1], d[2], d[3]);
        let mut offset = 0;
        let conv1 = Conv::new(&mut offset, 6, c1, 2);
        let conv2 = Conv::new(&mut offset, c1, c2, 2);
        let features = strided(strided(h)) * strided(strided(w)) * c2;
        let dw = (offset, features * 6);
        offset += dw.1;
        let db = (offset, 6);
        // Interleave the two 3-channel frames into one 6-channel tensor.
        let n = h * w;
        let stack_index = (0..n)
            .flat_map(|p| (0..6).map(move |c| if c < 3 { p * 3 + c } else { 3 * n + p * 3 + c - 3 }))
            .collect();
        Ok(Self {
            weights,
            scaling,
            height: h,
            width: w,
            conv1,
            conv2,
            dense: (dw, db, features),
            stack_index,
        })
    }

    pub fn weights(&self) -> &ToyWeights {
        &self.weights
    }

    /// Raw six-vector before the output maps.
    pub fn raw<'t>(&self, first: Var<'t>, second: Var<'t>) -> Result<Var<'t>> {
        check_frame_shape(self.input_shape(), &first.shape())?;
        check_frame_shape(self.input_shape(), &second.shape())?;
        let tape = first.tape();
        let params = self.weights.params();
        let (h, w) = (self.height, self.width);
        let stacked = tape
            .concat(&[first, second])?
            .gather(&self.stack_index, &[h, w, 6])?;
        let x = normalize(stacked)?;
        let (x, h1, w1) = self.conv1.apply(params, x, h, w)?;
        let x = x.tanh()?;
        let (x, _, _) = self.conv2.apply(params, x, h1, w1)?;
        let x = x.tanh()?;
        let (dw, db, features) = self.dense;
        let out = x
            .reshape(&[1, features])?
            .matmul(leaf(tape, params, dw, &[features, 6])?)?
            .reshape(&[6])?
            .add(leaf(tape, params, db, &[6])?)?;
        Ok(out)
    }
}

impl ToyPoseModel {
    /// Shifts the head biases so the mean raw output over `pairs` equals the
    /// mean raw value of `targets` under the inverse output maps. Only the
    /// six biases change; the image-dependent part of the network is kept.
    pub fn calibrated(&self, pairs: &[ImagePair], targets: &[EulerPose]) -> Result<Self> {
        if pairs.is_empty() || pairs.len() != targets.len() {
            return Err(Error::Contract(format!(
                "calibration needs one target per pair, got {} pairs and {} targets",
                pairs.len(),
                targets.len()
            )));
        }
        let mut shift = [0.0f64; 6];
        for (pair, target) in pairs.iter().zip(targets) {
            let tape = Tape::new();
            let raw = self.raw(pair.first.to_tape(&tape)?, pair.second.to_tape(&tape)?)?.values();
            let t = target.to_array();
            for i in 0..6 {
                let wanted = if i < 3 {
                    t[i] / self.scaling.translation
                } else {
                    (t[i] / PI).clamp(-0.999_999, 0.999_999).atanh() * PI / self.scaling.angle
                };
                shift[i] += (wanted - raw[i]) / pairs.len() as f64;
            }
        }
        let mut params = self.weights.params().to_vec();
        let start = self.dense.1 .0;
        for (p, s) in params[start..start + 6].iter_mut().zip(shift) {
            *p = (f64::from(*p) + s) as f32;
        }
        let weights = ToyWeights::new(ModelKind::Pose, self.weights.seed(), self.weights.dims().to_vec(), params)?;
        Self::with_scaling(weights, self.scaling)
    }
}

impl PoseModel for ToyPoseModel {
    fn forward<'t>(&self, first: Var<'t>, second: Var<'t>) -> Result<Var<'t>> {
        let tape = first.tape();
        let raw = self.raw(first, second)?;
        let t = raw.gather(&[0, 1, 2], &[3])?.scale(self.scaling.translation)?;
        let angles = raw
            .gather(&[3, 4, 5], &[3])?
            .scale(self.scaling.angle / PI)?
            .tanh()?
            .scale(PI)?;
        Ok(tape.concat(&[t, angles])?)
    }

    fn input_shape(&self) -> Option<[usize; 3]> {
        Some([self.height, self.width, 3])
    }
}

pub struct ToyDepthModel {
    weights: ToyWeights,
    conv1: Conv,
    conv2: Conv,
}

impl ToyDepthModel {
    pub fn new(weights: ToyWeights) -> Result<Self> {
        if weights.kind() != ModelKind::Depth {
            return Err(Error::Input("toy depth model needs depth weights".into()));
        }
        let c1 = weights.dims()[0] as usize;
        let mut offset = 0;
        let conv1 = Conv::new(&mut offset, 3, c1, 1);
        let conv2 = Conv::new(&mut offset, c1, 1, 1);
        Ok(Self {
            weights,
            conv1,
            conv2,
        })
    }

    pub fn weights(&self) -> &ToyWeights {
        &self.weights
    }
}

impl DepthModel for ToyDepthModel {
    fn forward<'t>(&self, image: Var<'t>) -> Result<Var<'t>> {
        let shape = image.shape();
        check_frame_shape(None, &shape)?;
        if shape[2] != 3 {
            return Err(Error::Shape(format!("depth model expects 3 channels, got {shape:?}")));
        }
        let (h, w) = (shape[0], shape[1]);
        let params = self.weights.params();
        let x = normalize(image)?;
        let (x, _, _) = self.conv1.apply(params, x, h, w)?;
        let (x, _, _) = self.conv2.apply(params, x.tanh()?, h, w)?;
        Ok(x.softplus()?.reshape(&[h, w])?)
    }
}
