use super::{AutodiffError, Op, Result, Var, ABS_SMOOTHING, DIV_SINGULARITY};

/// Result shape of a broadcasting binary op, or `None` if incompatible.
fn broadcast_shape(a: &[usize], a_len: usize, b: &[usize], b_len: usize) -> Option<Vec<usize>> {
    if a == b || b_len == 1 {
        Some(a.to_vec())
    } else if a_len == 1 {
        Some(b.to_vec())
    } else {
        None
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn smooth_abs(v: f64) -> f64 {
    (v * v + ABS_SMOOTHING).sqrt() - ABS_SMOOTHING.sqrt()
}

// Fallible shape-checked ops, so not the std operator traits.
#[allow(clippy::should_implement_trait)]
impl<'t> Var<'t> {
    fn binary(
        self,
        other: Var<'t>,
        name: &'static str,
        op: fn(usize, usize) -> Op,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Var<'t>> {
        self.tape.check_owner(other)?;
        let (value, shape) = {
            let a = self.tape.node(self.id);
            let b = self.tape.node(other.id);
            let shape = broadcast_shape(&a.shape, a.value.len(), &b.shape, b.value.len())
                .ok_or_else(|| AutodiffError::Shape {
                    op: name,
                    lhs: a.shape.clone(),
                    rhs: b.shape.clone(),
                })?;
            let n = a.value.len().max(b.value.len());
            let value = (0..n)
                .map(|i| {
                    let x = if a.value.len() == 1 { a.value[0] } else { a.value[i] };
                    let y = if b.value.len() == 1 { b.value[0] } else { b.value[i] };
                    f(x, y)
                })
                .collect();
            (value, shape)
        };
        self.tape.push(value, shape, op(self.id, other.id), name)
    }

    fn unary(self, name: &'static str, op: Op, f: impl Fn(f64) -> f64) -> Result<Var<'t>> {
        let (value, shape) = {
            let a = self.tape.node(self.id);
            (a.value.iter().map(|&x| f(x)).collect(), a.shape.clone())
        };
        self.tape.push(value, shape, op, name)
    }

    pub fn add(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "add", Op::Add, |x, y| x + y)
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "sub", Op::Sub, |x, y| x - y)
    }

    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "mul", Op::Mul, |x, y| x * y)
    }

    pub fn div(self, other: Var<'t>) -> Result<Var<'t>> {
        self.tape.check_owner(other)?;
        {
            let b = self.tape.node(other.id);
            if let Some((index, &value)) = b
                .value
                .iter()
                .enumerate()
                .find(|(_, v)| v.abs() < DIV_SINGULARITY)
            {
                return Err(AutodiffError::Singular {
                    op: "div",
                    index,
                    value,
                });
            }
        }
        self.binary(other, "div", Op::Div, |x, y| x / y)
    }

    /// Matrix product of `[m, k]` and `[k, n]` tensors.
    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.tape.check_owner(other)?;
        let (value, m, k, n) = {
            let a = self.tape.node(self.id);
            let b = self.tape.node(other.id);
            if a.shape.len() != 2 || b.shape.len() != 2 || a.shape[1] != b.shape[0] {
                return Err(AutodiffError::Shape {
                    op: "matmul",
                    lhs: a.shape.clone(),
                    rhs: b.shape.clone(),
                });
            }
            let (m, k, n) = (a.shape[0], a.shape[1], b.shape[1]);
            let mut out = vec![0.0; m * n];
            for i in 0..m {
                let row = &a.value[i * k..(i + 1) * k];
                let dst = &mut out[i * n..(i + 1) * n];
                for (p, &av) in row.iter().enumerate() {
                    let brow = &b.value[p * n..(p + 1) * n];
                    for (o, &bv) in dst.iter_mut().zip(brow) {
                        *o += av * bv;
                    }
                }
            }
            (out, m, k, n)
        };
        self.tape.push(
            value,
            vec![m, n],
            Op::MatMul {
                a: self.id,
                b: other.id,
                m,
                k,
                n,
            },
            "matmul",
        )
    }

    pub fn neg(self) -> Result<Var<'t>> {
        self.unary("neg", Op::Neg(self.id), |x| -x)
    }

    /// Multiplies by a constant.
    pub fn scale(self, c: f64) -> Result<Var<'t>> {
        self.unary("scale", Op::Scale(self.id, c), |x| x * c)
    }

    /// Adds a constant.
    pub fn shift(self, c: f64) -> Result<Var<'t>> {
        self.unary("shift", Op::Shift(self.id), |x| x + c)
    }

    pub fn sin(self) -> Result<Var<'t>> {
        self.unary("sin", Op::Sin(self.id), f64::sin)
    }

    pub fn cos(self) -> Result<Var<'t>> {
        self.unary("cos", Op::Cos(self.id), f64::cos)
    }

    /// `acos` of the argument clamped to `[-1, 1]`. The derivative is taken
    /// at the argument clamped to `±ACOS_GRAD_CLAMP`, so it stays finite.
    pub fn acos(self) -> Result<Var<'t>> {
        self.unary("acos", Op::Acos(self.id), |x| x.clamp(-1.0, 1.0).acos())
    }

    pub fn sqrt(self) -> Result<Var<'t>> {
        self.unary("sqrt", Op::Sqrt(self.id), f64::sqrt)
    }

    /// Smoothed absolute value `sqrt(v^2 + 1e-12) - 1e-6`; zero at zero,
    /// differentiable everywhere.
    pub fn abs(self) -> Result<Var<'t>> {
        self.unary("abs", Op::Abs(self.id), smooth_abs)
    }

    pub fn exp(self) -> Result<Var<'t>> {
        self.unary("exp", Op::Exp(self.id), f64::exp)
    }

    pub fn ln(self) -> Result<Var<'t>> {
        self.unary("ln", Op::Ln(self.id), f64::ln)
    }

    pub fn tanh(self) -> Result<Var<'t>> {
        self.unary("tanh", Op::Tanh(self.id), f64::tanh)
    }

    /// `ln(1 + e^x)`, evaluated without overflow.
    pub fn softplus(self) -> Result<Var<'t>> {
        self.unary("softplus", Op::Softplus(self.id), softplus)
    }

    pub fn clamp(self, lo: f64, hi: f64) -> Result<Var<'t>> {
        self.unary("clamp", Op::Clamp { a: self.id, lo, hi }, |x| x.clamp(lo, hi))
    }

    pub fn sum(self) -> Result<Var<'t>> {
        let s = self.tape.node(self.id).value.iter().sum();
        self.tape.push(vec![s], vec![1], Op::Sum(self.id), "sum")
    }

    pub fn mean(self) -> Result<Var<'t>> {
        let m = {
            let a = self.tape.node(self.id);
            if a.value.is_empty() {
                return Err(AutodiffError::Shape {
                    op: "mean",
                    lhs: a.shape.clone(),
                    rhs: vec![],
                });
            }
            a.value.iter().sum::<f64>() / a.value.len() as f64
        };
        self.tape.push(vec![m], vec![1], Op::Mean(self.id), "mean")
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Var<'t>> {
        let (value, old) = {
            let a = self.tape.node(self.id);
            (a.value.clone(), a.shape.clone())
        };
        if shape.iter().product::<usize>() != value.len() {
            return Err(AutodiffError::Shape {
                op: "reshape",
                lhs: old,
                rhs: shape.to_vec(),
            });
        }
        self.tape
            .push(value, shape.to_vec(), Op::Reshape(self.id), "reshape")
    }

    /// `out[i] = self[index[i]]` over the flat layout.
    pub fn gather(self, index: &[usize], shape: &[usize]) -> Result<Var<'t>> {
        let padded: Vec<Option<usize>> = index.iter().map(|&i| Some(i)).collect();
        self.gather_padded(&padded, shape)
    }

    /// Like [`Var::gather`], with `None` entries producing zeros.
    pub fn gather_padded(self, index: &[Option<usize>], shape: &[usize]) -> Result<Var<'t>> {
        if shape.iter().product::<usize>() != index.len() {
            return Err(AutodiffError::Shape {
                op: "gather",
                lhs: vec![index.len()],
                rhs: shape.to_vec(),
            });
        }
        let value = {
            let a = self.tape.node(self.id);
            let len = a.value.len();
            let mut out = Vec::with_capacity(index.len());
            for &i in index {
                match i {
                    Some(i) if i >= len => {
                        return Err(AutodiffError::Index {
                            op: "gather",
                            index: i,
                            len,
                        })
                    }
                    Some(i) => out.push(a.value[i]),
                    None => out.push(0.0),
                }
            }
            out
        };
        self.tape.push(
            value,
            shape.to_vec(),
            Op::Gather {
                a: self.id,
                index: index.to_vec(),
            },
            "gather",
        )
    }

    /// Samples an `[h, w, c]` image at continuous `(x, y)` pixel coordinates
    /// given as an `[.., .., 2]` tensor. Neighbours outside the image read as
    /// zero. The returned mask marks samples with `0 <= x <= w-1` and
    /// `0 <= y <= h-1`.
    pub fn bilinear_sample(self, coords: Var<'t>) -> Result<(Var<'t>, Vec<bool>)> {
        self.tape.check_owner(coords)?;
        let (value, shape, mask, height, width, channels) = {
            let img = self.tape.node(self.id);
            let xy = self.tape.node(coords.id);
            if img.shape.len() != 3 || xy.shape.len() != 3 || xy.shape[2] != 2 {
                return Err(AutodiffError::Shape {
                    op: "bilinear_sample",
                    lhs: img.shape.clone(),
                    rhs: xy.shape.clone(),
                });
            }
            let (h, w, c) = (img.shape[0], img.shape[1], img.shape[2]);
            let samples = xy.shape[0] * xy.shape[1];
            let mut out = vec![0.0; samples * c];
            let mut mask = Vec::with_capacity(samples);
            for s in 0..samples {
                let (x, y) = (xy.value[2 * s], xy.value[2 * s + 1]);
                // Range checked after snapping, like the taps.
                let (sx, sy) = (snap(x), snap(y));
                mask.push(sx >= 0.0 && sy >= 0.0 && sx <= (w - 1) as f64 && sy <= (h - 1) as f64);
                for (wt, idx) in bilinear_taps(x, y, h, w) {
                    if let Some(p) = idx {
                        for ch in 0..c {
                            out[s * c + ch] += wt * img.value[p * c + ch];
                        }
                    }
                }
            }
            (out, vec![xy.shape[0], xy.shape[1], c], mask, h, w, c)
        };
        let out = self.tape.push(
            value,
            shape,
            Op::BilinearSample {
                image: self.id,
                coords: coords.id,
                height,
                width,
                channels,
            },
            "bilinear_sample",
        )?;
        Ok((out, mask))
    }
}

pub(crate) const GRID_SNAP: f64 = 1e-9;

fn snap(v: f64) -> f64 {
    let (i, f) = split_coordinate(v);
    i + f
}

/// Integer part and fraction of a sampling coordinate, with snapping.
pub(crate) fn split_coordinate(v: f64) -> (f64, f64) {
    let r = v.round();
    if (v - r).abs() < GRID_SNAP {
        (r, 0.0)
    } else {
        let f = v.floor();
        (f, v - f)
    }
}

/// The four bilinear taps `(weight, pixel index)` around `(x, y)`, with
/// `None` for neighbours outside an `h x w` grid.
///
/// Coordinates within [`GRID_SNAP`] of an integer are snapped to it, so
/// grid-aligned sampling reproduces pixels exactly.
pub(crate) fn bilinear_taps(x: f64, y: f64, h: usize, w: usize) -> [(f64, Option<usize>); 4] {
    let (x0, fx) = split_coordinate(x);
    let (y0, fy) = split_coordinate(y);
    let at = |xi: f64, yi: f64| -> Option<usize> {
        if xi < 0.0 || yi < 0.0 || xi >= w as f64 || yi >= h as f64 {
            None
        } else {
            Some(yi as usize * w + xi as usize)
        }
    };
    [
        ((1.0 - fx) * (1.0 - fy), at(x0, y0)),
        (fx * (1.0 - fy), at(x0 + 1.0, y0)),
        ((1.0 - fx) * fy, at(x0, y0 + 1.0)),
        (fx * fy, at(x0 + 1.0, y0 + 1.0)),
    ]
}
