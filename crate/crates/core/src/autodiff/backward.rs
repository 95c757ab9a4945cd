use super::ops::{bilinear_taps, sigmoid, split_coordinate};
use super::{AutodiffError, Op, Result, Tape, Var, ABS_SMOOTHING, ACOS_GRAD_CLAMP};

/// Gradients of a scalar loss with respect to every node on a tape.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    lens: Vec<usize>,
}

impl Gradients {
    /// Gradient with respect to `v`; zeros if `v` did not influence the loss.
    pub fn wrt(&self, v: Var<'_>) -> Vec<f64> {
        match self.grads.get(v.id()).and_then(Option::as_ref) {
            Some(g) => g.clone(),
            None => vec![0.0; self.lens.get(v.id()).copied().unwrap_or_else(|| v.len())],
        }
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, len: usize, f: impl FnOnce(&mut [f64])) {
    let g = slot.get_or_insert_with(|| vec![0.0; len]);
    f(g);
}

/// Accumulates `upstream * local(i)` into a possibly broadcast operand.
fn accumulate_broadcast(
    slot: &mut Option<Vec<f64>>,
    len: usize,
    upstream: &[f64],
    local: impl Fn(usize) -> f64,
) {
    accumulate(slot, len, |g| {
        if len == 1 {
            g[0] += upstream.iter().enumerate().map(|(i, u)| u * local(i)).sum::<f64>();
        } else {
            for (i, u) in upstream.iter().enumerate() {
                g[i] += u * local(i);
            }
        }
    });
}

impl Tape {
    /// Reverse sweep from a single-element `loss`.
    pub fn backward(&self, loss: Var<'_>) -> Result<Gradients> {
        self.check_owner(loss)?;
        let nodes = self.nodes.borrow();
        let root = &nodes[loss.id];
        if root.value.len() != 1 {
            return Err(AutodiffError::NotScalar(root.shape.clone()));
        }
        let lens: Vec<usize> = nodes.iter().map(|n| n.value.len()).collect();
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
        grads[loss.id] = Some(vec![1.0]);

        for id in (0..=loss.id).rev() {
            let Some(up) = grads[id].take() else { continue };
            if let Some((index, &value)) = up.iter().enumerate().find(|(_, g)| !g.is_finite()) {
                return Err(AutodiffError::NonFinite {
                    op: "backward",
                    index,
                    value,
                });
            }
            let node = &nodes[id];
            let val = |i: usize| -> &[f64] { &nodes[i].value };
            let pick = |v: &[f64], i: usize| if v.len() == 1 { v[0] } else { v[i] };
            match &node.op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    accumulate_broadcast(&mut grads[*a], lens[*a], &up, |_| 1.0);
                    accumulate_broadcast(&mut grads[*b], lens[*b], &up, |_| 1.0);
                }
                Op::Sub(a, b) => {
                    accumulate_broadcast(&mut grads[*a], lens[*a], &up, |_| 1.0);
                    accumulate_broadcast(&mut grads[*b], lens[*b], &up, |_| -1.0);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (val(*a), val(*b));
                    accumulate_broadcast(&mut grads[*a], lens[*a], &up, |i| pick(vb, i));
                    accumulate_broadcast(&mut grads[*b], lens[*b], &up, |i| pick(va, i));
                }
                Op::Div(a, b) => {
                    let (va, vb) = (val(*a), val(*b));
                    accumulate_broadcast(&mut grads[*a], lens[*a], &up, |i| 1.0 / pick(vb, i));
                    accumulate_broadcast(&mut grads[*b], lens[*b], &up, |i| {
                        let y = pick(vb, i);
                        -pick(va, i) / (y * y)
                    });
                }
                Op::MatMul { a, b, m, k, n } => {
                    let (m, k, n) = (*m, *k, *n);
                    let (va, vb) = (val(*a), val(*b));
                    // dA = dC * B^T
                    accumulate(&mut grads[*a], m * k, |g| {
                        for i in 0..m {
                            for p in 0..k {
                                let mut s = 0.0;
                                for j in 0..n {
                                    s += up[i * n + j] * vb[p * n + j];
                                }
                                g[i * k + p] += s;
                            }
                        }
                    });
                    // dB = A^T * dC
                    accumulate(&mut grads[*b], k * n, |g| {
                        for i in 0..m {
                            for p in 0..k {
                                let av = va[i * k + p];
                                for j in 0..n {
                                    g[p * n + j] += av * up[i * n + j];
                                }
                            }
                        }
                    });
                }
                Op::Neg(a) => accumulate_broadcast(&mut grads[*a], lens[*a], &up, |_| -1.0),
                Op::Scale(a, c) => accumulate_broadcast(&mut grads[*a], lens[*a], &up, |_| *c),
                Op::Shift(a) => accumulate_broadcast(&mut grads[*a], lens[*a], &up, |_| 1.0),
                Op::Sin(a) => {
                    let va = val(*a);
                    accumulate_broadcast(&mut grads[*a], lens[*a], &up, |i| va[i].cos());
                }
                Op::Cos(a) => {
                    let va = val(*a);
                    accumulate_broadcast(&mut grads[*a], lens[*a], &up, |i| -va[i].sin());
                }
                Op::Acos(a) => {
                    let va = val(*a);
                    accumulate_broadcast(&mut grads[*a], lens[*a], &up, |i| {
                        let x = va[i].clamp(-ACOS_GRAD_CLAMP, ACOS_GRAD_CLAMP);
                        -1.0 / (1.0 - x * x).sqrt()
                    });
                }
                Op::Sqrt(a) => {
                    let out = &node.value;
                    accumulate_broadcast(&mut grads[*a], lens[*a], &up, |i| 0.5 / out[i]);
                }
                Op::Abs(a) => {
                    let va = val(*a);
                    accumulate_broadcast(&mut grads[*a], lens[*a], &up, |i| {
                        va[i] / (va[i] * va[i] + ABS_SMOOTHING).sqrt()
                    });
                }
                Op::Exp(a) => {
                    let out = &node.value;
                    accumulate_broadcast(&mut grads[*a], lens[*a], &up, |i| out[i]);
                }
                Op::Ln(a) => {
                    let va = val(*a);
                    accumulate_broadcast(&mut grads[*a], lens[*a], &up, |i| 1.0 / va[i]);
                }
                Op::Tanh(a) => {
                    let out = &node.value;
                    accumulate_broadcast(&mut grads[*a], lens[*a], &up, |i| 1.0 - out[i] * out[i]);
                }
                Op::Softplus(a) => {
                    let va = val(*a);
                    accumulate_broadcast(&mut grads[*a], lens[*a], &up, |i| sigmoid(va[i]));
                }
                Op::Sum(a) => {
                    let u = up[0];
                    accumulate(&mut grads[*a], lens[*a], |g| g.iter_mut().for_each(|x| *x += u));
                }
                Op::Mean(a) => {
                    let u = up[0] / lens[*a] as f64;
                    accumulate(&mut grads[*a], lens[*a], |g| g.iter_mut().for_each(|x| *x += u));
                }
                Op::Clamp { a, lo, hi } => {
                    let va = val(*a);
                    accumulate_broadcast(&mut grads[*a], lens[*a], &up, |i| {
                        if va[i] >= *lo && va[i] <= *hi {
                            1.0
                        } else {
                            0.0
                        }
                    });
                }
                Op::Gather { a, index } => {
                    accumulate(&mut grads[*a], lens[*a], |g| {
                        for (u, idx) in up.iter().zip(index) {
                            if let Some(i) = idx {
                                g[*i] += u;
                            }
                        }
                    });
                }
                Op::Reshape(a) => {
                    accumulate(&mut grads[*a], lens[*a], |g| {
                        g.iter_mut().zip(&up).for_each(|(x, u)| *x += u)
                    });
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let len = lens[*p];
                        let slice = &up[offset..offset + len];
                        accumulate(&mut grads[*p], len, |g| {
                            g.iter_mut().zip(slice).for_each(|(x, u)| *x += u)
                        });
                        offset += len;
                    }
                }
                Op::BilinearSample {
                    image,
                    coords,
                    height,
                    width,
                    channels,
                } => {
                    let (h, w, c) = (*height, *width, *channels);
                    let img = val(*image);
                    let xy = val(*coords);
                    let samples = xy.len() / 2;
                    let mut g_img = grads[*image].take().unwrap_or_else(|| vec![0.0; lens[*image]]);
                    let mut g_xy = grads[*coords].take().unwrap_or_else(|| vec![0.0; lens[*coords]]);
                    for s in 0..samples {
                        let (x, y) = (xy[2 * s], xy[2 * s + 1]);
                        let (_, fx) = split_coordinate(x);
                        let (_, fy) = split_coordinate(y);
                        let taps = bilinear_taps(x, y, h, w);
                        // d(weight)/dx and d(weight)/dy for each tap, same order.
                        let dwx = [-(1.0 - fy), 1.0 - fy, -fy, fy];
                        let dwy = [-(1.0 - fx), -fx, 1.0 - fx, fx];
                        let (mut gx, mut gy) = (0.0, 0.0);
                        for (t, (wt, idx)) in taps.iter().enumerate() {
                            let Some(p) = idx else { continue };
                            for ch in 0..c {
                                let u = up[s * c + ch];
                                g_img[p * c + ch] += u * wt;
                                let pix = img[p * c + ch];
                                gx += u * dwx[t] * pix;
                                gy += u * dwy[t] * pix;
                            }
                        }
                        g_xy[2 * s] += gx;
                        g_xy[2 * s + 1] += gy;
                    }
                    grads[*image] = Some(g_img);
                    grads[*coords] = Some(g_xy);
                }
            }
            grads[id] = Some(up);
        }
        Ok(Gradients { grads, lens })
    }
}

/// Elementwise sign with `sign(0) = 0`.
pub fn grad_sign(g: &[f64]) -> Vec<f64> {
    g.iter()
        .map(|&v| {
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect()
}
