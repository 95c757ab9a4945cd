use crate::autodiff::Var;
use crate::geometry::DiffTransform;
use crate::{Error, Result};

use super::Intrinsics;

/// Points closer to the source camera than this are treated as invalid.
pub const MIN_PROJECTED_DEPTH: f64 = 1e-6;

/// Result of inverse-warping a source frame into the target view.
#[derive(Debug, Clone)]
pub struct Warp<'t> {
    /// Synthesized target view, `[h, w, c]`.
    pub image: Var<'t>,
    /// Continuous source-image coordinates of every target pixel, `[h, w, 2]`.
    pub coords: Var<'t>,
    /// Depth of each back-projected target pixel seen from the source camera, `[h, w]`.
    pub projected_depth: Var<'t>,
    /// In-bounds, in-front-of-camera samples.
    pub valid: Vec<bool>,
}

impl Warp<'_> {
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn valid_index(&self) -> Vec<usize> {
        self.valid
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.then_some(i))
            .collect()
    }
}

/// Inverse warp: back-projects every target pixel with `target_depth`, maps
/// it into the source camera with `pose`, projects with `k` and samples
/// `source` bilinearly.
///
/// `pose` is the source camera expressed in the target camera's frame (the
/// relative pose a pose network predicts for the pair `(target, source)`),
/// so a target-frame point `X` lands at `R^T (X - t)` in the source frame.
pub fn synthesize_view<'t>(
    source: Var<'t>,
    target_depth: Var<'t>,
    pose: &DiffTransform<'t>,
    k: &Intrinsics,
) -> Result<Warp<'t>> {
    let tape = source.tape();
    let shape = source.shape();
    let dshape = target_depth.shape();
    if shape.len() != 3 || dshape.len() != 2 || dshape[..] != shape[..2] {
        return Err(Error::Shape(format!(
            "source {shape:?} and depth {dshape:?} disagree"
        )));
    }
    let (h, w) = (shape[0], shape[1]);
    let n = h * w;

    let rays = tape.leaf(ray_grid(h, w, k), &[3, n])?;
    let depth_rows: Vec<usize> = (0..3 * n).map(|i| i % n).collect();
    let points = rays.mul(target_depth.gather(&depth_rows, &[3, n])?)?;
    let t_cols: Vec<usize> = (0..3 * n).map(|i| i / n).collect();
    let r_t = pose
        .rotation
        .gather(&[0, 3, 6, 1, 4, 7, 2, 5, 8], &[3, 3])?;
    let in_source = r_t.matmul(points.sub(pose.translation.gather(&t_cols, &[3, n])?)?)?;

    let row = |r: usize| in_source.gather(&(r * n..(r + 1) * n).collect::<Vec<_>>(), &[n]);
    let (x, y, z) = (row(0)?, row(1)?, row(2)?);
    let z_values = z.values();
    let z_safe = z.clamp(MIN_PROJECTED_DEPTH, f64::INFINITY)?;
    let u = x.div(z_safe)?.scale(k.fx)?.shift(k.cx)?;
    let v = y.div(z_safe)?.scale(k.fy)?.shift(k.cy)?;

    let interleave: Vec<usize> = (0..2 * n).map(|i| (i % 2) * n + i / 2).collect();
    let coords = tape.concat(&[u, v])?.gather(&interleave, &[h, w, 2])?;
    let (image, in_bounds) = source.bilinear_sample(coords)?;
    let valid: Vec<bool> = in_bounds
        .iter()
        .zip(&z_values)
        .map(|(b, z)| *b && *z > MIN_PROJECTED_DEPTH)
        .collect();
    if !valid.iter().any(|v| *v) {
        return Err(Error::EmptyOverlap);
    }
    Ok(Warp {
        image,
        coords,
        projected_depth: z_safe.reshape(&[h, w])?,
        valid,
    })
}

/// `K^-1 [u, v, 1]^T` for every pixel, as a row-major `[3, h*w]` matrix.
fn ray_grid(h: usize, w: usize, k: &Intrinsics) -> Vec<f64> {
    let n = h * w;
    let mut rays = vec![0.0; 3 * n];
    for yy in 0..h {
        for xx in 0..w {
            let p = yy * w + xx;
            rays[p] = (xx as f64 - k.cx) / k.fx;
            rays[n + p] = (yy as f64 - k.cy) / k.fy;
            rays[2 * n + p] = 1.0;
        }
    }
    rays
}

/// Convenience wrapper: samples a `[h, w]` map at `coords`.
pub fn resample_map<'t>(map: Var<'t>, coords: Var<'t>) -> Result<Var<'t>> {
    let s = map.shape();
    if s.len() != 2 {
        return Err(Error::Shape(format!("expected [h, w] map, got {s:?}")));
    }
    let (sampled, _) = map.reshape(&[s[0], s[1], 1])?.bilinear_sample(coords)?;
    Ok(sampled.reshape(&[s[0], s[1]])?)
}
