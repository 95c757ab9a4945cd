//! Photometric, edge-aware smoothness and geometric consistency terms.

use crate::autodiff::Var;
use crate::{Error, Result};

/// SSIM stabilisers for intensities on the `[0, 255]` scale.
pub const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
pub const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

fn hwc(v: Var<'_>) -> Result<(usize, usize, usize)> {
    let s = v.shape();
    match s.as_slice() {
        [h, w, c] => Ok((*h, *w, *c)),
        [h, w] => Ok((*h, *w, 1)),
        _ => Err(Error::Shape(format!("expected an image-shaped tensor, got {s:?}"))),
    }
}

/// 3x3 box mean with edge replication, per channel.
fn box3<'t>(v: Var<'t>, h: usize, w: usize, c: usize) -> Result<Var<'t>> {
    let mut taps = Vec::with_capacity(9);
    for dy in -1isize..=1 {
        for dx in -1isize..=1 {
            let idx: Vec<usize> = (0..h * w * c)
                .map(|i| {
                    let (p, ch) = (i / c, i % c);
                    let y = (p / w) as isize + dy;
                    let x = (p % w) as isize + dx;
                    let y = y.clamp(0, h as isize - 1) as usize;
                    let x = x.clamp(0, w as isize - 1) as usize;
                    (y * w + x) * c + ch
                })
                .collect();
            taps.push(v.gather(&idx, &[h * w * c])?);
        }
    }
    let mut acc = taps[0];
    for t in &taps[1..] {
        acc = acc.add(*t)?;
    }
    Ok(acc.scale(1.0 / 9.0)?)
}

/// Per-pixel mean over channels: `[h*w*c]` to `[h*w]`.
fn channel_mean<'t>(v: Var<'t>, pixels: usize, c: usize) -> Result<Var<'t>> {
    let ones = v.tape().leaf(vec![1.0 / c as f64; c], &[c, 1])?;
    Ok(v.reshape(&[pixels, c])?.matmul(ones)?.reshape(&[pixels])?)
}

/// Per-pixel SSIM averaged over channels, `[h*w]`.
pub fn ssim_map<'t>(x: Var<'t>, y: Var<'t>) -> Result<Var<'t>> {
    let (h, w, c) = hwc(x)?;
    if hwc(y)? != (h, w, c) {
        return Err(Error::Shape(format!("ssim {:?} vs {:?}", x.shape(), y.shape())));
    }
    let n = h * w * c;
    let x = x.reshape(&[n])?;
    let y = y.reshape(&[n])?;
    let mu_x = box3(x, h, w, c)?;
    let mu_y = box3(y, h, w, c)?;
    let mu_xx = mu_x.mul(mu_x)?;
    let mu_yy = mu_y.mul(mu_y)?;
    let mu_xy = mu_x.mul(mu_y)?;
    let sigma_x = box3(x.mul(x)?, h, w, c)?.sub(mu_xx)?;
    let sigma_y = box3(y.mul(y)?, h, w, c)?.sub(mu_yy)?;
    let sigma_xy = box3(x.mul(y)?, h, w, c)?.sub(mu_xy)?;
    let num = mu_xy
        .scale(2.0)?
        .shift(SSIM_C1)?
        .mul(sigma_xy.scale(2.0)?.shift(SSIM_C2)?)?;
    let den = mu_xx
        .add(mu_yy)?
        .shift(SSIM_C1)?
        .mul(sigma_x.add(sigma_y)?.shift(SSIM_C2)?)?;
    channel_mean(num.div(den)?, h * w, c)
}

fn masked_mean<'t>(per_pixel: Var<'t>, valid: &[bool]) -> Result<Var<'t>> {
    let idx: Vec<usize> = valid
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.then_some(i))
        .collect();
    if idx.is_empty() {
        return Err(Error::Contract("loss mask selects no pixels".into()));
    }
    Ok(per_pixel.gather(&idx, &[idx.len()])?.mean()?)
}

/// Mean over valid pixels of `lambda * |a - b| + (1 - lambda) * (1 - SSIM)`,
/// with the L1 term averaged over channels.
pub fn photometric_loss<'t>(
    target: Var<'t>,
    synthesized: Var<'t>,
    valid: &[bool],
    lambda: f64,
) -> Result<Var<'t>> {
    let (h, w, c) = hwc(target)?;
    if valid.len() != h * w {
        return Err(Error::Shape(format!(
            "mask has {} entries for a {h}x{w} image",
            valid.len()
        )));
    }
    let l1 = channel_mean(target.sub(synthesized)?.abs()?.reshape(&[h * w * c])?, h * w, c)?;
    let dissimilarity = ssim_map(target, synthesized)?.neg()?.shift(1.0)?;
    let per_pixel = l1.scale(lambda)?.add(dissimilarity.scale(1.0 - lambda)?)?;
    masked_mean(per_pixel, valid)
}

/// Edge-aware smoothness of the mean-normalised disparity `1 / depth`.
///
/// `mean(|dx d| exp(-|dx I|)) + mean(|dy d| exp(-|dy I|))`, with image
/// gradients taken on intensities scaled to `[0, 1]` and averaged over
/// channels.
pub fn smoothness_loss<'t>(depth: Var<'t>, image: Var<'t>) -> Result<Var<'t>> {
    let tape = depth.tape();
    let ds = depth.shape();
    let (h, w, c) = hwc(image)?;
    if ds != [h, w] {
        return Err(Error::Shape(format!("depth {ds:?} vs image {:?}", image.shape())));
    }
    let disp = tape.scalar(1.0)?.div(depth)?;
    let disp = disp.div(disp.mean()?)?;
    let img = image.scale(1.0 / 255.0)?;

    let mut total = tape.scalar(0.0)?;
    for (dy, dx) in [(0usize, 1usize), (1, 0)] {
        if h <= dy || w <= dx {
            continue;
        }
        let (oh, ow) = (h - dy, w - dx);
        let pix = |off: usize| -> Vec<usize> {
            (0..oh * ow)
                .map(|i| (i / ow + off * dy) * w + i % ow + off * dx)
                .collect()
        };
        let (p0, p1) = (pix(0), pix(1));
        let d_grad = disp
            .gather(&p1, &[oh * ow])?
            .sub(disp.gather(&p0, &[oh * ow])?)?
            .abs()?;
        let chan = |p: &[usize]| -> Vec<usize> {
            p.iter().flat_map(|&q| (0..c).map(move |ch| q * c + ch)).collect()
        };
        let i_grad = img
            .gather(&chan(&p1), &[oh * ow * c])?
            .sub(img.gather(&chan(&p0), &[oh * ow * c])?)?
            .abs()?;
        let weight = channel_mean(i_grad, oh * ow, c)?.neg()?.exp()?;
        total = total.add(d_grad.mul(weight)?.mean()?)?;
    }
    Ok(total)
}

/// Mean over valid pixels of `|a - b| / (a + b)` for positive depth maps.
pub fn geometric_consistency_loss<'t>(
    warped_depth: Var<'t>,
    resampled_depth: Var<'t>,
    valid: &[bool],
) -> Result<Var<'t>> {
    let n = warped_depth.len();
    if resampled_depth.len() != n || valid.len() != n {
        return Err(Error::Shape(format!(
            "consistency inputs {:?}, {:?}, mask of {}",
            warped_depth.shape(),
            resampled_depth.shape(),
            valid.len()
        )));
    }
    let idx: Vec<usize> = valid
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.then_some(i))
        .collect();
    if idx.is_empty() {
        return Err(Error::Contract("loss mask selects no pixels".into()));
    }
    let a = warped_depth.reshape(&[n])?.gather(&idx, &[idx.len()])?;
    let b = resampled_depth.reshape(&[n])?.gather(&idx, &[idx.len()])?;
    Ok(a.sub(b)?.abs()?.div(a.add(b)?)?.mean()?)
}
