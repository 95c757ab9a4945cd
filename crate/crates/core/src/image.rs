//! Pixel and depth containers.
//!
//! Pixels are stored as `f32` in `[0, 255]`, row-major `H x W x C`. All
//! differentiable computation happens in `f64` on a tape.

use crate::autodiff::{self, Tape, Var};
use crate::{Error, Result};

pub const PIXEL_MAX: f32 = 255.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageTensor {
    /// Fails if `data` does not hold `height * width * channels` values in
    /// `[0, 255]`.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height * width * channels != data.len() || data.is_empty() {
            return Err(Error::Shape(format!(
                "{height}x{width}x{channels} image needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if let Some((i, v)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=PIXEL_MAX).contains(*v))
        {
            return Err(Error::Input(format!(
                "pixel {i} has value {v}, outside [0, 255]"
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f32) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.height, self.width, self.channels]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }

    /// Records the pixels as a `[h, w, c]` leaf.
    pub fn to_tape<'t>(&self, tape: &'t Tape) -> autodiff::Result<Var<'t>> {
        tape.leaf(self.to_f64(), &self.shape())
    }

    /// Largest absolute per-pixel difference.
    pub fn max_abs_diff(&self, other: &ImageTensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (f64::from(*a) - f64::from(*b)).abs())
            .fold(0.0, f64::max)
    }
}

/// Two consecutive frames, the input of a pose network.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePair {
    pub first: ImageTensor,
    pub second: ImageTensor,
}

impl ImagePair {
    pub fn new(first: ImageTensor, second: ImageTensor) -> Result<Self> {
        if first.shape() != second.shape() {
            return Err(Error::Shape(format!(
                "pair frames differ: {:?} vs {:?}",
                first.shape(),
                second.shape()
            )));
        }
        Ok(Self { first, second })
    }

    pub fn swapped(&self) -> Self {
        Self {
            first: self.second.clone(),
            second: self.first.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipAxis {
    /// Mirror left-right.
    Horizontal,
    /// Mirror top-bottom.
    Vertical,
}

/// Row-major `H x W` depth map.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height * width != data.len() || data.is_empty() {
            return Err(Error::Shape(format!(
                "{height}x{width} depth map needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("depth map has non-finite values".into()));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn to_tape<'t>(&self, tape: &'t Tape) -> autodiff::Result<Var<'t>> {
        tape.leaf(self.data.clone(), &[self.height, self.width])
    }

    /// Flat indices realising a mirror of an `h x w` grid.
    pub fn flip_index(height: usize, width: usize, axis: FlipAxis) -> Vec<usize> {
        (0..height)
            .flat_map(|y| {
                (0..width).map(move |x| match axis {
                    FlipAxis::Horizontal => y * width + (width - 1 - x),
                    FlipAxis::Vertical => (height - 1 - y) * width + x,
                })
            })
            .collect()
    }

    pub fn flipped(&self, axis: FlipAxis) -> DepthMap {
        let data = Self::flip_index(self.height, self.width, axis)
            .into_iter()
            .map(|i| self.data[i])
            .collect();
        DepthMap {
            height: self.height,
            width: self.width,
            data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(matches!(
            ImageTensor::new(1, 2, 1, vec![0.0, 256.0]),
            Err(Error::Input(_))
        ));
        assert!(ImageTensor::new(1, 2, 1, vec![0.0, f32::NAN]).is_err());
        assert!(matches!(
            ImageTensor::new(2, 2, 1, vec![0.0; 3]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn pair_requires_matching_shapes() {
        let a = ImageTensor::filled(2, 2, 3, 1.0).unwrap();
        let b = ImageTensor::filled(2, 3, 3, 1.0).unwrap();
        assert!(ImagePair::new(a, b).is_err());
    }

    #[test]
    fn flip_small_map() {
        let d = DepthMap::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(d.flipped(FlipAxis::Horizontal).data(), &[2.0, 1.0, 4.0, 3.0]);
        assert_eq!(d.flipped(FlipAxis::Vertical).data(), &[3.0, 4.0, 1.0, 2.0]);
    }
}
