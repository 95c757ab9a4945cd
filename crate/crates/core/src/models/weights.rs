//! Seeded parameter vectors for the toy networks and their binary file
//! format.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size      | field                                  |
//! |--------|-----------|----------------------------------------|
//! | 0      | 4         | magic `PAWT`                           |
//! | 4      | 4         | format version, `u32` = 1              |
//! | 8      | 4         | model kind, `u32` (0 = pose, 1 = depth)|
//! | 12     | 8         | seed, `u64`                            |
//! | 20     | 4         | number of dims `n`, `u32`              |
//! | 24     | 4n        | dims, `u32` each                       |
//! | 24+4n  | 8         | parameter count `p`, `u64`             |
//! | 32+4n  | 4p        | parameters, `f32` each                 |
//!
//! Pose dims are `[height, width, conv1_channels, conv2_channels]`; depth
//! dims are `[hidden_channels]`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PAWT";
pub const VERSION: u32 = 1;
const MAX_DIMS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Pose,
    Depth,
}

impl ModelKind {
    fn code(self) -> u32 {
        match self {
            ModelKind::Pose => 0,
            ModelKind::Depth => 1,
        }
    }

    fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(ModelKind::Pose),
            1 => Some(ModelKind::Depth),
            _ => None,
        }
    }
}

/// Spatial size after a 3x3, stride-2, same-padded convolution.
pub(crate) fn strided(n: usize) -> usize {
    n.div_ceil(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyWeights {
    kind: ModelKind,
    seed: u64,
    dims: Vec<u32>,
    params: Vec<f32>,
}

impl ToyWeights {
    pub fn new(kind: ModelKind, seed: u64, dims: Vec<u32>, params: Vec<f32>) -> Result<Self> {
        let expected = Self::param_count(kind, &dims)?;
        if params.len() != expected {
            return Err(Error::Shape(format!(
                "{kind:?} dims {dims:?} need {expected} parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Input("non-finite parameter".into()));
        }
        Ok(Self {
            kind,
            seed,
            dims,
            params,
        })
    }

    /// Number of parameters implied by `dims`.
    pub fn param_count(kind: ModelKind, dims: &[u32]) -> Result<usize> {
        let d: Vec<usize> = dims.iter().map(|&v| v as usize).collect();
        match (kind, d.as_slice()) {
            (ModelKind::Pose, &[h, w, c1, c2]) if h > 0 && w > 0 && c1 > 0 && c2 > 0 => {
                let features = strided(strided(h)) * strided(strided(w)) * c2;
                Ok(9 * 6 * c1 + c1 + 9 * c1 * c2 + c2 + features * 6 + 6)
            }
            (ModelKind::Depth, &[c1]) if c1 > 0 => Ok(9 * 3 * c1 + c1 + 9 * c1 + 1),
            _ => Err(Error::Shape(format!("invalid {kind:?} dims {dims:?}"))),
        }
    }

    /// Seeded pose-network weights for `height x width` frames with 8
    /// channels in both convolutions.
    pub fn seeded_pose(seed: u64, height: usize, width: usize) -> Self {
        Self::seeded(ModelKind::Pose, seed, vec![height as u32, width as u32, 8, 8])
            .expect("valid default pose dims")
    }

    pub fn seeded_depth(seed: u64) -> Self {
        Self::seeded(ModelKind::Depth, seed, vec![8]).expect("valid default depth dims")
    }

    /// Uniform fan-in scaled initialisation from a ChaCha8 stream.
    pub fn seeded(kind: ModelKind, seed: u64, dims: Vec<u32>) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(Self::param_count(kind, &dims)?);
        for (fan_in, count, init) in layer_blocks(kind, &dims) {
            for _ in 0..count {
                let v = match init {
                    Init::FanIn => {
                        let bound = (3.0 / fan_in as f64).sqrt();
                        rng.random_range(-bound..bound)
                    }
                    Init::Bias => rng.random_range(-0.1..0.1),
                    Init::MotionPrior => {
                        let magnitude: f64 = rng.random_range(1.0..3.0);
                        if rng.random_bool(0.5) { magnitude } else { -magnitude }
                    }
                };
                params.push(v as f32);
            }
        }
        Self::new(kind, seed, dims, params)
    }

    pub fn zeros(kind: ModelKind, dims: Vec<u32>) -> Result<Self> {
        let n = Self::param_count(kind, &dims)?;
        Self::new(kind, 0, dims, vec![0.0; n])
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 4 * self.dims.len() + 4 * self.params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.kind.code().to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4)?;
        if magic != MAGIC {
            return Err(r.error(0, "bad magic"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(r.error(4, &format!("unsupported version {version}")));
        }
        let kind_code = r.u32()?;
        let kind = ModelKind::from_code(kind_code)
            .ok_or_else(|| r.error(8, &format!("unknown model kind {kind_code}")))?;
        let seed = r.u64()?;
        let ndims = r.u32()? as usize;
        if ndims > MAX_DIMS {
            return Err(r.error(20, &format!("{ndims} dims exceeds limit {MAX_DIMS}")));
        }
        let dims = (0..ndims).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let count_offset = r.pos;
        let count = r.u64()? as usize;
        let expected = Self::param_count(kind, &dims)
            .map_err(|e| r.error(24, &e.to_string()))?;
        if count != expected {
            return Err(r.error(
                count_offset,
                &format!("parameter count {count}, dims imply {expected}"),
            ));
        }
        let mut params = Vec::with_capacity(count);
        for _ in 0..count {
            let at = r.pos;
            let p = f32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
            if !p.is_finite() {
                return Err(r.error(at, "non-finite parameter"));
            }
            params.push(p);
        }
        if r.pos != bytes.len() {
            return Err(r.error(r.pos, "trailing bytes"));
        }
        Self::new(kind, seed, dims, params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// `(fan_in, parameter count, is_bias)` for each block, in storage order.
#[derive(Clone, Copy)]
enum Init {
    FanIn,
    Bias,
    /// Pose-head offsets of magnitude 1 to 3, so clean predictions are
    /// inter-frame motions of order 1e-2 rather than sitting at zero.
    MotionPrior,
}

fn layer_blocks(kind: ModelKind, dims: &[u32]) -> Vec<(usize, usize, Init)> {
    let d: Vec<usize> = dims.iter().map(|&v| v as usize).collect();
    match kind {
        ModelKind::Pose => {
            let (h, w, c1, c2) = (d[0], d[1], d[2], d[3]);
            let features = strided(strided(h)) * strided(strided(w)) * c2;
            vec![
                (9 * 6, 9 * 6 * c1, Init::FanIn),
                (9 * 6, c1, Init::Bias),
                (9 * c1, 9 * c1 * c2, Init::FanIn),
                (9 * c1, c2, Init::Bias),
                (features, features * 6, Init::FanIn),
                (features, 6, Init::MotionPrior),
            ]
        }
        ModelKind::Depth => {
            let c1 = d[0];
            vec![
                (9 * 3, 9 * 3 * c1, Init::FanIn),
                (9 * 3, c1, Init::Bias),
                (9 * c1, 9 * c1, Init::FanIn),
                (9 * c1, 1, Init::Bias),
            ]
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn error(&self, offset: usize, reason: &str) -> Error {
        Error::WeightFormat {
            offset,
            reason: reason.to_string(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.error(self.pos, &format!("truncated: need {n} more bytes")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
