//! Frame and depth-map files.
//!
//! Two uncompressed formats are read:
//!
//! - binary portable pixmap (`P6`, maxval <= 255), one byte per channel;
//! - raw tensor: magic `PATT`, `u32` version 1, `u32` rank, `u32` dims,
//!   then little-endian `f32` values in row-major order. Frames have rank 3
//!   (`[h, w, c]`), depth maps rank 2 (`[h, w]`).
//!
//! Other formats can be converted with any image tool that writes `P6`
//! (for example `convert in.png out.ppm`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::image::{DepthMap, ImageTensor};
use crate::{Error, Result};

pub const RAW_MAGIC: &[u8; 4] = b"PATT";
pub const RAW_VERSION: u32 = 1;

fn format_error(file: &Path, reason: impl Into<String>) -> Error {
    Error::ImageFormat {
        file: file.to_path_buf(),
        reason: reason.into(),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Parses a `P6` pixmap.
pub fn decode_ppm(bytes: &[u8], file: &Path) -> Result<ImageTensor> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(format_error(file, "truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P6" {
        return Err(format_error(file, format!("unsupported magic '{}'", fields[0])));
    }
    let num = |i: usize, name: &str| -> Result<usize> {
        fields[i]
            .parse::<usize>()
            .map_err(|_| format_error(file, format!("bad {name} '{}'", fields[i])))
    };
    let (w, h, maxval) = (num(1, "width")?, num(2, "height")?, num(3, "maxval")?);
    if w == 0 || h == 0 {
        return Err(format_error(file, "empty image"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(format_error(file, format!("maxval {maxval} not in 1..=255")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let n = w * h * 3;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or_else(|| format_error(file, format!("raster needs {n} bytes")))?;
    if bytes.len() != pos + n {
        return Err(format_error(file, "trailing bytes after raster"));
    }
    let scale = 255.0 / maxval as f32;
    let data = raster.iter().map(|&b| f32::from(b) * scale).collect();
    ImageTensor::new(h, w, 3, data)
}

/// Encodes pixels rounded to the nearest byte.
pub fn encode_ppm(image: &ImageTensor) -> Result<Vec<u8>> {
    if image.channels() != 3 {
        return Err(Error::Shape(format!("pixmaps hold 3 channels, got {}", image.channels())));
    }
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.data().iter().map(|&v| v.round().clamp(0.0, 255.0) as u8));
    Ok(out)
}

fn decode_raw(bytes: &[u8], file: &Path) -> Result<(Vec<usize>, Vec<f32>)> {
    let u32_at = |off: usize| -> Result<u32> {
        bytes
            .get(off..off + 4)
            .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
            .ok_or_else(|| format_error(file, format!("truncated at byte {off}")))
    };
    if bytes.get(..4) != Some(RAW_MAGIC.as_slice()) {
        return Err(format_error(file, "bad magic"));
    }
    let version = u32_at(4)?;
    if version != RAW_VERSION {
        return Err(format_error(file, format!("unsupported version {version}")));
    }
    let rank = u32_at(8)? as usize;
    if !(1..=4).contains(&rank) {
        return Err(format_error(file, format!("unsupported rank {rank}")));
    }
    let dims = (0..rank)
        .map(|i| u32_at(12 + 4 * i).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let start = 12 + 4 * rank;
    let count: usize = dims.iter().product();
    if bytes.len() != start + 4 * count {
        return Err(format_error(
            file,
            format!("payload has {} bytes, dims {dims:?} need {}", bytes.len() - start.min(bytes.len()), 4 * count),
        ));
    }
    let data = bytes[start..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok((dims, data))
}

pub fn encode_raw(dims: &[usize], data: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * dims.len() + 4 * data.len());
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&RAW_VERSION.to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for d in dims {
        out.extend_from_slice(&(*d as u32).to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Reads a frame from a `.ppm` or raw-tensor file.
pub fn read_image(path: &Path) -> Result<ImageTensor> {
    let bytes = read_bytes(path)?;
    if !bytes.starts_with(RAW_MAGIC) {
        return decode_ppm(&bytes, path);
    }
    let (dims, data) = decode_raw(&bytes, path)?;
    match dims.as_slice() {
        &[h, w, c] => ImageTensor::new(h, w, c, data),
        _ => Err(format_error(path, format!("frame tensor must be [h, w, c], got {dims:?}"))),
    }
}

pub fn write_ppm(image: &ImageTensor, path: &Path) -> Result<()> {
    std::fs::write(path, encode_ppm(image)?).map_err(|e| Error::io(path, e))
}

pub fn write_raw_image(image: &ImageTensor, path: &Path) -> Result<()> {
    let bytes = encode_raw(&image.shape(), image.data());
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_depth(path: &Path) -> Result<DepthMap> {
    let (dims, data) = decode_raw(&read_bytes(path)?, path)?;
    match dims.as_slice() {
        &[h, w] => DepthMap::new(h, w, data.into_iter().map(f64::from).collect()),
        _ => Err(format_error(path, format!("depth tensor must be [h, w], got {dims:?}"))),
    }
}

pub fn write_depth(depth: &DepthMap, path: &Path) -> Result<()> {
    let data: Vec<f32> = depth.data().iter().map(|&v| v as f32).collect();
    let bytes = encode_raw(&[depth.height(), depth.width()], &data);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Files in `dir` whose stem is a non-negative integer and whose extension
/// is one of `extensions`, keyed by that integer.
fn numbered_files(dir: &Path, extensions: &[&str]) -> Result<BTreeMap<u64, PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if !path.is_file() || !extensions.contains(&ext) {
            continue;
        }
        let Some(index) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<u64>().ok()) else {
            continue;
        };
        if let Some(previous) = files.insert(index, path.clone()) {
            return Err(format_error(&path, format!("frame {index} also stored in {}", previous.display())));
        }
    }
    Ok(files)
}

fn warn_gaps(files: &BTreeMap<u64, PathBuf>, dir: &Path) {
    let keys: Vec<u64> = files.keys().copied().collect();
    for w in keys.windows(2) {
        if w[1] != w[0] + 1 {
            log::warn!("{}: frames {} to {} are missing", dir.display(), w[0] + 1, w[1] - 1);
        }
    }
}

/// Numbered frames (`.ppm` or `.patt`) of a sequence directory in index order.
pub fn load_sequence(dir: &Path) -> Result<Vec<ImageTensor>> {
    let files = numbered_files(dir, &["ppm", "patt"])?;
    warn_gaps(&files, dir);
    let frames = files.values().map(|p| read_image(p)).collect::<Result<Vec<_>>>()?;
    if let Some(first) = frames.first() {
        if let Some(bad) = frames.iter().position(|f| f.shape() != first.shape()) {
            return Err(Error::Shape(format!(
                "frame {bad} has shape {:?}, frame 0 has {:?}",
                frames[bad].shape(),
                first.shape()
            )));
        }
    }
    Ok(frames)
}

/// Numbered raw-tensor depth maps in index order.
pub fn load_depth_sequence(dir: &Path) -> Result<Vec<DepthMap>> {
    let files = numbered_files(dir, &["patt"])?;
    warn_gaps(&files, dir);
    files.values().map(|p| read_depth(p)).collect()
}
