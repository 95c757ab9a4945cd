//! KITTI odometry pose text: one line per frame, twelve reals holding the
//! row-major `3 x 4` matrix `[R | t]`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::geometry::{nearest_rotation, rotation_defect, TransformSE3, ROTATION_TOLERANCE};
use crate::{Error, Result};

use super::Trajectory;

/// Rotations further than this from SO(3) are rejected rather than repaired.
pub const ORTHONORMALIZE_TOLERANCE: f64 = 1e-4;

fn parse_line(line: &str, number: usize) -> Result<TransformSE3> {
    let err = |reason: String| Error::PoseFormat { line: number, reason };
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != 12 {
        return Err(err(format!("expected 12 values, found {}", tokens.len())));
    }
    let mut v = [0.0; 12];
    for (slot, tok) in v.iter_mut().zip(&tokens) {
        *slot = tok
            .parse::<f64>()
            .map_err(|e| err(format!("'{tok}': {e}")))?;
        if !slot.is_finite() {
            return Err(err(format!("non-finite value '{tok}'")));
        }
    }
    let r = Matrix3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]);
    let t = Vector3::new(v[3], v[7], v[11]);
    let (orthogonality, det) = rotation_defect(&r);
    let defect = orthogonality.max((det - 1.0).abs());
    let r = if defect <= ROTATION_TOLERANCE {
        r
    } else if defect <= ORTHONORMALIZE_TOLERANCE {
        nearest_rotation(&r)
    } else {
        return Err(err(format!(
            "not a rotation (orthogonality defect {orthogonality:e}, det {det})"
        )));
    };
    TransformSE3::new(r, t).map_err(|e| err(e.to_string()))
}

/// Parses pose text; blank lines are skipped, line numbers are 1-based.
pub fn parse_kitti_str(text: &str) -> Result<Trajectory> {
    let poses = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_line(l, i + 1))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(poses)
}

pub fn parse_kitti_poses(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kitti_str(&text)
}

/// Shortest round-trip representation of every entry.
pub fn format_kitti_poses(t: &Trajectory) -> String {
    let mut out = String::new();
    for p in t.poses() {
        let (r, tr) = (p.rotation(), p.translation());
        let row = |i: usize| [r[(i, 0)], r[(i, 1)], r[(i, 2)], tr[i]];
        let values: Vec<String> = (0..3).flat_map(row).map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", values.join(" ")).expect("writing to a String");
    }
    out
}

pub fn write_kitti_poses(t: &Trajectory, path: &Path) -> Result<()> {
    std::fs::write(path, format_kitti_poses(t)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::integrate_trajectory;
    use crate::geometry::EulerPose;

    #[test]
    fn identity_line() {
        let t = parse_kitti_str("1 0 0 0 0 1 0 0 0 0 1 0\n").unwrap();
        assert_eq!(t.poses(), &[TransformSE3::identity()]);
    }

    #[test]
    fn round_trip_is_exact() {
        let rel: Vec<TransformSE3> = (0..6)
            .map(|i| EulerPose::new(0.1, -0.2 * i as f64, 0.9, 0.03, -0.01, 0.07 * i as f64).unwrap().to_transform())
            .collect();
        let t = integrate_trajectory(&rel).unwrap();
        assert_eq!(parse_kitti_str(&format_kitti_poses(&t)).unwrap(), t);
    }

    #[test]
    fn bad_token_count_names_line() {
        let text = "1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 0 0 1 0 0 0 0 1 0 7\n";
        match parse_kitti_str(text) {
            Err(Error::PoseFormat { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn near_rotation_repaired_far_rejected() {
        let near = parse_kitti_str("1.00001 0 0 0 0 1 0 0 0 0 1 0").unwrap();
        let (o, d) = rotation_defect(near.poses()[0].rotation());
        assert!(o < 1e-12 && (d - 1.0).abs() < 1e-12);
        assert!(parse_kitti_str("1.1 0 0 0 0 1 0 0 0 0 1 0").is_err());
        assert!(parse_kitti_str("1 0 0 nan 0 1 0 0 0 0 1 0").is_err());
    }
}
