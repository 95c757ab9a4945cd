//! Per-instance invariant checks with independent brute-force oracles.

use nalgebra::{Matrix3, Matrix4, UnitQuaternion, Vector3};
use pose_attack::evaluation::{align_origin, integrate_trajectory, rpe, Trajectory};
use pose_attack::geometry::{EulerPose, TransformSE3};

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `Rz(yaw) * Ry(pitch) * Rx(roll)` from explicit elementary matrices.
pub fn elementary(roll: f64, pitch: f64, yaw: f64) -> Matrix3<f64> {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cr, -sr, 0.0, sr, cr);
    let ry = Matrix3::new(cp, 0.0, sp, 0.0, 1.0, 0.0, -sp, 0.0, cp);
    let rz = Matrix3::new(cy, -sy, 0.0, sy, cy, 0.0, 0.0, 0.0, 1.0);
    rz * ry * rx
}

pub fn homogeneous(p: &EulerPose) -> Matrix4<f64> {
    let [tx, ty, tz, roll, pitch, yaw] = p.to_array();
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&elementary(roll, pitch, yaw));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&Vector3::new(tx, ty, tz));
    m
}

/// Rotation angle through the quaternion route rather than the trace.
fn angle_of(m: &Matrix4<f64>) -> f64 {
    let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into();
    UnitQuaternion::from_matrix(&r).angle()
}

/// Geometry invariants for one pose `p` and one extra rotation `q`.
pub fn geometry(p: &EulerPose, q: &TransformSE3) -> Check {
    let t = p.to_transform();
    let r = t.rotation();
    let defect = (r.transpose() * r - Matrix3::identity()).abs().max();
    ensure(defect < 1e-9, || format!("R^T R - I = {defect:e} for {p:?}"))?;
    let det = r.determinant();
    ensure((det - 1.0).abs() < 1e-9, || format!("det {det} for {p:?}"))?;
    let oracle = (r - elementary(p.to_array()[3], p.to_array()[4], p.to_array()[5])).abs().max();
    ensure(oracle < 1e-12, || format!("elementary product differs by {oracle:e}"))?;

    if p.to_array()[4].abs() < std::f64::consts::FRAC_PI_2 - 1e-3 {
        let back = t.to_euler().map_err(|e| e.to_string())?.to_transform();
        let d = (back.to_matrix() - t.to_matrix()).abs().max();
        ensure(d < 1e-8, || format!("euler round trip off by {d:e} for {p:?}"))?;
    }

    let own = t.relative_to(&t);
    ensure(own.rotation_error() == 0.0 && own.translation_error() == 0.0, || {
        format!("self-relative error {} / {}", own.rotation_error(), own.translation_error())
    })?;

    let qr = q.rotation();
    let conj = TransformSE3::new(qr * r * qr.transpose(), *t.translation()).map_err(|e| e.to_string())?;
    let d = (conj.rotation_error() - t.rotation_error()).abs();
    ensure(d < 1e-9, || format!("conjugation changed r_err by {d:e}"))?;

    let rel = t.relative_to(q);
    let d = (t.compose(&rel).to_matrix() - q.to_matrix()).abs().max();
    ensure(d < 1e-9, || format!("T * relative(T, Q) != Q by {d:e}"))
}

/// Integration and relative pose error against 4x4 brute force.
pub fn trajectory_oracle(est: &[EulerPose], reference: &[EulerPose], delta: usize) -> Check {
    let rel = |ps: &[EulerPose]| ps.iter().map(EulerPose::to_transform).collect::<Vec<_>>();
    let p = integrate_trajectory(&rel(est)).map_err(|e| e.to_string())?;
    let q = integrate_trajectory(&rel(reference)).map_err(|e| e.to_string())?;

    let brute = |ps: &[EulerPose]| {
        let mut out = vec![Matrix4::identity()];
        for x in ps {
            let next = out.last().unwrap() * homogeneous(x);
            out.push(next);
        }
        out
    };
    let (bp, bq) = (brute(est), brute(reference));
    for (i, (a, b)) in p.poses().iter().zip(&bp).enumerate() {
        let d = (a.to_matrix() - b).abs().max();
        ensure(d < 1e-9, || format!("pose {i} differs from brute force by {d:e}"))?;
    }

    let report = rpe(&p, &q, delta).map_err(|e| e.to_string())?;
    let n = bp.len() - delta;
    let (mut tm, mut rd) = (0.0, 0.0);
    for i in 0..n {
        let e_est = bp[i].try_inverse().unwrap() * bp[i + delta];
        let e_ref = bq[i].try_inverse().unwrap() * bq[i + delta];
        let e = e_ref.try_inverse().unwrap() * e_est;
        tm += e.fixed_view::<3, 1>(0, 3).norm();
        rd += angle_of(&e).to_degrees();
    }
    let (tm, rd) = (tm / n as f64, rd / n as f64);
    ensure((report.translation_m - tm).abs() < 1e-9, || {
        format!("RPE(m) {} vs brute force {tm}", report.translation_m)
    })?;
    ensure((report.rotation_deg - rd).abs() < 1e-9, || {
        format!("RPE(deg) {} vs brute force {rd}", report.rotation_deg)
    })
}

/// RPE is unchanged by a common rigid motion of both trajectories.
pub fn rpe_rigid_invariance(est: &Trajectory, reference: &Trajectory, a: &TransformSE3, delta: usize) -> Check {
    let moved = |t: &Trajectory| Trajectory::new(t.poses().iter().map(|p| a.compose(p)).collect()).unwrap();
    let before = rpe(est, reference, delta).map_err(|e| e.to_string())?;
    let after = rpe(&moved(est), &moved(reference), delta).map_err(|e| e.to_string())?;
    let dm = (before.translation_m - after.translation_m).abs();
    let dd = (before.rotation_deg - after.rotation_deg).abs();
    ensure(dm < 1e-9 && dd < 1e-9, || format!("rigid motion moved RPE by {dm:e} m, {dd:e} deg"))
}

/// Origin alignment keeps every consecutive relative transform.
pub fn alignment(t: &Trajectory, reference: &Trajectory) -> Check {
    let aligned = align_origin(t, reference);
    ensure(aligned.poses()[0] == reference.poses()[0], || "first poses differ".into())?;
    for (i, (a, b)) in aligned.relatives().iter().zip(t.relatives()).enumerate() {
        let d = (a.to_matrix() - b.to_matrix()).abs().max();
        ensure(d <= 1e-12, || format!("relative {i} changed by {d:e}"))?;
    }
    Ok(())
}

/// Recovering relatives from an integrated trajectory returns the inputs.
pub fn integrate_then_relatives(rels: &[TransformSE3]) -> Check {
    let t = integrate_trajectory(rels).map_err(|e| e.to_string())?;
    for (i, (a, b)) in t.relatives().iter().zip(rels).enumerate() {
        let d = (a.to_matrix() - b.to_matrix()).abs().max();
        ensure(d < 1e-9, || format!("relative {i} off by {d:e}"))?;
    }
    Ok(())
}
