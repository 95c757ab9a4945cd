//! Differentiable counterparts of the transform operations, recorded on an
//! autodiff tape so losses built from them can be back-propagated to the
//! six predicted pose scalars.

use crate::autodiff::{Result, Tape, Var, ABS_SMOOTHING};

use super::TransformSE3;

const TRANSPOSE_3X3: [usize; 9] = [0, 3, 6, 1, 4, 7, 2, 5, 8];

/// Rigid transform with a `[3, 3]` rotation and `[3, 1]` translation on a tape.
#[derive(Debug, Clone, Copy)]
pub struct DiffTransform<'t> {
    pub rotation: Var<'t>,
    pub translation: Var<'t>,
}

impl<'t> DiffTransform<'t> {
    /// Builds `R_z(yaw) R_y(pitch) R_x(roll)` and `t` from a
    /// `[tx, ty, tz, roll, pitch, yaw]` tensor.
    pub fn from_pose(pose: Var<'t>) -> Result<Self> {
        let tape = pose.tape();
        let at = |i: usize| pose.gather(&[i], &[1]);
        let translation = pose.gather(&[0, 1, 2], &[3, 1])?;
        let (roll, pitch, yaw) = (at(3)?, at(4)?, at(5)?);
        let (sr, cr) = (roll.sin()?, roll.cos()?);
        let (sp, cp) = (pitch.sin()?, pitch.cos()?);
        let (sy, cy) = (yaw.sin()?, yaw.cos()?);

        let sp_sr = sp.mul(sr)?;
        let sp_cr = sp.mul(cr)?;
        let entries = [
            cy.mul(cp)?,
            cy.mul(sp_sr)?.sub(sy.mul(cr)?)?,
            cy.mul(sp_cr)?.add(sy.mul(sr)?)?,
            sy.mul(cp)?,
            sy.mul(sp_sr)?.add(cy.mul(cr)?)?,
            sy.mul(sp_cr)?.sub(cy.mul(sr)?)?,
            sp.neg()?,
            cp.mul(sr)?,
            cp.mul(cr)?,
        ];
        let rotation = tape.concat(&entries)?.reshape(&[3, 3])?;
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn constant(tape: &'t Tape, t: &TransformSE3) -> Result<Self> {
        let r = t.rotation();
        let rows: Vec<f64> = (0..3).flat_map(|i| (0..3).map(move |j| r[(i, j)])).collect();
        Ok(Self {
            rotation: tape.leaf(rows, &[3, 3])?,
            translation: tape.leaf(t.translation().iter().copied().collect(), &[3, 1])?,
        })
    }

    /// `self^-1 * target`.
    pub fn relative_to(&self, target: &DiffTransform<'t>) -> Result<DiffTransform<'t>> {
        let r_t = self.rotation.gather(&TRANSPOSE_3X3, &[3, 3])?;
        Ok(DiffTransform {
            rotation: r_t.matmul(target.rotation)?,
            translation: r_t.matmul(target.translation.sub(self.translation)?)?,
        })
    }

    /// `acos((trace(R) - 1) / 2)`.
    pub fn rotation_error(&self) -> Result<Var<'t>> {
        self.rotation
            .gather(&[0, 4, 8], &[3])?
            .sum()?
            .shift(-1.0)?
            .scale(0.5)?
            .acos()
    }

    /// Translation norm, smoothed as `sqrt(|t|^2 + 1e-12) - 1e-6` so it is
    /// differentiable at zero.
    pub fn translation_error(&self) -> Result<Var<'t>> {
        self.translation
            .mul(self.translation)?
            .sum()?
            .shift(ABS_SMOOTHING)?
            .sqrt()?
            .shift(-ABS_SMOOTHING.sqrt())
    }
}
