//! Small fixed-size matrices stored row-major.

use std::ops::Mul;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::Real;

/// 3×3 row-major matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T> {
    pub m: [[T; 3]; 3],
}

/// 4×4 row-major matrix holding homogeneous transforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4<T> {
    pub m: [[T; 4]; 4],
}

impl<T: Real> Mat3<T> {
    pub fn from_rows(m: [[T; 3]; 3]) -> Self {
        Mat3 { m }
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Mat3 {
            m: [[o, z, z], [z, o, z], [z, z, o]],
        }
    }

    /// Builds from nine row-major values.
    pub fn from_row_slice(v: &[T]) -> Self {
        assert_eq!(v.len(), 9);
        Mat3 {
            m: [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]],
        }
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Mat3 {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn determinant(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Cofactor inverse; `None` for a singular or non-finite matrix.
    pub fn inverse(&self) -> Option<Self> {
        let m = &self.m;
        let det = self.determinant();
        if !det.is_finite() || det == T::zero() {
            return None;
        }
        let inv_det = T::one() / det;
        let c = |r0: usize, c0: usize, r1: usize, c1: usize| {
            m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
        };
        Some(Mat3 {
            m: [
                [
                    c(1, 1, 2, 2) * inv_det,
                    -c(0, 1, 2, 2) * inv_det,
                    c(0, 1, 1, 2) * inv_det,
                ],
                [
                    -c(1, 0, 2, 2) * inv_det,
                    c(0, 0, 2, 2) * inv_det,
                    -c(0, 0, 1, 2) * inv_det,
                ],
                [
                    c(1, 0, 2, 1) * inv_det,
                    -c(0, 0, 2, 1) * inv_det,
                    c(0, 0, 1, 1) * inv_det,
                ],
            ],
        })
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    /// `‖RᵀR − I‖∞` (max-abs entry).
    pub fn orthonormality_error(&self) -> T {
        let g = self.transpose() * *self;
        let id = Mat3::identity();
        let mut err = T::zero();
        for r in 0..3 {
            for c in 0..3 {
                err = err.max((g.m[r][c] - id.m[r][c]).abs());
            }
        }
        err
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    /// Checks that the matrix is a proper rotation within the scalar's rigidity tolerance.
    pub fn check_rotation(&self) -> std::result::Result<(), String> {
        if !self.is_finite() {
            return Err("rotation has a non-finite entry".into());
        }
        let err = self.orthonormality_error();
        if err >= T::rigidity_tolerance() {
            return Err(format!(
                "rotation not orthonormal: max |RᵀR − I| = {err:e} (tolerance {:e})",
                T::rigidity_tolerance()
            ));
        }
        let det = self.determinant();
        if det <= T::zero() {
            return Err(format!("rotation is a reflection: det = {det}"));
        }
        Ok(())
    }

    /// Nearest rotation (orthogonal polar factor) by Newton iteration
    /// `R ← ½(R + R⁻ᵀ)`. Converges quadratically from near-orthonormal input.
    pub fn orthonormalized(&self) -> Option<Self> {
        let half = T::lit(0.5);
        let mut r = *self;
        for _ in 0..32 {
            let inv_t = r.inverse()?.transpose();
            let mut next = r;
            for i in 0..3 {
                for j in 0..3 {
                    next.m[i][j] = half * (r.m[i][j] + inv_t.m[i][j]);
                }
            }
            let mut delta = T::zero();
            for i in 0..3 {
                for j in 0..3 {
                    delta = delta.max((next.m[i][j] - r.m[i][j]).abs());
                }
            }
            r = next;
            if delta <= T::epsilon() {
                break;
            }
        }
        Some(r)
    }
}

impl<T: Real> Mul for Mat3<T> {
    type Output = Mat3<T>;
    fn mul(self, o: Mat3<T>) -> Mat3<T> {
        let mut out = [[T::zero(); 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[r][k] * o.m[k][c]).sum();
            }
        }
        Mat3 { m: out }
    }
}

impl<T: Real> Mat4<T> {
    pub fn from_rows(m: [[T; 4]; 4]) -> Self {
        Mat4 { m }
    }

    pub fn identity() -> Self {
        let mut m = [[T::zero(); 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = T::one();
        }
        Mat4 { m }
    }

    /// Rigid transform from a rotation and a translation.
    pub fn from_rotation_translation(r: &Mat3<T>, t: Vec3<T>) -> Self {
        let (z, o) = (T::zero(), T::one());
        let r = &r.m;
        Mat4 {
            m: [
                [r[0][0], r[0][1], r[0][2], t.x],
                [r[1][0], r[1][1], r[1][2], t.y],
                [r[2][0], r[2][1], r[2][2], t.z],
                [z, z, z, o],
            ],
        }
    }

    /// Pads a 3×4 `[R | t]` block with the row `(0, 0, 0, 1)`.
    pub fn from_3x4(m: &[[T; 4]; 3]) -> Self {
        let (z, o) = (T::zero(), T::one());
        Mat4 {
            m: [m[0], m[1], m[2], [z, z, z, o]],
        }
    }

    pub fn translation(t: Vec3<T>) -> Self {
        Mat4::from_rotation_translation(&Mat3::identity(), t)
    }

    pub fn rotation(&self) -> Mat3<T> {
        let m = &self.m;
        Mat3 {
            m: [
                [m[0][0], m[0][1], m[0][2]],
                [m[1][0], m[1][1], m[1][2]],
                [m[2][0], m[2][1], m[2][2]],
            ],
        }
    }

    pub fn translation_part(&self) -> Vec3<T> {
        Vec3::new(self.m[0][3], self.m[1][3], self.m[2][3])
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    /// Applies the transform to a point (w = 1), ignoring the bottom row.
    #[inline]
    pub fn transform_point(&self, p: Vec3<T>) -> Vec3<T> {
        let m = &self.m;
        Vec3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + m[0][3],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + m[1][3],
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + m[2][3],
        )
    }

    /// Applies only the linear part (w = 0).
    #[inline]
    pub fn transform_vector(&self, v: Vec3<T>) -> Vec3<T> {
        self.rotation().mul_vec(v)
    }

    /// Checks the rigid-transform invariant, naming the first failed check.
    pub fn check_rigid(&self) -> std::result::Result<(), String> {
        if !self.is_finite() {
            return Err("transform has a non-finite entry".into());
        }
        let tol = T::rigidity_tolerance();
        let bottom = self.m[3];
        let expected = [T::zero(), T::zero(), T::zero(), T::one()];
        if bottom
            .iter()
            .zip(expected)
            .any(|(a, b)| (*a - b).abs() >= tol)
        {
            return Err(format!(
                "bottom row is ({}, {}, {}, {}), expected (0, 0, 0, 1)",
                bottom[0], bottom[1], bottom[2], bottom[3]
            ));
        }
        self.rotation().check_rotation()
    }

    pub fn max_abs_diff(&self, o: &Self) -> T {
        self.m
            .iter()
            .flatten()
            .zip(o.m.iter().flatten())
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
    }

    pub fn cast<U: Real>(&self) -> Mat4<U> {
        let mut out = [[U::zero(); 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = U::lit(self.m[r][c].as_f64());
            }
        }
        Mat4 { m: out }
    }
}

impl<T: Real> Mul for Mat4<T> {
    type Output = Mat4<T>;
    fn mul(self, o: Mat4<T>) -> Mat4<T> {
        let mut out = [[T::zero(); 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| self.m[r][k] * o.m[k][c]).sum();
            }
        }
        Mat4 { m: out }
    }
}

/// Closed-form inverse of a rigid transform: `[Rᵀ | −Rᵀt]`.
pub fn invert_rigid<T: Real>(t: &Mat4<T>) -> Result<Mat4<T>> {
    t.check_rigid().map_err(Error::Invariant)?;
    let rt = t.rotation().transpose();
    let trans = -rt.mul_vec(t.translation_part());
    Ok(Mat4::from_rotation_translation(&rt, trans))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot_z(a: f64) -> Mat3<f64> {
        let (s, c) = a.sin_cos();
        Mat3::from_rows([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    #[test]
    fn identity_inverts_to_identity() {
        let id = Mat4::<f64>::identity();
        assert_eq!(invert_rigid(&id).unwrap(), id);
    }

    #[test]
    fn pure_translation_negates() {
        let t = Mat4::translation(Vec3::new(0.0, 0.0, 1.0));
        let inv = invert_rigid(&t).unwrap();
        assert_eq!(inv.translation_part(), Vec3::new(0.0, 0.0, -1.0));
        assert_eq!(inv.rotation(), Mat3::identity());
    }

    #[test]
    fn rejects_scaled_rotation() {
        let mut t = Mat4::<f64>::identity();
        t.m[0][0] = 1.1;
        let err = invert_rigid(&t).unwrap_err().to_string();
        assert!(err.contains("not orthonormal"), "{err}");
    }

    #[test]
    fn rejects_reflection_and_bad_bottom_row() {
        let mut t = Mat4::<f64>::identity();
        t.m[2][2] = -1.0;
        assert!(invert_rigid(&t)
            .unwrap_err()
            .to_string()
            .contains("reflection"));

        let mut t = Mat4::<f64>::identity();
        t.m[3][0] = 0.5;
        assert!(invert_rigid(&t)
            .unwrap_err()
            .to_string()
            .contains("bottom row"));

        let mut t = Mat4::<f64>::identity();
        t.m[1][3] = f64::NAN;
        assert!(invert_rigid(&t)
            .unwrap_err()
            .to_string()
            .contains("non-finite"));
    }

    #[test]
    fn mat3_inverse_and_orthonormalize() {
        let r = rot_z(0.3);
        let prod = r * r.inverse().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod.m[i][j] - e).abs() < 1e-15);
            }
        }
        let mut noisy = r;
        noisy.m[0][1] += 3e-7;
        noisy.m[2][2] -= 2e-7;
        assert!(noisy.check_rotation().is_err());
        let fixed = noisy.orthonormalized().unwrap();
        assert!(fixed.orthonormality_error() < 1e-14);
        assert!((fixed.m[0][0] - r.m[0][0]).abs() < 1e-6);
        assert!(
            Mat3::from_rows([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]])
                .inverse()
                .is_none()
        );
    }

    #[test]
    fn single_precision_rigidity() {
        let r: Mat3<f32> = Mat3::from_rows([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        let t = Mat4::from_rotation_translation(&r, Vec3::new(1.0f32, 2.0, 3.0));
        let inv = invert_rigid(&t).unwrap();
        assert!((t * inv).max_abs_diff(&Mat4::identity()) < 1e-6);
    }
}
