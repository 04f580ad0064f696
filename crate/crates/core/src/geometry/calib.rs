//! Camera/LiDAR calibration chain and the projection kernels built on it.
//!
//! Forward: `x_lidar → Tr → R0̂ → P2 → (u·z, v·z, z)`, then the perspective
//! divide. Backward inverts every stage, including the principal point and the
//! fourth-column offsets of `P2`, so the two directions compose to the
//! identity on the projectable domain.

use crate::error::{Error, Result};
use crate::geometry::{invert_rigid, Mat3, Mat4, Vec3};
use crate::scalar::Real;

/// Camera-frame depths at or below this (meters) are not projectable.
pub const DEPTH_FLOOR: f64 = 1e-3;

/// A pixel with its depth: `u` column, `v` row, `z` meters along the optical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousPixel<T> {
    pub u: T,
    pub v: T,
    pub z: T,
}

impl<T: Real> HomogeneousPixel<T> {
    pub fn new(u: T, v: T, z: T) -> Self {
        HomogeneousPixel { u, v, z }
    }

    /// Homogeneous form `(u·z, v·z, z)`.
    pub fn homogeneous(&self) -> Vec3<T> {
        Vec3::new(self.u * self.z, self.v * self.z, self.z)
    }
}

/// KITTI-style calibration: `P2` (3×4), `R0_rect` (3×3) and `Tr_velo_to_cam`
/// (rigid 4×4), plus inverses derived at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSet<T> {
    p2: [[T; 4]; 3],
    r0: Mat3<T>,
    tr_velo_to_cam: Mat4<T>,
    forward: [[T; 4]; 3],
    intrinsic_inv: Mat3<T>,
    r0_inv: Mat3<T>,
    tr_cam_to_velo: Mat4<T>,
}

impl<T: Real> CalibrationSet<T> {
    /// Validates the three matrices and precomputes the derived ones.
    pub fn new(p2: [[T; 4]; 3], r0: Mat3<T>, tr_velo_to_cam: Mat4<T>) -> Result<Self> {
        if p2.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invariant("P2 has a non-finite entry".into()));
        }
        if p2[0][0] <= T::zero() || p2[1][1] <= T::zero() {
            return Err(Error::Invariant(format!(
                "P2 focal lengths must be positive (fx = {}, fy = {})",
                p2[0][0], p2[1][1]
            )));
        }
        let intrinsic = Mat3::from_rows([
            [p2[0][0], p2[0][1], p2[0][2]],
            [p2[1][0], p2[1][1], p2[1][2]],
            [p2[2][0], p2[2][1], p2[2][2]],
        ]);
        let intrinsic_inv = intrinsic
            .inverse()
            .ok_or_else(|| Error::Invariant("P2 intrinsic block is singular".into()))?;
        r0.check_rotation()
            .map_err(|e| Error::Invariant(format!("R0_rect: {e}")))?;
        let tr_cam_to_velo = invert_rigid(&tr_velo_to_cam)
            .map_err(|e| Error::Invariant(format!("Tr_velo_to_cam: {e}")))?;

        let chain = Mat4::from_rotation_translation(&r0, Vec3::zero()) * tr_velo_to_cam;
        let mut forward = [[T::zero(); 4]; 3];
        for (r, row) in forward.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| p2[r][k] * chain.m[k][c]).sum();
            }
        }
        Ok(CalibrationSet {
            p2,
            r0,
            tr_velo_to_cam,
            forward,
            intrinsic_inv,
            r0_inv: r0.transpose(),
            tr_cam_to_velo,
        })
    }

    /// Ideal pinhole camera with identity rectification and extrinsics.
    pub fn pinhole(fx: T, fy: T, cx: T, cy: T) -> Result<Self> {
        let z = T::zero();
        let p2 = [[fx, z, cx, z], [z, fy, cy, z], [z, z, T::one(), z]];
        Self::new(p2, Mat3::identity(), Mat4::identity())
    }

    pub fn p2(&self) -> &[[T; 4]; 3] {
        &self.p2
    }

    pub fn r0(&self) -> &Mat3<T> {
        &self.r0
    }

    /// `R0` padded to 4×4.
    pub fn r0_hat(&self) -> Mat4<T> {
        Mat4::from_rotation_translation(&self.r0, Vec3::zero())
    }

    pub fn r0_inv(&self) -> &Mat3<T> {
        &self.r0_inv
    }

    pub fn tr_velo_to_cam(&self) -> &Mat4<T> {
        &self.tr_velo_to_cam
    }

    pub fn tr_cam_to_velo(&self) -> &Mat4<T> {
        &self.tr_cam_to_velo
    }

    /// `M = P2 · R0̂ · Tr` (3×4).
    pub fn forward(&self) -> &[[T; 4]; 3] {
        &self.forward
    }

    pub fn intrinsic_inv(&self) -> &Mat3<T> {
        &self.intrinsic_inv
    }

    fn p2_offset(&self) -> Vec3<T> {
        Vec3::new(self.p2[0][3], self.p2[1][3], self.p2[2][3])
    }

    /// Projects a LiDAR-frame point to `(u, v, z)`; `None` when the point is at
    /// or behind the depth floor.
    pub fn project_lidar_to_pixel(&self, p: Vec3<T>) -> Option<HomogeneousPixel<T>> {
        let cam = self.tr_velo_to_cam.transform_point(p);
        let rect = self.r0.mul_vec(cam);
        let h = Mat3::from_rows([
            [self.p2[0][0], self.p2[0][1], self.p2[0][2]],
            [self.p2[1][0], self.p2[1][1], self.p2[1][2]],
            [self.p2[2][0], self.p2[2][1], self.p2[2][2]],
        ])
        .mul_vec(rect)
            + self.p2_offset();
        if !(h.z > T::lit(DEPTH_FLOOR)) {
            return None;
        }
        Some(HomogeneousPixel::new(h.x / h.z, h.y / h.z, h.z))
    }

    /// Rectified-camera point for a pixel: `K⁻¹ · ((u·z, v·z, z) − p2[:, 3])`.
    #[inline]
    pub fn pixel_to_rectified(&self, px: HomogeneousPixel<T>) -> Vec3<T> {
        self.intrinsic_inv
            .mul_vec(px.homogeneous() - self.p2_offset())
    }

    /// Maps a rectified-camera point to the LiDAR frame (`Tr⁻¹ · R0̂⁻¹`).
    #[inline]
    pub fn rectified_to_lidar(&self, rect: Vec3<T>) -> Vec3<T> {
        self.tr_cam_to_velo
            .transform_point(self.r0_inv.mul_vec(rect))
    }

    /// Inverse of [`project_lidar_to_pixel`](Self::project_lidar_to_pixel).
    pub fn backproject_pixel(&self, px: HomogeneousPixel<T>) -> Result<Vec3<T>> {
        if !(px.z > T::zero()) {
            return Err(Error::Domain(format!(
                "pixel depth must be positive, got {}",
                px.z
            )));
        }
        Ok(self.rectified_to_lidar(self.pixel_to_rectified(px)))
    }

    /// The viewing ray of pixel `(u, v)` in the LiDAR frame, parameterised so
    /// that `origin + z · direction` is the point at depth `z`.
    pub fn pixel_ray(&self, u: T, v: T) -> (Vec3<T>, Vec3<T>) {
        let origin_rect = self.intrinsic_inv.mul_vec(-self.p2_offset());
        let dir_rect = self.intrinsic_inv.mul_vec(Vec3::new(u, v, T::one()));
        let origin = self.rectified_to_lidar(origin_rect);
        let direction = self
            .tr_cam_to_velo
            .transform_vector(self.r0_inv.mul_vec(dir_rect));
        (origin, direction)
    }

    pub fn cast<U: Real>(&self) -> CalibrationSet<U> {
        let mut p2 = [[U::zero(); 4]; 3];
        for (r, row) in p2.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = U::lit(self.p2[r][c].as_f64());
            }
        }
        let r0 = Mat3::from_rows(self.r0.m.map(|row| row.map(|v| U::lit(v.as_f64()))));
        CalibrationSet::new(p2, r0, self.tr_velo_to_cam.cast())
            .expect("casting a valid calibration preserves its invariants")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_pinhole() -> CalibrationSet<f64> {
        CalibrationSet::pinhole(1.0, 1.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn principal_ray_projects_to_origin() {
        let px = unit_pinhole()
            .project_lidar_to_pixel(Vec3::new(0.0, 0.0, 5.0))
            .unwrap();
        assert_eq!(px, HomogeneousPixel::new(0.0, 0.0, 5.0));
    }

    #[test]
    fn off_axis_point() {
        let px = unit_pinhole()
            .project_lidar_to_pixel(Vec3::new(5.0, 0.0, 5.0))
            .unwrap();
        assert_eq!(px, HomogeneousPixel::new(1.0, 0.0, 5.0));
    }

    #[test]
    fn behind_camera_has_no_pixel() {
        let c = unit_pinhole();
        assert!(c
            .project_lidar_to_pixel(Vec3::new(0.0, 0.0, -2.0))
            .is_none());
        assert!(c.project_lidar_to_pixel(Vec3::new(1.0, 0.0, 0.0)).is_none());
        assert!(c
            .project_lidar_to_pixel(Vec3::new(0.0, 0.0, DEPTH_FLOOR))
            .is_none());
    }

    #[test]
    fn backproject_identity_chain() {
        let p = unit_pinhole()
            .backproject_pixel(HomogeneousPixel::new(0.0, 0.0, 5.0))
            .unwrap();
        assert_eq!(p, Vec3::new(0.0, 0.0, 5.0));
    }

    #[test]
    fn backproject_with_focal_two() {
        let c = CalibrationSet::pinhole(2.0, 2.0, 0.0, 0.0).unwrap();
        let p = c
            .backproject_pixel(HomogeneousPixel::new(2.0, 0.0, 5.0))
            .unwrap();
        assert_eq!(p, Vec3::new(5.0, 0.0, 5.0));
    }

    #[test]
    fn backproject_rejects_nonpositive_depth() {
        let c = unit_pinhole();
        assert!(matches!(
            c.backproject_pixel(HomogeneousPixel::new(0.0, 0.0, 0.0)),
            Err(Error::Domain(_))
        ));
        assert!(c
            .backproject_pixel(HomogeneousPixel::new(0.0, 0.0, -1.0))
            .is_err());
    }

    #[test]
    fn focal_lengths_must_be_positive() {
        assert!(CalibrationSet::pinhole(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(CalibrationSet::pinhole(1.0, -1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn projection_is_scale_invariant_in_homogeneous_form() {
        let c = CalibrationSet::pinhole(700.0, 710.0, 600.0, 180.0).unwrap();
        let px = c
            .project_lidar_to_pixel(Vec3::new(1.5, -0.7, 12.0))
            .unwrap();
        let h = px.homogeneous();
        for lambda in [0.1f64, 2.0, 37.5] {
            let s = h * lambda;
            assert!((s.x / s.z - px.u).abs() < 1e-12);
            assert!((s.y / s.z - px.v).abs() < 1e-12);
        }
    }

    #[test]
    fn pixel_ray_hits_backprojection() {
        let c = CalibrationSet::pinhole(700.0, 700.0, 620.0, 190.0).unwrap();
        let (o, d) = c.pixel_ray(100.0, 50.0);
        let p = c
            .backproject_pixel(HomogeneousPixel::new(100.0, 50.0, 7.0))
            .unwrap();
        assert!((o + d * 7.0).max_abs_diff(p) < 1e-12);
    }
}
