//! Homogeneous-coordinate algebra and the camera ↔ LiDAR kernels.

mod calib;
mod mat;
mod vec3;

pub use calib::{CalibrationSet, HomogeneousPixel, DEPTH_FLOOR};
pub use mat::{invert_rigid, Mat3, Mat4};
pub use vec3::Vec3;
