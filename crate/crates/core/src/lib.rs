//! LiDAR point cloud augmentation with semantically guided pseudo points.
//!
//! The pipeline turns pixel-aligned depth and semantic-segment rasters into a
//! class-filtered pseudo point cloud in the LiDAR frame ([`sgp`]), removes
//! pseudo points that have no real LiDAR support nearby ([`clean`]), and
//! concatenates the survivors with the labeled real scan ([`augment`]).
//! [`rangeview`] produces and un-projects the range image used to label the
//! real scan, and [`simulate`] renders analytic scenes with exact ground truth.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the double-precision instantiation used by the command-line tool.

// `!(x > y)` is the NaN-rejecting form used throughout input validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod clean;
pub mod cloud;
mod error;
pub mod geometry;
pub mod kitti_io;
pub mod labels;
pub mod rangeview;
pub mod raster;
pub mod report;
pub mod scalar;
pub mod sgp;
pub mod simulate;

pub use error::{Error, Result};
pub use labels::{ClassId, LabelMap};
pub use scalar::Real;

pub type Vec3d = geometry::Vec3<f64>;
pub type Mat4d = geometry::Mat4<f64>;
pub type Calibration = geometry::CalibrationSet<f64>;
pub type Scan = cloud::RawScan<f64>;
pub type Cloud = cloud::LabeledPointCloud<f64>;
pub type Depth = raster::DepthMap<f64>;
pub type Range = rangeview::RangeImage<f64>;
pub type Scene = simulate::Scene<f64>;
