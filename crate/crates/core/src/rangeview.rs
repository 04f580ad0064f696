//! Spherical projection of a scan onto the range image, and un-projection of
//! range-image labels back onto the scan points.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::cloud::{LabeledPoint, LabeledPointCloud, Provenance, RawScan};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::labels::ClassId;
use crate::raster::{DepthMap, SegmentMap};
use crate::scalar::Real;

/// Returns closer than this (meters) are ego-vehicle hits and are skipped.
pub const RANGE_FLOOR: f64 = 0.5;

/// Vertical field of view (radians, `fov_down` below the horizon is negative)
/// and range-image size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovSpec {
    fov_up: f64,
    fov_down: f64,
    width: usize,
    height: usize,
}

impl FovSpec {
    pub fn new(fov_up: f64, fov_down: f64, width: usize, height: usize) -> Result<Self> {
        if !(fov_up.is_finite() && fov_down.is_finite() && fov_up > fov_down) {
            return Err(Error::Config(format!(
                "fov_up ({fov_up}) must exceed fov_down ({fov_down})"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::Config(format!(
                "range image must be at least 1x1, got {width}x{height}"
            )));
        }
        Ok(FovSpec {
            fov_up,
            fov_down,
            width,
            height,
        })
    }

    pub fn from_degrees(up_deg: f64, down_deg: f64, width: usize, height: usize) -> Result<Self> {
        Self::new(up_deg.to_radians(), down_deg.to_radians(), width, height)
    }

    pub fn fov_up(&self) -> f64 {
        self.fov_up
    }

    pub fn fov_down(&self) -> f64 {
        self.fov_down
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Pixel `(column, row)` of a point, clamped into the image. The origin
    /// has no direction and maps to the forward horizon.
    pub fn pixel_of<T: Real>(&self, p: Vec3<T>) -> (usize, usize) {
        let r = p.norm();
        let yaw = p.y.atan2(p.x);
        let pitch = if r > T::zero() {
            (p.z / r).max(-T::one()).min(T::one()).asin()
        } else {
            T::zero()
        };
        let (w, h) = (T::lit(self.width as f64), T::lit(self.height as f64));
        let (up, down) = (T::lit(self.fov_up), T::lit(self.fov_down));
        let u = (T::lit(0.5) * (T::one() - yaw / T::PI()) * w).floor();
        let v = ((T::one() - (pitch - down) / (up - down)) * h).floor();
        (clamp_index(u, self.width), clamp_index(v, self.height))
    }

    /// Unit direction through the center of pixel `(column, row)`; inverse of
    /// [`pixel_of`](Self::pixel_of) on pixel centers.
    pub fn ray_direction<T: Real>(&self, col: usize, row: usize) -> Vec3<T> {
        let (w, h) = (self.width as f64, self.height as f64);
        let yaw = std::f64::consts::PI * (1.0 - 2.0 * (col as f64 + 0.5) / w);
        let pitch = self.fov_down + (1.0 - (row as f64 + 0.5) / h) * (self.fov_up - self.fov_down);
        let (sy, cy) = yaw.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        Vec3::new(T::lit(cp * cy), T::lit(cp * sy), T::lit(sp))
    }
}

impl Default for FovSpec {
    /// 64×2048, +3° / −25° (HDL-64E).
    fn default() -> Self {
        FovSpec::from_degrees(3.0, -25.0, 2048, 64).expect("default field of view is valid")
    }
}

fn clamp_index<T: Real>(v: T, n: usize) -> usize {
    if v <= T::zero() {
        0
    } else {
        v.to_usize().map_or(n - 1, |i| i.min(n - 1))
    }
}

/// Range image with per-pixel range, coordinates, intensity and the index of
/// the winning scan point. Row-major, `row * width + column`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeImage<T> {
    width: usize,
    height: usize,
    range: Vec<T>,
    xyz: Vec<Vec3<T>>,
    intensity: Vec<T>,
    source_index: Vec<Option<usize>>,
    skipped: usize,
}

impl<T: Real> RangeImage<T> {
    fn blank(width: usize, height: usize) -> Self {
        let n = width * height;
        RangeImage {
            width,
            height,
            range: vec![T::zero(); n],
            xyz: vec![Vec3::zero(); n],
            intensity: vec![T::zero(); n],
            source_index: vec![None; n],
            skipped: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn range(&self, col: usize, row: usize) -> Option<T> {
        let i = row * self.width + col;
        self.source_index[i].map(|_| self.range[i])
    }

    pub fn position(&self, col: usize, row: usize) -> Option<Vec3<T>> {
        let i = row * self.width + col;
        self.source_index[i].map(|_| self.xyz[i])
    }

    pub fn intensity(&self, col: usize, row: usize) -> Option<T> {
        let i = row * self.width + col;
        self.source_index[i].map(|_| self.intensity[i])
    }

    pub fn source_index(&self, col: usize, row: usize) -> Option<usize> {
        self.source_index[row * self.width + col]
    }

    pub fn valid_count(&self) -> usize {
        self.source_index.iter().filter(|s| s.is_some()).count()
    }

    /// Points dropped for lying inside the range floor.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// The range channel as a depth raster, for export as a 16-bit PNG.
    pub fn range_map(&self) -> DepthMap<T> {
        let valid = self.source_index.iter().map(Option::is_some).collect();
        DepthMap::new(self.width, self.height, self.range.clone(), valid)
            .expect("valid pixels hold positive range")
    }

    /// Five little-endian `f32` channels per pixel (x, y, z, range, intensity),
    /// row-major; invalid pixels are all zero.
    pub fn encode_channels(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.range.len() * 20);
        for i in 0..self.range.len() {
            let p = self.xyz[i];
            for v in [p.x, p.y, p.z, self.range[i], self.intensity[i]] {
                out.extend_from_slice(&v.as_f32().to_le_bytes());
            }
        }
        out
    }

    /// Channel values `(x, y, z, range, intensity)` of a valid pixel.
    pub fn channels(&self, col: usize, row: usize) -> Option<[T; 5]> {
        let i = row * self.width + col;
        self.source_index[i].map(|_| {
            let p = self.xyz[i];
            [p.x, p.y, p.z, self.range[i], self.intensity[i]]
        })
    }
}

/// Decodes [`RangeImage::encode_channels`] output into per-pixel channels;
/// `None` where the stored range is zero.
pub fn decode_channels(bytes: &[u8], width: usize, height: usize) -> Result<Vec<Option<[f32; 5]>>> {
    if bytes.len() != width * height * 20 {
        return Err(Error::Contract(format!(
            "channel buffer has {} bytes, expected {} for {width}x{height}",
            bytes.len(),
            width * height * 20
        )));
    }
    Ok(bytes
        .chunks_exact(20)
        .map(|px| {
            let c: [f32; 5] = std::array::from_fn(|k| {
                f32::from_le_bytes(px[4 * k..4 * k + 4].try_into().unwrap())
            });
            (c[3] > 0.0).then_some(c)
        })
        .collect())
}

/// Orders candidates for one pixel: nearer first, then coordinates and
/// intensity so the winner does not depend on scan order.
fn candidate_order<T: Real>(a: (T, Vec3<T>, T), b: (T, Vec3<T>, T)) -> Ordering {
    let key = |c: (T, Vec3<T>, T)| [c.0, c.1.x, c.1.y, c.1.z, c.2];
    key(a)
        .iter()
        .zip(key(b).iter())
        .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Projects every point at or beyond [`RANGE_FLOOR`] onto the range image;
/// the nearest point wins each pixel.
pub fn spherical_project<T: Real>(scan: &RawScan<T>, fov: &FovSpec) -> RangeImage<T> {
    let mut img = RangeImage::blank(fov.width, fov.height);
    let floor = T::lit(RANGE_FLOOR);
    for (i, p) in scan.points().iter().enumerate() {
        let r = p.position.norm();
        if !(r >= floor) {
            img.skipped += 1;
            continue;
        }
        let (u, v) = fov.pixel_of(p.position);
        let k = v * fov.width + u;
        let candidate = (r, p.position, p.intensity);
        let take = match img.source_index[k] {
            None => true,
            Some(_) => {
                candidate_order(candidate, (img.range[k], img.xyz[k], img.intensity[k]))
                    == Ordering::Less
            }
        };
        if take {
            img.range[k] = r;
            img.xyz[k] = p.position;
            img.intensity[k] = p.intensity;
            img.source_index[k] = Some(i);
        }
    }
    img
}

/// Optional occlusion gating for label un-projection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LiftOptions {
    /// When set, points farther than `tolerance` meters behind their pixel's
    /// winning point receive `fallback` instead of the pixel label.
    pub depth_gate: Option<DepthGate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthGate {
    pub tolerance: f64,
    pub fallback: ClassId,
}

/// Labels every scan point with the class of the range-image pixel it
/// projects to. Occluded points inherit their pixel's label.
pub fn lift_labels<T: Real>(
    range_labels: &SegmentMap,
    range_image: &RangeImage<T>,
    scan: &RawScan<T>,
    fov: &FovSpec,
) -> Result<LabeledPointCloud<T>> {
    lift_labels_with(
        range_labels,
        range_image,
        scan,
        fov,
        &LiftOptions::default(),
    )
}

pub fn lift_labels_with<T: Real>(
    range_labels: &SegmentMap,
    range_image: &RangeImage<T>,
    scan: &RawScan<T>,
    fov: &FovSpec,
    options: &LiftOptions,
) -> Result<LabeledPointCloud<T>> {
    if range_labels.width() != range_image.width() || range_labels.height() != range_image.height()
    {
        return Err(Error::Contract(format!(
            "range labels are {}x{} but the range image is {}x{}",
            range_labels.width(),
            range_labels.height(),
            range_image.width(),
            range_image.height()
        )));
    }
    if range_image.width() != fov.width || range_image.height() != fov.height {
        return Err(Error::Contract(
            "range image was not produced with this field of view".into(),
        ));
    }
    if let Some(gate) = options.depth_gate {
        if !range_labels.labels().contains(gate.fallback) {
            return Err(Error::Config(format!(
                "depth-gate fallback class {} is not in the label map",
                gate.fallback
            )));
        }
    }
    let points = scan
        .points()
        .iter()
        .map(|p| {
            let (u, v) = fov.pixel_of(p.position);
            let mut class_id = range_labels.get(u, v);
            if let (Some(gate), Some(front)) = (options.depth_gate, range_image.range(u, v)) {
                if p.position.norm() > front + T::lit(gate.tolerance) {
                    class_id = gate.fallback;
                }
            }
            LabeledPoint {
                position: p.position,
                intensity: p.intensity,
                class_id,
                provenance: Provenance::Real,
            }
        })
        .collect();
    Ok(LabeledPointCloud::from_parts(
        points,
        range_labels.labels().clone(),
    ))
}
