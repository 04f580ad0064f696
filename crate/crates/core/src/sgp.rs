//! Semantically guided projection: keep only depth pixels whose segment class
//! is whitelisted and back-project them into the LiDAR frame.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use crate::cloud::{LabeledPoint, LabeledPointCloud, Provenance};
use crate::error::{Error, Result};
use crate::geometry::{CalibrationSet, HomogeneousPixel};
use crate::labels::{ClassId, LabelMap};
use crate::raster::{ensure_same_dims, DepthMap, SegmentMap};
use crate::report::{fraction, KeyValueReport};
use crate::scalar::Real;

/// Detection classes selected when no whitelist is configured.
pub const DEFAULT_CLASSES: [&str; 3] = ["car", "pedestrian", "cyclist"];

/// The set of classes whose pixels are turned into pseudo points.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWhitelist {
    ids: BTreeSet<ClassId>,
    labels: Arc<LabelMap>,
}

impl ClassWhitelist {
    pub fn from_ids(ids: &[ClassId], labels: Arc<LabelMap>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &id in ids {
            if !labels.contains(id) {
                return Err(Error::Config(format!(
                    "whitelisted class id {id} is not in the label map"
                )));
            }
            if !set.insert(id) {
                return Err(Error::Config(format!(
                    "class id {id} listed twice in the whitelist"
                )));
            }
        }
        Ok(ClassWhitelist { ids: set, labels })
    }

    pub fn from_names<S: AsRef<str>>(names: &[S], labels: Arc<LabelMap>) -> Result<Self> {
        let ids = names
            .iter()
            .map(|n| {
                let n = n.as_ref();
                labels
                    .id_of(n)
                    .ok_or_else(|| Error::Config(format!("unknown class name {n:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_ids(&ids, labels)
    }

    /// `car`, `pedestrian` and `cyclist`.
    pub fn detection_default(labels: Arc<LabelMap>) -> Result<Self> {
        Self::from_names(&DEFAULT_CLASSES, labels)
    }

    /// Every class of the label map.
    pub fn all(labels: Arc<LabelMap>) -> Self {
        ClassWhitelist {
            ids: labels.iter().map(|(id, _)| id).collect(),
            labels,
        }
    }

    pub fn contains(&self, id: ClassId) -> bool {
        self.ids.contains(&id)
    }

    pub fn ids(&self) -> &BTreeSet<ClassId> {
        &self.ids
    }

    pub fn names(&self) -> Vec<String> {
        self.ids.iter().map(|id| self.labels.display(*id)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Sampling stride and the accepted depth interval `(min_depth, max_depth]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgpOptions {
    pub stride: usize,
    pub min_depth: f64,
    pub max_depth: f64,
}

impl Default for SgpOptions {
    fn default() -> Self {
        SgpOptions {
            stride: 1,
            min_depth: 0.5,
            max_depth: 80.0,
        }
    }
}

impl SgpOptions {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if !(self.min_depth >= 0.0 && self.max_depth > self.min_depth && self.max_depth.is_finite())
        {
            return Err(Error::Config(format!(
                "depth bounds ({}, {}] must satisfy 0 <= min < max",
                self.min_depth, self.max_depth
            )));
        }
        Ok(())
    }
}

/// Pixel accounting for one projection run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SgpReport {
    /// Pixels visited (all pixels at stride 1).
    pub pixels_total: usize,
    /// Visited pixels with a valid depth inside the accepted interval.
    pub pixels_valid_depth: usize,
    /// Visited pixels with a valid depth outside the accepted interval.
    pub pixels_out_of_range: usize,
    /// Visited pixels whose class is whitelisted, regardless of depth.
    pub pixels_whitelisted: usize,
    pub points_emitted: usize,
    /// `1 − points_emitted / pixels_valid_depth`, 0 when no depth is valid.
    pub discard_fraction: f64,
}

impl KeyValueReport for SgpReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("pixels_total", self.pixels_total.to_string()),
            ("pixels_valid_depth", self.pixels_valid_depth.to_string()),
            ("pixels_out_of_range", self.pixels_out_of_range.to_string()),
            ("pixels_whitelisted", self.pixels_whitelisted.to_string()),
            ("points_emitted", self.points_emitted.to_string()),
            ("discard_fraction", fraction(self.discard_fraction)),
        ]
    }
}

/// Pseudo points for every whitelisted pixel with valid depth, in row-major
/// pixel order, using the default options.
pub fn sgp_generate<T: Real>(
    depth: &DepthMap<T>,
    segments: &SegmentMap,
    whitelist: &ClassWhitelist,
    calib: &CalibrationSet<T>,
) -> Result<(LabeledPointCloud<T>, SgpReport)> {
    sgp_generate_with(depth, segments, whitelist, calib, &SgpOptions::default())
}

pub fn sgp_generate_with<T: Real>(
    depth: &DepthMap<T>,
    segments: &SegmentMap,
    whitelist: &ClassWhitelist,
    calib: &CalibrationSet<T>,
    options: &SgpOptions,
) -> Result<(LabeledPointCloud<T>, SgpReport)> {
    if let Some(id) = whitelist
        .ids()
        .iter()
        .find(|id| !segments.labels().contains(**id))
    {
        return Err(Error::Config(format!(
            "whitelisted class id {id} is not in the segment label map"
        )));
    }
    project_pixels(depth, segments, calib, options, |id| whitelist.contains(id))
}

/// Back-projects every valid depth pixel, labeled by its segment class. The
/// dense baseline that class filtering is measured against.
pub fn full_backprojection<T: Real>(
    depth: &DepthMap<T>,
    segments: &SegmentMap,
    calib: &CalibrationSet<T>,
    options: &SgpOptions,
) -> Result<(LabeledPointCloud<T>, SgpReport)> {
    project_pixels(depth, segments, calib, options, |_| true)
}

fn project_pixels<T: Real>(
    depth: &DepthMap<T>,
    segments: &SegmentMap,
    calib: &CalibrationSet<T>,
    options: &SgpOptions,
    keep: impl Fn(ClassId) -> bool,
) -> Result<(LabeledPointCloud<T>, SgpReport)> {
    ensure_same_dims(depth, segments)?;
    options.validate()?;
    let (lo, hi) = (T::lit(options.min_depth), T::lit(options.max_depth));
    let mut report = SgpReport {
        pixels_total: 0,
        pixels_valid_depth: 0,
        pixels_out_of_range: 0,
        pixels_whitelisted: 0,
        points_emitted: 0,
        discard_fraction: 0.0,
    };
    let mut points = Vec::new();
    for v in (0..depth.height()).step_by(options.stride) {
        for u in (0..depth.width()).step_by(options.stride) {
            report.pixels_total += 1;
            let class_id = segments.get(u, v);
            let selected = keep(class_id);
            report.pixels_whitelisted += selected as usize;
            let Some(z) = depth.get(u, v) else { continue };
            if !(z > lo && z <= hi) {
                report.pixels_out_of_range += 1;
                continue;
            }
            report.pixels_valid_depth += 1;
            if !selected {
                continue;
            }
            let px = HomogeneousPixel::new(T::lit(u as f64), T::lit(v as f64), z);
            let position = calib.rectified_to_lidar(calib.pixel_to_rectified(px));
            points.push(LabeledPoint {
                position,
                intensity: T::zero(),
                class_id,
                provenance: Provenance::Pseudo,
            });
        }
    }
    report.points_emitted = points.len();
    if report.pixels_valid_depth > 0 {
        report.discard_fraction =
            1.0 - report.points_emitted as f64 / report.pixels_valid_depth as f64;
    }
    Ok((
        LabeledPointCloud::from_parts(points, segments.labels().clone()),
        report,
    ))
}
