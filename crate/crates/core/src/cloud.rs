//! Point cloud containers.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::labels::{ClassId, LabelMap};
use crate::scalar::Real;

/// Whether a point was measured by the sensor or synthesized from a depth raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Real,
    Pseudo,
}

/// Anything with a position, so spatial indices work over scans and labeled clouds alike.
pub trait Positioned<T> {
    fn position(&self) -> Vec3<T>;
}

impl<T: Copy> Positioned<T> for Vec3<T> {
    fn position(&self) -> Vec3<T> {
        *self
    }
}

/// One LiDAR return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint<T> {
    pub position: Vec3<T>,
    pub intensity: T,
}

impl<T: Copy> Positioned<T> for ScanPoint<T> {
    fn position(&self) -> Vec3<T> {
        self.position
    }
}

/// A raw scan in the LiDAR frame: finite coordinates, intensity in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawScan<T> {
    points: Vec<ScanPoint<T>>,
}

impl<T: Real> RawScan<T> {
    pub fn new(points: Vec<ScanPoint<T>>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            check_point(i, p.position, p.intensity)?;
        }
        Ok(RawScan { points })
    }

    pub fn empty() -> Self {
        RawScan { points: Vec::new() }
    }

    pub fn points(&self) -> &[ScanPoint<T>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<ScanPoint<T>> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Labels every point with one class as a real cloud.
    pub fn into_labeled(
        self,
        class_id: ClassId,
        labels: Arc<LabelMap>,
    ) -> Result<LabeledPointCloud<T>> {
        if !labels.contains(class_id) {
            return Err(Error::Config(format!(
                "class id {class_id} is not in the label map"
            )));
        }
        let points = self
            .points
            .into_iter()
            .map(|p| LabeledPoint {
                position: p.position,
                intensity: p.intensity,
                class_id,
                provenance: Provenance::Real,
            })
            .collect();
        Ok(LabeledPointCloud { points, labels })
    }

    pub fn cast<U: Real>(&self) -> RawScan<U> {
        RawScan {
            points: self
                .points
                .iter()
                .map(|p| ScanPoint {
                    position: p.position.cast(),
                    intensity: U::lit(p.intensity.as_f64()),
                })
                .collect(),
        }
    }
}

fn check_point<T: Real>(index: usize, position: Vec3<T>, intensity: T) -> Result<()> {
    if !position.is_finite() {
        return Err(Error::Invariant(format!(
            "point {index} has non-finite coordinates"
        )));
    }
    if !(intensity >= T::zero() && intensity <= T::one()) {
        return Err(Error::Invariant(format!(
            "point {index} has intensity {intensity} outside [0, 1]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint<T> {
    pub position: Vec3<T>,
    pub intensity: T,
    pub class_id: ClassId,
    pub provenance: Provenance,
}

impl<T: Copy> Positioned<T> for LabeledPoint<T> {
    fn position(&self) -> Vec3<T> {
        self.position
    }
}

/// Points carrying a semantic class and a real/pseudo flag, with the label
/// map their class ids resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPointCloud<T> {
    points: Vec<LabeledPoint<T>>,
    labels: Arc<LabelMap>,
}

impl<T: Real> LabeledPointCloud<T> {
    pub fn new(points: Vec<LabeledPoint<T>>, labels: Arc<LabelMap>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            check_point(i, p.position, p.intensity)?;
            if !labels.contains(p.class_id) {
                return Err(Error::Invariant(format!(
                    "point {i} has class id {} missing from the label map",
                    p.class_id
                )));
            }
        }
        Ok(LabeledPointCloud { points, labels })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts(points: Vec<LabeledPoint<T>>, labels: Arc<LabelMap>) -> Self {
        LabeledPointCloud { points, labels }
    }

    pub fn empty(labels: Arc<LabelMap>) -> Self {
        LabeledPointCloud {
            points: Vec::new(),
            labels,
        }
    }

    pub fn points(&self) -> &[LabeledPoint<T>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<LabeledPoint<T>> {
        self.points
    }

    pub fn labels(&self) -> &Arc<LabelMap> {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.points
            .iter()
            .filter(|p| p.provenance == provenance)
            .count()
    }

    pub fn class_histogram(&self) -> BTreeMap<ClassId, usize> {
        let mut hist = BTreeMap::new();
        for p in &self.points {
            *hist.entry(p.class_id).or_insert(0) += 1;
        }
        hist
    }

    /// Drops labels, keeping coordinates and intensity.
    pub fn to_raw_scan(&self) -> RawScan<T> {
        RawScan {
            points: self
                .points
                .iter()
                .map(|p| ScanPoint {
                    position: p.position,
                    intensity: p.intensity,
                })
                .collect(),
        }
    }

    /// Rounds coordinates and intensity to the `f32` precision of the on-disk
    /// format, so in-memory results match a write/read cycle exactly.
    pub fn to_storage_precision(&self) -> Self {
        let round = |v: T| T::lit(v.as_f32() as f64);
        let points = self
            .points
            .iter()
            .map(|p| LabeledPoint {
                position: Vec3::new(
                    round(p.position.x),
                    round(p.position.y),
                    round(p.position.z),
                ),
                intensity: round(p.intensity),
                ..*p
            })
            .collect();
        LabeledPointCloud {
            points,
            labels: self.labels.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(x: f64, i: f64) -> ScanPoint<f64> {
        ScanPoint {
            position: Vec3::new(x, 0.0, 0.0),
            intensity: i,
        }
    }

    #[test]
    fn scan_invariants() {
        assert!(RawScan::new(vec![sp(1.0, 0.5)]).is_ok());
        assert!(RawScan::new(vec![sp(f64::NAN, 0.5)]).is_err());
        assert!(RawScan::new(vec![sp(1.0, 1.5)]).is_err());
        assert!(RawScan::new(vec![sp(1.0, -0.1)]).is_err());
    }

    #[test]
    fn labeling_requires_known_class() {
        let labels = Arc::new(LabelMap::semantic_kitti());
        let scan = RawScan::new(vec![sp(1.0, 0.2), sp(2.0, 0.3)]).unwrap();
        assert!(scan.clone().into_labeled(200, labels.clone()).is_err());
        let cloud = scan.into_labeled(1, labels).unwrap();
        assert_eq!(cloud.count(Provenance::Real), 2);
        assert_eq!(cloud.class_histogram()[&1], 2);
    }

    #[test]
    fn storage_precision_is_idempotent() {
        let labels = Arc::new(LabelMap::semantic_kitti());
        let cloud = RawScan::new(vec![sp(0.1, 0.3)])
            .unwrap()
            .into_labeled(0, labels)
            .unwrap();
        let once = cloud.to_storage_precision();
        assert_ne!(once.points()[0].position.x, 0.1);
        assert_eq!(once.to_storage_precision(), once);
    }
}
