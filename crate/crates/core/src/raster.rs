//! Pixel-aligned depth and segment rasters in the camera image plane.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::labels::{ClassId, LabelMap};
use crate::scalar::Real;

/// Per-pixel depth in meters with a validity mask. Row-major, `v * width + u`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap<T> {
    width: usize,
    height: usize,
    depth: Vec<T>,
    valid: Vec<bool>,
}

impl<T: Real> DepthMap<T> {
    /// Valid pixels must hold finite, positive depth. Invalid pixels store 0.
    pub fn new(width: usize, height: usize, mut depth: Vec<T>, valid: Vec<bool>) -> Result<Self> {
        let n = width * height;
        if depth.len() != n || valid.len() != n {
            return Err(Error::Contract(format!(
                "depth raster {width}x{height} needs {n} samples, got {} depths and {} flags",
                depth.len(),
                valid.len()
            )));
        }
        for (i, (d, ok)) in depth.iter_mut().zip(&valid).enumerate() {
            if *ok {
                if !(d.is_finite() && *d > T::zero()) {
                    return Err(Error::Invariant(format!("valid pixel {i} has depth {d}")));
                }
            } else {
                *d = T::zero();
            }
        }
        Ok(DepthMap {
            width,
            height,
            depth,
            valid,
        })
    }

    /// Builds from optional depths; `None` marks an invalid pixel.
    pub fn from_options(width: usize, height: usize, values: Vec<Option<T>>) -> Result<Self> {
        let valid = values.iter().map(Option::is_some).collect();
        let depth = values
            .into_iter()
            .map(|v| v.unwrap_or_else(T::zero))
            .collect();
        Self::new(width, height, depth, valid)
    }

    pub fn invalid(width: usize, height: usize) -> Self {
        DepthMap {
            width,
            height,
            depth: vec![T::zero(); width * height],
            valid: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, u: usize, v: usize) -> Option<T> {
        let i = v * self.width + u;
        self.valid[i].then(|| self.depth[i])
    }

    pub fn depths(&self) -> &[T] {
        &self.depth
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Per-pixel semantic class ids, all resolvable in `labels`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentMap {
    width: usize,
    height: usize,
    class_id: Vec<ClassId>,
    labels: Arc<LabelMap>,
}

impl SegmentMap {
    pub fn new(
        width: usize,
        height: usize,
        class_id: Vec<ClassId>,
        labels: Arc<LabelMap>,
    ) -> Result<Self> {
        if class_id.len() != width * height {
            return Err(Error::Contract(format!(
                "segment raster {width}x{height} needs {} ids, got {}",
                width * height,
                class_id.len()
            )));
        }
        let unknown: BTreeSet<ClassId> = class_id
            .iter()
            .copied()
            .filter(|id| !labels.contains(*id))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::Invariant(format!(
                "class ids {unknown:?} are not in the label map"
            )));
        }
        Ok(SegmentMap {
            width,
            height,
            class_id,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, id: ClassId, labels: Arc<LabelMap>) -> Result<Self> {
        Self::new(width, height, vec![id; width * height], labels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, u: usize, v: usize) -> ClassId {
        self.class_id[v * self.width + u]
    }

    pub fn ids(&self) -> &[ClassId] {
        &self.class_id
    }

    pub fn labels(&self) -> &Arc<LabelMap> {
        &self.labels
    }
}

/// Errors unless the two rasters share dimensions.
pub fn ensure_same_dims<T: Real>(depth: &DepthMap<T>, segments: &SegmentMap) -> Result<()> {
    if depth.width != segments.width || depth.height != segments.height {
        return Err(Error::Contract(format!(
            "depth raster is {}x{} but segment raster is {}x{}",
            depth.width, depth.height, segments.width, segments.height
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_validity() {
        assert!(DepthMap::new(2, 1, vec![1.0, 0.0], vec![true, false]).is_ok());
        assert!(DepthMap::new(2, 1, vec![1.0, 0.0], vec![true, true]).is_err());
        assert!(DepthMap::new(2, 1, vec![f64::INFINITY, 0.0], vec![true, false]).is_err());
        assert!(DepthMap::<f64>::new(2, 2, vec![1.0], vec![true]).is_err());
        let d = DepthMap::new(2, 1, vec![1.0, 9.0], vec![true, false]).unwrap();
        assert_eq!(d.get(0, 0), Some(1.0));
        assert_eq!(d.get(1, 0), None);
        assert_eq!(d.depths()[1], 0.0);
    }

    #[test]
    fn segment_ids_must_resolve() {
        let labels =
            Arc::new(LabelMap::parse("0 background\n", std::path::Path::new("l")).unwrap());
        let err = SegmentMap::new(2, 1, vec![0, 7], labels.clone()).unwrap_err();
        assert!(err.to_string().contains("{7}"), "{err}");
        let seg = SegmentMap::filled(3, 2, 0, labels).unwrap();
        let depth = DepthMap::<f64>::invalid(2, 3);
        assert!(ensure_same_dims(&depth, &seg).is_err());
    }
}
