//! Removal of pseudo points that have no real LiDAR return in a small volume
//! around them, backed by a uniform voxel hash.

use std::collections::HashMap;
use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use crate::cloud::{LabeledPointCloud, Positioned, RawScan};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::report::{fraction, KeyValueReport};
use crate::scalar::Real;

pub type CellKey = [i64; 3];

/// Uniform-grid index: each point sits in the cell `⌊p / cell_size⌋`.
#[derive(Debug, Clone)]
pub struct VoxelIndex<'a, T, P> {
    cell_size: T,
    cells: HashMap<CellKey, Vec<usize>>,
    points: &'a [P],
    _scalar: PhantomData<T>,
}

fn cell_coord<T: Real>(v: T, cell_size: T) -> i64 {
    let c = (v / cell_size).floor();
    // saturate; far-away points share a boundary cell, the exact distance test still applies
    c.to_i64()
        .unwrap_or(if c > T::zero() { i64::MAX } else { i64::MIN })
}

pub fn build_voxel_index<T: Real, P: Positioned<T>>(
    points: &[P],
    cell_size: f64,
) -> Result<VoxelIndex<'_, T, P>> {
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(Error::Contract(format!(
            "cell size must be positive, got {cell_size}"
        )));
    }
    let cell_size = T::lit(cell_size);
    let mut cells: HashMap<CellKey, Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        let key = VoxelIndex::<T, P>::key_with(p.position(), cell_size);
        cells.entry(key).or_default().push(i);
    }
    Ok(VoxelIndex {
        cell_size,
        cells,
        points,
        _scalar: PhantomData,
    })
}

impl<'a, T: Real, P: Positioned<T>> VoxelIndex<'a, T, P> {
    fn key_with(p: Vec3<T>, cell_size: T) -> CellKey {
        [
            cell_coord(p.x, cell_size),
            cell_coord(p.y, cell_size),
            cell_coord(p.z, cell_size),
        ]
    }

    pub fn cell_of(&self, p: Vec3<T>) -> CellKey {
        Self::key_with(p, self.cell_size)
    }

    pub fn cell_size(&self) -> T {
        self.cell_size
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Total number of indexed points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cell(&self, key: CellKey) -> &[usize] {
        self.cells.get(&key).map_or(&[], Vec::as_slice)
    }

    pub fn cells(&self) -> impl Iterator<Item = (&CellKey, &Vec<usize>)> {
        self.cells.iter()
    }

    pub fn points(&self) -> &'a [P] {
        self.points
    }

    /// Visits the indices of all points in cells overlapping the axis-aligned
    /// box `center ± half_extent`. Stops early when `visit` returns `false`.
    pub fn for_each_candidate(
        &self,
        center: Vec3<T>,
        half_extent: T,
        mut visit: impl FnMut(usize) -> bool,
    ) {
        // widen by a few ulps so rounding in the caller's distance test never
        // accepts a point from an unvisited cell
        let widen = |c: T| half_extent + T::lit(4.0) * T::epsilon() * (c.abs() + half_extent);
        let reach = Vec3::new(widen(center.x), widen(center.y), widen(center.z));
        let lo = self.cell_of(center - reach);
        let hi = self.cell_of(center + reach);
        let span = |a: usize| (hi[a] as i128 - lo[a] as i128 + 1) as f64;
        if span(0) * span(1) * span(2) > self.cells.len() as f64 {
            // huge coordinates: cheaper to filter the occupied cells
            for (key, members) in &self.cells {
                if (0..3).all(|a| lo[a] <= key[a] && key[a] <= hi[a]) {
                    for &i in members {
                        if !visit(i) {
                            return;
                        }
                    }
                }
            }
            return;
        }
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    for &i in self.cell([x, y, z]) {
                        if !visit(i) {
                            return;
                        }
                    }
                }
            }
        }
    }
}

/// Shape of the neighborhood volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeShape {
    /// Closed ball of the given radius.
    Sphere,
    /// Axis-aligned cube with half-extent equal to the radius.
    Cube,
}

impl std::str::FromStr for VolumeShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(VolumeShape::Sphere),
            "cube" => Ok(VolumeShape::Cube),
            other => Err(Error::Config(format!(
                "unknown volume shape {other:?} (expected sphere or cube)"
            ))),
        }
    }
}

/// Keep rule: a pseudo point survives iff at least `min_real_neighbors` real
/// points lie in the closed volume of `radius` around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleanPolicy {
    radius: f64,
    shape: VolumeShape,
    min_real_neighbors: usize,
    cell_size: f64,
}

impl CleanPolicy {
    /// Uses `cell_size = radius`.
    pub fn new(radius: f64, shape: VolumeShape, min_real_neighbors: usize) -> Result<Self> {
        Self::with_cell_size(radius, shape, min_real_neighbors, radius)
    }

    /// `cell_size` must be at least `radius` so a query spans at most a few cells per axis.
    pub fn with_cell_size(
        radius: f64,
        shape: VolumeShape,
        min_real_neighbors: usize,
        cell_size: f64,
    ) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Config(format!(
                "clean radius must be positive, got {radius}"
            )));
        }
        if min_real_neighbors == 0 {
            return Err(Error::Config(
                "min_real_neighbors must be at least 1".into(),
            ));
        }
        if !(cell_size.is_finite() && cell_size >= radius) {
            return Err(Error::Config(format!(
                "cell size {cell_size} must be at least the radius {radius}"
            )));
        }
        Ok(CleanPolicy {
            radius,
            shape,
            min_real_neighbors,
            cell_size,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn shape(&self) -> VolumeShape {
        self.shape
    }

    pub fn min_real_neighbors(&self) -> usize {
        self.min_real_neighbors
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    /// Closed-volume membership of `candidate` around `center`.
    #[inline]
    pub fn contains<T: Real>(&self, center: Vec3<T>, candidate: Vec3<T>) -> bool {
        let d = candidate - center;
        let r = T::lit(self.radius);
        match self.shape {
            VolumeShape::Sphere => d.norm_squared() <= r * r,
            VolumeShape::Cube => d.x.abs() <= r && d.y.abs() <= r && d.z.abs() <= r,
        }
    }
}

impl Default for CleanPolicy {
    /// Sphere of 0.4 m, one real neighbor, 0.4 m cells.
    fn default() -> Self {
        CleanPolicy::new(0.4, VolumeShape::Sphere, 1).expect("default policy is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CleanReport {
    pub input: usize,
    pub kept: usize,
    pub removed: usize,
    pub removal_fraction: f64,
}

impl CleanReport {
    fn new(input: usize, kept: usize) -> Self {
        let removed = input - kept;
        let removal_fraction = if input == 0 {
            0.0
        } else {
            removed as f64 / input as f64
        };
        CleanReport {
            input,
            kept,
            removed,
            removal_fraction,
        }
    }
}

impl KeyValueReport for CleanReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("input", self.input.to_string()),
            ("kept", self.kept.to_string()),
            ("removed", self.removed.to_string()),
            ("removal_fraction", fraction(self.removal_fraction)),
        ]
    }
}

/// Keeps pseudo points with enough real support, preserving input order.
pub fn clean_pseudo<T: Real>(
    pseudo: &LabeledPointCloud<T>,
    real: &RawScan<T>,
    policy: &CleanPolicy,
) -> (LabeledPointCloud<T>, CleanReport) {
    apply_mask(pseudo, &clean_mask(pseudo, real, policy))
}

/// Per-point keep decisions of [`clean_pseudo`].
pub fn clean_mask<T: Real>(
    pseudo: &LabeledPointCloud<T>,
    real: &RawScan<T>,
    policy: &CleanPolicy,
) -> Vec<bool> {
    let index = build_voxel_index(real.points(), policy.cell_size)
        .expect("policy guarantees a positive cell size");
    let half = T::lit(policy.radius);
    pseudo
        .points()
        .iter()
        .map(|p| {
            let center = p.position;
            let mut found = 0;
            index.for_each_candidate(center, half, |i| {
                if policy.contains(center, real.points()[i].position) {
                    found += 1;
                }
                found < policy.min_real_neighbors
            });
            found >= policy.min_real_neighbors
        })
        .collect()
}

/// Same contract as [`clean_pseudo`], testing every real point against every
/// pseudo point. `O(N·M)`; meant for verification.
pub fn clean_pseudo_exhaustive<T: Real>(
    pseudo: &LabeledPointCloud<T>,
    real: &RawScan<T>,
    policy: &CleanPolicy,
) -> (LabeledPointCloud<T>, CleanReport) {
    let keep: Vec<bool> = pseudo
        .points()
        .iter()
        .map(|p| {
            real.points()
                .iter()
                .filter(|r| policy.contains(p.position, r.position))
                .take(policy.min_real_neighbors)
                .count()
                >= policy.min_real_neighbors
        })
        .collect();
    apply_mask(pseudo, &keep)
}

fn apply_mask<T: Real>(
    pseudo: &LabeledPointCloud<T>,
    keep: &[bool],
) -> (LabeledPointCloud<T>, CleanReport) {
    let kept: Vec<_> = pseudo
        .points()
        .iter()
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|(p, _)| *p)
        .collect();
    let report = CleanReport::new(pseudo.len(), kept.len());
    (
        LabeledPointCloud::from_parts(kept, pseudo.labels().clone()),
        report,
    )
}
