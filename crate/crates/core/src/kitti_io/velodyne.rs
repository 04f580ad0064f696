use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::cloud::{LabeledPoint, LabeledPointCloud, Provenance, RawScan, ScanPoint};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::labels::LabelMap;
use crate::scalar::Real;

const STRIDE: usize = 16;
const FLAG_PSEUDO: u8 = 0b1;

/// The `.labels` file that accompanies a labeled `.bin`.
pub fn labels_sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("labels")
}

pub fn read_velodyne_bin<T: Real>(path: &Path) -> Result<RawScan<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_points(&bytes, path)
}

fn decode_points<T: Real>(bytes: &[u8], path: &Path) -> Result<RawScan<T>> {
    let whole = bytes.len() / STRIDE * STRIDE;
    if whole != bytes.len() {
        return Err(Error::format(
            path,
            format!(
                "truncated point record at byte offset {whole}: file length {} is not a multiple of {STRIDE}",
                bytes.len()
            ),
        ));
    }
    let mut points = Vec::with_capacity(bytes.len() / STRIDE);
    for (i, rec) in bytes.chunks_exact(STRIDE).enumerate() {
        let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap());
        let (x, y, z, intensity) = (f(0), f(1), f(2), f(3));
        if !(x.is_finite() && y.is_finite() && z.is_finite() && intensity.is_finite()) {
            return Err(Error::format(
                path,
                format!("point {i} has a non-finite value"),
            ));
        }
        if !(0.0..=1.0).contains(&intensity) {
            return Err(Error::format(
                path,
                format!("point {i} has intensity {intensity} outside [0, 1]"),
            ));
        }
        points.push(ScanPoint {
            position: Vec3::new(T::lit(x as f64), T::lit(y as f64), T::lit(z as f64)),
            intensity: T::lit(intensity as f64),
        });
    }
    Ok(RawScan::new(points).expect("decoded points satisfy the scan invariants"))
}

fn encode_points<T: Real>(points: impl Iterator<Item = (Vec3<T>, T)>, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len * STRIDE);
    for (p, i) in points {
        for v in [p.x, p.y, p.z, i] {
            out.extend_from_slice(&v.as_f32().to_le_bytes());
        }
    }
    out
}

pub fn write_velodyne_bin<T: Real>(scan: &RawScan<T>, path: &Path) -> Result<()> {
    let bytes = encode_points(
        scan.points().iter().map(|p| (p.position, p.intensity)),
        scan.len(),
    );
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes the standard `.bin` plus the `.labels` sidecar next to it.
pub fn write_labeled_cloud<T: Real>(cloud: &LabeledPointCloud<T>, path: &Path) -> Result<()> {
    let bytes = encode_points(
        cloud.points().iter().map(|p| (p.position, p.intensity)),
        cloud.len(),
    );
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let sidecar: Vec<u8> = cloud
        .points()
        .iter()
        .flat_map(|p| {
            [
                p.class_id,
                if p.provenance == Provenance::Pseudo {
                    FLAG_PSEUDO
                } else {
                    0
                },
            ]
        })
        .collect();
    let side = labels_sidecar_path(path);
    std::fs::write(&side, sidecar).map_err(|e| Error::io(side, e))
}

/// Reads a `.bin` and its `.labels` sidecar; every class id must be in `labels`.
pub fn read_labeled_cloud<T: Real>(
    path: &Path,
    labels: Arc<LabelMap>,
) -> Result<LabeledPointCloud<T>> {
    let scan: RawScan<T> = read_velodyne_bin(path)?;
    let side = labels_sidecar_path(path);
    let records = std::fs::read(&side).map_err(|e| Error::io(&side, e))?;
    if records.len() != 2 * scan.len() {
        return Err(Error::format(
            &side,
            format!(
                "expected {} bytes for {} points, found {}",
                2 * scan.len(),
                scan.len(),
                records.len()
            ),
        ));
    }
    let mut points = Vec::with_capacity(scan.len());
    for (i, (p, rec)) in scan
        .points()
        .iter()
        .zip(records.chunks_exact(2))
        .enumerate()
    {
        let (class_id, flags) = (rec[0], rec[1]);
        if flags & !FLAG_PSEUDO != 0 {
            return Err(Error::format(
                &side,
                format!("point {i} has unknown flag bits {flags:#010b}"),
            ));
        }
        if !labels.contains(class_id) {
            return Err(Error::format(
                &side,
                format!("point {i} has class id {class_id} missing from the label map"),
            ));
        }
        let provenance = if flags & FLAG_PSEUDO != 0 {
            Provenance::Pseudo
        } else {
            Provenance::Real
        };
        points.push(LabeledPoint {
            position: p.position,
            intensity: p.intensity,
            class_id,
            provenance,
        });
    }
    Ok(LabeledPointCloud::from_parts(points, labels))
}
