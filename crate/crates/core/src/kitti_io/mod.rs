//! Readers and writers for KITTI scans and calibration, the depth/segment
//! raster formats, and the labeled-cloud sidecar.
//!
//! | file | layout |
//! |------|--------|
//! | velodyne `.bin` | little-endian `f32 × 4` per point (x, y, z, intensity), no header |
//! | `.labels` | 2 bytes per point: class id, flags (bit 0 set = pseudo) |
//! | calib `.txt` | `KEY: v0 v1 ...` lines, keys `P2`, `R0_rect`, `Tr_velo_to_cam` |
//! | depth `.png` | 16-bit grayscale, meters = raw / scale, raw 0 = invalid |
//! | segment `.png` | 8-bit grayscale class ids, paired with `labelmap.txt` |

mod calib;
mod raster;
mod velodyne;

use std::path::Path;

pub use calib::{format_calib, parse_calib, read_calib_file, write_calib_file};
pub use raster::{
    decode_depth_png, decode_segment_png, encode_depth_png, encode_segment_png, read_depth_png,
    read_segment_png, write_depth_png, write_segment_png, DepthWriteStats, DEFAULT_DEPTH_SCALE,
};
pub use velodyne::{
    labels_sidecar_path, read_labeled_cloud, read_velodyne_bin, write_labeled_cloud,
    write_velodyne_bin,
};

use crate::error::{Error, Result};
use crate::labels::LabelMap;

pub fn read_label_map(path: &Path) -> Result<LabelMap> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    LabelMap::parse(&text, path)
}

pub fn write_label_map(map: &LabelMap, path: &Path) -> Result<()> {
    std::fs::write(path, map.to_text()).map_err(|e| Error::io(path, e))
}
