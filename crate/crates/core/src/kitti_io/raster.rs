use std::collections::BTreeSet;
use std::io::Cursor;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::labels::LabelMap;
use crate::raster::{DepthMap, SegmentMap};
use crate::scalar::Real;

/// Raw units per meter in 16-bit depth PNGs (1/256 m resolution).
pub const DEFAULT_DEPTH_SCALE: f64 = 256.0;

/// Pixels whose depth did not fit the 16-bit range and were clamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DepthWriteStats {
    pub saturated: usize,
}

fn check_scale(scale: f64) -> Result<()> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Config(format!(
            "depth scale must be positive and finite, got {scale}"
        )));
    }
    Ok(())
}

fn decode_gray(
    bytes: &[u8],
    origin: &Path,
    depth: png::BitDepth,
) -> Result<(usize, usize, Vec<u8>)> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(origin, e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != depth {
        return Err(Error::format(
            origin,
            format!(
                "expected {}-bit grayscale PNG, found {:?} at {} bits",
                depth as u8, info.color_type, info.bit_depth as u8
            ),
        ));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format(origin, "image too large"))?;
    let mut buf = vec![0; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(origin, e.to_string()))?;
    buf.truncate(frame.buffer_size());
    Ok((w, h, buf))
}

fn encode_gray(width: usize, height: usize, depth: png::BitDepth, data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(depth);
        let mut writer = enc.write_header().expect("writing to a Vec cannot fail");
        writer
            .write_image_data(data)
            .expect("buffer size matches header");
        writer.finish().expect("writing to a Vec cannot fail");
    }
    out
}

pub fn decode_depth_png<T: Real>(bytes: &[u8], scale: f64, origin: &Path) -> Result<DepthMap<T>> {
    check_scale(scale)?;
    let (w, h, buf) = decode_gray(bytes, origin, png::BitDepth::Sixteen)?;
    let scale = T::lit(scale);
    let values = buf
        .chunks_exact(2)
        .map(|b| match u16::from_be_bytes([b[0], b[1]]) {
            0 => None,
            raw => Some(T::lit(raw as f64) / scale),
        })
        .collect();
    DepthMap::from_options(w, h, values)
}

pub fn read_depth_png<T: Real>(path: &Path, scale: f64) -> Result<DepthMap<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_depth_png(&bytes, scale, path)
}

/// Encodes `raw = round(depth · scale)`. Invalid pixels become 0; valid depths
/// outside `[1, 65535]` raw units are clamped and counted.
pub fn encode_depth_png<T: Real>(
    depth: &DepthMap<T>,
    scale: f64,
) -> Result<(Vec<u8>, DepthWriteStats)> {
    check_scale(scale)?;
    let mut stats = DepthWriteStats::default();
    let mut data = Vec::with_capacity(depth.depths().len() * 2);
    for (d, ok) in depth.depths().iter().zip(depth.valid_mask()) {
        let raw = if *ok {
            let r = (d.as_f64() * scale).round();
            if r > u16::MAX as f64 {
                stats.saturated += 1;
                u16::MAX
            } else if r < 1.0 {
                stats.saturated += 1;
                1
            } else {
                r as u16
            }
        } else {
            0
        };
        data.extend_from_slice(&raw.to_be_bytes());
    }
    Ok((
        encode_gray(depth.width(), depth.height(), png::BitDepth::Sixteen, &data),
        stats,
    ))
}

pub fn write_depth_png<T: Real>(
    depth: &DepthMap<T>,
    path: &Path,
    scale: f64,
) -> Result<DepthWriteStats> {
    let (bytes, stats) = encode_depth_png(depth, scale)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(stats)
}

pub fn decode_segment_png(
    bytes: &[u8],
    labels: Arc<LabelMap>,
    origin: &Path,
) -> Result<SegmentMap> {
    let (w, h, ids) = decode_gray(bytes, origin, png::BitDepth::Eight)?;
    let unknown: BTreeSet<u8> = ids
        .iter()
        .copied()
        .filter(|id| !labels.contains(*id))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::format(
            origin,
            format!("class ids {unknown:?} are not in the label map"),
        ));
    }
    SegmentMap::new(w, h, ids, labels)
}

pub fn read_segment_png(path: &Path, labels: Arc<LabelMap>) -> Result<SegmentMap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_segment_png(&bytes, labels, path)
}

pub fn encode_segment_png(segments: &SegmentMap) -> Vec<u8> {
    encode_gray(
        segments.width(),
        segments.height(),
        png::BitDepth::Eight,
        segments.ids(),
    )
}

pub fn write_segment_png(segments: &SegmentMap, path: &Path) -> Result<()> {
    std::fs::write(path, encode_segment_png(segments)).map_err(|e| Error::io(path, e))
}
