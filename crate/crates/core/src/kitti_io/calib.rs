use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{CalibrationSet, Mat3, Mat4};
use crate::scalar::Real;

/// Published calibration files carry 7 significant digits, so their rotations
/// are orthonormal only to ~1e-7. Inputs within this bound are projected onto
/// the nearest rotation before validation; anything worse is rejected.
const INPUT_ORTHONORMALITY_TOLERANCE: f64 = 1e-5;

const REQUIRED: [(&str, usize); 3] = [("P2", 12), ("R0_rect", 9), ("Tr_velo_to_cam", 12)];

pub fn read_calib_file<T: Real>(path: &Path) -> Result<CalibrationSet<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_calib(&text, path)
}

/// Parses KITTI object-devkit calibration text. Unknown keys are ignored.
pub fn parse_calib<T: Real>(text: &str, origin: &Path) -> Result<CalibrationSet<T>> {
    let mut entries: HashMap<&str, Vec<f64>> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, rest)) = line.split_once(':') else {
            return Err(Error::parse(
                origin,
                format!("line {}: expected `KEY: values`", lineno + 1),
            ));
        };
        let key = key.trim();
        if !REQUIRED.iter().any(|(k, _)| *k == key) {
            continue;
        }
        let values = rest
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(origin, format!("{key}: invalid number {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        entries.insert(key, values);
    }
    for (key, count) in REQUIRED {
        let values = entries
            .get(key)
            .ok_or_else(|| Error::parse(origin, format!("missing required key {key}")))?;
        if values.len() != count {
            return Err(Error::parse(
                origin,
                format!("{key}: expected {count} values, found {}", values.len()),
            ));
        }
    }

    let p2v = &entries["P2"];
    let p2 = [
        [p2v[0], p2v[1], p2v[2], p2v[3]],
        [p2v[4], p2v[5], p2v[6], p2v[7]],
        [p2v[8], p2v[9], p2v[10], p2v[11]],
    ];
    let r0 = snap_rotation(Mat3::from_row_slice(&entries["R0_rect"]), "R0_rect", origin)?;
    let trv = &entries["Tr_velo_to_cam"];
    let tr_block = [
        [trv[0], trv[1], trv[2], trv[3]],
        [trv[4], trv[5], trv[6], trv[7]],
        [trv[8], trv[9], trv[10], trv[11]],
    ];
    let tr_rot = snap_rotation(
        Mat4::from_3x4(&tr_block).rotation(),
        "Tr_velo_to_cam",
        origin,
    )?;
    let tr = Mat4::from_rotation_translation(&tr_rot, Mat4::from_3x4(&tr_block).translation_part());

    let calib = CalibrationSet::new(p2, r0, tr).map_err(|e| Error::parse(origin, e.to_string()))?;
    Ok(calib.cast())
}

fn snap_rotation(r: Mat3<f64>, key: &str, origin: &Path) -> Result<Mat3<f64>> {
    let err = r.orthonormality_error();
    if err < f64::rigidity_tolerance() {
        return Ok(r);
    }
    if !(err <= INPUT_ORTHONORMALITY_TOLERANCE) {
        return Err(Error::parse(
            origin,
            format!("{key}: rotation not orthonormal (max |RᵀR − I| = {err:e}, tolerance {INPUT_ORTHONORMALITY_TOLERANCE:e})"),
        ));
    }
    r.orthonormalized()
        .ok_or_else(|| Error::parse(origin, format!("{key}: singular rotation block")))
}

/// Renders the three required keys with round-trip exact numbers.
pub fn format_calib<T: Real>(calib: &CalibrationSet<T>) -> String {
    let mut out = String::new();
    let mut line = |key: &str, values: Vec<T>| {
        let vals: Vec<String> = values.iter().map(|v| format!("{:e}", v.as_f64())).collect();
        writeln!(out, "{key}: {}", vals.join(" ")).unwrap();
    };
    line("P2", calib.p2().iter().flatten().copied().collect());
    line("R0_rect", calib.r0().m.iter().flatten().copied().collect());
    line(
        "Tr_velo_to_cam",
        calib.tr_velo_to_cam().m[..3]
            .iter()
            .flatten()
            .copied()
            .collect(),
    );
    out
}

pub fn write_calib_file<T: Real>(calib: &CalibrationSet<T>, path: &Path) -> Result<()> {
    std::fs::write(path, format_calib(calib)).map_err(|e| Error::io(path, e))
}
