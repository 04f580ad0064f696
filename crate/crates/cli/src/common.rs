use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Result};
use pseudo_lidar::clean::CleanPolicy;
use pseudo_lidar::kitti_io::read_label_map;
use pseudo_lidar::rangeview::FovSpec;
use pseudo_lidar::report::KeyValueReport;
use pseudo_lidar::sgp::{ClassWhitelist, SgpOptions};
use pseudo_lidar::LabelMap;
use serde::Serialize;

use crate::cli::{CleanParams, FovArgs, ReportFormat, SgpParams};
use crate::frames::{Frame, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Some frames of a batch failed; the rest were written.
    PartialFailure,
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub labels: Arc<LabelMap>,
    pub workers: usize,
    pub format: ReportFormat,
}

pub fn load_labels(path: Option<&Path>) -> Result<Arc<LabelMap>> {
    Ok(Arc::new(match path {
        Some(p) => read_label_map(p)?,
        None => LabelMap::semantic_kitti(),
    }))
}

pub fn fov(args: &FovArgs) -> Result<FovSpec> {
    Ok(FovSpec::from_degrees(
        args.fov_up,
        args.fov_down,
        args.range_width,
        args.range_height,
    )?)
}

pub fn whitelist(classes: Option<&[String]>, labels: &Arc<LabelMap>) -> Result<ClassWhitelist> {
    match classes {
        None => Ok(ClassWhitelist::detection_default(labels.clone())?),
        Some(names) => {
            let names: Vec<&str> = names
                .iter()
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .collect();
            Ok(ClassWhitelist::from_names(&names, labels.clone())?)
        }
    }
}

pub fn sgp_options(p: &SgpParams, base: SgpOptions) -> Result<SgpOptions> {
    let opts = SgpOptions {
        stride: p.stride.unwrap_or(base.stride),
        min_depth: p.min_depth.unwrap_or(base.min_depth),
        max_depth: p.max_depth.unwrap_or(base.max_depth),
    };
    opts.validate()?;
    Ok(opts)
}

pub fn clean_policy(p: &CleanParams, base: CleanPolicy) -> Result<CleanPolicy> {
    let radius = p.radius.unwrap_or(base.radius());
    // an explicit radius without a cell size keeps the index at one radius per cell
    let cell = p.cell_size.unwrap_or(if p.radius.is_some() {
        radius
    } else {
        base.cell_size()
    });
    Ok(CleanPolicy::with_cell_size(
        radius,
        p.shape.unwrap_or(base.shape()),
        p.min_neighbors.unwrap_or(base.min_real_neighbors()),
        cell,
    )?)
}

#[derive(Serialize)]
struct Framed<'a, R> {
    frame: &'a str,
    #[serde(flatten)]
    report: &'a R,
}

pub fn render_report<R: Serialize + KeyValueReport>(
    frame: &str,
    report: &R,
    format: ReportFormat,
) -> String {
    match format {
        ReportFormat::Kv => format!("frame={frame}\n{}", report.to_key_value()),
        ReportFormat::Json => {
            let line = serde_json::to_string(&Framed { frame, report })
                .expect("reports serialize to JSON");
            format!("{line}\n")
        }
    }
}

/// Prints each frame's report in order and logs failures to stderr. A failed
/// single frame is an error; failures inside a batch make the outcome partial.
pub fn finish<R: Serialize + KeyValueReport>(
    mode: Mode,
    frames: &[Frame],
    results: Vec<Result<R>>,
    format: ReportFormat,
) -> Result<Outcome> {
    if mode == Mode::Batch && frames.is_empty() {
        bail!("no input frames found");
    }
    let mut failed = 0;
    let mut out = String::new();
    for (frame, result) in frames.iter().zip(results) {
        match result {
            Ok(report) => out.push_str(&render_report(&frame.stem, &report, format)),
            Err(e) if mode == Mode::Single => return Err(e),
            Err(e) => {
                failed += 1;
                eprintln!("error: frame {}: {e:#}", frame.stem);
            }
        }
    }
    print!("{out}");
    if failed > 0 {
        eprintln!("{failed} of {} frames failed", frames.len());
        Ok(Outcome::PartialFailure)
    } else {
        Ok(Outcome::Success)
    }
}
