//! Single-stage subcommands. Each accepts a file per input or a directory per
//! input (frames paired by stem).

use std::path::Path;
use std::sync::Arc;

use anyhow::{Context as _, Result};
use pseudo_lidar::augment::{
    density_report, discard_sweep, format_sweep_table, fuse, stvd_discard, DensityReport,
    DiscardSpec,
};
use pseudo_lidar::clean::{clean_pseudo, CleanPolicy};
use pseudo_lidar::cloud::{LabeledPointCloud, RawScan};
use pseudo_lidar::kitti_io::{
    read_calib_file, read_depth_png, read_labeled_cloud, read_segment_png, read_velodyne_bin,
    write_depth_png, write_labeled_cloud,
};
use pseudo_lidar::rangeview::{
    lift_labels_with, spherical_project, DepthGate, FovSpec, LiftOptions,
};
use pseudo_lidar::report::KeyValueReport;
use pseudo_lidar::sgp::{full_backprojection, sgp_generate_with, SgpOptions, SgpReport};
use pseudo_lidar::LabelMap;
use serde::Serialize;

use crate::cli::{
    CleanArgs, FuseArgs, RangeProjectArgs, SgpArgs, StvdArgs, SweepArgs, TableFormat,
};
use crate::common::{self, finish, Context, Outcome};
use crate::frames::{ensure_parent, resolve, run_frames, Input};

#[derive(Debug, Serialize)]
pub struct RangeReport {
    pub width: usize,
    pub height: usize,
    pub fov_up_deg: f64,
    pub fov_down_deg: f64,
    pub depth_scale: f64,
    pub points: usize,
    pub valid_pixels: usize,
    /// Points inside the range floor.
    pub skipped: usize,
    /// Pixels clamped to the largest storable range.
    pub saturated: usize,
    /// Layout of `<stem>.range.bin`.
    pub channels: [&'static str; 5],
}

impl KeyValueReport for RangeReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("width", self.width.to_string()),
            ("height", self.height.to_string()),
            ("points", self.points.to_string()),
            ("valid_pixels", self.valid_pixels.to_string()),
            ("skipped", self.skipped.to_string()),
            ("saturated", self.saturated.to_string()),
        ]
    }
}

/// Writes `<stem>.png` (range, 16-bit), `<stem>.range.bin` (five f32 channels
/// per pixel) and `<stem>.json` (metadata) into the output directory.
pub fn range_project(args: &RangeProjectArgs, ctx: &Context) -> Result<Outcome> {
    let fov = common::fov(&args.fov)?;
    let out = &args.out;
    let single_out;
    let output = if args.scan.is_dir() {
        out.as_path()
    } else {
        let stem = args.scan.file_stem().unwrap_or_default().to_string_lossy();
        single_out = out.join(format!("{stem}.png"));
        single_out.as_path()
    };
    let inputs = [Input {
        flag: "scan",
        path: &args.scan,
        ext: "bin",
    }];
    let (mode, frames) = resolve(&inputs, output, "png")?;
    let results = run_frames(&frames, ctx.workers, |f| {
        let scan: RawScan<f64> = read_velodyne_bin(&f.inputs[0])?;
        let image = spherical_project(&scan, &fov);
        ensure_parent(&f.output)?;
        let stats = write_depth_png(&image.range_map(), &f.output, args.depth_scale)?;
        let channels = f.output.with_extension("range.bin");
        std::fs::write(&channels, image.encode_channels())
            .with_context(|| format!("writing {}", channels.display()))?;
        let report = RangeReport {
            width: fov.width(),
            height: fov.height(),
            fov_up_deg: args.fov.fov_up,
            fov_down_deg: args.fov.fov_down,
            depth_scale: args.depth_scale,
            points: scan.len(),
            valid_pixels: image.valid_count(),
            skipped: image.skipped(),
            saturated: stats.saturated,
            channels: ["x", "y", "z", "range", "intensity"],
        };
        let meta = f.output.with_extension("json");
        std::fs::write(&meta, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", meta.display()))?;
        Ok(report)
    })?;
    finish(mode, &frames, results, ctx.format)
}

#[derive(Debug, Serialize)]
pub struct SgpFrameReport {
    #[serde(flatten)]
    pub sgp: SgpReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityReport>,
}

impl KeyValueReport for SgpFrameReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        let mut f = self.sgp.fields();
        if let Some(d) = &self.density {
            for (k, v) in d.fields() {
                let key = match k {
                    "before" => "density_full",
                    "after" => "density_sgp",
                    "reduction" => "density_reduction",
                    "before_by_class" => "density_full_by_class",
                    "after_by_class" => "density_sgp_by_class",
                    other => other,
                };
                f.push((key, v));
            }
        }
        f
    }
}

pub fn sgp(args: &SgpArgs, ctx: &Context) -> Result<Outcome> {
    let whitelist = common::whitelist(args.params.classes.as_deref(), &ctx.labels)?;
    let opts = common::sgp_options(&args.params, SgpOptions::default())?;
    let inputs = [
        Input {
            flag: "depth",
            path: &args.depth,
            ext: "png",
        },
        Input {
            flag: "segments",
            path: &args.segments,
            ext: "png",
        },
        Input {
            flag: "calib",
            path: &args.calib,
            ext: "txt",
        },
    ];
    let (mode, frames) = resolve(&inputs, &args.out, "bin")?;
    let results = run_frames(&frames, ctx.workers, |f| {
        let depth = read_depth_png::<f64>(&f.inputs[0], args.depth_scale)?;
        let segments = read_segment_png(&f.inputs[1], ctx.labels.clone())?;
        let calib = read_calib_file::<f64>(&f.inputs[2])?;
        let (cloud, report) = sgp_generate_with(&depth, &segments, &whitelist, &calib, &opts)?;
        let density = if args.density {
            let (full, _) = full_backprojection(&depth, &segments, &calib, &opts)?;
            Some(density_report(&full, &cloud))
        } else {
            None
        };
        ensure_parent(&f.output)?;
        write_labeled_cloud(&cloud, &f.output)?;
        Ok(SgpFrameReport {
            sgp: report,
            density,
        })
    })?;
    finish(mode, &frames, results, ctx.format)
}

pub fn clean(args: &CleanArgs, ctx: &Context) -> Result<Outcome> {
    let policy = common::clean_policy(&args.params, CleanPolicy::default())?;
    let inputs = [
        Input {
            flag: "pseudo",
            path: &args.pseudo,
            ext: "bin",
        },
        Input {
            flag: "scan",
            path: &args.scan,
            ext: "bin",
        },
    ];
    let (mode, frames) = resolve(&inputs, &args.out, "bin")?;
    let results = run_frames(&frames, ctx.workers, |f| {
        let pseudo = read_labeled_cloud::<f64>(&f.inputs[0], ctx.labels.clone())?;
        let scan = read_velodyne_bin::<f64>(&f.inputs[1])?;
        let (kept, report) = clean_pseudo(&pseudo, &scan, &policy);
        ensure_parent(&f.output)?;
        write_labeled_cloud(&kept, &f.output)?;
        Ok(report)
    })?;
    finish(mode, &frames, results, ctx.format)
}

#[derive(Debug, Serialize)]
pub struct FuseReport {
    pub real: usize,
    pub pseudo: usize,
    pub total: usize,
}

impl KeyValueReport for FuseReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("real", self.real.to_string()),
            ("pseudo", self.pseudo.to_string()),
            ("total", self.total.to_string()),
        ]
    }
}

/// How the real scan gets its labels before fusion.
#[derive(Debug, Clone, Copy)]
pub enum RealLabels<'a> {
    /// Lift from a range-image segment PNG at this path.
    RangeImage(&'a Path, FovSpec, LiftOptions),
    /// One class for every point.
    Constant(u8),
}

pub fn label_real_scan(
    scan: RawScan<f64>,
    source: RealLabels,
    labels: &Arc<LabelMap>,
) -> Result<LabeledPointCloud<f64>> {
    Ok(match source {
        RealLabels::RangeImage(path, fov, options) => {
            let range_labels = read_segment_png(path, labels.clone())?;
            let image = spherical_project(&scan, &fov);
            lift_labels_with(&range_labels, &image, &scan, &fov, &options)?
        }
        RealLabels::Constant(id) => scan.into_labeled(id, labels.clone())?,
    })
}

/// Occluded points more than `tolerance` meters behind their pixel's nearest
/// return get the `unlabeled` class instead of the pixel label.
pub fn lift_options(tolerance: Option<f64>, labels: &LabelMap) -> Result<LiftOptions> {
    let Some(tolerance) = tolerance else {
        return Ok(LiftOptions::default());
    };
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        anyhow::bail!("label lift depth gate must be a non-negative distance, got {tolerance}");
    }
    let fallback = labels
        .id_of("unlabeled")
        .context("the label lift depth gate needs an `unlabeled` class in the label map")?;
    Ok(LiftOptions {
        depth_gate: Some(DepthGate {
            tolerance,
            fallback,
        }),
    })
}

pub fn fuse_cmd(args: &FuseArgs, ctx: &Context) -> Result<Outcome> {
    let fov = common::fov(&args.fov)?;
    let constant = match &args.real_class {
        Some(name) => Some(
            ctx.labels
                .id_of(name)
                .with_context(|| format!("unknown class {name:?} for --real-class"))?,
        ),
        None => None,
    };
    let lift = lift_options(args.label_lift_depth_gate, &ctx.labels)?;
    let mut inputs = vec![
        Input {
            flag: "scan",
            path: &args.scan,
            ext: "bin",
        },
        Input {
            flag: "pseudo",
            path: &args.pseudo,
            ext: "bin",
        },
    ];
    if let Some(p) = &args.range_labels {
        inputs.push(Input {
            flag: "range-labels",
            path: p,
            ext: "png",
        });
    }
    let (mode, frames) = resolve(&inputs, &args.out, "bin")?;
    let results = run_frames(&frames, ctx.workers, |f| {
        let scan = read_velodyne_bin::<f64>(&f.inputs[0])?;
        let pseudo = read_labeled_cloud::<f64>(&f.inputs[1], ctx.labels.clone())?;
        let source = match constant {
            Some(id) => RealLabels::Constant(id),
            None => RealLabels::RangeImage(&f.inputs[2], fov, lift),
        };
        let real = label_real_scan(scan, source, &ctx.labels)?;
        let fused = fuse(&real, &pseudo)?;
        ensure_parent(&f.output)?;
        write_labeled_cloud(&fused.cloud, &f.output)?;
        Ok(FuseReport {
            real: fused.real,
            pseudo: fused.pseudo,
            total: fused.total,
        })
    })?;
    finish(mode, &frames, results, ctx.format)
}

#[derive(Debug, Serialize)]
pub struct StvdReport {
    pub rate: f64,
    pub seed: u64,
    pub input: usize,
    pub kept: usize,
}

impl KeyValueReport for StvdReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("rate", self.rate.to_string()),
            ("seed", self.seed.to_string()),
            ("input", self.input.to_string()),
            ("kept", self.kept.to_string()),
        ]
    }
}

pub fn stvd(args: &StvdArgs, ctx: &Context) -> Result<Outcome> {
    let spec = DiscardSpec::new(args.rate, args.seed)?;
    let inputs = [Input {
        flag: "input",
        path: &args.input,
        ext: "bin",
    }];
    let (mode, frames) = resolve(&inputs, &args.out, "bin")?;
    let results = run_frames(&frames, ctx.workers, |f| {
        let cloud = read_labeled_cloud::<f64>(&f.inputs[0], ctx.labels.clone())?;
        let kept = stvd_discard(&cloud, &spec);
        ensure_parent(&f.output)?;
        write_labeled_cloud(&kept, &f.output)?;
        Ok(StvdReport {
            rate: spec.rate(),
            seed: spec.seed(),
            input: cloud.len(),
            kept: kept.len(),
        })
    })?;
    finish(mode, &frames, results, ctx.format)
}

pub fn sweep(args: &SweepArgs, ctx: &Context) -> Result<Outcome> {
    let cloud = read_labeled_cloud::<f64>(&args.input, ctx.labels.clone())?;
    let rows = discard_sweep(&cloud, &args.rates, args.seed)?;
    match args.format {
        TableFormat::Table => print!("{}", format_sweep_table(&rows)),
        TableFormat::Json => {
            for r in &rows {
                println!("{}", serde_json::to_string(r)?);
            }
        }
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(Outcome::Success)
}
