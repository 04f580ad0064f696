use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context as _, Result};
use pseudo_lidar::augment::{fuse, stvd_discard};
use pseudo_lidar::clean::clean_pseudo;
use pseudo_lidar::kitti_io::{
    read_calib_file, read_depth_png, read_segment_png, read_velodyne_bin, write_labeled_cloud,
};
use pseudo_lidar::report::KeyValueReport;
use pseudo_lidar::sgp::sgp_generate_with;
use serde::Serialize;

use crate::commands::{label_real_scan, RealLabels};
use crate::common::{finish, render_report, Outcome};
use crate::config::Resolved;
use crate::dataset::Layout;
use crate::frames::{list_stems, run_frames, Frame, Mode};

#[derive(Debug, Clone, Serialize)]
pub struct PipelineFrameReport {
    pub pseudo_points: usize,
    pub cleaned_points: usize,
    pub removed_points: usize,
    pub real_points: usize,
    pub fused_points: usize,
    pub sgp_discard_fraction: f64,
    pub read_ms: f64,
    pub sgp_ms: f64,
    pub clean_ms: f64,
    pub fuse_ms: f64,
    pub write_ms: f64,
    pub total_ms: f64,
}

impl KeyValueReport for PipelineFrameReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        let ms = |v: f64| format!("{v:.3}");
        vec![
            ("pseudo_points", self.pseudo_points.to_string()),
            ("cleaned_points", self.cleaned_points.to_string()),
            ("removed_points", self.removed_points.to_string()),
            ("real_points", self.real_points.to_string()),
            ("fused_points", self.fused_points.to_string()),
            (
                "sgp_discard_fraction",
                format!("{:.6}", self.sgp_discard_fraction),
            ),
            ("read_ms", ms(self.read_ms)),
            ("sgp_ms", ms(self.sgp_ms)),
            ("clean_ms", ms(self.clean_ms)),
            ("fuse_ms", ms(self.fuse_ms)),
            ("write_ms", ms(self.write_ms)),
            ("total_ms", ms(self.total_ms)),
        ]
    }
}

fn millis(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// sgp → clean → (optional discard) → fuse for one frame. Intermediate clouds
/// are rounded to storage precision so each stage sees exactly what the
/// standalone command would read back from disk.
fn run_frame(
    cfg: &Resolved,
    layout: &Layout,
    out: &Path,
    stem: &str,
) -> Result<PipelineFrameReport> {
    let start = Instant::now();
    let depth = read_depth_png::<f64>(&layout.depth(stem), cfg.depth_scale)?;
    let segments = read_segment_png(&layout.segments(stem), cfg.labels.clone())?;
    let calib = read_calib_file::<f64>(&layout.calib(stem))?;
    let scan = read_velodyne_bin::<f64>(&layout.velodyne(stem))?;
    let read_ms = millis(start);

    let t = Instant::now();
    let (pseudo, sgp_report) =
        sgp_generate_with(&depth, &segments, &cfg.whitelist, &calib, &cfg.sgp)?;
    let pseudo = pseudo.to_storage_precision();
    let sgp_ms = millis(t);

    let t = Instant::now();
    let (cleaned, clean_report) = clean_pseudo(&pseudo, &scan, &cfg.policy);
    let clean_ms = millis(t);

    let t = Instant::now();
    let kept = match &cfg.discard {
        Some(spec) => stvd_discard(&cleaned, spec),
        None => cleaned.clone(),
    };
    let range_labels = layout.range_labels(stem);
    let source = match cfg.real_class {
        Some(id) => RealLabels::Constant(id),
        None => RealLabels::RangeImage(&range_labels, cfg.fov, cfg.lift),
    };
    let real = label_real_scan(scan, source, &cfg.labels)?;
    let fused = fuse(&real, &kept)?;
    let fuse_ms = millis(t);

    let t = Instant::now();
    let file = format!("{stem}.bin");
    write_labeled_cloud(&pseudo, &out.join("pseudo").join(&file))?;
    write_labeled_cloud(&cleaned, &out.join("cleaned").join(&file))?;
    write_labeled_cloud(&fused.cloud, &out.join("fused").join(&file))?;
    let write_ms = millis(t);

    Ok(PipelineFrameReport {
        pseudo_points: pseudo.len(),
        cleaned_points: clean_report.kept,
        removed_points: clean_report.removed,
        real_points: fused.real,
        fused_points: fused.total,
        sgp_discard_fraction: sgp_report.discard_fraction,
        read_ms,
        sgp_ms,
        clean_ms,
        fuse_ms,
        write_ms,
        total_ms: millis(start),
    })
}

#[derive(Serialize)]
struct FailureLine<'a> {
    frame: &'a str,
    error: String,
}

/// Processes every `velodyne/*.bin` frame of the dataset and writes
/// `pseudo/`, `cleaned/`, `fused/` and `report.jsonl` under the output root.
pub fn pipeline(cfg: &Resolved) -> Result<Outcome> {
    let layout = Layout::new(&cfg.dataset);
    let out = &cfg.output;
    for d in ["pseudo", "cleaned", "fused"] {
        let p = out.join(d);
        std::fs::create_dir_all(&p).with_context(|| format!("creating {}", p.display()))?;
    }
    let frames: Vec<Frame> = list_stems(&layout.velodyne_dir(), "bin")?
        .into_iter()
        .map(|stem| Frame {
            output: out.join("fused").join(format!("{stem}.bin")),
            inputs: vec![layout.velodyne(&stem)],
            stem,
        })
        .collect();
    let results = run_frames(&frames, cfg.workers, |f| {
        run_frame(cfg, &layout, out, &f.stem)
    })?;

    let report_path = out.join("report.jsonl");
    let mut file = std::fs::File::create(&report_path)
        .with_context(|| format!("creating {}", report_path.display()))?;
    for (f, r) in frames.iter().zip(&results) {
        let line = match r {
            Ok(report) => render_report(&f.stem, report, crate::cli::ReportFormat::Json),
            Err(e) => {
                serde_json::to_string(&FailureLine {
                    frame: &f.stem,
                    error: format!("{e:#}"),
                })? + "\n"
            }
        };
        file.write_all(line.as_bytes())
            .with_context(|| format!("writing {}", report_path.display()))?;
    }
    finish(Mode::Batch, &frames, results, cfg.format)
}
