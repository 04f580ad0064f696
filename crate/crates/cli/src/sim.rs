use std::path::Path;

use anyhow::{Context as _, Result};
use pseudo_lidar::kitti_io::{
    write_calib_file, write_depth_png, write_label_map, write_segment_png, write_velodyne_bin,
};
use pseudo_lidar::rangeview::FovSpec;
use pseudo_lidar::report::KeyValueReport;
use pseudo_lidar::sgp::ClassWhitelist;
use pseudo_lidar::simulate::{random_scene, render_frame, RandomSceneSpec, SceneDescription};
use serde::Serialize;

use crate::cli::SimArgs;
use crate::common::{self, finish, Context, Outcome};
use crate::dataset::Layout;
use crate::frames::{Frame, Mode};

#[derive(Debug, Serialize)]
pub struct SimReport {
    pub scan_points: usize,
    pub valid_depth: usize,
    pub pixels: usize,
    /// Share of camera pixels showing the default detection classes.
    pub foreground_ratio: f64,
    pub saturated: usize,
}

impl KeyValueReport for SimReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("scan_points", self.scan_points.to_string()),
            ("valid_depth", self.valid_depth.to_string()),
            ("pixels", self.pixels.to_string()),
            ("foreground_ratio", format!("{:.6}", self.foreground_ratio)),
            ("saturated", self.saturated.to_string()),
        ]
    }
}

/// Renders one scene into every directory of the dataset layout.
pub fn write_frame(
    root: &Path,
    stem: &str,
    desc: &SceneDescription,
    fov: &FovSpec,
    depth_scale: f64,
    ctx: &Context,
) -> Result<SimReport> {
    let layout = Layout::new(root);
    let scene = desc.build::<f64>(ctx.labels.clone())?;
    let frame = render_frame(&scene, fov);
    layout.create_dirs()?;
    write_velodyne_bin(&frame.scan, &layout.velodyne(stem))?;
    write_calib_file(scene.calib(), &layout.calib(stem))?;
    let stats = write_depth_png(&frame.depth, &layout.depth(stem), depth_scale)?;
    write_segment_png(&frame.segments, &layout.segments(stem))?;
    write_segment_png(&frame.range_labels, &layout.range_labels(stem))?;
    let scene_path = layout.scene(stem);
    std::fs::write(&scene_path, desc.to_toml())
        .with_context(|| format!("writing {}", scene_path.display()))?;
    let fg = ClassWhitelist::detection_default(ctx.labels.clone())?;
    Ok(SimReport {
        scan_points: frame.scan.len(),
        valid_depth: frame.depth.valid_count(),
        pixels: scene.width() * scene.height(),
        foreground_ratio: frame.class_pixel_ratio(&fg),
        saturated: stats.saturated,
    })
}

pub fn sim(args: &SimArgs, ctx: &Context) -> Result<Outcome> {
    let fov = common::fov(&args.fov)?;
    let scenes: Vec<(String, SceneDescription)> = match (&args.scene, args.frames) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let stem = path
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            vec![(stem, SceneDescription::parse(&text, path)?)]
        }
        (None, Some(n)) => {
            let seed = args.seed.expect("clap requires --seed with --frames");
            let spec = RandomSceneSpec::default();
            (0..n)
                .map(|i| {
                    let s = seed.wrapping_add(i as u64);
                    (format!("{i:06}"), random_scene(s, &spec))
                })
                .collect()
        }
        (None, None) => unreachable!("clap requires --scene or --frames"),
    };
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_label_map(&ctx.labels, &Layout::new(&args.out).label_map())?;
    let frames: Vec<Frame> = scenes
        .iter()
        .map(|(stem, _)| Frame {
            stem: stem.clone(),
            inputs: vec![],
            output: args.out.clone(),
        })
        .collect();
    let results = crate::frames::run_frames(&frames, ctx.workers, |f| {
        let desc = &scenes
            .iter()
            .find(|(s, _)| *s == f.stem)
            .expect("frame from scenes")
            .1;
        write_frame(&args.out, &f.stem, desc, &fov, args.depth_scale, ctx)
    })?;
    let mode = if args.scene.is_some() {
        Mode::Single
    } else {
        Mode::Batch
    };
    finish(mode, &frames, results, ctx.format)
}
