//! Pipeline configuration. Precedence: command-line flags, then the config
//! file, then the dataset-root environment variable, then built-in defaults.
//!
//! ```toml
//! dataset = "data/kitti_like"      # relative paths resolve against this file
//! output = "out"
//! workers = 4
//! report_format = "json"
//! depth_scale = 256.0
//!
//! [fov]
//! up_deg = 3.0
//! down_deg = -25.0
//! width = 2048
//! height = 64
//!
//! [sgp]
//! classes = ["car", "pedestrian", "cyclist"]
//! stride = 1
//! min_depth = 0.5
//! max_depth = 80.0
//!
//! [clean]
//! radius = 0.4
//! shape = "sphere"
//! min_neighbors = 1
//! cell_size = 0.4
//!
//! [fuse]
//! real_class = "unlabeled"   # omit to lift labels from range_labels/
//! label_lift_depth_gate = 0.5  # optional, meters; only when lifting
//!
//! [discard]                  # optional random discard before fusion
//! rate = 0.8
//! seed = 7
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use pseudo_lidar::augment::DiscardSpec;
use pseudo_lidar::clean::{CleanPolicy, VolumeShape};
use pseudo_lidar::rangeview::{FovSpec, LiftOptions};
use pseudo_lidar::sgp::{ClassWhitelist, SgpOptions};
use pseudo_lidar::{ClassId, LabelMap};
use serde::Deserialize;

use crate::cli::{CleanParams, PipelineArgs, ReportFormat, SgpParams, DATASET_ENV};
use crate::common;
use crate::dataset::Layout;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub report_format: Option<ReportFormat>,
    pub label_map: Option<PathBuf>,
    pub depth_scale: Option<f64>,
    #[serde(default)]
    pub fov: FovSection,
    #[serde(default)]
    pub sgp: SgpSection,
    #[serde(default)]
    pub clean: CleanSection,
    #[serde(default)]
    pub fuse: FuseSection,
    pub discard: Option<DiscardSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FovSection {
    pub up_deg: Option<f64>,
    pub down_deg: Option<f64>,
    pub width: Option<usize>,
    pub height: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgpSection {
    pub classes: Option<Vec<String>>,
    pub stride: Option<usize>,
    pub min_depth: Option<f64>,
    pub max_depth: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleanSection {
    pub radius: Option<f64>,
    pub shape: Option<VolumeShape>,
    pub min_neighbors: Option<usize>,
    pub cell_size: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuseSection {
    pub real_class: Option<String>,
    pub label_lift_depth_gate: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscardSection {
    pub rate: f64,
    pub seed: u64,
}

impl PipelineConfig {
    /// Parses the file and makes its relative paths absolute against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| anyhow::anyhow!("{}: {}", path.display(), e.message()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.dataset, &mut cfg.output, &mut cfg.label_map]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Fully validated pipeline settings.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub dataset: PathBuf,
    pub output: PathBuf,
    pub workers: usize,
    pub format: ReportFormat,
    pub labels: Arc<LabelMap>,
    pub depth_scale: f64,
    pub fov: FovSpec,
    pub whitelist: ClassWhitelist,
    pub sgp: SgpOptions,
    pub policy: CleanPolicy,
    pub real_class: Option<ClassId>,
    pub lift: LiftOptions,
    pub discard: Option<DiscardSpec>,
}

/// Global flags that also exist as config keys.
pub struct GlobalFlags<'a> {
    pub label_map: Option<&'a Path>,
    pub workers: Option<usize>,
    pub format: Option<ReportFormat>,
}

pub fn resolve(
    args: &PipelineArgs,
    global: &GlobalFlags,
    env_dataset: Option<PathBuf>,
) -> Result<Resolved> {
    let cfg = match &args.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let dataset = args
        .dataset
        .clone()
        .or(cfg.dataset)
        .or(env_dataset)
        .with_context(|| format!("no dataset root: pass --dataset, set `dataset` in the config, or set {DATASET_ENV}"))?;
    if !dataset.is_dir() {
        bail!("dataset root {} is not a directory", dataset.display());
    }
    let layout = Layout::new(&dataset);
    if !layout.velodyne_dir().is_dir() {
        bail!(
            "dataset root {} has no velodyne/ directory",
            dataset.display()
        );
    }
    let label_path = global
        .label_map
        .map(Path::to_path_buf)
        .or(cfg.label_map)
        .or_else(|| Some(layout.label_map()).filter(|p| p.is_file()));
    if let Some(p) = &label_path {
        if !p.is_file() {
            bail!("label map {} does not exist", p.display());
        }
    }
    let labels = common::load_labels(label_path.as_deref())?;

    let fov = FovSpec::from_degrees(
        cfg.fov.up_deg.unwrap_or(3.0),
        cfg.fov.down_deg.unwrap_or(-25.0),
        cfg.fov.width.unwrap_or(2048),
        cfg.fov.height.unwrap_or(64),
    )?;
    let sgp_params = SgpParams {
        classes: args.sgp.classes.clone().or(cfg.sgp.classes),
        stride: args.sgp.stride.or(cfg.sgp.stride),
        min_depth: args.sgp.min_depth.or(cfg.sgp.min_depth),
        max_depth: args.sgp.max_depth.or(cfg.sgp.max_depth),
    };
    let whitelist = common::whitelist(sgp_params.classes.as_deref(), &labels)?;
    let sgp = common::sgp_options(&sgp_params, SgpOptions::default())?;
    let clean_params = CleanParams {
        radius: args.clean.radius.or(cfg.clean.radius),
        shape: args.clean.shape.or(cfg.clean.shape),
        min_neighbors: args.clean.min_neighbors.or(cfg.clean.min_neighbors),
        cell_size: args.clean.cell_size.or(cfg.clean.cell_size),
    };
    let policy = common::clean_policy(&clean_params, CleanPolicy::default())?;
    let real_class = match &cfg.fuse.real_class {
        Some(name) => Some(
            labels
                .id_of(name)
                .with_context(|| format!("fuse.real_class: unknown class {name:?}"))?,
        ),
        None => None,
    };
    if real_class.is_some() && cfg.fuse.label_lift_depth_gate.is_some() {
        bail!(
            "fuse.label_lift_depth_gate only applies when labels are lifted; drop fuse.real_class"
        );
    }
    let lift = crate::commands::lift_options(cfg.fuse.label_lift_depth_gate, &labels)?;
    let discard = cfg
        .discard
        .map(|d| DiscardSpec::new(d.rate, d.seed))
        .transpose()?;
    let depth_scale = cfg
        .depth_scale
        .unwrap_or(pseudo_lidar::kitti_io::DEFAULT_DEPTH_SCALE);
    if !(depth_scale.is_finite() && depth_scale > 0.0) {
        bail!("depth_scale must be positive, got {depth_scale}");
    }
    Ok(Resolved {
        output: args
            .out
            .clone()
            .or(cfg.output)
            .unwrap_or_else(|| dataset.join("augmented")),
        dataset,
        workers: global.workers.or(cfg.workers).unwrap_or(0),
        format: global
            .format
            .or(cfg.report_format)
            .unwrap_or(ReportFormat::Json),
        labels,
        depth_scale,
        fov,
        whitelist,
        sgp,
        policy,
        real_class,
        lift,
        discard,
    })
}
