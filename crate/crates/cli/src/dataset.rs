//! On-disk dataset layout shared by `sim` and `pipeline`.
//!
//! ```text
//! <root>/velodyne/<stem>.bin       real scan
//! <root>/calib/<stem>.txt          KITTI calibration
//! <root>/depth/<stem>.png          16-bit depth
//! <root>/segments/<stem>.png       8-bit camera segments
//! <root>/range_labels/<stem>.png   8-bit range-image segments
//! <root>/scenes/<stem>.toml        scene description (simulated frames only)
//! <root>/labelmap.txt              class names
//! ```

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Layout {
            root: root.to_path_buf(),
        }
    }

    fn file(&self, dir: &str, stem: &str, ext: &str) -> PathBuf {
        self.root.join(dir).join(format!("{stem}.{ext}"))
    }

    pub fn velodyne_dir(&self) -> PathBuf {
        self.root.join("velodyne")
    }

    pub fn velodyne(&self, stem: &str) -> PathBuf {
        self.file("velodyne", stem, "bin")
    }

    pub fn calib(&self, stem: &str) -> PathBuf {
        self.file("calib", stem, "txt")
    }

    pub fn depth(&self, stem: &str) -> PathBuf {
        self.file("depth", stem, "png")
    }

    pub fn segments(&self, stem: &str) -> PathBuf {
        self.file("segments", stem, "png")
    }

    pub fn range_labels(&self, stem: &str) -> PathBuf {
        self.file("range_labels", stem, "png")
    }

    pub fn scene(&self, stem: &str) -> PathBuf {
        self.file("scenes", stem, "toml")
    }

    pub fn label_map(&self) -> PathBuf {
        self.root.join("labelmap.txt")
    }

    pub fn create_dirs(&self) -> Result<()> {
        for d in [
            "velodyne",
            "calib",
            "depth",
            "segments",
            "range_labels",
            "scenes",
        ] {
            let p = self.root.join(d);
            std::fs::create_dir_all(&p).with_context(|| format!("creating {}", p.display()))?;
        }
        Ok(())
    }
}
