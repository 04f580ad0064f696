//! Pairing of per-frame input files, either as single paths or as
//! directories whose files are matched by stem.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct Frame {
    pub stem: String,
    /// One path per requested input, in request order. May not exist.
    pub inputs: Vec<PathBuf>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Single,
    Batch,
}

/// An input slot: flag name (for messages), path, and the file extension
/// expected inside a directory.
pub struct Input<'a> {
    pub flag: &'a str,
    pub path: &'a Path,
    pub ext: &'a str,
}

/// Resolves frames. If the first input is a directory, every input must be a
/// directory and frames are the first directory's `*.ext` files sorted by
/// name; `output` is then a directory receiving `<stem>.<out_ext>`.
pub fn resolve(inputs: &[Input], output: &Path, out_ext: &str) -> Result<(Mode, Vec<Frame>)> {
    let first = inputs.first().expect("at least one input");
    if first.path.is_dir() {
        for i in inputs {
            if !i.path.is_dir() {
                bail!(
                    "--{} must be a directory like --{}: {}",
                    i.flag,
                    first.flag,
                    i.path.display()
                );
            }
        }
        let frames = list_stems(first.path, first.ext)?
            .into_iter()
            .map(|stem| Frame {
                inputs: inputs
                    .iter()
                    .map(|i| i.path.join(format!("{stem}.{}", i.ext)))
                    .collect(),
                output: output.join(format!("{stem}.{out_ext}")),
                stem,
            })
            .collect();
        Ok((Mode::Batch, frames))
    } else {
        for i in inputs {
            if i.path.is_dir() {
                bail!("--{} is a directory but --{} is a file", i.flag, first.flag);
            }
        }
        let stem = output
            .file_stem()
            .or_else(|| first.path.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let frame = Frame {
            stem,
            inputs: inputs.iter().map(|i| i.path.to_path_buf()).collect(),
            output: output.to_path_buf(),
        };
        Ok((Mode::Single, vec![frame]))
    }
}

/// Sorted stems of `dir/*.ext`.
pub fn list_stems(dir: &Path, ext: &str) -> Result<Vec<String>> {
    let mut stems = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        // `a.range.bin` has stem `a.range`; only plain `<stem>.<ext>` names count
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                if !stem.contains('.') {
                    stems.push(stem.to_string());
                }
            }
        }
    }
    stems.sort();
    Ok(stems)
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

/// Runs `work` on every frame in a pool of `workers` threads (0 = one per
/// core). Results come back in frame order whatever the scheduling.
pub fn run_frames<R: Send>(
    frames: &[Frame],
    workers: usize,
    work: impl Fn(&Frame) -> Result<R> + Sync,
) -> Result<Vec<Result<R>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("starting worker pool")?;
    Ok(pool.install(|| frames.par_iter().map(&work).collect()))
}
