//! Training views from frame directories.
//!
//! Two layouts are accepted. A scene directory holds one frame directory
//! per camera (`view_00`, `view_01`, ...) and frame `t` of each is used. A
//! plain frame directory holds one frame per camera.

use std::path::{Path, PathBuf};

use eulermag::field::Camera;
use eulermag::harness::read_frames;
use eulermag::train::View;
use eulermag::{Error, Result};

pub fn view_dir(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("view_{i:02}"))
}

pub fn load_views(dir: &Path, cameras: &[Camera], t: usize) -> Result<Vec<View>> {
    if view_dir(dir, 0).is_dir() {
        cameras
            .iter()
            .enumerate()
            .map(|(i, cam)| {
                let seq = read_frames(&view_dir(dir, i), None)?;
                if t >= seq.len() {
                    return Err(Error::Parameter(format!("view {i} has no frame {t}")));
                }
                View::new(*cam, seq.frame(t).clone())
            })
            .collect()
    } else {
        let seq = read_frames(dir, None)?;
        if seq.len() != cameras.len() {
            return Err(Error::Input(format!(
                "{} holds {} frames for {} cameras",
                dir.display(),
                seq.len(),
                cameras.len()
            )));
        }
        cameras
            .iter()
            .zip(seq.frames())
            .map(|(c, f)| View::new(*c, f.clone()))
            .collect()
    }
}

/// `cameras.json` inside `dir` or its parent.
pub fn find_cameras(dir: &Path) -> Result<PathBuf> {
    let here = dir.join("cameras.json");
    if here.is_file() {
        return Ok(here);
    }
    dir.parent()
        .map(|p| p.join("cameras.json"))
        .filter(|p| p.is_file())
        .ok_or_else(|| Error::Input(format!("no cameras.json near {}; pass --cameras", dir.display())))
}
