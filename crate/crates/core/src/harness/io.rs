//! Frames, tensors and camera files on disk.
//!
//! A frame directory holds `frame_0000.png`, `frame_0001.png`, ... (8-bit,
//! values written as-is without a transfer curve), a `frames.json` with the
//! frame rate and kind, and `frames.mag3`, a `[T, H, W, C]` tensor file that
//! keeps full precision. Readers prefer the tensor when present.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{read_tensor, write_tensor, Camera, Tensor};
use crate::image::Image;
use crate::magnify2d::{FrameKind, FrameSequence};

pub fn save_png(img: &Image, path: &Path) -> Result<()> {
    let (h, w, c) = img.shape();
    let bytes: Vec<u8> = img
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let color = match c {
        1 => image::ExtendedColorType::L8,
        3 => image::ExtendedColorType::Rgb8,
        _ => return Err(Error::param(format!("PNG output needs 1 or 3 channels, got {c}"))),
    };
    image::save_buffer_with_format(path, &bytes, w as u32, h as u32, color, image::ImageFormat::Png)?;
    Ok(())
}

pub fn load_png(path: &Path) -> Result<Image> {
    let dynimg = image::open(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    let rgb = dynimg.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb.into_raw().into_iter().map(|b| b as f64 / 255.0).collect();
    Image::from_vec(h, w, 3, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct FramesMeta {
    fps: f64,
    kind: FrameKind,
    count: usize,
}

fn frame_path(dir: &Path, t: usize) -> PathBuf {
    dir.join(format!("frame_{t:04}.png"))
}

pub fn write_frames(dir: &Path, seq: &FrameSequence) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let (h, w, c) = seq.shape();
    for (t, f) in seq.frames().iter().enumerate() {
        if c == 1 || c == 3 {
            save_png(f, &frame_path(dir, t))?;
        }
    }
    let meta = FramesMeta {
        fps: seq.fps(),
        kind: seq.kind(),
        count: seq.len(),
    };
    std::fs::write(dir.join("frames.json"), serde_json::to_vec_pretty(&meta)?)?;
    let data = seq.frames().iter().flat_map(|f| f.data().iter().copied()).collect();
    write_tensor(&dir.join("frames.mag3"), &Tensor::new(vec![seq.len(), h, w, c], data)?)
}

/// Reads a frame directory. `fps` overrides the stored frame rate.
pub fn read_frames(dir: &Path, fps: Option<f64>) -> Result<FrameSequence> {
    if !dir.is_dir() {
        return Err(Error::input(format!("{} is not a directory", dir.display())));
    }
    let meta: Option<FramesMeta> = match std::fs::read(dir.join("frames.json")) {
        Ok(bytes) => Some(serde_json::from_slice(&bytes).map_err(|e| Error::Format(format!("frames.json: {e}")))?),
        Err(_) => None,
    };
    let fps = fps.or(meta.map(|m| m.fps)).unwrap_or(30.0);
    let kind = meta.map_or(FrameKind::Color, |m| m.kind);
    let tensor_path = dir.join("frames.mag3");
    if tensor_path.exists() {
        let t = read_tensor(&tensor_path)?;
        if t.dims.len() != 4 {
            return Err(Error::Format("frame tensor must be [T, H, W, C]".into()));
        }
        let (n, h, w, c) = (t.dims[0], t.dims[1], t.dims[2], t.dims[3]);
        let per = h * w * c;
        let frames = (0..n)
            .map(|i| Image::from_vec(h, w, c, t.data[i * per..(i + 1) * per].to_vec()))
            .collect::<Result<Vec<_>>>()?;
        return FrameSequence::new(frames, fps, kind);
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::input(format!("no frames in {}", dir.display())));
    }
    let frames = paths.iter().map(|p| load_png(p)).collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames, fps, kind)
}

pub fn write_cameras(path: &Path, cameras: &[Camera]) -> Result<()> {
    std::fs::write(path, serde_json::to_vec_pretty(cameras)?)?;
    Ok(())
}

/// Accepts a list of cameras or a single camera object.
pub fn read_cameras(path: &Path) -> Result<Vec<Camera>> {
    let bytes = std::fs::read(path)?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let cams: Vec<Camera> = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|c| vec![c])
    }
    .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    for c in &cams {
        c.validate()?;
    }
    Ok(cams)
}
