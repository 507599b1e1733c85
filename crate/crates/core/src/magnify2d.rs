//! Eulerian magnification of frame sequences.
//!
//! Works on color videos and on tri-plane feature videos alike. Color
//! results are clamped to `[0, 1]`; feature results never are.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::pyramid::{laplacian_build, laplacian_collapse, PyramidParams, SteerableFilters, SteerablePyramid};
use crate::signal::{BandpassOperator, BandpassSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Color,
    Feature,
}

/// T frames of identical shape sampled at `fps`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Image>,
    fps: f64,
    kind: FrameKind,
}

impl FrameSequence {
    /// Color frames are clamped to `[0, 1]` on ingest.
    pub fn new(mut frames: Vec<Image>, fps: f64, kind: FrameKind) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::param("frame sequence is empty"))?;
        let shape = first.shape();
        if frames.iter().any(|f| f.shape() != shape) {
            return Err(Error::structure("frames differ in shape"));
        }
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::param(format!("fps must be positive, got {fps}")));
        }
        if frames.iter().any(|f| !f.is_finite()) {
            return Err(Error::input("frames contain non-finite values"));
        }
        if kind == FrameKind::Color {
            frames.iter_mut().for_each(Image::clamp01);
        }
        Ok(Self { frames, fps, kind })
    }

    pub fn color(frames: Vec<Image>, fps: f64) -> Result<Self> {
        Self::new(frames, fps, FrameKind::Color)
    }

    pub fn feature(frames: Vec<Image>, fps: f64) -> Result<Self> {
        Self::new(frames, fps, FrameKind::Feature)
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Image> {
        self.frames
    }

    pub fn frame(&self, t: usize) -> &Image {
        &self.frames[t]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    /// `(height, width, channels)` of every frame.
    pub fn shape(&self) -> (usize, usize, usize) {
        self.frames[0].shape()
    }

    /// Same frames reinterpreted as another kind (no clamping is applied
    /// when switching to `Feature`).
    pub fn with_kind(mut self, kind: FrameKind) -> Self {
        if kind == FrameKind::Color {
            self.frames.iter_mut().for_each(Image::clamp01);
        }
        self.kind = kind;
        self
    }

    fn finish(frames: Vec<Image>, fps: f64, kind: FrameKind) -> Result<Self> {
        Self::new(frames, fps, kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearMode {
    Pixel,
    Laplacian,
}

fn check_sequence(seq: &FrameSequence, spec: &BandpassSpec) -> Result<BandpassOperator> {
    if seq.len() < 4 {
        return Err(Error::param(format!(
            "magnification needs at least 4 frames, got {}",
            seq.len()
        )));
    }
    spec.validate(seq.fps)?;
    BandpassOperator::new(seq.len(), seq.fps, spec.f_lo, spec.f_hi)
}

fn laplacian_depth(height: usize, width: usize) -> usize {
    let m = height.min(width).max(1);
    let log2 = (usize::BITS - 1 - m.leading_zeros()) as usize;
    log2.saturating_sub(2).max(1)
}

/// Linear Eulerian magnification: every pixel (or Laplacian coefficient)
/// trajectory becomes `x + α·bandpass(x)`.
pub fn linear_magnify(seq: &FrameSequence, spec: &BandpassSpec, mode: LinearMode) -> Result<FrameSequence> {
    let op = check_sequence(seq, spec)?;
    let (h, w, c) = seq.shape();
    let frames = match mode {
        LinearMode::Pixel => {
            let refs: Vec<&[f64]> = seq.frames.iter().map(|f| f.data()).collect();
            op.amplify_frames(&refs, spec.alpha)?
                .into_iter()
                .map(|d| Image::from_vec(h, w, c, d))
                .collect::<Result<Vec<_>>>()?
        }
        LinearMode::Laplacian => {
            let depth = laplacian_depth(h, w);
            let mut pyramids = seq
                .frames
                .par_iter()
                .map(|f| laplacian_build(f, depth))
                .collect::<Result<Vec<_>>>()?;
            for level in 0..=depth {
                let refs: Vec<&[f64]> = pyramids
                    .iter()
                    .map(|p| {
                        if level < depth {
                            p.bands[level].data()
                        } else {
                            p.residual.data()
                        }
                    })
                    .collect();
                let amplified = op.amplify_frames(&refs, spec.alpha)?;
                for (p, data) in pyramids.iter_mut().zip(amplified) {
                    let target = if level < depth {
                        &mut p.bands[level]
                    } else {
                        &mut p.residual
                    };
                    target.data_mut().copy_from_slice(&data);
                }
            }
            pyramids
                .par_iter()
                .map(laplacian_collapse)
                .collect::<Result<Vec<_>>>()?
        }
    };
    FrameSequence::finish(frames, seq.fps, seq.kind)
}

/// Phase-based Eulerian magnification.
///
/// Each channel is decomposed with a complex steerable pyramid per frame.
/// For every coefficient the phase difference to frame 0,
/// `arg(c_t · conj(c_0))`, is bandpassed over time and `α` times the result
/// is added to that coefficient's phase. Amplitudes and residuals are kept.
pub fn phase_magnify(seq: &FrameSequence, spec: &BandpassSpec, params: &PyramidParams) -> Result<FrameSequence> {
    let op = check_sequence(seq, spec)?;
    let (h, w, channels) = seq.shape();
    let filters = SteerableFilters::for_image(h, w, params)?;

    let per_channel = (0..channels)
        .map(|ch| magnify_channel_phase(seq, ch, &filters, &op, spec.alpha))
        .collect::<Result<Vec<_>>>()?;

    let frames = (0..seq.len())
        .map(|t| {
            let planes: Vec<Image> = per_channel.iter().map(|c| c[t].clone()).collect();
            Image::stack(&planes)
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::finish(frames, seq.fps, seq.kind)
}

fn magnify_channel_phase(
    seq: &FrameSequence,
    channel: usize,
    filters: &SteerableFilters,
    op: &BandpassOperator,
    alpha: f64,
) -> Result<Vec<Image>> {
    let mut pyramids = seq
        .frames
        .par_iter()
        .map(|f| SteerablePyramid::build(&f.channel(channel), filters))
        .collect::<Result<Vec<_>>>()?;

    for l in 0..filters.depth() {
        for o in 0..filters.orientations() {
            let reference = pyramids[0].bands[l][o].data.clone();
            let deltas: Vec<Vec<f64>> = pyramids
                .iter()
                .map(|p| {
                    p.bands[l][o]
                        .data
                        .iter()
                        .zip(&reference)
                        .map(|(c, r)| (c * r.conj()).arg())
                        .collect()
                })
                .collect();
            let refs: Vec<&[f64]> = deltas.iter().map(|d| d.as_slice()).collect();
            let band = op.filter_frames(&refs)?;
            for (p, shift) in pyramids.iter_mut().zip(&band) {
                for (c, s) in p.bands[l][o].data.iter_mut().zip(shift) {
                    *c *= Complex64::from_polar(1.0, alpha * s);
                }
            }
        }
    }

    pyramids.par_iter().map(|p| p.collapse(filters)).collect()
}

/// Fraction of samples that fall outside `[−tol, 1 + tol]`, i.e. that a
/// color pipeline would clip.
pub fn clipped_fraction(seq: &FrameSequence, tol: f64) -> f64 {
    let mut total = 0usize;
    let mut clipped = 0usize;
    for f in &seq.frames {
        for v in f.data() {
            total += 1;
            if *v < -tol || *v > 1.0 + tol {
                clipped += 1;
            }
        }
    }
    clipped as f64 / total.max(1) as f64
}
