//! Eulerian magnification in embedding space.
//!
//! Tri-plane fields are magnified by treating every plane channel as a
//! feature video and running 2D linear or phase-based magnification on it.
//! Shift-network fields are magnified per render sample: the trajectory
//! `g_0(p) … g_{T−1}(p)` of each sample point (ray depths are fixed, so `p`
//! is the same at every timestep) is bandpassed, amplified and fed back
//! into the positional encoding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    composite, encode_with_shift, render_image, Camera, EmbedScratch, Embedding, MlpScratch, PointSample, TriPlane,
};
use crate::image::Image;
use crate::magnify2d::{linear_magnify, phase_magnify, FrameSequence, LinearMode};
use crate::pyramid::PyramidParams;
use crate::signal::{BandpassOperator, BandpassSpec};

pub use crate::field::TimeVaryingField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "posshift")]
    PositionShift,
    #[serde(rename = "encshift")]
    EncodingShift,
    #[serde(rename = "linear-triplane")]
    LinearTriPlane,
    #[serde(rename = "phase-triplane")]
    PhaseTriPlane,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::PositionShift,
        Strategy::EncodingShift,
        Strategy::LinearTriPlane,
        Strategy::PhaseTriPlane,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::PositionShift => "posshift",
            Strategy::EncodingShift => "encshift",
            Strategy::LinearTriPlane => "linear-triplane",
            Strategy::PhaseTriPlane => "phase-triplane",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnificationRequest {
    pub strategy: Strategy,
    pub spec: BandpassSpec,
    /// Used by the phase strategy only.
    #[serde(default)]
    pub pyramid: PyramidParams,
}

impl MagnificationRequest {
    pub fn new(strategy: Strategy, spec: BandpassSpec) -> Self {
        Self {
            strategy,
            spec,
            pyramid: PyramidParams::default(),
        }
    }
}

fn check_field(tvf: &TimeVaryingField, spec: &BandpassSpec) -> Result<BandpassOperator> {
    tvf.validate()?;
    if tvf.len() < 4 {
        return Err(Error::param(format!(
            "magnification needs at least 4 timesteps, got {}",
            tvf.len()
        )));
    }
    spec.validate(tvf.fps)?;
    BandpassOperator::new(tvf.len(), tvf.fps, spec.f_lo, spec.f_hi)
}

/// Verifies that the strategy fits the field's embedding variant.
pub fn check_compatible(tvf: &TimeVaryingField, strategy: Strategy) -> Result<()> {
    let first = tvf
        .embeddings
        .first()
        .ok_or_else(|| Error::structure("field has no timesteps"))?;
    let ok = match (strategy, first) {
        (Strategy::PositionShift, Embedding::Shift(s)) => s.mode() == crate::field::ShiftMode::PositionShift,
        (Strategy::EncodingShift, Embedding::Shift(s)) => s.mode() == crate::field::ShiftMode::EncodingShift,
        (Strategy::LinearTriPlane | Strategy::PhaseTriPlane, Embedding::TriPlane(_)) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::structure(format!(
            "strategy {} does not fit this field's embedding",
            strategy.name()
        )))
    }
}

fn triplanes(tvf: &TimeVaryingField) -> Result<Vec<&TriPlane>> {
    tvf.embeddings
        .iter()
        .map(|e| {
            e.as_triplane()
                .ok_or_else(|| Error::structure("field does not hold tri-planes"))
        })
        .collect()
}

/// Runs `magnify` on every plane-channel feature video and writes the
/// results into a copy of the field.
fn magnify_feature_videos(
    tvf: &TimeVaryingField,
    magnify: impl Fn(&FrameSequence) -> Result<FrameSequence> + Sync,
) -> Result<TimeVaryingField> {
    let planes = triplanes(tvf)?;
    let channels = planes[0].channels();
    let jobs: Vec<(usize, usize)> = (0..3).flat_map(|p| (0..channels).map(move |c| (p, c))).collect();
    let results = jobs
        .par_iter()
        .map(|&(p, c)| {
            let frames: Vec<Image> = planes.iter().map(|tp| tp.channel_image(p, c)).collect();
            magnify(&FrameSequence::feature(frames, tvf.fps)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = tvf.clone();
    for ((p, c), seq) in jobs.into_iter().zip(results) {
        for (e, img) in out.embeddings.iter_mut().zip(seq.frames()) {
            if let Embedding::TriPlane(tp) = e {
                tp.set_channel_image(p, c, img);
            }
        }
    }
    Ok(out)
}

/// Linear magnification of every texel trajectory. The MLP is copied
/// untouched.
pub fn magnify_triplane_linear(tvf: &TimeVaryingField, spec: &BandpassSpec) -> Result<TimeVaryingField> {
    check_field(tvf, spec)?;
    triplanes(tvf)?;
    if spec.alpha == 0.0 {
        return Ok(tvf.clone());
    }
    magnify_feature_videos(tvf, |seq| linear_magnify(seq, spec, LinearMode::Pixel))
}

/// Phase-based magnification of every plane-channel feature video.
pub fn magnify_triplane_phase(
    tvf: &TimeVaryingField,
    spec: &BandpassSpec,
    params: &PyramidParams,
) -> Result<TimeVaryingField> {
    check_field(tvf, spec)?;
    magnify_feature_videos(tvf, |seq| phase_magnify(seq, spec, params))
}

/// Renders magnified frames of a shift-network field from `camera` at the
/// requested timesteps.
pub fn magnify_shift_field(
    tvf: &TimeVaryingField,
    req: &MagnificationRequest,
    camera: &Camera,
    timesteps: &[usize],
) -> Result<FrameSequence> {
    if !matches!(req.strategy, Strategy::PositionShift | Strategy::EncodingShift) {
        return Err(Error::structure("shift-field magnification needs a shift strategy"));
    }
    check_compatible(tvf, req.strategy)?;
    let op = check_field(tvf, &req.spec)?;
    camera.validate()?;
    let cfg = tvf.config.render;
    cfg.validate()?;
    let t_count = tvf.len();
    if let Some(t) = timesteps.iter().find(|t| **t >= t_count) {
        return Err(Error::param(format!("timestep {t} out of range 0..{t_count}")));
    }
    let nets: Vec<_> = tvf.embeddings.iter().map(|e| e.as_shift().unwrap()).collect();
    let (mode, posenc) = (nets[0].mode(), *nets[0].posenc());
    let dim = nets[0].output_dim();
    let depths = cfg.depths(None);
    let delta = cfg.delta();
    let (h, w) = (camera.height, camera.width);
    let out_count = timesteps.len();

    // rows[v][k] holds row v of output frame k.
    let rows: Vec<Vec<Vec<f64>>> = (0..h)
        .into_par_iter()
        .map(|v| {
            let mut es = EmbedScratch::default();
            let mut ms = MlpScratch::default();
            let mut e = vec![0.0; posenc.dim()];
            let mut traj = vec![vec![0.0; dim]; t_count];
            let mut samples = vec![vec![PointSample::default(); depths.len()]; out_count];
            let mut out = vec![vec![0.0; w * 3]; out_count];
            for u in 0..w {
                let ray = camera.ray(u, v);
                for (i, d) in depths.iter().enumerate() {
                    let p = ray.at(*d);
                    for (t, e_t) in tvf.embeddings.iter().enumerate() {
                        traj[t].copy_from_slice(e_t.shift_output(p, &mut es).unwrap());
                    }
                    let refs: Vec<&[f64]> = traj.iter().map(|g| g.as_slice()).collect();
                    let amplified = op.amplify_frames(&refs, req.spec.alpha)?;
                    for (k, &t) in timesteps.iter().enumerate() {
                        encode_with_shift(mode, &posenc, p, &amplified[t], &mut e);
                        samples[k][i] = tvf.mlp.forward(&e, ray.dir, &mut ms);
                    }
                }
                for k in 0..out_count {
                    let c = composite(&samples[k], delta, cfg.background);
                    for ch in 0..3 {
                        out[k][u * 3 + ch] = c.rgb[ch].clamp(0.0, 1.0);
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let frames = (0..out_count)
        .map(|k| {
            let data = rows.iter().flat_map(|r| r[k].iter().copied()).collect();
            Image::from_vec(h, w, 3, data)
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::color(frames, tvf.fps)
}

/// Renders a (possibly magnified) field at the given timesteps.
pub fn render_magnified(tvf: &TimeVaryingField, camera: &Camera, timesteps: &[usize]) -> Result<FrameSequence> {
    let frames = timesteps
        .iter()
        .map(|t| render_image(&tvf.at(*t)?, camera, &tvf.config.render))
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::color(frames, tvf.fps)
}

/// Magnified tri-plane field for the tri-plane strategies.
pub fn magnify_triplanes(tvf: &TimeVaryingField, req: &MagnificationRequest) -> Result<TimeVaryingField> {
    check_compatible(tvf, req.strategy)?;
    match req.strategy {
        Strategy::LinearTriPlane => magnify_triplane_linear(tvf, &req.spec),
        Strategy::PhaseTriPlane => magnify_triplane_phase(tvf, &req.spec, &req.pyramid),
        _ => Err(Error::structure("tri-plane magnification needs a tri-plane strategy")),
    }
}

/// Magnified video of every timestep from `camera`, for any strategy.
pub fn magnify_and_render(
    tvf: &TimeVaryingField,
    req: &MagnificationRequest,
    camera: &Camera,
) -> Result<FrameSequence> {
    let all: Vec<usize> = (0..tvf.len()).collect();
    match req.strategy {
        Strategy::PositionShift | Strategy::EncodingShift => magnify_shift_field(tvf, req, camera, &all),
        _ => render_magnified(&magnify_triplanes(tvf, req)?, camera, &all),
    }
}

/// 2D baseline methods applied to a rendered video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VideoBaseline {
    LinearVideo,
    PhaseVideo,
}

/// Renders the unmagnified field from `camera` and magnifies the video in
/// image space.
pub fn video_baseline(
    tvf: &TimeVaryingField,
    camera: &Camera,
    baseline: VideoBaseline,
    spec: &BandpassSpec,
    pyramid: &PyramidParams,
) -> Result<FrameSequence> {
    let all: Vec<usize> = (0..tvf.len()).collect();
    let video = render_magnified(tvf, camera, &all)?;
    match baseline {
        VideoBaseline::LinearVideo => linear_magnify(&video, spec, LinearMode::Pixel),
        VideoBaseline::PhaseVideo => phase_magnify(&video, spec, pyramid),
    }
}
