//! Analytic scenes of soft primitives with known sinusoidal motion.
//!
//! Primitive centers follow `x(t) = x₀ + m·A·sin(2πft + φ)`, so the
//! ground truth for any magnification factor `m` is exact. Frames are
//! produced by the same renderer that draws trained fields.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{render_image, Camera, PointSample, RenderConfig, Vec3, VolumeField};
use crate::magnify2d::FrameSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// `σ = s·exp(−‖x − c‖² / (2r²))`, `size = r`.
    Sphere,
    /// Same falloff in the L8 norm, `size` = half extent.
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Motion {
    /// Peak displacement in scene units.
    pub amplitude: [f64; 3],
    /// Hz.
    pub frequency: f64,
    /// Radians.
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    pub center: [f64; 3],
    pub size: f64,
    pub color: [f64; 3],
    pub density: f64,
    #[serde(default)]
    pub motion: Motion,
}

impl Primitive {
    pub fn sphere(center: [f64; 3], radius: f64, color: [f64; 3], density: f64) -> Self {
        Self {
            shape: Shape::Sphere,
            center,
            size: radius,
            color,
            density,
            motion: Motion::default(),
        }
    }

    pub fn with_motion(mut self, amplitude: [f64; 3], frequency: f64, phase: f64) -> Self {
        self.motion = Motion {
            amplitude,
            frequency,
            phase,
        };
        self
    }

    /// Center at time `t` (seconds) under factor `m`.
    pub fn center_at(&self, t: f64, m: f64) -> Vec3 {
        let s = m * (2.0 * PI * self.motion.frequency * t + self.motion.phase).sin();
        [
            self.center[0] + s * self.motion.amplitude[0],
            self.center[1] + s * self.motion.amplitude[1],
            self.center[2] + s * self.motion.amplitude[2],
        ]
    }

    #[inline]
    fn density_at(&self, center: Vec3, x: Vec3) -> f64 {
        let u = [
            (x[0] - center[0]) / self.size,
            (x[1] - center[1]) / self.size,
            (x[2] - center[2]) / self.size,
        ];
        let r2 = match self.shape {
            Shape::Sphere => u[0] * u[0] + u[1] * u[1] + u[2] * u[2],
            Shape::Box => {
                let q: f64 = u.iter().map(|v| (v * v).powi(4)).sum();
                q.powf(0.25)
            }
        };
        self.density * (-0.5 * r2).exp()
    }
}

/// Camera placement: an explicit list or an orbit around the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CameraSet {
    List(Vec<Camera>),
    Orbit {
        count: usize,
        radius: f64,
        #[serde(default)]
        elevation: f64,
        #[serde(default)]
        azimuth_start: f64,
        #[serde(default = "full_turn")]
        azimuth_span: f64,
        fov: f64,
        width: usize,
        height: usize,
    },
}

fn full_turn() -> f64 {
    360.0
}

impl CameraSet {
    pub fn cameras(&self) -> Vec<Camera> {
        match self {
            CameraSet::List(c) => c.clone(),
            CameraSet::Orbit {
                count,
                radius,
                elevation,
                azimuth_start,
                azimuth_span,
                fov,
                width,
                height,
            } => Camera::orbit(
                *count,
                *radius,
                *elevation,
                *azimuth_start,
                *azimuth_span,
                *fov,
                *width,
                *height,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub primitives: Vec<Primitive>,
    /// Seconds.
    pub duration: f64,
    pub fps: f64,
    pub cameras: CameraSet,
    #[serde(default)]
    pub render: RenderConfig,
    /// Factors to bake when generating from the command line.
    #[serde(default)]
    pub factors: Vec<f64>,
}

impl SceneSpec {
    pub fn frame_count(&self) -> usize {
        (self.duration * self.fps).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0) || !(self.duration > 0.0) || self.frame_count() == 0 {
            return Err(Error::Spec("duration and fps must give at least one frame".into()));
        }
        for (i, p) in self.primitives.iter().enumerate() {
            if !(p.size > 0.0) || !(p.density >= 0.0) {
                return Err(Error::Spec(format!(
                    "primitive {i} needs positive size and non-negative density"
                )));
            }
            if p.color.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(Error::Spec(format!("primitive {i} color outside [0, 1]")));
            }
            let m = &p.motion;
            if !(m.frequency >= 0.0) || m.frequency >= 0.5 * self.fps {
                return Err(Error::Spec(format!(
                    "primitive {i} frequency {} Hz must be below half the frame rate",
                    m.frequency
                )));
            }
            let amp = m.amplitude.iter().map(|a| a * a).sum::<f64>().sqrt();
            if amp > 0.1 * p.size + 1e-12 {
                return Err(Error::Spec(format!(
                    "primitive {i} amplitude {amp} exceeds 0.1 x size {}",
                    p.size
                )));
            }
        }
        for c in self.cameras.cameras() {
            c.validate().map_err(|e| Error::Spec(e.to_string()))?;
        }
        self.render.validate().map_err(|e| Error::Spec(e.to_string()))
    }

    /// The analytic field at frame `index` under factor `m`.
    pub fn field_at(&self, index: usize, m: f64) -> AnalyticField {
        let t = index as f64 / self.fps;
        AnalyticField {
            primitives: self.primitives.iter().map(|p| (*p, p.center_at(t, m))).collect(),
        }
    }
}

/// Primitives frozen at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticField {
    primitives: Vec<(Primitive, Vec3)>,
}

impl AnalyticField {
    pub fn sample(&self, x: Vec3) -> PointSample {
        let mut sigma = 0.0;
        let mut rgb = [0.0; 3];
        for (p, c) in &self.primitives {
            let s = p.density_at(*c, x);
            sigma += s;
            for ch in 0..3 {
                rgb[ch] += s * p.color[ch];
            }
        }
        if sigma > 0.0 {
            for v in &mut rgb {
                *v /= sigma;
            }
        }
        PointSample { rgb, sigma }
    }
}

impl VolumeField for AnalyticField {
    fn eval(&self, points: &[Vec3], _dir: Vec3, out: &mut [PointSample]) {
        for (p, o) in points.iter().zip(out.iter_mut()) {
            *o = self.sample(*p);
        }
    }
}

/// One frame sequence per camera.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRender {
    pub cameras: Vec<Camera>,
    pub sequences: Vec<FrameSequence>,
}

impl SceneRender {
    /// Views of all cameras at frame `t`, ready for training.
    pub fn views_at(&self, t: usize) -> Result<Vec<crate::train::View>> {
        self.cameras
            .iter()
            .zip(&self.sequences)
            .map(|(c, s)| crate::train::View::new(*c, s.frame(t).clone()))
            .collect()
    }

    pub fn frame_count(&self) -> usize {
        self.sequences.first().map_or(0, |s| s.len())
    }
}

/// Renders the scene under magnification factor `m` from every camera.
pub fn gen_scene(spec: &SceneSpec, m: f64) -> Result<SceneRender> {
    spec.validate()?;
    if !(m >= 1.0) {
        return Err(Error::Spec(format!("magnification factor must be >= 1, got {m}")));
    }
    let cameras = spec.cameras.cameras();
    gen_scene_views(spec, m, &cameras)
}

/// As [`gen_scene`], from arbitrary cameras (e.g. novel views).
pub fn gen_scene_views(spec: &SceneSpec, m: f64, cameras: &[Camera]) -> Result<SceneRender> {
    spec.validate()?;
    let t_count = spec.frame_count();
    let sequences = cameras
        .iter()
        .map(|cam| {
            let frames = (0..t_count)
                .into_par_iter()
                .map(|t| render_image(&spec.field_at(t, m), cam, &spec.render))
                .collect::<Result<Vec<_>>>()?;
            FrameSequence::color(frames, spec.fps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SceneRender {
        cameras: cameras.to_vec(),
        sequences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(amplitude: f64) -> SceneSpec {
        SceneSpec {
            primitives: vec![Primitive::sphere([0.0; 3], 0.3, [0.8, 0.2, 0.1], 30.0).with_motion(
                [amplitude, 0.0, 0.0],
                4.0,
                0.0,
            )],
            duration: 0.2,
            fps: 30.0,
            cameras: CameraSet::Orbit {
                count: 1,
                radius: 3.0,
                elevation: 0.0,
                azimuth_start: 0.0,
                azimuth_span: 360.0,
                fov: 30.0,
                width: 12,
                height: 12,
            },
            render: RenderConfig {
                samples: 32,
                near: 2.0,
                far: 4.0,
                background: [1.0; 3],
            },
            factors: vec![],
        }
    }

    #[test]
    fn zero_amplitude_frames_are_identical() {
        let r = gen_scene(&spec(0.0), 10.0).unwrap();
        let s = &r.sequences[0];
        for t in 1..s.len() {
            assert_eq!(s.frame(t), s.frame(0));
        }
    }

    #[test]
    fn first_frame_does_not_depend_on_factor() {
        let a = gen_scene(&spec(0.01), 1.0).unwrap();
        let b = gen_scene(&spec(0.01), 10.0).unwrap();
        assert_eq!(a.sequences[0].frame(0), b.sequences[0].frame(0));
        assert_ne!(a.sequences[0].frame(2), b.sequences[0].frame(2));
    }

    #[test]
    fn spec_violations() {
        assert!(matches!(gen_scene(&spec(0.05), 1.0), Err(Error::Spec(_))));
        let mut s = spec(0.0);
        s.primitives[0].motion.frequency = 15.0;
        assert!(matches!(s.validate(), Err(Error::Spec(_))));
        assert!(matches!(gen_scene(&spec(0.0), 0.5), Err(Error::Spec(_))));
    }

    #[test]
    fn renderer_parity() {
        let s = spec(0.01);
        let r = gen_scene(&s, 1.0).unwrap();
        let cam = s.cameras.cameras()[0];
        let direct = render_image(&s.field_at(3, 1.0), &cam, &s.render).unwrap();
        assert_eq!(r.sequences[0].frame(3), &direct);
    }
}
