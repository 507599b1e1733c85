//! Emission-absorption volume rendering with uniform midpoint quadrature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::camera::{Camera, Ray, Vec3};
use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub samples: usize,
    pub near: f64,
    pub far: f64,
    pub background: [f64; 3],
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            samples: 64,
            near: 2.0,
            far: 4.0,
            background: [1.0; 3],
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || !(self.near < self.far) || !self.near.is_finite() || !self.far.is_finite() {
            return Err(Error::param(format!(
                "render config needs samples >= 1 and near < far, got {} samples over [{}, {}]",
                self.samples, self.near, self.far
            )));
        }
        Ok(())
    }

    /// Segment length `δ`.
    pub fn delta(&self) -> f64 {
        (self.far - self.near) / self.samples as f64
    }

    /// Segment midpoints, or jittered positions when `jitter` (values in
    /// `[0, 1)`, one per sample) is given.
    pub fn depths(&self, jitter: Option<&[f64]>) -> Vec<f64> {
        let d = self.delta();
        (0..self.samples)
            .map(|i| self.near + (i as f64 + jitter.map_or(0.5, |j| j[i])) * d)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointSample {
    pub rgb: [f64; 3],
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayColor {
    pub rgb: [f64; 3],
    pub opacity: f64,
}

/// Anything that can be rendered: maps points along a ray to color and
/// density.
pub trait VolumeField: Sync {
    fn eval(&self, points: &[Vec3], dir: Vec3, out: &mut [PointSample]);
}

/// Quadrature weights `w_i = T_i·(1 − exp(−σ_i δ))`.
pub fn composite_weights(samples: &[PointSample], delta: f64) -> Vec<f64> {
    let mut depth = 0.0_f64;
    samples
        .iter()
        .map(|s| {
            let t = (-depth).exp();
            let tau = s.sigma * delta;
            depth += tau;
            t * -(-tau).exp_m1()
        })
        .collect()
}

pub fn composite(samples: &[PointSample], delta: f64, background: [f64; 3]) -> RayColor {
    let mut rgb = [0.0; 3];
    let mut opacity = 0.0;
    for (s, w) in samples.iter().zip(composite_weights(samples, delta)) {
        for c in 0..3 {
            rgb[c] += w * s.rgb[c];
        }
        opacity += w;
    }
    for c in 0..3 {
        rgb[c] += (1.0 - opacity) * background[c];
    }
    RayColor { rgb, opacity }
}

pub fn sample_points(ray: &Ray, depths: &[f64]) -> Vec<Vec3> {
    depths.iter().map(|t| ray.at(*t)).collect()
}

pub fn render_ray(field: &impl VolumeField, ray: &Ray, cfg: &RenderConfig) -> RayColor {
    let points = sample_points(ray, &cfg.depths(None));
    let mut samples = vec![PointSample::default(); points.len()];
    field.eval(&points, ray.dir, &mut samples);
    composite(&samples, cfg.delta(), cfg.background)
}

/// Renders every pixel; values clamped to `[0, 1]`. Rows render in
/// parallel and each pixel is independent, so the result does not depend
/// on the thread count.
pub fn render_image(field: &impl VolumeField, camera: &Camera, cfg: &RenderConfig) -> Result<Image> {
    camera.validate()?;
    cfg.validate()?;
    let (h, w) = (camera.height, camera.width);
    let mut data = vec![0.0; h * w * 3];
    data.par_chunks_mut(w * 3).enumerate().for_each(|(v, row)| {
        for u in 0..w {
            let c = render_ray(field, &camera.ray(u, v), cfg);
            for ch in 0..3 {
                row[u * 3 + ch] = c.rgb[ch].clamp(0.0, 1.0);
            }
        }
    });
    Image::from_vec(h, w, 3, data)
}
