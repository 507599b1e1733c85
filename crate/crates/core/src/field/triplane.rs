//! Three axis-aligned feature planes over the cube `[−1, 1]³`.
//!
//! Plane order is XY, XZ, YZ. Plane `p` stores texel `(v, u)`, channel `c`
//! at `p·R·R·C + (v·R + u)·C + c`, where `u` indexes the first named axis
//! and `v` the second. Grid nodes sit on the cube corners, so node `i` is
//! at coordinate `−1 + 2i/(R−1)`. Points outside the cube are clamped to
//! its boundary.

use rand::Rng;

use crate::error::{Error, Result};
use crate::image::Image;

pub const PLANE_AXES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

#[derive(Debug, Clone, PartialEq)]
pub struct TriPlane {
    resolution: usize,
    channels: usize,
    data: Vec<f64>,
}

/// Bilinear footprint of a point on one plane.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Footprint {
    pub base: [usize; 4],
    pub weight: [f64; 4],
}

impl TriPlane {
    pub fn zeros(resolution: usize, channels: usize) -> Result<Self> {
        if resolution < 2 || channels == 0 {
            return Err(Error::param(format!(
                "tri-plane needs resolution >= 2 and channels >= 1, got {resolution} and {channels}"
            )));
        }
        Ok(Self {
            resolution,
            channels,
            data: vec![0.0; 3 * resolution * resolution * channels],
        })
    }

    pub fn random(resolution: usize, channels: usize, scale: f64, rng: &mut impl Rng) -> Result<Self> {
        let mut tp = Self::zeros(resolution, channels)?;
        for v in &mut tp.data {
            *v = rng.random_range(-scale..scale);
        }
        Ok(tp)
    }

    pub fn from_vec(resolution: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        let tp = Self::zeros(resolution, channels)?;
        if data.len() != tp.data.len() {
            return Err(Error::structure(format!(
                "tri-plane {resolution}x{resolution}x{channels} needs {} values, got {}",
                tp.data.len(),
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("tri-plane contains non-finite values"));
        }
        Ok(Self { data, ..tp })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dim(&self) -> usize {
        3 * self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, plane: usize, v: usize, u: usize, c: usize) -> usize {
        let r = self.resolution;
        plane * r * r * self.channels + (v * r + u) * self.channels + c
    }

    pub fn get(&self, plane: usize, v: usize, u: usize, c: usize) -> f64 {
        self.data[self.index(plane, v, u, c)]
    }

    pub fn set(&mut self, plane: usize, v: usize, u: usize, c: usize, value: f64) {
        let i = self.index(plane, v, u, c);
        self.data[i] = value;
    }

    /// One channel of one plane as an `R×R` image (rows = `v`).
    pub fn channel_image(&self, plane: usize, c: usize) -> Image {
        let r = self.resolution;
        Image::from_fn(r, r, |v, u| self.get(plane, v, u, c))
    }

    pub fn set_channel_image(&mut self, plane: usize, c: usize, img: &Image) {
        let r = self.resolution;
        debug_assert_eq!(img.shape(), (r, r, 1));
        for v in 0..r {
            for u in 0..r {
                self.set(plane, v, u, c, img.get(v, u, 0));
            }
        }
    }

    #[inline]
    fn axis_coord(&self, x: f64) -> (usize, f64) {
        let g = (x.clamp(-1.0, 1.0) + 1.0) * 0.5 * (self.resolution - 1) as f64;
        let i0 = (g.floor() as usize).min(self.resolution - 2);
        (i0, g - i0 as f64)
    }

    #[inline]
    pub(crate) fn footprint(&self, p: [f64; 3], plane: usize) -> Footprint {
        let (a0, a1) = PLANE_AXES[plane];
        let (u0, fu) = self.axis_coord(p[a0]);
        let (v0, fv) = self.axis_coord(p[a1]);
        let base = self.index(plane, v0, u0, 0);
        let row = self.resolution * self.channels;
        Footprint {
            base: [base, base + self.channels, base + row, base + row + self.channels],
            weight: [(1.0 - fu) * (1.0 - fv), fu * (1.0 - fv), (1.0 - fu) * fv, fu * fv],
        }
    }

    /// Writes the `3C` embedding of `p` into `out`.
    pub fn embed_into(&self, p: [f64; 3], out: &mut [f64]) {
        let c = self.channels;
        for plane in 0..3 {
            let fp = self.footprint(p, plane);
            let dst = &mut out[plane * c..(plane + 1) * c];
            dst.fill(0.0);
            for (b, w) in fp.base.iter().zip(fp.weight) {
                for (d, v) in dst.iter_mut().zip(&self.data[*b..b + c]) {
                    *d += w * v;
                }
            }
        }
    }

    pub fn embed(&self, p: [f64; 3]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.embed_into(p, &mut out);
        out
    }

    /// Scatters an embedding gradient back onto the texels.
    pub fn accumulate_grad(&self, p: [f64; 3], d_embed: &[f64], grad: &mut [f64]) {
        let c = self.channels;
        for plane in 0..3 {
            let fp = self.footprint(p, plane);
            let src = &d_embed[plane * c..(plane + 1) * c];
            for (b, w) in fp.base.iter().zip(fp.weight) {
                for (g, d) in grad[*b..b + c].iter_mut().zip(src) {
                    *g += w * d;
                }
            }
        }
    }
}

/// Public entry point matching the other embedding functions.
pub fn triplane_embed(p: [f64; 3], tp: &TriPlane) -> Vec<f64> {
    tp.embed(p)
}
