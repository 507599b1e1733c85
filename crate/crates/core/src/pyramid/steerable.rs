//! Frequency-domain complex steerable pyramid.
//!
//! Radial bands are one octave wide with raised-cosine transitions in
//! log-radius; angular windows are `α·cos^(D−1)(θ − θ_o)` restricted to the
//! half-plane facing `θ_o`, which makes each oriented subband analytic. Band
//! `l` is band-limited to radius `π/2^l`, so its spectrum is cropped to a
//! `⌈H/2^l⌉ × ⌈W/2^l⌉` grid before the inverse FFT.
//!
//! Squared masks tile the spectrum: `H² + L² + Σ (B_l·G_o)² = 1` at every
//! bin, and each analytic mask is `M = 2·B_l·G_o·[half-plane]`, so
//! reconstruction takes the real part of every subband and filters it once
//! more with `B_l·|G_o|` (the symmetric half of the analytic mask).

use std::f64::consts::{FRAC_PI_2, PI};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft2;
use crate::image::Image;

/// User-facing pyramid configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PyramidParams {
    /// Number of oriented band levels; `None` picks `⌊log2 min(H, W)⌋ − 3`.
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default = "default_orientations")]
    pub orientations: usize,
}

fn default_orientations() -> usize {
    4
}

impl Default for PyramidParams {
    fn default() -> Self {
        Self {
            depth: None,
            orientations: default_orientations(),
        }
    }
}

impl PyramidParams {
    pub fn resolve_depth(&self, height: usize, width: usize) -> usize {
        self.depth.unwrap_or_else(|| default_depth(height, width))
    }
}

/// The deepest pyramid the image supports, `⌊log2 min(H, W)⌋ − 2`, at
/// least 1.
pub fn default_depth(height: usize, width: usize) -> usize {
    let m = height.min(width).max(1);
    let log2 = usize::BITS - 1 - m.leading_zeros();
    (log2 as usize).saturating_sub(2).max(1)
}

/// One-octave raised-cosine transition ending at radius `edge`:
/// returns `(lo, hi)` with `lo² + hi² = 1`.
#[inline]
fn transition(r: f64, edge: f64) -> (f64, f64) {
    let start = edge / 2.0;
    if r <= start {
        (1.0, 0.0)
    } else if r >= edge {
        (0.0, 1.0)
    } else {
        let x = (r / start).log2();
        let a = FRAC_PI_2 * x;
        (a.cos(), a.sin())
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Normalization making `Σ_o α²cos^(2(D−1))(θ − πo/D) = 1`.
fn angular_gain(orientations: usize) -> f64 {
    let n = (orientations - 1) as u64;
    let sum = orientations as f64 * binomial(2 * n, n) / 4f64.powi(n as i32);
    1.0 / sum.sqrt()
}

fn grid_polar(ky: usize, kx: usize, height: usize, width: usize) -> (f64, f64) {
    let fy = 2.0 * PI * fft2::signed_index(ky, height) as f64 / height as f64;
    let fx = 2.0 * PI * fft2::signed_index(kx, width) as f64 / width as f64;
    (fy.hypot(fx), fy.atan2(fx))
}

fn crop_size(n: usize, level: usize) -> usize {
    n.div_ceil(1 << level)
}

/// Precomputed masks for one image size and pyramid configuration.
/// Immutable once built and shareable across threads.
#[derive(Debug, Clone)]
pub struct SteerableFilters {
    height: usize,
    width: usize,
    depth: usize,
    orientations: usize,
    highpass: Vec<f64>,
    lowpass_full: Vec<f64>,
    radial: Vec<Vec<f64>>,
    angular: Vec<Vec<f64>>,
    /// Per level (and one extra for the lowpass): cropped size and the
    /// full-grid index of every cropped bin.
    crops: Vec<Crop>,
    /// `[level][orientation]` analytic mask on the cropped grid.
    analytic: Vec<Vec<Vec<f64>>>,
    /// `[level][orientation]` real steerable mask `B_l·|G_o|` on the cropped grid.
    steer: Vec<Vec<Vec<f64>>>,
    lowpass: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Crop {
    height: usize,
    width: usize,
    full_index: Vec<usize>,
}

impl Crop {
    fn new(height: usize, width: usize, full_h: usize, full_w: usize) -> Self {
        let mut full_index = Vec::with_capacity(height * width);
        for ky in 0..height {
            let fy = fft2::bin_of(fft2::signed_index(ky, height), full_h);
            for kx in 0..width {
                let fx = fft2::bin_of(fft2::signed_index(kx, width), full_w);
                full_index.push(fy * full_w + fx);
            }
        }
        Self {
            height,
            width,
            full_index,
        }
    }

    fn area(&self) -> usize {
        self.height * self.width
    }
}

/// Builds the mask set for an `height × width` image.
pub fn csp_filters(height: usize, width: usize, depth: usize, orientations: usize) -> Result<SteerableFilters> {
    if depth < 1 {
        return Err(Error::param("pyramid depth must be at least 1"));
    }
    if orientations < 2 {
        return Err(Error::param("pyramid needs at least 2 orientations"));
    }
    let needed = 1usize
        .checked_shl(depth as u32 + 2)
        .ok_or_else(|| Error::param("pyramid depth too large"))?;
    if height.min(width) < needed {
        return Err(Error::param(format!(
            "image {height}x{width} too small for {depth} levels (need min side >= {needed})"
        )));
    }

    let n = height * width;
    let gain = angular_gain(orientations);
    let mut highpass = vec![0.0; n];
    let mut lowpass_full = vec![0.0; n];
    let mut radial = vec![vec![0.0; n]; depth];
    let mut angular = vec![vec![0.0; n]; orientations];
    let mut facing = vec![vec![false; n]; orientations];

    for ky in 0..height {
        for kx in 0..width {
            let i = ky * width + kx;
            let (r, theta) = grid_polar(ky, kx, height, width);
            highpass[i] = transition(r, PI).1;
            for (l, band) in radial.iter_mut().enumerate() {
                let edge = PI / (1u64 << l) as f64;
                band[i] = transition(r, edge).0 * transition(r, edge / 2.0).1;
            }
            lowpass_full[i] = transition(r, PI / (1u64 << depth) as f64).0;
            for o in 0..orientations {
                let c = (theta - PI * o as f64 / orientations as f64).cos();
                angular[o][i] = gain * c.powi(orientations as i32 - 1);
                facing[o][i] = c > 0.0;
            }
        }
    }

    let crops: Vec<Crop> = (0..=depth)
        .map(|l| Crop::new(crop_size(height, l), crop_size(width, l), height, width))
        .collect();

    let mut analytic = Vec::with_capacity(depth);
    let mut steer = Vec::with_capacity(depth);
    for l in 0..depth {
        let crop = &crops[l];
        let mut a_level = Vec::with_capacity(orientations);
        let mut s_level = Vec::with_capacity(orientations);
        for o in 0..orientations {
            let s: Vec<f64> = crop
                .full_index
                .iter()
                .map(|&i| radial[l][i] * angular[o][i].abs())
                .collect();
            let a: Vec<f64> = crop
                .full_index
                .iter()
                .zip(&s)
                .map(|(&i, v)| if facing[o][i] { 2.0 * v } else { 0.0 })
                .collect();
            a_level.push(a);
            s_level.push(s);
        }
        analytic.push(a_level);
        steer.push(s_level);
    }
    let lowpass = crops[depth].full_index.iter().map(|&i| lowpass_full[i]).collect();

    Ok(SteerableFilters {
        height,
        width,
        depth,
        orientations,
        highpass,
        lowpass_full,
        radial,
        angular,
        crops,
        analytic,
        steer,
        lowpass,
    })
}

impl SteerableFilters {
    pub fn for_image(height: usize, width: usize, params: &PyramidParams) -> Result<Self> {
        csp_filters(height, width, params.resolve_depth(height, width), params.orientations)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn orientations(&self) -> usize {
        self.orientations
    }

    /// Resolution of band level `l` (`l == depth` gives the lowpass size).
    pub fn level_size(&self, level: usize) -> (usize, usize) {
        let c = &self.crops[level];
        (c.height, c.width)
    }

    /// Highpass mask on the full FFT grid.
    pub fn highpass_mask(&self) -> &[f64] {
        &self.highpass
    }

    /// Lowpass mask on the full FFT grid.
    pub fn lowpass_mask(&self) -> &[f64] {
        &self.lowpass_full
    }

    /// Analytic (half-plane) mask of band `(level, orientation)` on the full
    /// FFT grid.
    pub fn band_mask(&self, level: usize, orientation: usize) -> Vec<f64> {
        let n = self.height * self.width;
        let mut out = vec![0.0; n];
        for ky in 0..self.height {
            for kx in 0..self.width {
                let i = ky * self.width + kx;
                let (_, theta) = grid_polar(ky, kx, self.height, self.width);
                let c = (theta - PI * orientation as f64 / self.orientations as f64).cos();
                if c > 0.0 {
                    out[i] = 2.0 * self.radial[level][i] * self.angular[orientation][i];
                }
            }
        }
        out
    }
}

/// Complex subband at one level and orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBand {
    pub height: usize,
    pub width: usize,
    pub data: Vec<Complex64>,
}

impl ComplexBand {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![Complex64::default(); height * width],
        }
    }

    /// Element-wise argument in (−π, π].
    pub fn phase(&self) -> Image {
        let data = self.data.iter().map(|c| c.arg()).collect();
        Image::from_vec(self.height, self.width, 1, data).expect("band shape")
    }

    /// Element-wise modulus.
    pub fn amplitude(&self) -> Image {
        let data = self.data.iter().map(|c| c.norm()).collect();
        Image::from_vec(self.height, self.width, 1, data).expect("band shape")
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }
}

pub fn phase_of(band: &ComplexBand) -> Image {
    band.phase()
}

pub fn amplitude_of(band: &ComplexBand) -> Image {
    band.amplitude()
}

/// Decomposition of one single-channel image.
#[derive(Debug, Clone, PartialEq)]
pub struct SteerablePyramid {
    pub height: usize,
    pub width: usize,
    /// Real highpass residual at full resolution.
    pub highpass: Vec<f64>,
    /// Real lowpass residual at the coarsest resolution.
    pub lowpass: Image,
    /// `bands[level][orientation]`.
    pub bands: Vec<Vec<ComplexBand>>,
}

impl SteerablePyramid {
    pub fn depth(&self) -> usize {
        self.bands.len()
    }

    pub fn orientations(&self) -> usize {
        self.bands.first().map_or(0, |b| b.len())
    }

    pub fn build(image: &Image, filters: &SteerableFilters) -> Result<Self> {
        if image.channels() != 1 {
            return Err(Error::param("steerable pyramid works on single-channel images"));
        }
        if image.height() != filters.height || image.width() != filters.width {
            return Err(Error::structure(format!(
                "image is {}x{}, filters built for {}x{}",
                image.height(),
                image.width(),
                filters.height,
                filters.width
            )));
        }
        if !image.is_finite() {
            return Err(Error::input("image contains non-finite values"));
        }
        let (h, w) = (filters.height, filters.width);
        let full_area = (h * w) as f64;
        let spectrum = fft2::forward_real(image.data(), h, w);

        let mut hp: Vec<Complex64> = spectrum.iter().zip(&filters.highpass).map(|(x, m)| x * m).collect();
        fft2::inverse(&mut hp, h, w);
        let highpass = hp.into_iter().map(|c| c.re).collect();

        let mut bands = Vec::with_capacity(filters.depth);
        for l in 0..filters.depth {
            let crop = &filters.crops[l];
            let scale = crop.area() as f64 / full_area;
            let mut level = Vec::with_capacity(filters.orientations);
            for o in 0..filters.orientations {
                let mask = &filters.analytic[l][o];
                let mut buf: Vec<Complex64> = crop
                    .full_index
                    .iter()
                    .zip(mask)
                    .map(|(&i, m)| spectrum[i] * (m * scale))
                    .collect();
                fft2::inverse(&mut buf, crop.height, crop.width);
                level.push(ComplexBand {
                    height: crop.height,
                    width: crop.width,
                    data: buf,
                });
            }
            bands.push(level);
        }

        let crop = &filters.crops[filters.depth];
        let scale = crop.area() as f64 / full_area;
        let mut low: Vec<Complex64> = crop
            .full_index
            .iter()
            .zip(&filters.lowpass)
            .map(|(&i, m)| spectrum[i] * (m * scale))
            .collect();
        fft2::inverse(&mut low, crop.height, crop.width);
        let lowpass = Image::from_vec(crop.height, crop.width, 1, low.into_iter().map(|c| c.re).collect())?;

        Ok(Self {
            height: h,
            width: w,
            highpass,
            lowpass,
            bands,
        })
    }

    fn check_structure(&self, filters: &SteerableFilters) -> Result<()> {
        let bad = |msg: String| Err(Error::structure(msg));
        if self.height != filters.height || self.width != filters.width {
            return bad(format!(
                "pyramid is {}x{}, filters built for {}x{}",
                self.height, self.width, filters.height, filters.width
            ));
        }
        if self.highpass.len() != self.height * self.width {
            return bad("highpass residual has wrong size".into());
        }
        if self.bands.len() != filters.depth {
            return bad(format!(
                "pyramid has {} levels, filters {}",
                self.bands.len(),
                filters.depth
            ));
        }
        for (l, level) in self.bands.iter().enumerate() {
            if level.len() != filters.orientations {
                return bad(format!("level {l} has {} orientations", level.len()));
            }
            let crop = &filters.crops[l];
            for band in level {
                if band.height != crop.height || band.width != crop.width || band.data.len() != crop.area() {
                    return bad(format!("level {l} band has inconsistent size"));
                }
            }
        }
        let crop = &filters.crops[filters.depth];
        if self.lowpass.height() != crop.height || self.lowpass.width() != crop.width {
            return bad("lowpass residual has wrong size".into());
        }
        Ok(())
    }

    /// Recombines the subbands into a real image.
    pub fn collapse(&self, filters: &SteerableFilters) -> Result<Image> {
        self.check_structure(filters)?;
        let (h, w) = (filters.height, filters.width);
        let full_area = (h * w) as f64;

        let mut acc = fft2::forward_real(&self.highpass, h, w);
        for (a, m) in acc.iter_mut().zip(&filters.highpass) {
            *a *= m;
        }

        for (l, level) in self.bands.iter().enumerate() {
            let crop = &filters.crops[l];
            let unscale = full_area / crop.area() as f64;
            for (o, band) in level.iter().enumerate() {
                let mut spec = band.data.clone();
                fft2::forward(&mut spec, crop.height, crop.width);
                let steer = &filters.steer[l][o];
                for ky in 0..crop.height {
                    let my = fft2::mirror(ky, crop.height);
                    for kx in 0..crop.width {
                        let i = ky * crop.width + kx;
                        if steer[i] == 0.0 {
                            continue;
                        }
                        let j = my * crop.width + fft2::mirror(kx, crop.width);
                        let real_part = (spec[i] + spec[j].conj()) * 0.5;
                        acc[crop.full_index[i]] += real_part * (steer[i] * unscale);
                    }
                }
            }
        }

        let crop = &filters.crops[filters.depth];
        let unscale = full_area / crop.area() as f64;
        let low = fft2::forward_real(self.lowpass.data(), crop.height, crop.width);
        for (i, v) in low.iter().enumerate() {
            acc[crop.full_index[i]] += v * (filters.lowpass[i] * unscale);
        }

        fft2::inverse(&mut acc, h, w);
        Image::from_vec(h, w, 1, acc.into_iter().map(|c| c.re).collect())
    }
}

/// Builds a pyramid with freshly computed filters.
pub fn csp_build(image: &Image, params: &PyramidParams) -> Result<(SteerablePyramid, SteerableFilters)> {
    let filters = SteerableFilters::for_image(image.height(), image.width(), params)?;
    let pyr = SteerablePyramid::build(image, &filters)?;
    Ok((pyr, filters))
}

pub fn csp_collapse(pyr: &SteerablePyramid, filters: &SteerableFilters) -> Result<Image> {
    pyr.collapse(filters)
}
