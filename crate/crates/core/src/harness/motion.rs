//! Displacement measurement, noise injection and space-time slices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft2;
use crate::image::Image;
use crate::magnify2d::FrameSequence;

/// Rectangle inside a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub y: usize,
    pub x: usize,
    pub height: usize,
    pub width: usize,
}

impl Region {
    pub fn full(img: &Image) -> Self {
        Self {
            y: 0,
            x: 0,
            height: img.height(),
            width: img.width(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    /// Shift of the frame content relative to the reference, pixels.
    pub dx: f64,
    pub dy: f64,
    /// True when the reference region is too flat to measure.
    pub low_confidence: bool,
}

/// Channel mean of every pixel.
fn gray(img: &Image) -> Vec<f64> {
    let c = img.channels();
    img.data()
        .chunks(c)
        .map(|px| px.iter().sum::<f64>() / c as f64)
        .collect()
}

/// `region` cut out of a gray image, mean removed.
fn patch(g: &[f64], width: usize, r: &Region) -> Vec<f64> {
    let mut out: Vec<f64> = (r.y..r.y + r.height)
        .flat_map(|y| (r.x..r.x + r.width).map(move |x| g[y * width + x]))
        .collect();
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    for v in &mut out {
        *v -= mean;
    }
    out
}

/// Keys cubic convolution weights for fractional offset `f`.
fn cubic_weights(f: f64) -> [f64; 4] {
    let k = |x: f64| {
        let x = x.abs();
        if x < 1.0 {
            1.5 * x * x * x - 2.5 * x * x + 1.0
        } else if x < 2.0 {
            -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0
        } else {
            0.0
        }
    };
    [k(1.0 + f), k(f), k(1.0 - f), k(2.0 - f)]
}

/// Cubic interpolation of a gray image with edge replication.
fn sample(g: &[f64], h: usize, w: usize, y: f64, x: f64) -> f64 {
    let (y0, x0) = (y.floor(), x.floor());
    let (wy, wx) = (cubic_weights(y - y0), cubic_weights(x - x0));
    let clamp = |v: f64, n: usize| v.clamp(0.0, (n - 1) as f64) as usize;
    let mut acc = 0.0;
    for (i, wyi) in wy.iter().enumerate() {
        let row = clamp(y0 + i as f64 - 1.0, h) * w;
        for (j, wxj) in wx.iter().enumerate() {
            acc += wyi * wxj * g[row + clamp(x0 + j as f64 - 1.0, w)];
        }
    }
    acc
}

/// Translation of `frame` relative to `reference` within `region`.
///
/// Phase correlation gives the integer shift; among equally good peaks
/// (periodic content) the smallest shift wins. Gauss-Newton iterations on
/// `Σ (frame(x) − reference(x − d))²` over the region, with the reference
/// cubically interpolated, then refine it to sub-pixel precision.
pub fn measure_shift(reference: &Image, frame: &Image, region: &Region) -> Result<Displacement> {
    if reference.shape() != frame.shape() {
        return Err(Error::param("frames differ in shape"));
    }
    if region.height < 4
        || region.width < 4
        || region.y + region.height > reference.height()
        || region.x + region.width > reference.width()
    {
        return Err(Error::param("region must be at least 4x4 and inside the frame"));
    }
    let (h, w) = (region.height, region.width);
    let (gh, gw) = (reference.height(), reference.width());
    let (ga, gb) = (gray(reference), gray(frame));
    let a = patch(&ga, gw, region);
    let b = patch(&gb, gw, region);
    let energy = a.iter().map(|v| v * v).sum::<f64>() / a.len() as f64;
    if energy.sqrt() < 1e-4 {
        return Ok(Displacement {
            dx: 0.0,
            dy: 0.0,
            low_confidence: true,
        });
    }

    let fa = fft2::forward_real(&a, h, w);
    let fb = fft2::forward_real(&b, h, w);
    let cross: Vec<Complex64> = fb.iter().zip(&fa).map(|(p, q)| p * q.conj()).collect();
    // Whitening is damped so that bins carrying no signal do not add noise
    // peaks.
    let floor = 1e-3 * cross.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut norm: Vec<Complex64> = cross.iter().map(|c| c / (c.norm() + floor).max(1e-300)).collect();
    fft2::inverse(&mut norm, h, w);
    let best = norm.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
    let is_local_max = |i: usize| {
        let (y, x) = (i / w, i % w);
        let v = norm[i].re;
        [(h - 1, 0), (1, 0), (0, w - 1), (0, 1)]
            .iter()
            .all(|(dy, dx)| norm[((y + dy) % h) * w + (x + dx) % w].re <= v)
    };
    let shift_len = |i: usize| {
        let (y, x) = (fft2::signed_index(i / w, h), fft2::signed_index(i % w, w));
        y * y + x * x
    };
    let peak = (0..h * w)
        .filter(|i| norm[*i].re >= 0.9 * best && is_local_max(*i))
        .min_by_key(|i| shift_len(*i))
        .unwrap();
    let mut dy = fft2::signed_index(peak / w, h) as f64;
    let mut dx = fft2::signed_index(peak % w, w) as f64;

    let mut low_confidence = false;
    for _ in 0..50 {
        let (mut gyy, mut gxx, mut gxy, mut ry, mut rx) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for y in region.y..region.y + h {
            for x in region.x..region.x + w {
                let (sy, sx) = (y as f64 - dy, x as f64 - dx);
                // Only samples whose whole stencil lies inside the frame, on
                // axes long enough to afford it; shorter axes are clamped.
                let outside = |v: f64, n: usize| n >= 8 && (v < 2.0 || v > n as f64 - 4.0);
                if outside(sy, gh) || outside(sx, gw) {
                    continue;
                }
                let warped = sample(&ga, gh, gw, sy, sx);
                let gy = 0.5 * (sample(&ga, gh, gw, sy + 1.0, sx) - sample(&ga, gh, gw, sy - 1.0, sx));
                let gx = 0.5 * (sample(&ga, gh, gw, sy, sx + 1.0) - sample(&ga, gh, gw, sy, sx - 1.0));
                let r = gb[y * gw + x] - warped;
                gyy += gy * gy;
                gxx += gx * gx;
                gxy += gx * gy;
                ry += gy * r;
                rx += gx * r;
            }
        }
        // frame ≈ warped − δ·∇, so δ = −G⁻¹·Σ∇r. Content that is constant
        // along one axis carries no information about that axis.
        let scale = gyy.max(gxx);
        let (sy, sx) = if scale <= 0.0 {
            low_confidence = true;
            break;
        } else if gyy <= 1e-12 * scale {
            (0.0, -rx / gxx)
        } else if gxx <= 1e-12 * scale {
            (-ry / gyy, 0.0)
        } else {
            let det = gyy * gxx - gxy * gxy;
            if det.abs() <= 1e-12 * scale * scale {
                low_confidence = true;
                break;
            }
            (-(ry * gxx - rx * gxy) / det, -(rx * gyy - ry * gxy) / det)
        };
        dy += sy.clamp(-1.0, 1.0);
        dx += sx.clamp(-1.0, 1.0);
        if sy.abs().max(sx.abs()) < 1e-7 {
            break;
        }
    }
    Ok(Displacement { dx, dy, low_confidence })
}

/// Per-frame shift of every frame against frame `reference`.
pub fn measure_displacement(seq: &FrameSequence, reference: usize, region: &Region) -> Result<Vec<Displacement>> {
    if reference >= seq.len() {
        return Err(Error::param("reference frame out of range"));
    }
    let r = seq.frame(reference);
    seq.frames().iter().map(|f| measure_shift(r, f, region)).collect()
}

/// Amplitude of the `frequency` Hz component of a uniformly sampled series,
/// from a least-squares fit of `a·sin + b·cos + c`.
pub fn sinusoid_amplitude(series: &[f64], fps: f64, frequency: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * frequency / fps;
    // Normal equations for [sin, cos, 1].
    let mut m = [[0.0; 3]; 3];
    let mut v = [0.0; 3];
    for (t, y) in series.iter().enumerate() {
        let basis = [(w * t as f64).sin(), (w * t as f64).cos(), 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            v[i] += basis[i] * y;
        }
    }
    let sol = solve3(m, v);
    (sol[0] * sol[0] + sol[1] * sol[1]).sqrt()
}

fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|a, b| m[*a][col].abs().partial_cmp(&m[*b][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        v.swap(col, pivot);
        if m[col][col].abs() < 1e-300 {
            continue;
        }
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in 0..3 {
                    m[row][k] -= f * m[col][k];
                }
                v[row] -= f * v[col];
            }
        }
    }
    [0, 1, 2].map(|i| if m[i][i].abs() < 1e-300 { 0.0 } else { v[i] / m[i][i] })
}

/// Adds i.i.d. `N(0, variance)` noise to every value and clamps to `[0, 1]`.
pub fn add_noise(seq: &FrameSequence, variance: f64, seed: u64) -> Result<FrameSequence> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::param(format!("noise variance must be >= 0, got {variance}")));
    }
    if variance == 0.0 {
        return Ok(seq.clone());
    }
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = seq
        .frames()
        .iter()
        .map(|f| {
            let mut g = f.clone();
            for v in g.data_mut() {
                *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
            }
            g
        })
        .collect();
    FrameSequence::new(frames, seq.fps(), seq.kind())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceLine {
    Row(usize),
    Column(usize),
}

/// Stacks one pixel row (or column) of every frame into a `T × len` image.
pub fn xt_slice(seq: &FrameSequence, line: SliceLine) -> Result<Image> {
    let (h, w, c) = seq.shape();
    let t_count = seq.len();
    let len = match line {
        SliceLine::Row(r) if r < h => w,
        SliceLine::Column(col) if col < w => h,
        _ => return Err(Error::param(format!("slice line {line:?} outside a {h}x{w} frame"))),
    };
    let mut out = Image::zeros(t_count, len, c);
    for (t, f) in seq.frames().iter().enumerate() {
        for i in 0..len {
            let (y, x) = match line {
                SliceLine::Row(r) => (r, i),
                SliceLine::Column(col) => (i, col),
            };
            for ch in 0..c {
                out.set(t, i, ch, f.get(y, x, ch));
            }
        }
    }
    Ok(out)
}
