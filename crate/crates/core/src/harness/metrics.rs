//! Image quality metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::magnify2d::FrameSequence;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

fn check_shapes(a: &Image, b: &Image) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::param(format!(
            "image shapes differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Separable Gaussian filtering over the valid region of one channel.
fn filter_valid(src: &[f64], h: usize, w: usize, win: &[f64; SSIM_WINDOW]) -> (Vec<f64>, usize, usize) {
    let k = SSIM_WINDOW;
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut tmp = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = (0..k).map(|i| win[i] * src[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..k).map(|i| win[i] * tmp[(y + i) * ow + x]).sum();
        }
    }
    (out, oh, ow)
}

/// Mean SSIM over channels and valid-window positions, intensities in
/// `[0, 1]`.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let (h, w, c) = a.shape();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::param(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}"
        )));
    }
    let win = gaussian_window();
    let mut total = 0.0;
    let mut count = 0usize;
    for ch in 0..c {
        let x: Vec<f64> = a.channel(ch).into_vec();
        let y: Vec<f64> = b.channel(ch).into_vec();
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
        let (mx, _, _) = filter_valid(&x, h, w, &win);
        let (my, _, _) = filter_valid(&y, h, w, &win);
        let (sxx, _, _) = filter_valid(&xx, h, w, &win);
        let (syy, _, _) = filter_valid(&yy, h, w, &win);
        let (sxy, _, _) = filter_valid(&xy, h, w, &win);
        for i in 0..mx.len() {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cxy = sxy[i] - ux * uy;
            total += ((2.0 * ux * uy + SSIM_C1) * (2.0 * cxy + SSIM_C2))
                / ((ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// PSNR in dB for peak value 1; `+∞` when the images are equal.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let mse = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.data().len() as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { -10.0 * mse.log10() })
}

/// Quality of one sequence against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ssim: Vec<f64>,
    /// `None` marks an exact match (infinite PSNR).
    pub psnr: Vec<Option<f64>>,
    pub mean_ssim: f64,
    /// Mean over finite frames; `None` when every frame matches exactly.
    pub mean_psnr: Option<f64>,
    /// Displacement amplitude (pixels) per analyzed frequency, if measured.
    #[serde(default)]
    pub displacement: Vec<FrequencyAmplitude>,
    /// Seconds.
    pub runtime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyAmplitude {
    pub frequency: f64,
    pub amplitude: f64,
}

pub fn evaluate(test: &FrameSequence, reference: &FrameSequence) -> Result<EvalReport> {
    let start = std::time::Instant::now();
    if test.len() != reference.len() {
        return Err(Error::param(format!(
            "sequences have {} and {} frames",
            test.len(),
            reference.len()
        )));
    }
    let mut ssims = Vec::with_capacity(test.len());
    let mut psnrs = Vec::with_capacity(test.len());
    for (a, b) in test.frames().iter().zip(reference.frames()) {
        ssims.push(ssim(a, b)?);
        let p = psnr(a, b)?;
        psnrs.push(p.is_finite().then_some(p));
    }
    let finite: Vec<f64> = psnrs.iter().flatten().copied().collect();
    Ok(EvalReport {
        mean_ssim: ssims.iter().sum::<f64>() / ssims.len() as f64,
        mean_psnr: (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64),
        ssim: ssims,
        psnr: psnrs,
        displacement: Vec::new(),
        runtime: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_images() {
        let img = Image::from_fn(16, 16, |y, x| ((x * 7 + y * 3) % 11) as f64 / 10.0);
        assert!((ssim(&img, &img).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(psnr(&img, &img).unwrap(), f64::INFINITY);
    }

    #[test]
    fn constant_images_reduce_to_luminance() {
        let a = Image::filled(16, 16, 1, 0.5);
        let b = Image::filled(16, 16, 1, 0.6);
        let expected = (2.0 * 0.5 * 0.6 + SSIM_C1) / (0.25 + 0.36 + SSIM_C1);
        assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        assert!(matches!(
            ssim(&Image::zeros(16, 16, 1), &Image::zeros(16, 17, 1)),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            psnr(&Image::zeros(2, 2, 1), &Image::zeros(2, 2, 3)),
            Err(Error::Parameter(_))
        ));
    }
}
