//! Laplacian pyramid with the 5-tap binomial kernel `[1, 4, 6, 4, 1] / 16`.
//!
//! Borders use mirror reflection without edge duplication, which keeps the
//! parity of zero-inserted samples intact during expansion, so constants
//! reduce and expand exactly.

use crate::error::{Error, Result};
use crate::image::Image;

const KERNEL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianPyramid {
    /// Band-pass levels, finest first.
    pub bands: Vec<Image>,
    pub residual: Image,
}

impl LaplacianPyramid {
    pub fn depth(&self) -> usize {
        self.bands.len()
    }
}

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Separable binomial blur with per-axis gain `gain`.
fn blur(img: &Image, gain: f64) -> Image {
    let (h, w, c) = img.shape();
    let src = img.data();
    let mut tmp = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            for (k, kv) in KERNEL.iter().enumerate() {
                let xx = reflect(x as isize + k as isize - 2, w);
                let (o, s) = ((y * w + x) * c, (y * w + xx) * c);
                for ch in 0..c {
                    tmp[o + ch] += gain * kv * src[s + ch];
                }
            }
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for (k, kv) in KERNEL.iter().enumerate() {
            let yy = reflect(y as isize + k as isize - 2, h);
            for x in 0..w {
                let (o, s) = ((y * w + x) * c, (yy * w + x) * c);
                for ch in 0..c {
                    out[o + ch] += gain * kv * tmp[s + ch];
                }
            }
        }
    }
    Image::from_vec(h, w, c, out).expect("blur keeps shape")
}

/// Blur then keep even rows and columns.
pub fn reduce(img: &Image) -> Image {
    let blurred = blur(img, 1.0);
    let (h, w, c) = img.shape();
    let (hh, ww) = (h.div_ceil(2), w.div_ceil(2));
    let mut out = Image::zeros(hh, ww, c);
    for y in 0..hh {
        for x in 0..ww {
            for ch in 0..c {
                out.set(y, x, ch, blurred.get(2 * y, 2 * x, ch));
            }
        }
    }
    out
}

/// Zero-insert up to `height × width`, then blur with per-axis gain 2.
pub fn expand(img: &Image, height: usize, width: usize) -> Image {
    let c = img.channels();
    let mut up = Image::zeros(height, width, c);
    for y in 0..img.height().min(height.div_ceil(2)) {
        for x in 0..img.width().min(width.div_ceil(2)) {
            for ch in 0..c {
                up.set(2 * y, 2 * x, ch, img.get(y, x, ch));
            }
        }
    }
    blur(&up, 2.0)
}

pub fn laplacian_build(image: &Image, depth: usize) -> Result<LaplacianPyramid> {
    let min_side = image.height().min(image.width());
    if depth == 0 || depth >= usize::BITS as usize || (1usize << depth) > min_side {
        return Err(Error::param(format!(
            "Laplacian depth {depth} does not fit a {}x{} image",
            image.height(),
            image.width()
        )));
    }
    let mut bands = Vec::with_capacity(depth);
    let mut current = image.clone();
    for _ in 0..depth {
        let down = reduce(&current);
        let up = expand(&down, current.height(), current.width());
        let mut band = current;
        for (b, u) in band.data_mut().iter_mut().zip(up.data()) {
            *b -= u;
        }
        bands.push(band);
        current = down;
    }
    Ok(LaplacianPyramid {
        bands,
        residual: current,
    })
}

pub fn laplacian_collapse(pyr: &LaplacianPyramid) -> Result<Image> {
    let mut current = pyr.residual.clone();
    for band in pyr.bands.iter().rev() {
        if band.height().div_ceil(2) != current.height()
            || band.width().div_ceil(2) != current.width()
            || band.channels() != current.channels()
        {
            return Err(Error::structure("Laplacian levels have inconsistent sizes"));
        }
        let mut up = expand(&current, band.height(), band.width());
        for (u, b) in up.data_mut().iter_mut().zip(band.data()) {
            *u += b;
        }
        current = up;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_image_gives_zero_pyramid() {
        let pyr = laplacian_build(&Image::zeros(32, 20, 3), 3).unwrap();
        assert!(pyr.bands.iter().all(|b| b.data().iter().all(|v| *v == 0.0)));
        assert!(pyr.residual.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_image_lives_in_the_residual() {
        let pyr = laplacian_build(&Image::filled(33, 18, 2, 0.4), 3).unwrap();
        for band in &pyr.bands {
            assert!(band.data().iter().all(|v| v.abs() < 1e-14));
        }
        assert!(pyr.residual.data().iter().all(|v| (v - 0.4).abs() < 1e-14));
    }

    #[test]
    fn round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (h, w, c) in [(64, 64, 1), (37, 50, 3), (2, 64, 1)] {
            let data = (0..h * w * c).map(|_| rng.random::<f64>()).collect();
            let img = Image::from_vec(h, w, c, data).unwrap();
            let depth = if h == 2 { 1 } else { 4 };
            let pyr = laplacian_build(&img, depth).unwrap();
            let back = laplacian_collapse(&pyr).unwrap();
            assert!(back.relative_l2(&img) < 1e-6);
        }
    }

    #[test]
    fn excessive_depth_is_rejected() {
        assert!(matches!(
            laplacian_build(&Image::zeros(8, 8, 1), 4),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            laplacian_build(&Image::zeros(8, 8, 1), 0),
            Err(Error::Parameter(_))
        ));
    }
}
