//! Separable 2D FFT over row-major complex buffers.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

fn transform(data: &mut [Complex64], height: usize, width: usize, inverse: bool) {
    debug_assert_eq!(data.len(), height * width);
    let mut planner = FftPlanner::<f64>::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height))
    } else {
        (planner.plan_fft_forward(width), planner.plan_fft_forward(height))
    };
    for row in data.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let mut column = vec![Complex64::default(); height];
    for x in 0..width {
        for (y, c) in column.iter_mut().enumerate() {
            *c = data[y * width + x];
        }
        col_fft.process(&mut column);
        for (y, c) in column.iter().enumerate() {
            data[y * width + x] = *c;
        }
    }
}

/// Unnormalized forward transform, in place.
pub fn forward(data: &mut [Complex64], height: usize, width: usize) {
    transform(data, height, width, false);
}

/// Inverse transform including the 1/(HW) normalization, in place.
pub fn inverse(data: &mut [Complex64], height: usize, width: usize) {
    transform(data, height, width, true);
    let scale = 1.0 / (height * width) as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

pub fn forward_real(values: &[f64], height: usize, width: usize) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward(&mut data, height, width);
    data
}

/// Signed frequency index of FFT bin `k` on an `n`-point grid:
/// `0, 1, …, ⌈n/2⌉−1, −⌊n/2⌋, …, −1`.
#[inline]
pub fn signed_index(k: usize, n: usize) -> isize {
    if k < n.div_ceil(2) {
        k as isize
    } else {
        k as isize - n as isize
    }
}

/// Inverse of [`signed_index`].
#[inline]
pub fn bin_of(signed: isize, n: usize) -> usize {
    signed.rem_euclid(n as isize) as usize
}

/// Index of the bin holding frequency −k.
#[inline]
pub fn mirror(k: usize, n: usize) -> usize {
    (n - k) % n
}
