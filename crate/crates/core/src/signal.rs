//! Temporal frequency analysis of multichannel time series.
//!
//! Everything here is a pure function of its inputs. The ideal bandpass is a
//! rectangular mask in the DFT domain with both band edges inclusive; the
//! mirrored negative-frequency bins are kept together with their positive
//! partners so real input always yields real output.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative imaginary residue tolerated when a real result is demanded.
pub const REALNESS_TOL: f64 = 1e-9;

/// T×D real samples, time-major, at a fixed sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    len: usize,
    dims: usize,
    fps: f64,
    data: Vec<f64>,
}

impl TimeSeries {
    pub fn new(len: usize, dims: usize, fps: f64, data: Vec<f64>) -> Result<Self> {
        if len == 0 || dims == 0 {
            return Err(Error::param("time series needs T >= 1 and D >= 1"));
        }
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::param(format!("sampling rate must be positive, got {fps}")));
        }
        if data.len() != len * dims {
            return Err(Error::structure(format!(
                "time series buffer holds {} values, expected {len}x{dims}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("time series contains non-finite values"));
        }
        Ok(Self { len, dims, fps, data })
    }

    /// Single-channel series.
    pub fn from_samples(samples: Vec<f64>, fps: f64) -> Result<Self> {
        Self::new(samples.len(), 1, fps, samples)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, t: usize, d: usize) -> f64 {
        self.data[t * self.dims + d]
    }

    /// Copies channel `d` out as a contiguous trajectory.
    pub fn channel(&self, d: usize) -> Vec<f64> {
        (0..self.len).map(|t| self.get(t, d)).collect()
    }
}

/// Complex DFT bins laid out like the series they came from (T×D).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub len: usize,
    pub dims: usize,
    pub bins: Vec<Complex64>,
}

impl Spectrum {
    #[inline]
    pub fn get(&self, k: usize, d: usize) -> Complex64 {
        self.bins[k * self.dims + d]
    }
}

/// Passband and gain for Eulerian amplification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandpassSpec {
    pub f_lo: f64,
    pub f_hi: f64,
    pub alpha: f64,
}

impl BandpassSpec {
    pub fn new(f_lo: f64, f_hi: f64, alpha: f64) -> Self {
        Self { f_lo, f_hi, alpha }
    }

    /// Gain for a total displacement multiplier `factor` (α = m − 1).
    pub fn for_factor(f_lo: f64, f_hi: f64, factor: f64) -> Self {
        Self::new(f_lo, f_hi, factor - 1.0)
    }

    pub fn validate(&self, fps: f64) -> Result<()> {
        validate_band(self.f_lo, self.f_hi, fps)?;
        if !(self.alpha >= -1.0 && self.alpha.is_finite()) {
            return Err(Error::param(format!(
                "gain must be finite and >= -1, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

fn validate_band(f_lo: f64, f_hi: f64, fps: f64) -> Result<()> {
    let nyquist = fps / 2.0;
    let ok = f_lo.is_finite() && f_hi.is_finite() && f_lo >= 0.0 && f_lo <= f_hi && f_hi <= nyquist * (1.0 + 1e-12);
    if ok {
        Ok(())
    } else {
        Err(Error::param(format!(
            "band [{f_lo}, {f_hi}] Hz is invalid for {fps} fps (need 0 <= lo <= hi <= {nyquist})"
        )))
    }
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

fn transform_columns(len: usize, dims: usize, bins: &mut [Complex64], fft: &dyn Fft<f64>) {
    let mut column = vec![Complex64::default(); len];
    for d in 0..dims {
        for (t, c) in column.iter_mut().enumerate() {
            *c = bins[t * dims + d];
        }
        fft.process(&mut column);
        for (t, c) in column.iter().enumerate() {
            bins[t * dims + d] = *c;
        }
    }
}

/// Unnormalized forward DFT along time, independently per channel.
pub fn dft_forward(series: &TimeSeries) -> Spectrum {
    let mut bins: Vec<Complex64> = series.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_columns(series.len, series.dims, &mut bins, plan(series.len, false).as_ref());
    Spectrum {
        len: series.len,
        dims: series.dims,
        bins,
    }
}

/// Inverse DFT (with 1/T normalization) returning complex samples.
pub fn dft_inverse_complex(spectrum: &Spectrum) -> Vec<Complex64> {
    let mut bins = spectrum.bins.clone();
    transform_columns(
        spectrum.len,
        spectrum.dims,
        &mut bins,
        plan(spectrum.len, true).as_ref(),
    );
    let scale = 1.0 / spectrum.len as f64;
    for b in &mut bins {
        *b *= scale;
    }
    bins
}

/// Inverse DFT asserting a real result.
///
/// Fails with [`Error::NotReal`] if the imaginary residue exceeds
/// [`REALNESS_TOL`] relative to the largest magnitude.
pub fn dft_inverse(spectrum: &Spectrum, fps: f64) -> Result<TimeSeries> {
    real_inverse(spectrum, fps, 0.0)
}

/// As [`dft_inverse`], with the residue measured against at least `scale`.
/// Filtering can leave an output far smaller than its input, whose rounding
/// residue is only meaningful relative to the input.
fn real_inverse(spectrum: &Spectrum, fps: f64, scale: f64) -> Result<TimeSeries> {
    let samples = dft_inverse_complex(spectrum);
    let scale = samples
        .iter()
        .map(|c| c.norm())
        .fold(scale, f64::max)
        .max(f64::MIN_POSITIVE);
    let residue = samples.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residue > REALNESS_TOL * scale && residue > 0.0 {
        return Err(Error::NotReal {
            residue: residue / scale,
        });
    }
    TimeSeries::new(
        spectrum.len,
        spectrum.dims,
        fps,
        samples.into_iter().map(|c| c.re).collect(),
    )
}

/// Frequency in Hz of DFT bin `k` of a `len`-sample series, folded to |k|.
pub fn bin_frequency(k: usize, len: usize, fps: f64) -> f64 {
    let folded = k.min(len - k);
    folded as f64 * fps / len as f64
}

/// Which bins the ideal bandpass keeps. Both edges are inclusive.
pub fn passband_mask(len: usize, fps: f64, f_lo: f64, f_hi: f64) -> Vec<bool> {
    let slack = 1e-9 * fps.max(1.0);
    (0..len)
        .map(|k| {
            let f = bin_frequency(k, len, fps);
            f >= f_lo - slack && f <= f_hi + slack
        })
        .collect()
}

/// Zeroes every DFT bin outside `[f_lo, f_hi]` and returns the real result.
pub fn ideal_bandpass(series: &TimeSeries, f_lo: f64, f_hi: f64) -> Result<TimeSeries> {
    validate_band(f_lo, f_hi, series.fps)?;
    let mask = passband_mask(series.len, series.fps, f_lo, f_hi);
    let mut spectrum = dft_forward(series);
    for (k, keep) in mask.iter().enumerate() {
        if !keep {
            for d in 0..spectrum.dims {
                spectrum.bins[k * spectrum.dims + d] = Complex64::default();
            }
        }
    }
    let scale = series.data.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    real_inverse(&spectrum, series.fps, scale)
}

/// `series + alpha · ideal_bandpass(series)`.
pub fn amplify_band(series: &TimeSeries, spec: &BandpassSpec) -> Result<TimeSeries> {
    spec.validate(series.fps)?;
    if spec.alpha == 0.0 {
        return Ok(series.clone());
    }
    let band = ideal_bandpass(series, spec.f_lo, spec.f_hi)?;
    let data = series
        .data
        .iter()
        .zip(&band.data)
        .map(|(x, b)| x + spec.alpha * b)
        .collect();
    TimeSeries::new(series.len, series.dims, series.fps, data)
}

/// The ideal bandpass for a fixed clip length, materialized as a real T×T
/// matrix so it can be applied to many trajectories stored frame-major
/// (one contiguous block per time step) without gathering them.
///
/// Row `t` holds the filter's response weights for output sample `t`; the
/// matrix is obtained by filtering unit impulses through [`ideal_bandpass`].
#[derive(Debug, Clone)]
pub struct BandpassOperator {
    len: usize,
    matrix: Vec<f64>,
}

impl BandpassOperator {
    pub fn new(len: usize, fps: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        validate_band(f_lo, f_hi, fps)?;
        if len == 0 {
            return Err(Error::param("bandpass operator needs at least one sample"));
        }
        let mut matrix = vec![0.0; len * len];
        for s in 0..len {
            let mut impulse = vec![0.0; len];
            impulse[s] = 1.0;
            let response = ideal_bandpass(&TimeSeries::from_samples(impulse, fps)?, f_lo, f_hi)?;
            for t in 0..len {
                matrix[t * len + s] = response.data[t];
            }
        }
        Ok(Self { len, matrix })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn weight(&self, t: usize, s: usize) -> f64 {
        self.matrix[t * self.len + s]
    }

    /// Bandpasses `len` frames of equal length; returns one filtered block
    /// per frame.
    pub fn filter_frames(&self, frames: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        if frames.len() != self.len {
            return Err(Error::structure(format!(
                "operator built for {} frames, got {}",
                self.len,
                frames.len()
            )));
        }
        let width = frames[0].len();
        if frames.iter().any(|f| f.len() != width) {
            return Err(Error::structure("frames differ in size"));
        }
        let mut out = vec![vec![0.0; width]; self.len];
        for (t, row) in out.iter_mut().enumerate() {
            for (s, frame) in frames.iter().enumerate() {
                let w = self.weight(t, s);
                if w == 0.0 {
                    continue;
                }
                for (o, x) in row.iter_mut().zip(frame.iter()) {
                    *o += w * x;
                }
            }
        }
        Ok(out)
    }

    /// `frame_t + alpha · bandpass(frames)_t` for every frame.
    pub fn amplify_frames(&self, frames: &[&[f64]], alpha: f64) -> Result<Vec<Vec<f64>>> {
        if alpha == 0.0 {
            return Ok(frames.iter().map(|f| f.to_vec()).collect());
        }
        let mut band = self.filter_frames(frames)?;
        for (row, frame) in band.iter_mut().zip(frames) {
            for (b, x) in row.iter_mut().zip(frame.iter()) {
                *b = x + alpha * *b;
            }
        }
        Ok(band)
    }
}
