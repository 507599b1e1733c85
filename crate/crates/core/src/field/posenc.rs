//! Positional encoding with optional per-frequency phase offsets.
//!
//! Layout: for axis `a` and frequency index `k` (0-based), channels
//! `2·(a·K + k)` and `2·(a·K + k) + 1` hold `sin(ω_k·p_a + φ_{a,k})` and
//! `cos(ω_k·p_a + φ_{a,k})`, with `ω_k = 2^k·π`. Phases use the same
//! `a·K + k` indexing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosEncConfig {
    pub frequencies: usize,
}

impl Default for PosEncConfig {
    fn default() -> Self {
        Self { frequencies: 6 }
    }
}

impl PosEncConfig {
    pub fn new(frequencies: usize) -> Self {
        assert!(frequencies >= 1, "positional encoding needs at least one frequency");
        Self { frequencies }
    }

    #[inline]
    pub fn omega(&self, k: usize) -> f64 {
        (1u64 << k) as f64 * PI
    }

    /// Number of phase slots (3K).
    pub fn phase_dim(&self) -> usize {
        3 * self.frequencies
    }

    /// Encoding width (6K).
    pub fn dim(&self) -> usize {
        6 * self.frequencies
    }
}

/// Encodes `p` into `out` (length 6K). `phases`, when given, has length 3K.
pub fn posenc_into(p: [f64; 3], cfg: &PosEncConfig, phases: Option<&[f64]>, out: &mut [f64]) {
    let k_count = cfg.frequencies;
    debug_assert_eq!(out.len(), cfg.dim());
    for (a, pa) in p.iter().enumerate() {
        for k in 0..k_count {
            let slot = a * k_count + k;
            let phase = phases.map_or(0.0, |ph| ph[slot]);
            let (s, c) = (cfg.omega(k) * pa + phase).sin_cos();
            out[2 * slot] = s;
            out[2 * slot + 1] = c;
        }
    }
}

pub fn posenc(p: [f64; 3], cfg: &PosEncConfig, phases: Option<&[f64]>) -> Vec<f64> {
    let mut out = vec![0.0; cfg.dim()];
    posenc_into(p, cfg, phases, &mut out);
    out
}

/// Phases equivalent to displacing the point by `shift`: `φ_{a,k} = ω_k·Δp_a`.
pub fn phases_for_shift(shift: [f64; 3], cfg: &PosEncConfig) -> Vec<f64> {
    let mut out = vec![0.0; cfg.phase_dim()];
    for (a, d) in shift.iter().enumerate() {
        for k in 0..cfg.frequencies {
            out[a * cfg.frequencies + k] = cfg.omega(k) * d;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn origin_encodes_to_sin_zero_cos_one() {
        let e = posenc([0.0; 3], &PosEncConfig::default(), None);
        for pair in e.chunks(2) {
            assert_eq!(pair, &[0.0, 1.0]);
        }
    }

    #[test]
    fn quarter_turn_phase_turns_sin_into_cos() {
        let cfg = PosEncConfig::new(3);
        let p = [0.3, -0.2, 0.7];
        let mut phases = vec![0.0; 9];
        phases[4] = FRAC_PI_2;
        let shifted = posenc(p, &cfg, Some(&phases));
        let plain = posenc(p, &cfg, None);
        assert!((shifted[8] - plain[9]).abs() < 1e-12);
    }

    #[test]
    fn position_shift_equals_phase_shift() {
        let cfg = PosEncConfig::default();
        let p = [0.12, -0.4, 0.33];
        let d = [0.05, -0.02, 0.01];
        let moved = posenc([p[0] + d[0], p[1] + d[1], p[2] + d[2]], &cfg, None);
        let phased = posenc(p, &cfg, Some(&phases_for_shift(d, &cfg)));
        for (a, b) in moved.iter().zip(&phased) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
