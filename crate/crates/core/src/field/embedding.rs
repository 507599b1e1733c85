//! Point embeddings: positional encoding driven by a per-timestep shift
//! network, or a learnable tri-plane.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::camera::Vec3;
use super::mlp::Mlp;
use super::posenc::{posenc_into, PosEncConfig};
use super::triplane::TriPlane;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftMode {
    /// `E(p) = posenc(p + g(p))`, `g: R³ → R³`.
    PositionShift,
    /// `E(p) = posenc(p; φ = g(p))`, `g: R³ → R^{3K}`.
    EncodingShift,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftNetwork {
    mode: ShiftMode,
    posenc: PosEncConfig,
    net: Mlp,
}

impl ShiftNetwork {
    pub fn output_dim_for(mode: ShiftMode, posenc: &PosEncConfig) -> usize {
        match mode {
            ShiftMode::PositionShift => 3,
            ShiftMode::EncodingShift => posenc.phase_dim(),
        }
    }

    pub fn layer_sizes(mode: ShiftMode, posenc: &PosEncConfig, hidden: usize) -> [usize; 4] {
        [3, hidden, hidden, Self::output_dim_for(mode, posenc)]
    }

    /// Random hidden layers, zero output layer: `g ≡ 0`.
    pub fn new(mode: ShiftMode, posenc: PosEncConfig, hidden: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut net = Mlp::random(&Self::layer_sizes(mode, &posenc, hidden), rng)?;
        net.zero_output_layer();
        Ok(Self { mode, posenc, net })
    }

    pub fn from_mlp(mode: ShiftMode, posenc: PosEncConfig, net: Mlp) -> Result<Self> {
        let want = Self::output_dim_for(mode, &posenc);
        if net.input_dim() != 3 || net.output_dim() != want {
            return Err(Error::structure(format!(
                "shift network for {mode:?} must map 3 -> {want}, got {} -> {}",
                net.input_dim(),
                net.output_dim()
            )));
        }
        if net.params().iter().any(|v| !v.is_finite()) {
            return Err(Error::input("shift network has non-finite weights"));
        }
        Ok(Self { mode, posenc, net })
    }

    pub fn mode(&self) -> ShiftMode {
        self.mode
    }

    pub fn posenc(&self) -> &PosEncConfig {
        &self.posenc
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn output_dim(&self) -> usize {
        self.net.output_dim()
    }

    /// `g(p)`.
    pub fn eval(&self, p: Vec3) -> Vec<f64> {
        let mut acts = vec![0.0; self.net.activation_len()];
        self.net.forward(&p, &mut acts).to_vec()
    }

    /// Encodes `p` given an explicit shift output `g` (used both for the
    /// network's own output and for magnified trajectories).
    pub fn encode_with(&self, p: Vec3, g: &[f64], out: &mut [f64]) {
        encode_with_shift(self.mode, &self.posenc, p, g, out);
    }
}

/// Applies a shift output to a point's positional encoding.
pub fn encode_with_shift(mode: ShiftMode, cfg: &PosEncConfig, p: Vec3, g: &[f64], out: &mut [f64]) {
    match mode {
        ShiftMode::PositionShift => posenc_into([p[0] + g[0], p[1] + g[1], p[2] + g[2]], cfg, None, out),
        ShiftMode::EncodingShift => posenc_into(p, cfg, Some(g), out),
    }
}

/// The embedding of one timestep.
#[derive(Debug, Clone, PartialEq)]
pub enum Embedding {
    Shift(ShiftNetwork),
    TriPlane(TriPlane),
}

/// Reusable buffers for embedding evaluation.
#[derive(Debug, Default, Clone)]
pub struct EmbedScratch {
    acts: Vec<f64>,
    shift: Vec<f64>,
    d_shift: Vec<f64>,
    mlp: Vec<f64>,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        match self {
            Embedding::Shift(s) => s.posenc.dim(),
            Embedding::TriPlane(tp) => tp.dim(),
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            Embedding::Shift(s) => s.net.params(),
            Embedding::TriPlane(tp) => tp.data(),
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            Embedding::Shift(s) => s.net.params_mut(),
            Embedding::TriPlane(tp) => tp.data_mut(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.params().len()
    }

    pub fn as_triplane(&self) -> Option<&TriPlane> {
        match self {
            Embedding::TriPlane(tp) => Some(tp),
            Embedding::Shift(_) => None,
        }
    }

    pub fn as_shift(&self) -> Option<&ShiftNetwork> {
        match self {
            Embedding::Shift(s) => Some(s),
            Embedding::TriPlane(_) => None,
        }
    }

    /// True when both embeddings have the same variant and parameter shape.
    pub fn same_layout(&self, other: &Embedding) -> bool {
        match (self, other) {
            (Embedding::Shift(a), Embedding::Shift(b)) => {
                a.mode == b.mode && a.posenc == b.posenc && a.net.sizes() == b.net.sizes()
            }
            (Embedding::TriPlane(a), Embedding::TriPlane(b)) => {
                a.resolution() == b.resolution() && a.channels() == b.channels()
            }
            _ => false,
        }
    }

    pub fn embed_into(&self, p: Vec3, out: &mut [f64], scratch: &mut EmbedScratch) {
        match self {
            Embedding::TriPlane(tp) => tp.embed_into(p, out),
            Embedding::Shift(s) => {
                scratch.acts.resize(s.net.activation_len(), 0.0);
                let g = s.net.forward(&p, &mut scratch.acts);
                encode_with_shift(s.mode, &s.posenc, p, g, out);
            }
        }
    }

    pub fn embed(&self, p: Vec3) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.embed_into(p, &mut out, &mut EmbedScratch::default());
        out
    }

    /// Accumulates `∂L/∂params` given `∂L/∂E(p)`. `embedding` is the value
    /// returned by the forward pass at `p`.
    pub fn backward(&self, p: Vec3, embedding: &[f64], d_embed: &[f64], grad: &mut [f64], scratch: &mut EmbedScratch) {
        match self {
            Embedding::TriPlane(tp) => tp.accumulate_grad(p, d_embed, grad),
            Embedding::Shift(s) => {
                let k_count = s.posenc.frequencies;
                scratch.acts.resize(s.net.activation_len(), 0.0);
                s.net.forward(&p, &mut scratch.acts);
                scratch.d_shift.clear();
                scratch.d_shift.resize(s.output_dim(), 0.0);
                for slot in 0..3 * k_count {
                    // d/du of (sin u, cos u) is (cos u, −sin u).
                    let du = d_embed[2 * slot] * embedding[2 * slot + 1] - d_embed[2 * slot + 1] * embedding[2 * slot];
                    match s.mode {
                        ShiftMode::EncodingShift => scratch.d_shift[slot] = du,
                        ShiftMode::PositionShift => {
                            let (a, k) = (slot / k_count, slot % k_count);
                            scratch.d_shift[a] += s.posenc.omega(k) * du;
                        }
                    }
                }
                s.net
                    .backward(&p, &scratch.acts, &scratch.d_shift, Some(grad), None, &mut scratch.mlp);
            }
        }
    }

    /// Raw shift output `g_t(p)`; `None` for tri-planes.
    pub fn shift_output<'s>(&self, p: Vec3, scratch: &'s mut EmbedScratch) -> Option<&'s [f64]> {
        match self {
            Embedding::TriPlane(_) => None,
            Embedding::Shift(s) => {
                scratch.acts.resize(s.net.activation_len(), 0.0);
                let g = s.net.forward(&p, &mut scratch.acts);
                scratch.shift.clear();
                scratch.shift.extend_from_slice(g);
                Some(&scratch.shift)
            }
        }
    }
}

/// Embedding of `p` through a shift network.
pub fn shift_embed(p: Vec3, shiftnet: &ShiftNetwork) -> Vec<f64> {
    let g = shiftnet.eval(p);
    let mut out = vec![0.0; shiftnet.posenc.dim()];
    shiftnet.encode_with(p, &g, &mut out);
    out
}
