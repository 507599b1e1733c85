//! Projection MLP and the static / time-varying radiance fields built on it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::camera::{Camera, Vec3};
use super::embedding::{EmbedScratch, Embedding, ShiftMode, ShiftNetwork};
use super::mlp::Mlp;
use super::posenc::{posenc_into, PosEncConfig};
use super::render::{render_image, PointSample, RenderConfig, VolumeField};
use super::triplane::TriPlane;
use crate::error::{Error, Result};
use crate::image::Image;

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Maps an embedding (plus optional encoded view direction) to color and
/// density. Heads: sigmoid for rgb, softplus for σ.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMlp {
    net: Mlp,
    embed_dim: usize,
    dir_freqs: usize,
}

/// Per-thread buffers for [`ProjectionMlp`] evaluation.
#[derive(Debug, Default, Clone)]
pub struct MlpScratch {
    pub input: Vec<f64>,
    pub acts: Vec<f64>,
    pub d_input: Vec<f64>,
    pub back: Vec<f64>,
}

impl ProjectionMlp {
    pub fn sizes_for(embed_dim: usize, hidden: &[usize], dir_freqs: usize) -> Vec<usize> {
        let mut sizes = vec![embed_dim + 6 * dir_freqs];
        sizes.extend_from_slice(hidden);
        sizes.push(4);
        sizes
    }

    pub fn new(embed_dim: usize, hidden: &[usize], dir_freqs: usize, rng: &mut impl rand::Rng) -> Result<Self> {
        let net = Mlp::random(&Self::sizes_for(embed_dim, hidden, dir_freqs), rng)?;
        Ok(Self {
            net,
            embed_dim,
            dir_freqs,
        })
    }

    pub fn from_mlp(net: Mlp, embed_dim: usize, dir_freqs: usize) -> Result<Self> {
        if net.input_dim() != embed_dim + 6 * dir_freqs || net.output_dim() != 4 {
            return Err(Error::structure(format!(
                "projection MLP {:?} does not fit embedding width {embed_dim} with {dir_freqs} direction frequencies",
                net.sizes()
            )));
        }
        Ok(Self {
            net,
            embed_dim,
            dir_freqs,
        })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn dir_freqs(&self) -> usize {
        self.dir_freqs
    }

    pub fn params(&self) -> &[f64] {
        self.net.params()
    }

    /// FNV-1a over the parameter bits; equal iff bit-identical (modulo
    /// hash collisions).
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for v in self.net.params() {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }

    fn fill_input(&self, embedding: &[f64], dir: Vec3, input: &mut Vec<f64>) {
        input.clear();
        input.extend_from_slice(embedding);
        if self.dir_freqs > 0 {
            let start = input.len();
            input.resize(start + 6 * self.dir_freqs, 0.0);
            posenc_into(dir, &PosEncConfig::new(self.dir_freqs), None, &mut input[start..]);
        }
    }

    /// Evaluates the network; activations stay in `scratch` for a backward
    /// pass.
    pub fn forward(&self, embedding: &[f64], dir: Vec3, scratch: &mut MlpScratch) -> PointSample {
        self.fill_input(embedding, dir, &mut scratch.input);
        scratch.acts.resize(self.net.activation_len(), 0.0);
        let raw = self.net.forward(&scratch.input, &mut scratch.acts);
        PointSample {
            rgb: [sigmoid(raw[0]), sigmoid(raw[1]), sigmoid(raw[2])],
            sigma: softplus(raw[3]),
        }
    }

    /// Back-propagates color and density gradients of the sample last
    /// passed to [`ProjectionMlp::forward`] with this `scratch`. Writes the
    /// embedding gradient to `d_embed`; accumulates weight gradients into
    /// `grad` when given.
    pub fn backward(
        &self,
        sample: &PointSample,
        d_rgb: [f64; 3],
        d_sigma: f64,
        grad: Option<&mut [f64]>,
        d_embed: &mut [f64],
        scratch: &mut MlpScratch,
    ) {
        let raw_sigma = scratch.acts[scratch.acts.len() - 1];
        let d_raw = [
            d_rgb[0] * sample.rgb[0] * (1.0 - sample.rgb[0]),
            d_rgb[1] * sample.rgb[1] * (1.0 - sample.rgb[1]),
            d_rgb[2] * sample.rgb[2] * (1.0 - sample.rgb[2]),
            d_sigma * sigmoid(raw_sigma),
        ];
        scratch.d_input.resize(self.net.input_dim(), 0.0);
        self.net.backward(
            &scratch.input,
            &scratch.acts,
            &d_raw,
            grad,
            Some(&mut scratch.d_input),
            &mut scratch.back,
        );
        d_embed.copy_from_slice(&scratch.d_input[..self.embed_dim]);
    }
}

/// `(rgb, σ)` for one embedding, with dimension checking.
pub fn mlp_forward(mlp: &ProjectionMlp, embedding: &[f64], dir: Vec3) -> Result<([f64; 3], f64)> {
    if embedding.len() != mlp.embed_dim {
        return Err(Error::structure(format!(
            "embedding has {} values, the MLP expects {}",
            embedding.len(),
            mlp.embed_dim
        )));
    }
    let s = mlp.forward(embedding, dir, &mut MlpScratch::default());
    Ok((s.rgb, s.sigma))
}

/// Embedding variant and its size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum EmbeddingConfig {
    TriPlane {
        resolution: usize,
        channels: usize,
        #[serde(default = "default_init_scale")]
        init_scale: f64,
    },
    Shift {
        mode: ShiftMode,
        frequencies: usize,
        hidden: usize,
    },
}

fn default_init_scale() -> f64 {
    0.1
}

impl EmbeddingConfig {
    pub fn triplane(resolution: usize, channels: usize) -> Self {
        Self::TriPlane {
            resolution,
            channels,
            init_scale: default_init_scale(),
        }
    }

    pub fn shift(mode: ShiftMode) -> Self {
        Self::Shift {
            mode,
            frequencies: 6,
            hidden: 32,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::TriPlane { channels, .. } => 3 * channels,
            Self::Shift { frequencies, .. } => 6 * frequencies,
        }
    }

    pub fn build(&self, rng: &mut impl rand::Rng) -> Result<Embedding> {
        match *self {
            Self::TriPlane {
                resolution,
                channels,
                init_scale,
            } => Ok(Embedding::TriPlane(TriPlane::random(
                resolution, channels, init_scale, rng,
            )?)),
            Self::Shift {
                mode,
                frequencies,
                hidden,
            } => {
                if frequencies == 0 {
                    return Err(Error::param("positional encoding needs K >= 1"));
                }
                Ok(Embedding::Shift(ShiftNetwork::new(
                    mode,
                    PosEncConfig::new(frequencies),
                    hidden,
                    rng,
                )?))
            }
        }
    }

    /// Parses a flat parameter vector into an embedding of this layout.
    pub fn from_params(&self, params: Vec<f64>) -> Result<Embedding> {
        match *self {
            Self::TriPlane {
                resolution, channels, ..
            } => Ok(Embedding::TriPlane(TriPlane::from_vec(resolution, channels, params)?)),
            Self::Shift {
                mode,
                frequencies,
                hidden,
            } => {
                let cfg = PosEncConfig::new(frequencies);
                let net = Mlp::from_params(&ShiftNetwork::layer_sizes(mode, &cfg, hidden), params)?;
                Ok(Embedding::Shift(ShiftNetwork::from_mlp(mode, cfg, net)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub embedding: EmbeddingConfig,
    #[serde(default = "default_hidden")]
    pub mlp_hidden: Vec<usize>,
    /// Frequencies of the optional view-direction encoding; 0 disables it.
    #[serde(default)]
    pub dir_freqs: usize,
    #[serde(default)]
    pub render: RenderConfig,
}

fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}

impl FieldConfig {
    pub fn new(embedding: EmbeddingConfig, render: RenderConfig) -> Self {
        Self {
            embedding,
            mlp_hidden: default_hidden(),
            dir_freqs: 0,
            render,
        }
    }
}

/// Borrowed view of one timestep: embedding plus shared MLP.
#[derive(Debug, Clone, Copy)]
pub struct NeuralField<'a> {
    pub embedding: &'a Embedding,
    pub mlp: &'a ProjectionMlp,
}

impl VolumeField for NeuralField<'_> {
    fn eval(&self, points: &[Vec3], dir: Vec3, out: &mut [PointSample]) {
        let mut es = EmbedScratch::default();
        let mut ms = MlpScratch::default();
        let mut e = vec![0.0; self.embedding.dim()];
        for (p, o) in points.iter().zip(out.iter_mut()) {
            self.embedding.embed_into(*p, &mut e, &mut es);
            *o = self.mlp.forward(&e, dir, &mut ms);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadianceField {
    pub config: FieldConfig,
    pub embedding: Embedding,
    pub mlp: ProjectionMlp,
    /// PSNR on the training views after fitting, when known.
    pub final_psnr: Option<f64>,
}

impl RadianceField {
    pub fn new(config: FieldConfig, seed: u64) -> Result<Self> {
        config.render.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = config.embedding.build(&mut rng)?;
        let mlp = ProjectionMlp::new(embedding.dim(), &config.mlp_hidden, config.dir_freqs, &mut rng)?;
        Ok(Self {
            config,
            embedding,
            mlp,
            final_psnr: None,
        })
    }

    pub fn view(&self) -> NeuralField<'_> {
        NeuralField {
            embedding: &self.embedding,
            mlp: &self.mlp,
        }
    }

    pub fn render(&self) -> &RenderConfig {
        &self.config.render
    }

    pub fn render_image(&self, camera: &Camera) -> Result<Image> {
        render_image(&self.view(), camera, &self.config.render)
    }
}

/// Shared MLP with one embedding per timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVaryingField {
    pub config: FieldConfig,
    pub mlp: ProjectionMlp,
    pub embeddings: Vec<Embedding>,
    pub fps: f64,
}

impl TimeVaryingField {
    /// A single-timestep field holding the static embedding as `E_0`.
    pub fn from_static(field: &RadianceField, fps: f64) -> Self {
        Self {
            config: field.config.clone(),
            mlp: field.mlp.clone(),
            embeddings: vec![field.embedding.clone()],
            fps,
        }
    }

    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .embeddings
            .first()
            .ok_or_else(|| Error::structure("time-varying field has no timesteps"))?;
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::param(format!("fps must be positive, got {}", self.fps)));
        }
        if self.embeddings.iter().any(|e| !e.same_layout(first)) {
            return Err(Error::structure("timesteps hold embeddings of different layouts"));
        }
        if first.dim() != self.mlp.embed_dim() {
            return Err(Error::structure("embedding width does not match the MLP input"));
        }
        Ok(())
    }

    pub fn at(&self, t: usize) -> Result<NeuralField<'_>> {
        let embedding = self
            .embeddings
            .get(t)
            .ok_or_else(|| Error::param(format!("timestep {t} out of range 0..{}", self.len())))?;
        Ok(NeuralField {
            embedding,
            mlp: &self.mlp,
        })
    }

    pub fn static_field(&self, t: usize) -> Result<RadianceField> {
        let view = self.at(t)?;
        Ok(RadianceField {
            config: self.config.clone(),
            embedding: view.embedding.clone(),
            mlp: self.mlp.clone(),
            final_psnr: None,
        })
    }

    pub fn render_image(&self, camera: &Camera, t: usize) -> Result<Image> {
        render_image(&self.at(t)?, camera, &self.config.render)
    }
}
