//! Loss and analytic gradients through quadrature, MLP and embedding.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{
    composite_weights, EmbedScratch, Embedding, MlpScratch, PointSample, ProjectionMlp, Ray, RenderConfig,
};

/// Rays per work item. Fixed so the reduction order never depends on the
/// number of threads.
const CHUNK: usize = 32;

/// Gradient accumulators aligned with the MLP and embedding parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBuffer {
    pub mlp: Vec<f64>,
    pub embedding: Vec<f64>,
}

impl GradientBuffer {
    pub fn zeros(mlp: usize, embedding: usize) -> Self {
        Self {
            mlp: vec![0.0; mlp],
            embedding: vec![0.0; embedding],
        }
    }

    pub fn for_field(mlp: &ProjectionMlp, embedding: &Embedding) -> Self {
        Self::zeros(mlp.params().len(), embedding.num_params())
    }

    pub fn zero(&mut self) {
        self.mlp.fill(0.0);
        self.embedding.fill(0.0);
    }

    fn add(&mut self, other: &GradientBuffer) {
        for (a, b) in self.mlp.iter_mut().zip(&other.mlp) {
            *a += b;
        }
        for (a, b) in self.embedding.iter_mut().zip(&other.embedding) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.mlp.iter().chain(&self.embedding).all(|v| v.is_finite())
    }
}

/// Which parameter groups receive gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trainable {
    pub mlp: bool,
    pub embedding: bool,
}

impl Trainable {
    pub const ALL: Self = Self {
        mlp: true,
        embedding: true,
    };
}

/// A batch of rays with target colors and optional stratified jitter
/// (`samples` values in `[0, 1)` per ray).
#[derive(Debug, Clone, Copy)]
pub struct RayBatch<'a> {
    pub rays: &'a [Ray],
    pub targets: &'a [[f64; 3]],
    pub jitter: Option<&'a [f64]>,
}

struct RayWork {
    points: Vec<[f64; 3]>,
    embeds: Vec<f64>,
    scratch: Vec<MlpScratch>,
    samples: Vec<PointSample>,
    d_embed: Vec<f64>,
    embed_scratch: EmbedScratch,
}

impl RayWork {
    fn new(n: usize, dim: usize) -> Self {
        Self {
            points: vec![[0.0; 3]; n],
            embeds: vec![0.0; n * dim],
            scratch: vec![MlpScratch::default(); n],
            samples: vec![PointSample::default(); n],
            d_embed: vec![0.0; dim],
            embed_scratch: EmbedScratch::default(),
        }
    }
}

/// Renders one ray, records its squared error and, when `grad` is given,
/// accumulates `scale · ∂‖c − y‖²/∂θ`.
#[allow(clippy::too_many_arguments)]
fn ray_loss(
    mlp: &ProjectionMlp,
    embedding: &Embedding,
    cfg: &RenderConfig,
    ray: &Ray,
    target: [f64; 3],
    jitter: Option<&[f64]>,
    scale: f64,
    trainable: Trainable,
    grad: &mut GradientBuffer,
    work: &mut RayWork,
) -> f64 {
    let n = cfg.samples;
    let dim = embedding.dim();
    let delta = cfg.delta();
    for (i, t) in cfg.depths(jitter).into_iter().enumerate() {
        let p = ray.at(t);
        work.points[i] = p;
        let e = &mut work.embeds[i * dim..(i + 1) * dim];
        embedding.embed_into(p, e, &mut work.embed_scratch);
        work.samples[i] = mlp.forward(e, ray.dir, &mut work.scratch[i]);
    }
    let weights = composite_weights(&work.samples, delta);
    let bg = cfg.background;
    let mut color = bg;
    for (s, w) in work.samples.iter().zip(&weights) {
        for c in 0..3 {
            color[c] += w * (s.rgb[c] - bg[c]);
        }
    }
    let resid = [color[0] - target[0], color[1] - target[1], color[2] - target[2]];
    let loss = resid.iter().map(|r| r * r).sum::<f64>();
    if !(trainable.mlp || trainable.embedding) {
        return loss;
    }

    let d_color = [2.0 * scale * resid[0], 2.0 * scale * resid[1], 2.0 * scale * resid[2]];
    // s_i = ∂L/∂c · (rgb_i − bg); suffix sums give Σ_{i>k} w_i s_i.
    let s: Vec<f64> = work
        .samples
        .iter()
        .map(|smp| (0..3).map(|c| d_color[c] * (smp.rgb[c] - bg[c])).sum())
        .collect();
    let mut suffix = 0.0;
    let mut depth_after: f64 = work.samples.iter().map(|smp| smp.sigma * delta).sum();
    for k in (0..n).rev() {
        let t_next = (-depth_after).exp();
        let d_sigma = delta * (t_next * s[k] - suffix);
        suffix += weights[k] * s[k];
        depth_after -= work.samples[k].sigma * delta;
        let d_rgb = [
            d_color[0] * weights[k],
            d_color[1] * weights[k],
            d_color[2] * weights[k],
        ];
        let mlp_grad = if trainable.mlp {
            Some(grad.mlp.as_mut_slice())
        } else {
            None
        };
        mlp.backward(
            &work.samples[k],
            d_rgb,
            d_sigma,
            mlp_grad,
            &mut work.d_embed,
            &mut work.scratch[k],
        );
        if trainable.embedding {
            let e = &work.embeds[k * dim..(k + 1) * dim];
            embedding.backward(
                work.points[k],
                e,
                &work.d_embed,
                &mut grad.embedding,
                &mut work.embed_scratch,
            );
        }
    }
    loss
}

/// Mean over rays of `‖rendered − target‖²` and its gradient.
pub fn loss_and_grad(
    mlp: &ProjectionMlp,
    embedding: &Embedding,
    cfg: &RenderConfig,
    batch: RayBatch<'_>,
    trainable: Trainable,
) -> Result<(f64, GradientBuffer)> {
    let b = batch.rays.len();
    if b == 0 || batch.targets.len() != b {
        return Err(Error::param("rays and targets must be non-empty and aligned"));
    }
    let n = cfg.samples;
    if let Some(j) = batch.jitter {
        if j.len() != b * n {
            return Err(Error::param("jitter must hold one value per ray sample"));
        }
    }
    let scale = 1.0 / b as f64;
    let (np_mlp, np_emb) = (
        if trainable.mlp { mlp.params().len() } else { 0 },
        if trainable.embedding { embedding.num_params() } else { 0 },
    );
    let partials: Vec<(f64, GradientBuffer)> = (0..b.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut grad = GradientBuffer::zeros(np_mlp, np_emb);
            let mut work = RayWork::new(n, embedding.dim());
            let mut loss = 0.0;
            for r in chunk * CHUNK..((chunk + 1) * CHUNK).min(b) {
                let jitter = batch.jitter.map(|j| &j[r * n..(r + 1) * n]);
                loss += ray_loss(
                    mlp,
                    embedding,
                    cfg,
                    &batch.rays[r],
                    batch.targets[r],
                    jitter,
                    scale,
                    trainable,
                    &mut grad,
                    &mut work,
                );
            }
            (loss, grad)
        })
        .collect();
    let mut total = GradientBuffer::zeros(mlp.params().len(), embedding.num_params());
    let mut loss = 0.0;
    for (l, g) in &partials {
        loss += l;
        if trainable.mlp {
            for (a, v) in total.mlp.iter_mut().zip(&g.mlp) {
                *a += v;
            }
        }
        if trainable.embedding {
            for (a, v) in total.embedding.iter_mut().zip(&g.embedding) {
                *a += v;
            }
        }
    }
    let loss = loss * scale;
    if !loss.is_finite() {
        return Err(Error::Diverged { step: 0, loss });
    }
    Ok((loss, total))
}

/// Loss only.
pub fn loss(mlp: &ProjectionMlp, embedding: &Embedding, cfg: &RenderConfig, batch: RayBatch<'_>) -> Result<f64> {
    let none = Trainable {
        mlp: false,
        embedding: false,
    };
    loss_and_grad(mlp, embedding, cfg, batch, none).map(|(l, _)| l)
}

/// Results of a finite-difference check for one parameter class.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GradCheckClass {
    pub name: String,
    pub checked: usize,
    pub passed: usize,
    pub max_rel_error: f64,
}

/// `|a − n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares analytic gradients with central differences on up to
/// `per_class` parameters of each class (MLP weights, MLP biases,
/// embedding). Parameters are chosen evenly spaced so the check is
/// deterministic.
pub fn gradient_check(
    mlp: &ProjectionMlp,
    embedding: &Embedding,
    cfg: &RenderConfig,
    batch: RayBatch<'_>,
    per_class: usize,
    h: f64,
    tol: f64,
) -> Result<Vec<GradCheckClass>> {
    let (_, grad) = loss_and_grad(mlp, embedding, cfg, batch, Trainable::ALL)?;
    let mut weight_idx = Vec::new();
    let mut bias_idx = Vec::new();
    let mut offset = 0;
    for l in 0..mlp.net().num_layers() {
        let (fi, fo, _) = mlp.net().layer_weights(l);
        weight_idx.extend(offset..offset + fi * fo);
        bias_idx.extend(offset + fi * fo..offset + fi * fo + fo);
        offset += fi * fo + fo;
    }
    let emb_name = match embedding {
        Embedding::TriPlane(_) => "triplane texels",
        Embedding::Shift(_) => "shift network",
    };
    let classes: Vec<(&str, bool, Vec<usize>)> = vec![
        ("mlp weights", true, weight_idx),
        ("mlp biases", true, bias_idx),
        (emb_name, false, (0..embedding.num_params()).collect()),
    ];
    let mut out = Vec::new();
    for (name, is_mlp, all) in classes {
        let pick: Vec<usize> = if all.len() <= per_class {
            all
        } else {
            (0..per_class).map(|i| all[i * all.len() / per_class]).collect()
        };
        let results: Vec<f64> = pick
            .par_iter()
            .map(|&i| {
                let eval = |delta: f64| {
                    let mut m = mlp.clone();
                    let mut e = embedding.clone();
                    if is_mlp {
                        m.net_mut().params_mut()[i] += delta;
                    } else {
                        e.params_mut()[i] += delta;
                    }
                    loss(&m, &e, cfg, batch)
                };
                let numeric = (eval(h)? - eval(-h)?) / (2.0 * h);
                let analytic = if is_mlp { grad.mlp[i] } else { grad.embedding[i] };
                Ok(relative_error(analytic, numeric, 1e-6))
            })
            .collect::<Result<_>>()?;
        out.push(GradCheckClass {
            name: name.to_string(),
            checked: results.len(),
            passed: results.iter().filter(|r| **r < tol).count(),
            max_rel_error: results.iter().cloned().fold(0.0, f64::max),
        });
    }
    Ok(out)
}

impl GradientBuffer {
    /// Sum of another buffer into this one.
    pub fn accumulate(&mut self, other: &GradientBuffer) {
        self.add(other);
    }
}
