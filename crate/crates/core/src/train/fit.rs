//! Static training and per-timestep embedding finetuning.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::grad::{loss_and_grad, RayBatch, Trainable};
use crate::error::{Error, Result};
use crate::field::{Camera, Embedding, FieldConfig, ProjectionMlp, RadianceField, Ray, RenderConfig, TimeVaryingField};
use crate::image::Image;

/// One posed training image.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub camera: Camera,
    pub image: Image,
}

impl View {
    pub fn new(camera: Camera, image: Image) -> Result<Self> {
        camera.validate()?;
        if image.shape() != (camera.height, camera.width, 3) {
            return Err(Error::input(format!(
                "view image is {:?}, camera expects {}x{}x3",
                image.shape(),
                camera.height,
                camera.width
            )));
        }
        if !image.is_finite() {
            return Err(Error::input("view image contains non-finite values"));
        }
        Ok(Self { camera, image })
    }
}

/// Where finetuning of `E_t` starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarmStart {
    /// From `E_{t−1}`.
    #[default]
    Previous,
    /// From the static embedding `E_0`.
    First,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    /// Rays per step.
    pub batch: usize,
    pub lr_embedding: f64,
    pub lr_mlp: f64,
    pub seed: u64,
    /// Stratified sample jitter along rays.
    pub jitter: bool,
    /// Weight of the tri-plane total-variation penalty (0 disables it).
    pub tv_weight: f64,
    /// Stop as soon as the batch PSNR reaches this value.
    pub target_psnr: Option<f64>,
    pub warm_start: WarmStart,
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 3000,
            batch: 512,
            lr_embedding: 1e-2,
            lr_mlp: 5e-4,
            seed: 0,
            jitter: true,
            tv_weight: 0.0,
            target_psnr: None,
            warm_start: WarmStart::Previous,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    /// Default finetuning schedule: 1,000 steps.
    pub fn finetune() -> Self {
        Self {
            steps: 1000,
            ..Self::default()
        }
    }

    /// Long schedules: 30,000 static steps.
    pub fn long() -> Self {
        Self {
            steps: 30_000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.batch == 0 {
            return Err(Error::param("steps and batch must be at least 1"));
        }
        if !(self.lr_embedding > 0.0 && self.lr_mlp > 0.0) {
            return Err(Error::param("learning rates must be positive"));
        }
        if self.tv_weight < 0.0 || !self.tv_weight.is_finite() {
            return Err(Error::param("tv_weight must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: usize,
    pub loss: f64,
    pub psnr: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<LogRecord>,
    /// Steps actually taken.
    pub steps: usize,
}

impl TrainLog {
    pub fn last_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.loss)
    }

    /// Writes one JSON object per line.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for r in &self.records {
            serde_json::to_writer(&mut f, r)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
        Ok(())
    }
}

/// PSNR of a summed-over-channels squared color error.
pub fn psnr_from_loss(loss: f64) -> f64 {
    let mse = loss / 3.0;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

struct RaySet {
    rays: Vec<Ray>,
    targets: Vec<[f64; 3]>,
}

impl RaySet {
    fn from_views(views: &[View]) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::input("no training views"));
        }
        let mut rays = Vec::new();
        let mut targets = Vec::new();
        for view in views {
            let cam = &view.camera;
            for v in 0..cam.height {
                for u in 0..cam.width {
                    rays.push(cam.ray(u, v));
                    let img = &view.image;
                    targets.push([img.get(v, u, 0), img.get(v, u, 1), img.get(v, u, 2)]);
                }
            }
        }
        Ok(Self { rays, targets })
    }
}

enum MlpAccess<'a> {
    Frozen(&'a ProjectionMlp),
    Trainable(&'a mut ProjectionMlp),
}

impl MlpAccess<'_> {
    fn get(&self) -> &ProjectionMlp {
        match self {
            MlpAccess::Frozen(m) => m,
            MlpAccess::Trainable(m) => m,
        }
    }
}

/// Squared-difference total variation over tri-plane neighbors, averaged
/// over neighbor pairs. Returns the penalty and adds its gradient.
fn tv_penalty(embedding: &Embedding, weight: f64, grad: &mut [f64]) -> f64 {
    let Some(tp) = embedding.as_triplane() else {
        return 0.0;
    };
    let (r, c) = (tp.resolution(), tp.channels());
    let pairs = (3 * 2 * r * (r - 1) * c) as f64;
    let data = tp.data();
    let mut total = 0.0;
    for plane in 0..3 {
        for v in 0..r {
            for u in 0..r {
                for (dv, du) in [(0, 1), (1, 0)] {
                    if v + dv >= r || u + du >= r {
                        continue;
                    }
                    for ch in 0..c {
                        let a = tp.index(plane, v, u, ch);
                        let b = tp.index(plane, v + dv, u + du, ch);
                        let d = data[b] - data[a];
                        total += d * d;
                        let g = 2.0 * weight * d / pairs;
                        grad[b] += g;
                        grad[a] -= g;
                    }
                }
            }
        }
    }
    weight * total / pairs
}

fn fit(
    mut mlp: MlpAccess<'_>,
    embedding: &mut Embedding,
    train_embedding: bool,
    data: &RaySet,
    render: &RenderConfig,
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    cfg.validate()?;
    render.validate()?;
    let trainable = Trainable {
        mlp: matches!(mlp, MlpAccess::Trainable(_)),
        embedding: train_embedding,
    };
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mlp_state = AdamState::new(mlp.get().params().len());
    let mut emb_state = AdamState::new(embedding.num_params());
    let mut log = TrainLog::default();
    let n = render.samples;
    let mut rays = Vec::with_capacity(cfg.batch);
    let mut targets = Vec::with_capacity(cfg.batch);
    let mut jitter = Vec::with_capacity(cfg.batch * n);
    for step in 0..cfg.steps {
        rays.clear();
        targets.clear();
        for _ in 0..cfg.batch {
            let i = rng.random_range(0..data.rays.len());
            rays.push(data.rays[i]);
            targets.push(data.targets[i]);
        }
        jitter.clear();
        if cfg.jitter {
            jitter.extend((0..cfg.batch * n).map(|_| rng.random::<f64>()));
        }
        let batch = RayBatch {
            rays: &rays,
            targets: &targets,
            jitter: cfg.jitter.then_some(jitter.as_slice()),
        };
        let (mut loss, mut grad) =
            loss_and_grad(mlp.get(), embedding, render, batch, trainable).map_err(|e| match e {
                Error::Diverged { loss, .. } => Error::Diverged { step, loss },
                other => other,
            })?;
        let psnr = psnr_from_loss(loss);
        if train_embedding && cfg.tv_weight > 0.0 {
            loss += tv_penalty(embedding, cfg.tv_weight, &mut grad.embedding);
        }
        if !grad.is_finite() {
            return Err(Error::Diverged { step, loss: f64::NAN });
        }
        let reached = cfg.target_psnr.is_some_and(|t| psnr >= t);
        if step % cfg.log_every.max(1) == 0 || step + 1 == cfg.steps || reached {
            log.records.push(LogRecord {
                step,
                loss,
                psnr,
                wall_time: start.elapsed().as_secs_f64(),
            });
        }
        if reached {
            break;
        }
        if let MlpAccess::Trainable(m) = &mut mlp {
            adam_step(m.net_mut().params_mut(), &grad.mlp, &mut mlp_state, cfg.lr_mlp);
        }
        if train_embedding {
            adam_step(
                embedding.params_mut(),
                &grad.embedding,
                &mut emb_state,
                cfg.lr_embedding,
            );
        }
        log.steps = step + 1;
    }
    Ok(log)
}

/// Mean squared color error (per channel) of eval-mode renders against the
/// views, as PSNR.
pub fn evaluate_psnr(mlp: &ProjectionMlp, embedding: &Embedding, render: &RenderConfig, views: &[View]) -> Result<f64> {
    let field = crate::field::NeuralField { embedding, mlp };
    let mut sq = 0.0;
    let mut count = 0usize;
    for view in views {
        let img = crate::field::render_image(&field, &view.camera, render)?;
        sq += img
            .data()
            .iter()
            .zip(view.image.data())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>();
        count += img.data().len();
    }
    Ok(psnr_from_loss(3.0 * sq / count as f64))
}

/// Fits a static field (MLP, plus texels for tri-planes) to posed views.
/// For shift-network embeddings only the MLP trains and `g ≡ 0`.
pub fn train_static(views: &[View], field: FieldConfig, cfg: &TrainConfig) -> Result<(RadianceField, TrainLog)> {
    let data = RaySet::from_views(views)?;
    let mut out = RadianceField::new(field, cfg.seed)?;
    let train_embedding = matches!(out.embedding, Embedding::TriPlane(_));
    let render = out.config.render;
    let log = fit(
        MlpAccess::Trainable(&mut out.mlp),
        &mut out.embedding,
        train_embedding,
        &data,
        &render,
        cfg,
    )?;
    out.final_psnr = Some(evaluate_psnr(&out.mlp, &out.embedding, &render, views)?);
    Ok((out, log))
}

/// Optimizes one timestep's embedding against its views, starting from
/// `init`. The MLP is only borrowed, so it cannot change.
pub fn finetune_timestep(
    mlp: &ProjectionMlp,
    init: &Embedding,
    views: &[View],
    render: &RenderConfig,
    cfg: &TrainConfig,
) -> Result<(Embedding, TrainLog)> {
    if init.dim() != mlp.embed_dim() {
        return Err(Error::structure("embedding width does not match the MLP input"));
    }
    let data = RaySet::from_views(views)?;
    let mut embedding = init.clone();
    let log = fit(MlpAccess::Frozen(mlp), &mut embedding, true, &data, render, cfg)?;
    Ok((embedding, log))
}

/// Builds a time-varying field: `E_0` is the static embedding, each later
/// `E_t` is finetuned on `views_per_t[t]`. Every timestep reuses the same
/// seed, so all timesteps see the same ray batches.
pub fn finetune_sequence(
    field: &RadianceField,
    views_per_t: &[Vec<View>],
    fps: f64,
    cfg: &TrainConfig,
) -> Result<(TimeVaryingField, Vec<TrainLog>)> {
    let mut tvf = TimeVaryingField::from_static(field, fps);
    let mut logs = Vec::new();
    for views in views_per_t.iter().skip(1) {
        let init = match cfg.warm_start {
            WarmStart::Previous => tvf.embeddings.last().unwrap(),
            WarmStart::First => &tvf.embeddings[0],
        };
        let (e, log) = finetune_timestep(&field.mlp, init, views, &field.config.render, cfg)?;
        tvf.embeddings.push(e);
        logs.push(log);
    }
    tvf.validate()?;
    Ok((tvf, logs))
}
