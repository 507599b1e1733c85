//! `eulermag` command-line front end.
//!
//! Exit codes: 0 success, 1 failed check (`grad-check`), 2 parameter
//! error, 3 input or format error, 4 training divergence.

mod views;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use eulermag::field::{
    load_checkpoint, save_checkpoint, Camera, Checkpoint, EmbeddingConfig, FieldConfig, RenderConfig, ShiftMode,
    TimeVaryingField,
};
use eulermag::harness::{
    evaluate, gen_scene, measure_displacement, read_cameras, read_frames, save_png, sinusoid_amplitude, write_cameras,
    write_frames, xt_slice, FrequencyAmplitude, Region, SceneSpec, SliceLine,
};
use eulermag::magnify2d::{linear_magnify, phase_magnify, FrameSequence, LinearMode};
use eulermag::magnify3d::{magnify_and_render, magnify_triplanes, MagnificationRequest, Strategy};
use eulermag::pyramid::PyramidParams;
use eulermag::signal::BandpassSpec;
use eulermag::train::{finetune_timestep, gradient_check, train_static, RayBatch, TrainConfig, WarmStart};
use eulermag::{Error, Result};
use rand::{Rng, SeedableRng};

#[derive(Parser)]
#[command(
    name = "eulermag",
    version,
    about = "Eulerian motion magnification for videos and radiance fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Linear,
    Phase,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Pixel,
    Laplacian,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbeddingKind {
    Triplane,
    Posshift,
    Encshift,
}

#[derive(clap::Args)]
struct Band {
    #[arg(long)]
    flo: f64,
    #[arg(long)]
    fhi: f64,
    #[arg(long)]
    alpha: f64,
}

impl Band {
    fn spec(&self) -> BandpassSpec {
        BandpassSpec::new(self.flo, self.fhi, self.alpha)
    }
}

#[derive(clap::Args)]
struct PyramidArgs {
    /// Pyramid levels (default: deepest the frame size allows).
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 4)]
    orientations: usize,
}

impl PyramidArgs {
    fn params(&self) -> PyramidParams {
        PyramidParams {
            depth: self.depth,
            orientations: self.orientations,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Render an analytic scene (one frame directory per camera).
    GenScene {
        spec: PathBuf,
        outdir: PathBuf,
        /// Magnification factor; without it, factor 1 plus every factor
        /// listed in the spec is written.
        #[arg(long)]
        factor: Option<f64>,
    },
    /// Fit a static field to the first frame of every view.
    Train {
        frames: PathBuf,
        cameras: PathBuf,
        ckpt: PathBuf,
        #[arg(long, value_enum, default_value = "triplane")]
        embedding: EmbeddingKind,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long, default_value_t = 16)]
        channels: usize,
        #[arg(long, default_value_t = 3000)]
        steps: usize,
        #[arg(long, default_value_t = 512)]
        batch: usize,
        #[arg(long, default_value_t = 1e-2)]
        lr_embedding: f64,
        #[arg(long, default_value_t = 5e-4)]
        lr_mlp: f64,
        #[arg(long, default_value_t = 0.0)]
        tv_weight: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 2.0)]
        near: f64,
        #[arg(long, default_value_t = 4.0)]
        far: f64,
        /// Frame rate of the captured sequence.
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        /// Training log as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Fit the embedding of timestep `t` with the MLP frozen; the checkpoint
    /// is updated in place.
    Finetune {
        ckpt: PathBuf,
        frames_t: PathBuf,
        #[arg(long)]
        t: usize,
        /// Camera file (default: cameras.json next to the frames).
        #[arg(long)]
        cameras: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 512)]
        batch: usize,
        #[arg(long, default_value_t = 1e-2)]
        lr_embedding: f64,
        #[arg(long, default_value_t = 0.0)]
        tv_weight: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Initialize from E_0 instead of E_{t-1}.
        #[arg(long)]
        from_first: bool,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Magnify a frame directory in image space.
    MagnifyVideo {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[command(flatten)]
        band: Band,
        #[arg(long, value_enum, default_value = "pixel")]
        mode: Mode,
        #[command(flatten)]
        pyramid: PyramidArgs,
        /// Overrides the stored frame rate.
        #[arg(long)]
        fps: Option<f64>,
    },
    /// Magnify a time-varying field in embedding space. With `--camera`
    /// the magnified video is rendered to `out`; otherwise (tri-plane
    /// strategies only) a magnified checkpoint is written.
    MagnifyField {
        ckpt: PathBuf,
        out: PathBuf,
        #[arg(long)]
        strategy: String,
        #[command(flatten)]
        band: Band,
        #[arg(long)]
        camera: Option<PathBuf>,
        #[command(flatten)]
        pyramid: PyramidArgs,
    },
    /// Render a checkpoint. With `--t` writes one PNG, otherwise a frame
    /// directory with every timestep.
    Render {
        ckpt: PathBuf,
        out: PathBuf,
        #[arg(long)]
        camera: PathBuf,
        #[arg(long)]
        t: Option<usize>,
    },
    /// Space-time slice of one pixel row (or column).
    Slice {
        frames: PathBuf,
        #[arg(long, conflicts_with = "column", required_unless_present = "column")]
        row: Option<usize>,
        #[arg(long)]
        column: Option<usize>,
        out: PathBuf,
    },
    /// SSIM / PSNR of `a` against reference `b`.
    Metrics {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also report the horizontal displacement amplitude of `a` at
        /// these frequencies (Hz).
        #[arg(long = "freq")]
        freqs: Vec<f64>,
    },
    /// Finite-difference check of the analytic gradients of a checkpoint.
    GradCheck {
        ckpt: PathBuf,
        #[arg(long, default_value_t = 0)]
        t: usize,
        #[arg(long, default_value_t = 16)]
        rays: usize,
        #[arg(long, default_value_t = 20)]
        per_class: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::GenScene { spec, outdir, factor } => gen_scene_cmd(&spec, &outdir, factor),
        Command::Train {
            frames,
            cameras,
            ckpt,
            embedding,
            resolution,
            channels,
            steps,
            batch,
            lr_embedding,
            lr_mlp,
            tv_weight,
            seed,
            samples,
            near,
            far,
            fps,
            log,
        } => {
            let cams = read_cameras(&cameras)?;
            let views = views::load_views(&frames, &cams, 0)?;
            let emb = match embedding {
                EmbeddingKind::Triplane => EmbeddingConfig::TriPlane {
                    resolution,
                    channels,
                    init_scale: 0.1,
                },
                EmbeddingKind::Posshift => EmbeddingConfig::shift(ShiftMode::PositionShift),
                EmbeddingKind::Encshift => EmbeddingConfig::shift(ShiftMode::EncodingShift),
            };
            let render = RenderConfig {
                samples,
                near,
                far,
                ..RenderConfig::default()
            };
            let cfg = TrainConfig {
                steps,
                batch,
                lr_embedding,
                lr_mlp,
                tv_weight,
                seed,
                ..TrainConfig::default()
            };
            let (field, train_log) = train_static(&views, FieldConfig::new(emb, render), &cfg)?;
            if let Some(path) = log {
                train_log.write_jsonl(&path)?;
            }
            let final_psnr = field.final_psnr;
            let ckpt_data = Checkpoint {
                field: TimeVaryingField::from_static(&field, fps),
                final_psnr,
                magnified: None,
            };
            save_checkpoint(&ckpt, &ckpt_data)?;
            println!(
                "trained {} steps, final PSNR {:.2} dB",
                train_log.steps,
                final_psnr.unwrap_or(f64::NAN)
            );
            Ok(0)
        }
        Command::Finetune {
            ckpt,
            frames_t,
            t,
            cameras,
            steps,
            batch,
            lr_embedding,
            tv_weight,
            seed,
            from_first,
            log,
        } => {
            let mut data = load_checkpoint(&ckpt)?;
            let len = data.field.len();
            if t == 0 || t > len {
                return Err(Error::Parameter(format!("--t must be in 1..={len}")));
            }
            let cam_path = match cameras {
                Some(p) => p,
                None => views::find_cameras(&frames_t)?,
            };
            let cams = read_cameras(&cam_path)?;
            let views = views::load_views(&frames_t, &cams, t)?;
            let cfg = TrainConfig {
                steps,
                batch,
                lr_embedding,
                tv_weight,
                seed,
                warm_start: if from_first {
                    WarmStart::First
                } else {
                    WarmStart::Previous
                },
                ..TrainConfig::finetune()
            };
            let init = match cfg.warm_start {
                WarmStart::Previous => &data.field.embeddings[t - 1],
                WarmStart::First => &data.field.embeddings[0],
            };
            let (e, train_log) = finetune_timestep(&data.field.mlp, init, &views, &data.field.config.render, &cfg)?;
            if let Some(path) = log {
                train_log.write_jsonl(&path)?;
            }
            if t == len {
                data.field.embeddings.push(e);
            } else {
                data.field.embeddings[t] = e;
            }
            data.magnified = None;
            save_checkpoint(&ckpt, &data)?;
            if let Some(r) = train_log.records.last() {
                println!("timestep {t}: {} steps, PSNR {:.2} dB", train_log.steps, r.psnr);
            }
            Ok(0)
        }
        Command::MagnifyVideo {
            input,
            output,
            method,
            band,
            mode,
            pyramid,
            fps,
        } => {
            let seq = read_frames(&input, fps)?;
            let spec = band.spec();
            let out = match method {
                Method::Linear => linear_magnify(
                    &seq,
                    &spec,
                    match mode {
                        Mode::Pixel => LinearMode::Pixel,
                        Mode::Laplacian => LinearMode::Laplacian,
                    },
                )?,
                Method::Phase => phase_magnify(&seq, &spec, &pyramid.params())?,
            };
            write_frames(&output, &out)?;
            Ok(0)
        }
        Command::MagnifyField {
            ckpt,
            out,
            strategy,
            band,
            camera,
            pyramid,
        } => {
            let strategy = Strategy::parse(&strategy)?;
            let data = load_checkpoint(&ckpt)?;
            let req = MagnificationRequest {
                strategy,
                spec: band.spec(),
                pyramid: pyramid.params(),
            };
            match camera {
                Some(path) => {
                    let cam = first_camera(&path)?;
                    let video = magnify_and_render(&data.field, &req, &cam)?;
                    write_frames(&out, &video)?;
                }
                None => {
                    if matches!(strategy, Strategy::PositionShift | Strategy::EncodingShift) {
                        return Err(Error::Parameter(
                            "shift strategies render directly and need --camera".into(),
                        ));
                    }
                    let field = magnify_triplanes(&data.field, &req)?;
                    save_checkpoint(
                        &out,
                        &Checkpoint {
                            field,
                            final_psnr: data.final_psnr,
                            magnified: Some(serde_json::to_value(req)?),
                        },
                    )?;
                }
            }
            Ok(0)
        }
        Command::Render { ckpt, out, camera, t } => {
            let data = load_checkpoint(&ckpt)?;
            let cam = first_camera(&camera)?;
            match t {
                Some(t) => save_png(&data.field.render_image(&cam, t)?, &out)?,
                None => {
                    let frames = (0..data.field.len())
                        .map(|t| data.field.render_image(&cam, t))
                        .collect::<Result<Vec<_>>>()?;
                    write_frames(&out, &FrameSequence::color(frames, data.field.fps)?)?;
                }
            }
            Ok(0)
        }
        Command::Slice {
            frames,
            row,
            column,
            out,
        } => {
            let seq = read_frames(&frames, None)?;
            let line = match (row, column) {
                (Some(r), _) => SliceLine::Row(r),
                (None, Some(c)) => SliceLine::Column(c),
                (None, None) => return Err(Error::Parameter("give --row or --column".into())),
            };
            save_png(&xt_slice(&seq, line)?, &out)?;
            Ok(0)
        }
        Command::Metrics { a, b, report, freqs } => {
            let (sa, sb) = (read_frames(&a, None)?, read_frames(&b, None)?);
            let mut rep = evaluate(&sa, &sb)?;
            if !freqs.is_empty() {
                let region = Region::full(sa.frame(0));
                let dx: Vec<f64> = measure_displacement(&sa, 0, &region)?.iter().map(|d| d.dx).collect();
                rep.displacement = freqs
                    .iter()
                    .map(|&f| FrequencyAmplitude {
                        frequency: f,
                        amplitude: sinusoid_amplitude(&dx, sa.fps(), f),
                    })
                    .collect();
            }
            match rep.mean_psnr {
                Some(p) => println!("mean SSIM {:.6}  mean PSNR {:.3} dB", rep.mean_ssim, p),
                None => println!("mean SSIM {:.6}  identical", rep.mean_ssim),
            }
            for d in &rep.displacement {
                println!("displacement at {} Hz: {:.4} px", d.frequency, d.amplitude);
            }
            if let Some(path) = report {
                std::fs::write(path, serde_json::to_vec_pretty(&rep)?)?;
            }
            Ok(0)
        }
        Command::GradCheck {
            ckpt,
            t,
            rays,
            per_class,
            tol,
            seed,
        } => {
            let data = load_checkpoint(&ckpt)?;
            let field = data.field.at(t)?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cams = Camera::orbit(4, 4.0, 20.0, 0.0, 360.0, 40.0, 16, 16);
            let ray_list: Vec<_> = (0..rays.max(1))
                .map(|i| {
                    let cam = &cams[i % cams.len()];
                    cam.ray(rng.random_range(0..cam.width), rng.random_range(0..cam.height))
                })
                .collect();
            let targets: Vec<[f64; 3]> = (0..ray_list.len())
                .map(|_| [rng.random(), rng.random(), rng.random()])
                .collect();
            let batch = RayBatch {
                rays: &ray_list,
                targets: &targets,
                jitter: None,
            };
            let classes = gradient_check(
                field.mlp,
                field.embedding,
                &data.field.config.render,
                batch,
                per_class,
                1e-4,
                tol,
            )?;
            println!("{}", serde_json::to_string_pretty(&classes)?);
            Ok(if classes.iter().all(|c| c.passed == c.checked) {
                0
            } else {
                1
            })
        }
    }
}

fn first_camera(path: &Path) -> Result<Camera> {
    read_cameras(path)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Input(format!("{} holds no cameras", path.display())))
}

fn factor_dir(outdir: &Path, m: f64) -> PathBuf {
    outdir.join(format!("factor_{m}"))
}

fn gen_scene_cmd(spec_path: &Path, outdir: &Path, factor: Option<f64>) -> Result<u8> {
    let bytes = std::fs::read(spec_path)?;
    let spec: SceneSpec =
        serde_json::from_slice(&bytes).map_err(|e| Error::Format(format!("{}: {e}", spec_path.display())))?;
    let write = |dir: &Path, m: f64| -> Result<()> {
        let scene = gen_scene(&spec, m)?;
        for (i, seq) in scene.sequences.iter().enumerate() {
            write_frames(&views::view_dir(dir, i), seq)?;
        }
        write_cameras(&dir.join("cameras.json"), &scene.cameras)
    };
    std::fs::create_dir_all(outdir)?;
    std::fs::write(outdir.join("scene.json"), serde_json::to_vec_pretty(&spec)?)?;
    match factor {
        Some(m) => write(outdir, m)?,
        None => {
            write(outdir, 1.0)?;
            for &m in &spec.factors {
                write(&factor_dir(outdir, m), m)?;
            }
        }
    }
    Ok(0)
}
