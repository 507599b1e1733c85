//! Synthetic sequences and scenes shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use eulermag::field::{
    generate_rays, sample_points, Camera, Embedding, EmbeddingConfig, FieldConfig, Mlp, RadianceField, Ray,
    RenderConfig,
};
use eulermag::harness::{measure_displacement, sinusoid_amplitude, CameraSet, Primitive, Region, SceneSpec};
use eulermag::magnify2d::FrameSequence;
use eulermag::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FPS: f64 = 30.0;

pub fn wobble(t: usize, amplitude: f64, freq: f64) -> f64 {
    amplitude * (2.0 * PI * freq * t as f64 / FPS).sin()
}

/// Frames of `profile(y, x − shift(t))`.
pub fn translating(
    h: usize,
    w: usize,
    frames: usize,
    shift: impl Fn(usize) -> f64,
    profile: impl Fn(usize, f64) -> f64,
) -> FrameSequence {
    let imgs = (0..frames)
        .map(|t| {
            let d = shift(t);
            Image::from_fn(h, w, |y, x| profile(y, x as f64 - d))
        })
        .collect();
    FrameSequence::feature(imgs, FPS).unwrap()
}

/// `exp(−(x − 32)²/32)`.
pub fn bump(x: f64) -> f64 {
    (-(x - 32.0).powi(2) / 32.0).exp()
}

/// Vertical grating with a period of 8 px and a weak vertical ramp so the
/// frame is not constant along y.
pub fn grating(y: usize, x: f64) -> f64 {
    0.5 + 0.3 * (2.0 * PI * x / 8.0).sin() + 0.05 * (2.0 * PI * y as f64 / 64.0).cos()
}

/// Bright bump close to the top of the range.
pub fn bright_bump(x: f64) -> f64 {
    0.15 + 0.8 * bump(x)
}

/// Horizontal displacement amplitude at `freq` inside `region`.
pub fn displacement_amplitude(seq: &FrameSequence, region: &Region, freq: f64) -> f64 {
    let dx: Vec<f64> = measure_displacement(seq, 0, region)
        .unwrap()
        .iter()
        .map(|d| d.dx)
        .collect();
    sinusoid_amplitude(&dx, seq.fps(), freq)
}

pub fn full(seq: &FrameSequence) -> Region {
    Region::full(seq.frame(0))
}

/// One red sphere oscillating along x at 4 Hz, seen from `views` cameras on
/// an orbit.
pub fn sphere_scene(radius: f64, amplitude: f64, views: usize, size: usize) -> SceneSpec {
    SceneSpec {
        primitives: vec![Primitive::sphere([0.0; 3], radius, [0.9, 0.3, 0.2], 40.0).with_motion(
            [amplitude, 0.0, 0.0],
            4.0,
            0.0,
        )],
        duration: 1.0,
        fps: FPS,
        cameras: CameraSet::Orbit {
            count: views,
            radius: 3.0,
            elevation: 15.0,
            azimuth_start: 0.0,
            azimuth_span: 360.0,
            fov: 30.0,
            width: size,
            height: size,
        },
        render: RenderConfig {
            samples: 32,
            near: 2.0,
            far: 4.0,
            background: [1.0; 3],
        },
        factors: vec![],
    }
}

/// Training camera `i` of [`sphere_scene`] rotated by `degrees` in azimuth.
pub fn rotated_camera(spec: &SceneSpec, i: usize, degrees: f64) -> Camera {
    match &spec.cameras {
        CameraSet::Orbit {
            count,
            radius,
            elevation,
            azimuth_start,
            azimuth_span,
            fov,
            width,
            height,
        } => {
            let az = azimuth_start + azimuth_span * i as f64 / *count as f64 + degrees;
            Camera::at_angles(*radius, *elevation, az, *fov, *width, *height)
        }
        CameraSet::List(_) => panic!("orbit scenes only"),
    }
}

/// A small random field for finite-difference checks: unit-scale hidden
/// biases, small output layers, tri-plane texels in `[−0.5, 0.5]`. Shift
/// networks get a small but nonzero output layer.
pub fn gradcheck_field(embedding: EmbeddingConfig, seed: u64) -> RadianceField {
    let render = RenderConfig {
        samples: 8,
        ..RenderConfig::default()
    };
    let mut field = RadianceField::new(FieldConfig::new(embedding, render), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    match &mut field.embedding {
        Embedding::TriPlane(tp) => tp.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5)),
        Embedding::Shift(s) => randomize(s.net_mut(), 0.01, &mut rng),
    }
    randomize(field.mlp.net_mut(), 0.3, &mut rng);
    field
}

fn randomize(net: &mut Mlp, output_scale: f64, rng: &mut impl Rng) {
    let sizes = net.sizes().to_vec();
    let layers = sizes.len() - 1;
    let params = net.params_mut();
    let mut offset = 0;
    for (l, pair) in sizes.windows(2).enumerate() {
        let (n_in, n_out) = (pair[0], pair[1]);
        let last = l + 1 == layers;
        let w = if last { output_scale } else { (3.0 / n_in as f64).sqrt() };
        for v in &mut params[offset..offset + n_in * n_out] {
            *v = rng.random_range(-w..w);
        }
        offset += n_in * n_out;
        let b = if last { output_scale } else { 1.0 };
        for v in &mut params[offset..offset + n_out] {
            *v = rng.random_range(-b..b);
        }
        offset += n_out;
    }
}

/// Rays through an 8×8 view of the unit cube with random target colors.
pub fn gradcheck_rays(count: usize, seed: u64) -> (Vec<Ray>, Vec<[f64; 3]>) {
    let cam = Camera::at_angles(3.0, 20.0, 40.0, 40.0, 8, 8);
    let all = generate_rays(&cam);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = (0..count).map(|_| all[rng.random_range(0..all.len())]).collect();
    let targets = (0..count).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
    (picked, targets)
}

/// Smallest |pre-activation| of any hidden ReLU unit of `net` over `inputs`.
fn relu_margin(net: &Mlp, inputs: &[Vec<f64>]) -> f64 {
    let sizes = net.sizes();
    let params = net.params();
    let mut margin = f64::INFINITY;
    for input in inputs {
        let mut x = input.clone();
        let mut offset = 0;
        for (l, pair) in sizes.windows(2).enumerate() {
            let (n_in, n_out) = (pair[0], pair[1]);
            let mut z = params[offset + n_in * n_out..offset + n_in * n_out + n_out].to_vec();
            for (i, xi) in x.iter().enumerate() {
                for (o, zo) in z.iter_mut().enumerate() {
                    *zo += xi * params[offset + i * n_out + o];
                }
            }
            offset += n_in * n_out + n_out;
            if l + 2 < sizes.len() {
                margin = margin.min(z.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min));
                x = z.iter().map(|v| v.max(0.0)).collect();
            }
        }
    }
    margin
}

/// The first [`gradcheck_field`] whose hidden units all stay at least
/// `margin` away from the ReLU kink at every sample point of `rays`.
/// Central differences straddling a kink measure the kink, not the
/// gradient.
pub fn kink_free_field(embedding: EmbeddingConfig, rays: &[Ray], margin: f64) -> RadianceField {
    for seed in 0..10_000 {
        let field = gradcheck_field(embedding, seed);
        let depths = field.render().depths(None);
        let points: Vec<[f64; 3]> = rays.iter().flat_map(|r| sample_points(r, &depths)).collect();
        let embeddings: Vec<Vec<f64>> = points.iter().map(|p| field.embedding.embed(*p)).collect();
        let mut m = relu_margin(field.mlp.net(), &embeddings);
        if let Embedding::Shift(s) = &field.embedding {
            let ps: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
            m = m.min(relu_margin(s.net(), &ps));
        }
        if m >= margin {
            return field;
        }
    }
    panic!("no kink-free field found");
}
