//! Synthetic scenes with ground truth, metrics, displacement measurement
//! and file formats.

pub mod io;
pub mod metrics;
pub mod motion;
pub mod scene;

pub use io::{load_png, read_cameras, read_frames, save_png, write_cameras, write_frames};
pub use metrics::{evaluate, psnr, ssim, EvalReport, FrequencyAmplitude};
pub use motion::{
    add_noise, measure_displacement, measure_shift, sinusoid_amplitude, xt_slice, Displacement, Region, SliceLine,
};
pub use scene::{
    gen_scene, gen_scene_views, AnalyticField, CameraSet, Motion, Primitive, SceneRender, SceneSpec, Shape,
};
