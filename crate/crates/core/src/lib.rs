//! Eulerian motion magnification for 2D videos and for time-varying
//! radiance fields.
//!
//! The crate is organized bottom-up:
//!
//! * [`signal`]: DFT, ideal temporal bandpass and band amplification.
//! * [`pyramid`]: Laplacian and complex steerable pyramids.
//! * [`magnify2d`]: linear and phase-based magnification of frame sequences.
//! * [`field`]: embeddings (positional encoding with per-timestep shift
//!   networks, tri-planes), the projection MLP and volume rendering.
//! * [`train`]: analytic gradients, Adam, static training and per-timestep
//!   embedding finetuning.
//! * [`magnify3d`]: magnification in embedding space and magnified rendering.
//! * [`harness`]: analytic scenes with ground truth, metrics, displacement
//!   measurement and file formats.

pub mod error;
pub mod fft2;
pub mod field;
pub mod harness;
pub mod image;
pub mod magnify2d;
pub mod magnify3d;
pub mod pyramid;
pub mod signal;
pub mod train;

pub use error::{Error, Result};
pub use image::Image;
