//! Radiance fields: embeddings, projection MLP, cameras, rendering and
//! checkpoints.

pub mod camera;
pub mod checkpoint;
pub mod embedding;
pub mod mlp;
pub mod model;
pub mod posenc;
pub mod render;
pub mod triplane;

pub use camera::{generate_rays, Camera, Ray, Vec3};
pub use checkpoint::{load_checkpoint, read_tensor, save_checkpoint, write_tensor, Checkpoint, Tensor};
pub use embedding::{encode_with_shift, shift_embed, EmbedScratch, Embedding, ShiftMode, ShiftNetwork};
pub use mlp::Mlp;
pub use model::{
    mlp_forward, sigmoid, softplus, EmbeddingConfig, FieldConfig, MlpScratch, NeuralField, ProjectionMlp,
    RadianceField, TimeVaryingField,
};
pub use posenc::{phases_for_shift, posenc, posenc_into, PosEncConfig};
pub use render::{
    composite, composite_weights, render_image, render_ray, sample_points, PointSample, RayColor, RenderConfig,
    VolumeField,
};
pub use triplane::{triplane_embed, TriPlane};
