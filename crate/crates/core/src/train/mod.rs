//! Fitting radiance fields: analytic gradients, Adam, static training and
//! per-timestep embedding finetuning with a frozen projection MLP.

pub mod adam;
pub mod fit;
pub mod grad;

pub use adam::{adam_step, AdamState};
pub use fit::{
    evaluate_psnr, finetune_sequence, finetune_timestep, psnr_from_loss, train_static, LogRecord, TrainConfig,
    TrainLog, View, WarmStart,
};
pub use grad::{
    gradient_check, loss, loss_and_grad, relative_error, GradCheckClass, GradientBuffer, RayBatch, Trainable,
};
