//! Neural-network building blocks: dense matrices, the LSTM cell, the
//! encoder–decoder forecaster, Adam, and mini-batch training.

pub mod adam;
pub mod lstm;
pub mod seq2seq;
pub mod tensor;
pub mod train;

pub use adam::{clip_global_norm, AdamState};
pub use seq2seq::{
    finite_difference_max_err, mse_loss, mse_loss_grad, DropoutMasks, Seq2SeqModel,
};
pub use tensor::Mat;
pub use train::{dataset_mse, predict_dataset, train_epoch};
