//! Local (single-client) training: shuffled mini-batch epochs with Adam and
//! global-norm gradient clipping, plus batched inference helpers.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::adam::{clip_global_norm, AdamState};
use super::seq2seq::{mse_loss, mse_loss_grad, Seq2SeqModel};
use super::tensor::Mat;
use crate::error::{Error, Result};
use crate::windowing::WindowedDataset;

fn batch_matrices(ds: &WindowedDataset, idx: &[usize]) -> (Mat, Mat) {
    let mut x = Mat::zeros(idx.len(), ds.h);
    let mut y = Mat::zeros(idx.len(), ds.p);
    for (r, &i) in idx.iter().enumerate() {
        x.row_mut(r).copy_from_slice(&ds.inputs[i]);
        y.row_mut(r).copy_from_slice(&ds.targets[i]);
    }
    (x, y)
}

/// One epoch over `ds`: shuffle, then for each mini-batch run
/// forward/backward, clip the gradient's global norm, and take an Adam step.
/// Returns the window-weighted mean training loss. `clip_norm <= 0` disables
/// clipping.
pub fn train_epoch(
    model: &mut Seq2SeqModel,
    optimizer: &mut AdamState,
    ds: &WindowedDataset,
    batch_size: usize,
    clip_norm: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Data("train_epoch: empty dataset".into()));
    }
    if batch_size == 0 {
        return Err(Error::Usage("train_epoch: batch size must be positive".into()));
    }
    if ds.h != model.h || ds.p != model.p {
        return Err(Error::Data(format!(
            "train_epoch: dataset window shape ({}, {}) does not match model ({}, {})",
            ds.h, ds.p, model.h, model.p
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(rng);

    let mut loss_sum = 0.0;
    let mut weight_sum = 0.0;
    let mut params = model.get_weights();
    for chunk in order.chunks(batch_size) {
        let (x, y) = batch_matrices(ds, chunk);
        let (pred, cache) = model.forward(&x, true, Some(rng))?;
        let loss = mse_loss(&pred, &y)?;
        if !loss.is_finite() {
            return Err(Error::Numeric("training loss became non-finite".into()));
        }
        loss_sum += loss * chunk.len() as f64;
        weight_sum += chunk.len() as f64;

        let grads = model.backward(&cache, &mse_loss_grad(&pred, &y))?;
        let mut flat = grads.get_weights();
        clip_global_norm(&mut flat, clip_norm);
        optimizer.step(&mut params, &flat)?;
        model.set_weights(&params)?;
    }
    Ok(loss_sum / weight_sum)
}

/// Inference predictions for every window of `ds`, in dataset order
/// (rows = windows, cols = p), evaluated in batches of `batch_size`.
pub fn predict_dataset(
    model: &Seq2SeqModel,
    ds: &WindowedDataset,
    batch_size: usize,
) -> Result<Mat> {
    if batch_size == 0 {
        return Err(Error::Usage("predict_dataset: batch size must be positive".into()));
    }
    let mut out = Mat::zeros(ds.len(), model.p);
    let idx: Vec<usize> = (0..ds.len()).collect();
    for chunk in idx.chunks(batch_size) {
        let (x, _) = batch_matrices(ds, chunk);
        let pred = model.predict(&x)?;
        for (r, &i) in chunk.iter().enumerate() {
            out.row_mut(i).copy_from_slice(pred.row(r));
        }
    }
    Ok(out)
}

/// Mean squared error of the model's inference predictions over `ds`.
pub fn dataset_mse(model: &Seq2SeqModel, ds: &WindowedDataset, batch_size: usize) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Data("dataset_mse: empty dataset".into()));
    }
    let pred = predict_dataset(model, ds, batch_size)?;
    let mut target = Mat::zeros(ds.len(), ds.p);
    for (r, t) in ds.targets.iter().enumerate() {
        target.row_mut(r).copy_from_slice(t);
    }
    mse_loss(&pred, &target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn toy_dataset(n: usize, h: usize, p: usize) -> WindowedDataset {
        // A clean linear ramp: next values continue the window's slope.
        let series: Vec<f64> = (0..n + h + p).map(|t| (t as f64) * 0.01).collect();
        let inputs = (0..n).map(|i| series[i..i + h].to_vec()).collect();
        let targets = (0..n).map(|i| series[i + h..i + h + p].to_vec()).collect();
        WindowedDataset { node_id: 1, h, p, inputs, targets }
    }

    fn toy_model(h: usize, p: usize, seed: u64) -> Seq2SeqModel {
        let mut rng = stream_rng(seed, "init", 0);
        Seq2SeqModel::init(h, p, 4, 0.0, &mut rng)
    }

    #[test]
    fn zero_learning_rate_leaves_weights_unchanged() {
        let mut model = toy_model(3, 2, 5);
        let before = model.get_weights();
        let ds = toy_dataset(12, 3, 2);
        let mut opt = AdamState::new(model.param_count(), 0.0);
        let mut rng = stream_rng(5, "client", 0);
        train_epoch(&mut model, &mut opt, &ds, 4, 5.0, &mut rng).unwrap();
        assert_eq!(model.get_weights(), before);
    }

    #[test]
    fn training_reduces_loss_on_a_learnable_series() {
        let mut model = toy_model(3, 1, 7);
        let ds = toy_dataset(24, 3, 1);
        let initial = dataset_mse(&model, &ds, 8).unwrap();
        let mut opt = AdamState::new(model.param_count(), 0.01);
        let mut rng = stream_rng(7, "client", 0);
        for _ in 0..60 {
            train_epoch(&mut model, &mut opt, &ds, 8, 5.0, &mut rng).unwrap();
        }
        let trained = dataset_mse(&model, &ds, 8).unwrap();
        assert!(
            trained < initial * 0.2,
            "loss did not drop: {initial} -> {trained}"
        );
    }

    #[test]
    fn epoch_is_deterministic_given_the_same_rng_stream() {
        let run = || {
            let mut model = toy_model(2, 2, 9);
            let ds = toy_dataset(10, 2, 2);
            let mut opt = AdamState::new(model.param_count(), 0.005);
            let mut rng = stream_rng(9, "client", 3);
            let mut losses = Vec::new();
            for _ in 0..3 {
                losses.push(train_epoch(&mut model, &mut opt, &ds, 4, 5.0, &mut rng).unwrap());
            }
            (model.get_weights(), losses)
        };
        let (w1, l1) = run();
        let (w2, l2) = run();
        assert_eq!(w1, w2);
        assert_eq!(l1, l2);
    }

    #[test]
    fn reported_epoch_loss_is_window_weighted() {
        // With lr = 0 and no dropout, the epoch loss must equal the plain
        // dataset MSE regardless of how batches divide the data.
        let mut model = toy_model(2, 1, 11);
        let ds = toy_dataset(10, 2, 1); // batch 4 -> chunks of 4, 4, 2
        let reference = dataset_mse(&model, &ds, 10).unwrap();
        let mut opt = AdamState::new(model.param_count(), 0.0);
        let mut rng = stream_rng(11, "client", 0);
        let epoch = train_epoch(&mut model, &mut opt, &ds, 4, 5.0, &mut rng).unwrap();
        assert!((epoch - reference).abs() < 1e-12);
    }

    #[test]
    fn predict_dataset_rows_align_with_windows() {
        let model = toy_model(2, 2, 13);
        let ds = toy_dataset(7, 2, 2);
        let all = predict_dataset(&model, &ds, 3).unwrap();
        // Same values when predicted one window at a time.
        for i in 0..ds.len() {
            let x = Mat::from_rows(vec![ds.inputs[i].clone()]);
            let single = model.predict(&x).unwrap();
            assert_eq!(all.row(i), single.row(0), "row {i}");
        }
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let mut model = toy_model(2, 1, 1);
        let ds = toy_dataset(5, 2, 1).empty_like();
        let mut opt = AdamState::new(model.param_count(), 0.01);
        let mut rng = stream_rng(1, "client", 0);
        assert!(train_epoch(&mut model, &mut opt, &ds, 4, 5.0, &mut rng).is_err());
        assert!(dataset_mse(&model, &ds, 4).is_err());
    }
}
