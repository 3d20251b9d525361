//! FedAvg orchestration across simulated clients, plus the centralized
//! baseline (one model over the pooled training windows, evaluated per
//! client). The centralized path reuses the federated loop on a single
//! merged client, so the two modes share every numerical detail.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::neuralnet::{dataset_mse, predict_dataset, train_epoch, AdamState, Mat, Seq2SeqModel};
use crate::rng::{client_round_index, stream_rng};
use crate::traffic_data::{apply_scaler, fit_scaler_slice, NodeSeries, Scaler};
use crate::windowing::{make_windows, split_chronological, train_prefix_len, SplitSpec, WindowedDataset};

/// What counts as a client's dataset size |D_k| for FedAvg weighting and
/// loss averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightBy {
    /// Number of training windows (default).
    Windows,
    /// Number of samples in the client's processed series.
    RawSamples,
}

/// Which samples the standardization scaler is fit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalerScope {
    /// Exactly the samples covered by the training windows (default).
    Train,
    /// The full processed series.
    Full,
}

/// One client's immutable prepared data.
#[derive(Debug, Clone)]
pub struct ClientData {
    pub node_id: u32,
    pub train: WindowedDataset,
    pub val: WindowedDataset,
    pub test: WindowedDataset,
    /// Standardization fitted for this client; predictions are reported in
    /// original units through its inverse.
    pub scaler: Scaler,
    /// Length of the client's processed series (samples, pre-windowing).
    pub raw_sample_count: usize,
}

impl ClientData {
    pub fn sample_weight(&self, weight_by: WeightBy) -> f64 {
        match weight_by {
            WeightBy::Windows => self.train.len() as f64,
            WeightBy::RawSamples => self.raw_sample_count as f64,
        }
    }
}

/// Hyperparameters for one training run (federated or centralized).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    pub h: usize,
    pub p: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub rounds: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Global-norm gradient clip; `<= 0` disables.
    pub clip_norm: f64,
    pub seed: u64,
    pub weight_by: WeightBy,
}

/// Per-round sample-weighted losses: training loss from the clients' local
/// epochs, validation loss of the freshly aggregated global model.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

pub type RoundHistory = Vec<RoundRecord>;

/// One client's test-set forecasts in original (de-standardized) units.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientPredictions {
    pub node_id: u32,
    /// rows = test windows, cols = p.
    pub predicted: Mat,
    pub actual: Mat,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: Seq2SeqModel,
    pub history: RoundHistory,
    /// Sorted by node id.
    pub predictions: Vec<ClientPredictions>,
}

/// One client's contribution to an aggregation round.
#[derive(Debug, Clone)]
pub struct ClientUpdate {
    pub node_id: u32,
    pub weights: Vec<f64>,
    pub sample_count: f64,
}

/// Weighted average w = Σ α_k·w_k with α_k = n_k/Σn_j, accumulated in
/// ascending node-id order (stable for ties) so the floating-point sum is
/// independent of the argument order.
pub fn fedavg_aggregate(updates: &[ClientUpdate]) -> Result<Vec<f64>> {
    if updates.is_empty() {
        return Err(Error::Data("fedavg_aggregate: no client updates".into()));
    }
    let len = updates[0].weights.len();
    for u in updates {
        if u.weights.len() != len {
            return Err(Error::Data(format!(
                "fedavg_aggregate: weight vector length mismatch ({} vs {})",
                u.weights.len(),
                len
            )));
        }
        if !(u.sample_count > 0.0) {
            return Err(Error::Data(format!(
                "fedavg_aggregate: client {} has non-positive sample count {}",
                u.node_id, u.sample_count
            )));
        }
    }
    let mut order: Vec<usize> = (0..updates.len()).collect();
    order.sort_by_key(|&i| (updates[i].node_id, i));
    // Both the total and the weighted sum accumulate in sorted-id order so
    // the result is independent of the caller's argument order.
    let total: f64 = order.iter().map(|&i| updates[i].sample_count).sum();
    let mut out = vec![0.0; len];
    for i in order {
        let u = &updates[i];
        let alpha = u.sample_count / total;
        for (o, w) in out.iter_mut().zip(&u.weights) {
            *o += alpha * w;
        }
    }
    Ok(out)
}

/// Prepare one client from its processed (resampled, outlier-repaired,
/// smoothed — but not yet standardized) series: fit the scaler on the
/// configured scope, standardize, window, and split chronologically.
pub fn prepare_client(
    processed: &NodeSeries,
    h: usize,
    p: usize,
    split: &SplitSpec,
    scope: ScalerScope,
) -> Result<ClientData> {
    let window_count = processed
        .values
        .len()
        .checked_sub(h + p - 1)
        .filter(|c| *c > 0)
        .ok_or_else(|| {
            Error::Data(format!(
                "node {}: series of {} samples is too short for h={} p={}",
                processed.node_id,
                processed.values.len(),
                h,
                p
            ))
        })?;
    let (train_n, _, _) = crate::windowing::split_counts(window_count, split);
    let fit_len = match scope {
        ScalerScope::Train => train_prefix_len(train_n, h, p).min(processed.values.len()),
        ScalerScope::Full => processed.values.len(),
    };
    if train_n == 0 {
        return Err(Error::Data(format!(
            "node {}: no training windows after split",
            processed.node_id
        )));
    }
    let scaler = fit_scaler_slice(&processed.values[..fit_len], processed.node_id)?;
    let standardized = apply_scaler(processed, &scaler);
    let windows = make_windows(&standardized, h, p)?;
    let (train, val, test) = split_chronological(&windows, split)?;
    Ok(ClientData {
        node_id: processed.node_id,
        train,
        val,
        test,
        scaler,
        raw_sample_count: processed.values.len(),
    })
}

/// Concatenate the training/validation windows of all clients (ascending
/// node id, chronology preserved within each client) into one pooled client.
/// With exactly one input client the merge is the identity — including the
/// node id, so the pooled client draws the same per-round rng streams.
pub fn merge_clients(clients: &[ClientData]) -> Result<ClientData> {
    if clients.is_empty() {
        return Err(Error::Data("merge_clients: no clients".into()));
    }
    let mut order: Vec<usize> = (0..clients.len()).collect();
    order.sort_by_key(|&i| (clients[i].node_id, i));
    let (h, p) = (clients[0].train.h, clients[0].train.p);
    let node_id = if clients.len() == 1 { clients[0].node_id } else { 0 };
    let mut train = WindowedDataset { node_id, h, p, inputs: Vec::new(), targets: Vec::new() };
    let mut val = train.empty_like();
    let mut raw = 0usize;
    for &i in &order {
        let c = &clients[i];
        if c.train.h != h || c.train.p != p {
            return Err(Error::Data("merge_clients: mismatched window shapes".into()));
        }
        train.inputs.extend(c.train.inputs.iter().cloned());
        train.targets.extend(c.train.targets.iter().cloned());
        val.inputs.extend(c.val.inputs.iter().cloned());
        val.targets.extend(c.val.targets.iter().cloned());
        raw += c.raw_sample_count;
    }
    Ok(ClientData {
        node_id,
        train,
        val,
        // The pooled client is never evaluated on a test set of its own.
        test: clients[order[0]].test.empty_like(),
        scaler: Scaler { mean: 0.0, std_dev: 1.0 },
        raw_sample_count: raw,
    })
}

fn weighted_mean(pairs: &[(f64, f64)]) -> f64 {
    let (num, den) = pairs.iter().fold((0.0, 0.0), |(n, d), (v, w)| (n + v * w, d + w));
    num / den
}

/// Core loop shared by both modes: `training_clients` take part in the
/// rounds; `eval_clients` receive the final model's test predictions.
fn run_core(
    training_clients: &[ClientData],
    eval_clients: &[ClientData],
    params: &TrainParams,
) -> Result<RunOutcome> {
    if training_clients.is_empty() {
        return Err(Error::Data("training run: no clients".into()));
    }
    if params.rounds == 0 {
        return Err(Error::Usage("training run: rounds must be positive".into()));
    }
    let mut order: Vec<usize> = (0..training_clients.len()).collect();
    order.sort_by_key(|&i| (training_clients[i].node_id, i));

    let mut init_rng = stream_rng(params.seed, "init", 0);
    let mut model = Seq2SeqModel::init(
        params.h,
        params.p,
        params.hidden,
        params.dropout,
        &mut init_rng,
    );
    let mut global = model.get_weights();
    let mut optimizers: BTreeMap<usize, AdamState> = order
        .iter()
        .map(|&i| (i, AdamState::new(model.param_count(), params.learning_rate)))
        .collect();

    let mut history = Vec::with_capacity(params.rounds);
    for round in 0..params.rounds {
        let mut updates = Vec::with_capacity(order.len());
        let mut train_losses = Vec::with_capacity(order.len());
        for &i in &order {
            let client = &training_clients[i];
            model.set_weights(&global)?;
            let mut rng = stream_rng(
                params.seed,
                "client",
                client_round_index(client.node_id, round as u32),
            );
            let opt = optimizers.get_mut(&i).expect("optimizer exists");
            let loss = train_epoch(
                &mut model,
                opt,
                &client.train,
                params.batch_size,
                params.clip_norm,
                &mut rng,
            )
            .map_err(|e| match e {
                Error::Numeric(m) => Error::Numeric(format!(
                    "client {} diverged in round {}: {}",
                    client.node_id,
                    round + 1,
                    m
                )),
                other => other,
            })?;
            let w = client.sample_weight(params.weight_by);
            train_losses.push((loss, w));
            updates.push(ClientUpdate {
                node_id: client.node_id,
                weights: model.get_weights(),
                sample_count: w,
            });
        }
        global = fedavg_aggregate(&updates)?;
        model.set_weights(&global)?;
        let mut val_losses = Vec::with_capacity(order.len());
        for &i in &order {
            let client = &training_clients[i];
            let vl = dataset_mse(&model, &client.val, params.batch_size)?;
            val_losses.push((vl, client.sample_weight(params.weight_by)));
        }
        let rec = RoundRecord {
            round: round + 1,
            train_loss: weighted_mean(&train_losses),
            val_loss: weighted_mean(&val_losses),
        };
        if !rec.train_loss.is_finite() || !rec.val_loss.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite aggregate loss in round {}",
                round + 1
            )));
        }
        history.push(rec);
    }

    let predictions = predict_clients(&model, eval_clients, params.batch_size)?;
    Ok(RunOutcome { model, history, predictions })
}

/// Run the model over every client's test windows, reporting predictions and
/// actuals in original units through each client's own scaler. Results are
/// sorted by node id.
pub fn predict_clients(
    model: &Seq2SeqModel,
    clients: &[ClientData],
    batch_size: usize,
) -> Result<Vec<ClientPredictions>> {
    let mut order: Vec<usize> = (0..clients.len()).collect();
    order.sort_by_key(|&i| (clients[i].node_id, i));
    let mut predictions = Vec::with_capacity(order.len());
    for &i in &order {
        let client = &clients[i];
        let scaled = predict_dataset(model, &client.test, batch_size)?;
        let mut predicted = scaled.clone();
        for v in predicted.data.iter_mut() {
            *v = client.scaler.invert_value(*v);
        }
        let mut actual = Mat::zeros(client.test.len(), model.p);
        for (r, t) in client.test.targets.iter().enumerate() {
            for (k, y) in t.iter().enumerate() {
                actual.row_mut(r)[k] = client.scaler.invert_value(*y);
            }
        }
        predictions.push(ClientPredictions { node_id: client.node_id, predicted, actual });
    }
    Ok(predictions)
}

/// FedAvg: every client runs one local epoch per round; the server averages
/// weighted by dataset size; the final global model produces each client's
/// test predictions.
pub fn run_federated(clients: &[ClientData], params: &TrainParams) -> Result<RunOutcome> {
    run_core(clients, clients, params)
}

/// Centralized baseline: one model trained for `rounds` epochs on the pooled
/// training windows, evaluated on each client's own test set.
pub fn run_centralized(clients: &[ClientData], params: &TrainParams) -> Result<RunOutcome> {
    let merged = merge_clients(clients)?;
    run_core(std::slice::from_ref(&merged), clients, params)
}
