//! Supervised (history, target) window construction and chronological
//! train/validation/test splitting.

use crate::error::{Error, Result};
use crate::traffic_data::NodeSeries;

/// Sliding windows over one node's preprocessed series: `inputs[i]` holds the
/// h samples ending at position `i + h − 1`, `targets[i]` the following p.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub node_id: u32,
    pub h: usize,
    pub p: usize,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// An empty dataset with the same shape metadata.
    pub fn empty_like(&self) -> Self {
        WindowedDataset {
            node_id: self.node_id,
            h: self.h,
            p: self.p,
            inputs: Vec::new(),
            targets: Vec::new(),
        }
    }
}

/// Split fractions: 70% of windows form the training pool (the rest is the
/// test set), and the final 20% of the pool is validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac_of_train: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_frac: 0.70, val_frac_of_train: 0.20 }
    }
}

impl SplitSpec {
    fn validate(&self) -> Result<()> {
        for (name, f) in
            [("train_frac", self.train_frac), ("val_frac_of_train", self.val_frac_of_train)]
        {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Usage(format!("{name} must lie strictly in (0,1), got {f}")));
            }
        }
        Ok(())
    }
}

/// Build all `n − (h+p) + 1` unit-stride windows, in chronological order.
pub fn make_windows(series: &NodeSeries, h: usize, p: usize) -> Result<WindowedDataset> {
    if h == 0 || p == 0 {
        return Err(Error::Usage("window sizes h and p must be >= 1".into()));
    }
    let n = series.len();
    if n < h + p {
        return Err(Error::Data(format!(
            "node {}: series of length {n} too short for h={h}, p={p} (needs >= {})",
            series.node_id,
            h + p
        )));
    }
    let count = n - (h + p) + 1;
    let mut inputs = Vec::with_capacity(count);
    let mut targets = Vec::with_capacity(count);
    for i in 0..count {
        inputs.push(series.values[i..i + h].to_vec());
        targets.push(series.values[i + h..i + h + p].to_vec());
    }
    Ok(WindowedDataset { node_id: series.node_id, h, p, inputs, targets })
}

/// Window counts of each partition for a dataset of `n` windows:
/// pool = ⌊0.70·n⌋ (test takes the remainder), train = ⌊0.80·pool⌋,
/// val = pool − train.
pub fn split_counts(n: usize, spec: &SplitSpec) -> (usize, usize, usize) {
    let pool = (n as f64 * spec.train_frac).floor() as usize;
    let test = n - pool;
    let train = (pool as f64 * (1.0 - spec.val_frac_of_train)).floor() as usize;
    let val = pool - train;
    (train, val, test)
}

/// Chronological split: earliest windows train, then validation, then test.
/// No shuffling. Errors if any partition would be empty.
pub fn split_chronological(
    ds: &WindowedDataset,
    spec: &SplitSpec,
) -> Result<(WindowedDataset, WindowedDataset, WindowedDataset)> {
    spec.validate()?;
    if ds.is_empty() {
        return Err(Error::Data(format!("node {}: no windows to split", ds.node_id)));
    }
    let (train_n, val_n, test_n) = split_counts(ds.len(), spec);
    if train_n == 0 || val_n == 0 || test_n == 0 {
        return Err(Error::Data(format!(
            "node {}: split of {} windows leaves an empty partition (train {train_n}, val {val_n}, test {test_n})",
            ds.node_id,
            ds.len()
        )));
    }
    let take = |range: std::ops::Range<usize>| WindowedDataset {
        node_id: ds.node_id,
        h: ds.h,
        p: ds.p,
        inputs: ds.inputs[range.clone()].to_vec(),
        targets: ds.targets[range].to_vec(),
    };
    let train = take(0..train_n);
    let val = take(train_n..train_n + val_n);
    let test = take(train_n + val_n..ds.len());
    Ok((train, val, test))
}

/// Number of preprocessed samples the training windows touch: the last of
/// `train_n` windows ends at sample `train_n − 1 + h + p − 1`.
pub fn train_prefix_len(train_n: usize, h: usize, p: usize) -> usize {
    train_n + h + p - 1
}
