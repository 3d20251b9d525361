//! MSE and R² reporting at the granularity used by the result tables:
//! per client and unweighted-averaged.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Mean squared error over two equal-length sequences.
pub fn mse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Data(format!(
            "mse: length mismatch ({} vs {})",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Data("mse: empty sequences".into()));
    }
    let s: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (t - p) * (t - p)).sum();
    let out = s / y_true.len() as f64;
    if !out.is_finite() {
        return Err(Error::Numeric("mse: non-finite result (diverged predictions?)".into()));
    }
    Ok(out)
}

/// Coefficient of determination 1 − SS_res/SS_tot, with SS_tot about the mean
/// of `y_true`. Errors when `y_true` is constant (SS_tot = 0).
pub fn r2_score(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Data(format!(
            "r2: length mismatch ({} vs {})",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.len() < 2 {
        return Err(Error::Data("r2: need at least 2 observations".into()));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::Data("r2: y_true is constant, R^2 undefined".into()));
    }
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (t - p) * (t - p)).sum();
    let out = 1.0 - ss_res / ss_tot;
    if !out.is_finite() {
        return Err(Error::Numeric("r2: non-finite result (diverged predictions?)".into()));
    }
    Ok(out)
}

/// Whether scores came from the federated or the centralized run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Federated,
    Centralized,
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvalMode::Federated => write!(f, "federated"),
            EvalMode::Centralized => write!(f, "centralized"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClientScore {
    pub r2: f64,
    pub mse: f64,
}

/// Per-client scores plus their unweighted average.
#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub per_client: BTreeMap<u32, ClientScore>,
    pub average_r2: f64,
    pub h: usize,
    pub p: usize,
    pub mode: EvalMode,
}

/// Score every client. Both maps give, per node, the flattened concatenation
/// of its test windows' p steps, in original (inverse-scaled) units.
pub fn evaluate(
    predictions: &BTreeMap<u32, Vec<f64>>,
    actuals: &BTreeMap<u32, Vec<f64>>,
    mode: EvalMode,
    h: usize,
    p: usize,
) -> Result<EvaluationReport> {
    if predictions.is_empty() {
        return Err(Error::Data("evaluate: no clients".into()));
    }
    if predictions.len() != actuals.len()
        || !predictions.keys().all(|k| actuals.contains_key(k))
    {
        return Err(Error::Data("evaluate: prediction/actual client sets differ".into()));
    }
    let mut per_client = BTreeMap::new();
    for (node, pred) in predictions {
        let act = &actuals[node];
        per_client.insert(
            *node,
            ClientScore { r2: r2_score(act, pred)?, mse: mse(act, pred)? },
        );
    }
    let average_r2 =
        per_client.values().map(|s| s.r2).sum::<f64>() / per_client.len() as f64;
    Ok(EvaluationReport { per_client, average_r2, h, p, mode })
}
