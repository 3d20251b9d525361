//! Per-node traffic series: ingestion, synthesis, and the four-stage
//! preprocessing pipeline (6-hour mean resampling, IQR outlier repair,
//! trailing moving average, z-score standardization — in exactly that order).

use std::io::BufRead;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// One client's scalar traffic series.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSeries {
    /// Client index k ∈ {1..|K|}.
    pub node_id: u32,
    pub values: Vec<f64>,
    /// 1.0 for raw hourly data, 6.0 after resampling.
    pub sample_interval_hours: f64,
}

impl NodeSeries {
    pub fn new(node_id: u32, values: Vec<f64>, sample_interval_hours: f64) -> Self {
        NodeSeries { node_id, values, sample_interval_hours }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// z-score standardization parameters (population statistics).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaler {
    pub mean: f64,
    pub std_dev: f64,
}

impl Scaler {
    pub fn apply_value(&self, x: f64) -> f64 {
        (x - self.mean) / self.std_dev
    }

    pub fn invert_value(&self, z: f64) -> f64 {
        z * self.std_dev + self.mean
    }
}

/// Parameters of the synthetic traffic generator (stand-in for real
/// node-level measurements; the shape is base + sinusoid + trend + noise +
/// occasional spikes, clamped at zero).
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub length: usize,
    pub base_level: f64,
    pub diurnal_amplitude: f64,
    pub diurnal_period_samples: usize,
    pub trend_per_sample: f64,
    pub noise_std: f64,
    pub spike_probability: f64,
    pub spike_magnitude: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::Usage("synthetic length must be >= 1".into()));
        }
        if self.diurnal_period_samples == 0 {
            return Err(Error::Usage("synthetic period must be >= 1".into()));
        }
        if self.noise_std < 0.0 {
            return Err(Error::Usage("noise_std must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.spike_probability) {
            return Err(Error::Usage("spike_probability must lie in [0,1]".into()));
        }
        Ok(())
    }
}

/// Generate a synthetic hourly series. Deterministic for a given spec: per
/// sample, one standard-normal draw (noise) then one uniform draw (spike
/// trigger), from `ChaCha8Rng::seed_from_u64(spec.seed)`.
pub fn generate_synthetic(spec: &SyntheticSpec, node_id: u32) -> Result<NodeSeries> {
    spec.validate()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
    let period = spec.diurnal_period_samples as f64;
    let mut values = Vec::with_capacity(spec.length);
    for t in 0..spec.length {
        let tf = t as f64;
        let noise: f64 = if spec.noise_std > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * spec.noise_std
        } else {
            0.0
        };
        let spike = if spec.spike_probability > 0.0 && rng.gen::<f64>() < spec.spike_probability {
            spec.spike_magnitude
        } else {
            0.0
        };
        let v = spec.base_level
            + spec.diurnal_amplitude * (2.0 * std::f64::consts::PI * tf / period).sin()
            + spec.trend_per_sample * tf
            + noise
            + spike;
        values.push(v.max(0.0));
    }
    Ok(NodeSeries::new(node_id, values, 1.0))
}

/// Read a single-column CSV of hourly values. A non-numeric first line is
/// treated as a header and skipped; every following line must parse to a
/// finite, non-negative real.
pub fn ingest_series(path: &Path, node_id: u32) -> Result<NodeSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut values = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match trimmed.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => values.push(v),
            Ok(v) => {
                return Err(Error::Data(format!(
                    "{}: line {}: value {v} is not a finite non-negative real",
                    path.display(),
                    i + 1
                )))
            }
            Err(_) if i == 0 => continue, // header line
            Err(_) => {
                return Err(Error::Data(format!(
                    "{}: line {}: cannot parse {trimmed:?} as a real number",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    if values.is_empty() {
        return Err(Error::Data(format!("{}: no data records", path.display())));
    }
    Ok(NodeSeries::new(node_id, values, 1.0))
}

/// Mean over non-overlapping blocks of `window_samples`; the trailing partial
/// block is discarded. Multiplies the sample interval accordingly.
pub fn resample_mean(series: &NodeSeries, window_samples: usize) -> Result<NodeSeries> {
    if window_samples == 0 {
        return Err(Error::Usage("resample window must be >= 1".into()));
    }
    if series.len() < window_samples {
        return Err(Error::Data(format!(
            "node {}: series of length {} is shorter than one resample window ({})",
            series.node_id,
            series.len(),
            window_samples
        )));
    }
    let blocks = series.len() / window_samples;
    let mut out = Vec::with_capacity(blocks);
    for j in 0..blocks {
        let chunk = &series.values[j * window_samples..(j + 1) * window_samples];
        out.push(chunk.iter().sum::<f64>() / window_samples as f64);
    }
    Ok(NodeSeries::new(
        series.node_id,
        out,
        series.sample_interval_hours * window_samples as f64,
    ))
}

/// Empirical quantile with linear interpolation between order statistics:
/// position `q·(n−1)` in the sorted data.
pub fn quantile_linear(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Result of IQR outlier repair.
#[derive(Debug, Clone)]
pub struct RepairOutcome {
    pub series: NodeSeries,
    /// Number of values replaced by the in-range mean.
    pub replaced: usize,
    /// True when every value was flagged out of range; the input is then
    /// returned unchanged.
    pub degenerate: bool,
}

/// Replace values outside `[Q1 − k·IQR, Q3 + k·IQR]` by the mean of the
/// in-range values, with Q1/Q3 the `q_low`/`q_high` empirical quantiles of
/// the pre-repair series.
pub fn replace_outliers_iqr(
    series: &NodeSeries,
    q_low: f64,
    q_high: f64,
    k: f64,
) -> Result<RepairOutcome> {
    if series.len() < 5 {
        return Err(Error::Data(format!(
            "node {}: need >= 5 samples for quantile repair, have {}",
            series.node_id,
            series.len()
        )));
    }
    let mut sorted = series.values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let q1 = quantile_linear(&sorted, q_low);
    let q3 = quantile_linear(&sorted, q_high);
    let iqr = q3 - q1;
    let lo = q1 - k * iqr;
    let hi = q3 + k * iqr;

    let in_range: Vec<f64> =
        series.values.iter().copied().filter(|v| (lo..=hi).contains(v)).collect();
    if in_range.is_empty() {
        return Ok(RepairOutcome { series: series.clone(), replaced: 0, degenerate: true });
    }
    let mean = in_range.iter().sum::<f64>() / in_range.len() as f64;
    let mut replaced = 0;
    let values = series
        .values
        .iter()
        .map(|&v| {
            if (lo..=hi).contains(&v) {
                v
            } else {
                replaced += 1;
                mean
            }
        })
        .collect();
    Ok(RepairOutcome {
        series: NodeSeries::new(series.node_id, values, series.sample_interval_hours),
        replaced,
        degenerate: false,
    })
}

/// Trailing (causal) moving average with partial warm-up windows:
/// `out[t] = mean(values[max(0, t−window+1) ..= t])`. Length is preserved.
pub fn moving_average(series: &NodeSeries, window: usize) -> Result<NodeSeries> {
    if window == 0 {
        return Err(Error::Usage("moving-average window must be >= 1".into()));
    }
    let n = series.len();
    let mut out = Vec::with_capacity(n);
    let mut running = 0.0;
    for t in 0..n {
        running += series.values[t];
        if t >= window {
            running -= series.values[t - window];
        }
        let count = (t + 1).min(window);
        out.push(running / count as f64);
    }
    Ok(NodeSeries::new(series.node_id, out, series.sample_interval_hours))
}

/// Population mean/std of a slice; errors on zero variance.
pub fn fit_scaler_slice(values: &[f64], node_id: u32) -> Result<Scaler> {
    if values.len() < 2 {
        return Err(Error::Data(format!(
            "node {node_id}: need >= 2 samples to fit a scaler, have {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std_dev = var.sqrt();
    if std_dev <= 0.0 {
        return Err(Error::Data(format!(
            "node {node_id}: zero-variance series, standardization undefined"
        )));
    }
    Ok(Scaler { mean, std_dev })
}

pub fn fit_scaler(series: &NodeSeries) -> Result<Scaler> {
    fit_scaler_slice(&series.values, series.node_id)
}

pub fn apply_scaler(series: &NodeSeries, scaler: &Scaler) -> NodeSeries {
    NodeSeries::new(
        series.node_id,
        series.values.iter().map(|&v| scaler.apply_value(v)).collect(),
        series.sample_interval_hours,
    )
}

pub fn invert_scaler(series: &NodeSeries, scaler: &Scaler) -> NodeSeries {
    NodeSeries::new(
        series.node_id,
        series.values.iter().map(|&v| scaler.invert_value(v)).collect(),
        series.sample_interval_hours,
    )
}

/// Which samples the scaler statistics are computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitScope {
    /// Fit on the whole preprocessed series.
    Full,
    /// Fit on the leading `len` samples (the samples the training windows
    /// touch), then apply to everything.
    Prefix(usize),
}

/// Stage parameters of the preprocessing pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessParams {
    pub resample_window: usize,
    pub q_low: f64,
    pub q_high: f64,
    pub iqr_k: f64,
    pub ma_window: usize,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        PreprocessParams {
            resample_window: 6,
            q_low: 0.20,
            q_high: 0.80,
            iqr_k: 1.5,
            ma_window: 28,
        }
    }
}

/// Output of the full pipeline: the standardized series, its scaler, and the
/// outlier-repair bookkeeping.
#[derive(Debug, Clone)]
pub struct PreprocessedSeries {
    pub series: NodeSeries,
    pub scaler: Scaler,
    pub repair: RepairOutcome,
}

/// Run resample → IQR repair → moving average → standardization, in exactly
/// this order, returning the scaled series and the scaler that produced it.
pub fn preprocess_pipeline(
    raw: &NodeSeries,
    params: &PreprocessParams,
    scope: FitScope,
) -> Result<PreprocessedSeries> {
    let resampled = resample_mean(raw, params.resample_window)?;
    let repair = replace_outliers_iqr(&resampled, params.q_low, params.q_high, params.iqr_k)?;
    let smoothed = moving_average(&repair.series, params.ma_window)?;
    let fit_slice = match scope {
        FitScope::Full => &smoothed.values[..],
        FitScope::Prefix(len) => {
            if len < 2 || len > smoothed.len() {
                return Err(Error::Data(format!(
                    "node {}: scaler fit prefix {len} outside 2..={}",
                    raw.node_id,
                    smoothed.len()
                )));
            }
            &smoothed.values[..len]
        }
    };
    let scaler = fit_scaler_slice(fit_slice, raw.node_id)?;
    let series = apply_scaler(&smoothed, &scaler);
    Ok(PreprocessedSeries { series, scaler, repair })
}
