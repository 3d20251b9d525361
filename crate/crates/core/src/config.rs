//! Run configuration: one TOML file, fully defaulted, unknown keys
//! rejected; command-line flags override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federation::{ScalerScope, WeightBy};
use crate::topology::GraphMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphModeCfg {
    Directed,
    Undirected,
}

impl From<GraphModeCfg> for GraphMode {
    fn from(v: GraphModeCfg) -> GraphMode {
        match v {
            GraphModeCfg::Directed => GraphMode::Directed,
            GraphModeCfg::Undirected => GraphMode::Undirected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerScopeCfg {
    Train,
    Full,
}

impl From<ScalerScopeCfg> for ScalerScope {
    fn from(v: ScalerScopeCfg) -> ScalerScope {
        match v {
            ScalerScopeCfg::Train => ScalerScope::Train,
            ScalerScopeCfg::Full => ScalerScope::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightByCfg {
    Windows,
    RawSamples,
}

impl From<WeightByCfg> for WeightBy {
    fn from(v: WeightByCfg) -> WeightBy {
        match v {
            WeightByCfg::Windows => WeightBy::Windows,
            WeightByCfg::RawSamples => WeightBy::RawSamples,
        }
    }
}

/// The full experiment configuration. Every field has a default; the
/// defaults follow the reference hyperparameters (batch 256, lr 0.001,
/// 50 rounds, dropout 0.2, β 0.5, q 6, 6-hour resampling, MA window 28,
/// quantiles at 0.2/0.8).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Root seed; all randomness derives from it through named streams.
    pub seed: u64,
    pub data_dir: PathBuf,
    pub processed_dir: PathBuf,
    pub output_dir: PathBuf,
    pub topology_file: PathBuf,
    /// History window (input steps).
    pub h: usize,
    /// Prediction horizon (output steps).
    pub p: usize,
    /// Sweep axes used by `evaluate` when no explicit h/p is given.
    pub h_sweep: Vec<usize>,
    pub p_sweep: Vec<usize>,
    pub rounds: usize,
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout: f64,
    /// Global-norm gradient clip; set <= 0 to disable.
    pub clip_norm: f64,
    /// Mean-vs-std mix in the link utilization score.
    pub beta: f64,
    /// Number of top links reported.
    pub top_q: usize,
    /// Length multiplier for synthetic data generation.
    pub scale: f64,
    pub graph_mode: GraphModeCfg,
    /// Merge the two arcs of each undirected link before scoring.
    pub undirected_aggregate: bool,
    pub scaler_scope: ScalerScopeCfg,
    pub weight_by: WeightByCfg,
    pub resample_hours: usize,
    pub q_low: f64,
    pub q_high: f64,
    pub iqr_k: f64,
    pub ma_window: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            data_dir: PathBuf::from("data/raw"),
            processed_dir: PathBuf::from("data/processed"),
            output_dir: PathBuf::from("out"),
            topology_file: PathBuf::from("data/brain.edges"),
            h: 1,
            p: 1,
            h_sweep: vec![12, 8, 4, 1],
            p_sweep: vec![12, 8, 4, 1],
            rounds: 50,
            hidden_size: 64,
            learning_rate: 0.001,
            batch_size: 256,
            dropout: 0.2,
            clip_norm: 5.0,
            beta: 0.5,
            top_q: 6,
            scale: 1.0,
            graph_mode: GraphModeCfg::Undirected,
            undirected_aggregate: false,
            scaler_scope: ScalerScopeCfg::Train,
            weight_by: WeightByCfg::Windows,
            resample_hours: 6,
            q_low: 0.2,
            q_high: 0.8,
            iqr_k: 1.5,
            ma_window: 28,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(Error::Usage(m));
        if self.h == 0 || self.p == 0 {
            return usage(format!("h and p must be >= 1 (got h={}, p={})", self.h, self.p));
        }
        if self.h_sweep.is_empty() || self.p_sweep.is_empty() {
            return usage("h_sweep and p_sweep must be non-empty".into());
        }
        if self.h_sweep.contains(&0) || self.p_sweep.contains(&0) {
            return usage("sweep values must be >= 1".into());
        }
        if self.rounds == 0 {
            return usage("rounds must be >= 1".into());
        }
        if self.hidden_size == 0 {
            return usage("hidden_size must be >= 1".into());
        }
        if !(self.learning_rate > 0.0) {
            return usage(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return usage("batch_size must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return usage(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return usage(format!("beta must be in [0, 1], got {}", self.beta));
        }
        if self.top_q == 0 {
            return usage("top_q must be >= 1".into());
        }
        if !(self.scale > 0.0) {
            return usage(format!("scale must be positive, got {}", self.scale));
        }
        if self.resample_hours == 0 {
            return usage("resample_hours must be >= 1".into());
        }
        if !(0.0 <= self.q_low && self.q_low < self.q_high && self.q_high <= 1.0) {
            return usage(format!(
                "quantiles must satisfy 0 <= q_low < q_high <= 1, got {} and {}",
                self.q_low, self.q_high
            ));
        }
        if !(self.iqr_k >= 0.0) {
            return usage(format!("iqr_k must be non-negative, got {}", self.iqr_k));
        }
        if self.ma_window == 0 {
            return usage("ma_window must be >= 1".into());
        }
        Ok(())
    }

    /// Parse a TOML config file. Unknown keys are rejected.
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Usage(format!("{}: {}", path.display(), e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_values() {
        let c = RunConfig::default();
        assert_eq!(c.batch_size, 256);
        assert_eq!(c.learning_rate, 0.001);
        assert_eq!(c.rounds, 50);
        assert_eq!(c.dropout, 0.2);
        assert_eq!(c.beta, 0.5);
        assert_eq!(c.top_q, 6);
        assert_eq!(c.hidden_size, 64);
        assert_eq!((c.h, c.p), (1, 1));
        assert_eq!(c.h_sweep, vec![12, 8, 4, 1]);
        assert_eq!(c.resample_hours, 6);
        assert_eq!((c.q_low, c.q_high), (0.2, 0.8));
        assert_eq!(c.ma_window, 28);
        c.validate().unwrap();
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::default();
        c.seed = 7;
        c.h = 4;
        c.weight_by = WeightByCfg::RawSamples;
        c.scaler_scope = ScalerScopeCfg::Full;
        c.graph_mode = GraphModeCfg::Directed;
        let text = c.to_toml();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg: RunConfig = toml::from_str("seed = 9\nh = 2\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.h, 2);
        assert_eq!(cfg.batch_size, 256);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: std::result::Result<RunConfig, _> = toml::from_str("learning_rte = 0.1\n");
        assert!(r.is_err());
    }

    #[test]
    fn enum_spellings() {
        let cfg: RunConfig =
            toml::from_str("weight_by = \"raw_samples\"\nscaler_scope = \"full\"\ngraph_mode = \"directed\"\n")
                .unwrap();
        assert_eq!(cfg.weight_by, WeightByCfg::RawSamples);
        assert_eq!(cfg.scaler_scope, ScalerScopeCfg::Full);
        assert_eq!(cfg.graph_mode, GraphModeCfg::Directed);
    }

    #[test]
    fn validation_catches_bad_values() {
        for text in [
            "h = 0",
            "rounds = 0",
            "dropout = 1.0",
            "beta = 1.5",
            "learning_rate = 0.0",
            "batch_size = 0",
            "q_low = 0.9\nq_high = 0.2",
            "scale = 0.0",
            "h_sweep = []",
        ] {
            let cfg: RunConfig = toml::from_str(text).unwrap();
            assert!(cfg.validate().is_err(), "accepted: {text}");
        }
    }

    #[test]
    fn file_loading_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 3\nbeta = 0.25\n").unwrap();
        let cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!((cfg.seed, cfg.beta), (3, 0.25));

        std::fs::write(&path, "not valid toml [").unwrap();
        assert!(matches!(RunConfig::from_file(&path), Err(Error::Usage(_))));

        assert!(matches!(
            RunConfig::from_file(&dir.path().join("missing.toml")),
            Err(Error::Io { .. })
        ));
    }
}
