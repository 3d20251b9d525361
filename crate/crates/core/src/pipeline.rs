//! End-to-end command implementations behind the CLI: synthetic corpus
//! generation, preprocessing, training, evaluation sweeps, link ranking,
//! and the artifact files they exchange. All files are plain CSV with
//! round-trip-exact float formatting, so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::federation::{
    predict_clients, prepare_client, run_centralized, run_federated, ClientData,
    ClientPredictions, RunOutcome, TrainParams,
};
use crate::linkrisk::{
    accumulate_link_traffic, aggregate_stats, align_truncate, compare_actual_predicted,
    link_utilization_scores, merge_undirected, most_utilized_sequence, rank_links,
    sequence_stats, LinkTrafficCube, RankComparison,
};
use crate::metrics::{evaluate, EvalMode, EvaluationReport};
use crate::neuralnet::Seq2SeqModel;
use crate::rng::stream_seed;
use crate::topology::Topology;
use crate::traffic_data::{
    generate_synthetic, ingest_series, moving_average, replace_outliers_iqr, resample_mean,
    NodeSeries, SyntheticSpec,
};
use crate::windowing::SplitSpec;

/// Hourly sample counts of the nine reference nodes at scale 1.0. After
/// 6-hour resampling at scale 6.0 the processed series lengths equal these
/// same numbers.
pub const PINNED_HOURLY_COUNTS: [usize; 9] = [845, 945, 1445, 1047, 1445, 645, 547, 667, 967];

pub const NODE_COUNT: usize = PINNED_HOURLY_COUNTS.len();

/// The frozen synthetic family: a diurnal-style sinusoid (period 576 hourly
/// samples) over a node-specific base level with mild linear growth, heavy
/// Gaussian noise, and rare upward spikes. Node index k ∈ 1..=9.
pub fn synthetic_spec_for_node(cfg: &RunConfig, k: u32) -> SyntheticSpec {
    let count = PINNED_HOURLY_COUNTS[(k as usize - 1) % NODE_COUNT];
    let length = ((count as f64 * cfg.scale).round() as usize).max(cfg.h + cfg.p + 10);
    let amplitude = 20.0 + 1.5 * k as f64;
    SyntheticSpec {
        length,
        base_level: 300.0 + 30.0 * k as f64,
        diurnal_amplitude: amplitude,
        diurnal_period_samples: 576,
        trend_per_sample: 0.0002,
        noise_std: 2.3 * amplitude,
        spike_probability: 0.01,
        spike_magnitude: 3.0 * amplitude,
        seed: stream_seed(cfg.seed, "synthetic", k as u64),
    }
}

/// Generate the full raw hourly corpus in memory.
pub fn generate_corpus(cfg: &RunConfig) -> Result<Vec<NodeSeries>> {
    (1..=NODE_COUNT as u32)
        .map(|k| generate_synthetic(&synthetic_spec_for_node(cfg, k), k))
        .collect()
}

fn node_file(dir: &Path, k: u32) -> PathBuf {
    dir.join(format!("node_{k}.csv"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn fmt_series(series: &NodeSeries) -> String {
    let mut out = String::with_capacity(series.len() * 8);
    for v in &series.values {
        let _ = writeln!(out, "{v:?}");
    }
    out
}

/// `gen-data`: write one raw hourly CSV per node (one value per line).
pub fn cmd_gen_data(cfg: &RunConfig) -> Result<()> {
    for series in generate_corpus(cfg)? {
        let path = node_file(&cfg.data_dir, series.node_id);
        write_text(&path, &fmt_series(&series))?;
        println!("wrote {} ({} samples)", path.display(), series.len());
    }
    Ok(())
}

fn load_series_dir(dir: &Path, interval_hours: f64) -> Result<Vec<NodeSeries>> {
    let mut out = Vec::new();
    for k in 1..=NODE_COUNT as u32 {
        let path = node_file(dir, k);
        if !path.exists() {
            continue;
        }
        let mut s = ingest_series(&path, k)?;
        s.sample_interval_hours = interval_hours;
        out.push(s);
    }
    if out.is_empty() {
        return Err(Error::Data(format!(
            "no node_<k>.csv files found in {} (run gen-data / preprocess first?)",
            dir.display()
        )));
    }
    Ok(out)
}

/// `preprocess`: 6-hour mean resampling → quantile outlier repair → trailing
/// moving average. Standardization is deliberately deferred to training,
/// where its fit scope can follow the train split of each (h, p) setting.
pub fn cmd_preprocess(cfg: &RunConfig) -> Result<()> {
    let raw = load_series_dir(&cfg.data_dir, 1.0)?;
    for series in &raw {
        let resampled = resample_mean(series, cfg.resample_hours)?;
        let repair = replace_outliers_iqr(&resampled, cfg.q_low, cfg.q_high, cfg.iqr_k)?;
        let smoothed = moving_average(&repair.series, cfg.ma_window)?;
        let path = node_file(&cfg.processed_dir, series.node_id);
        write_text(&path, &fmt_series(&smoothed))?;
        println!(
            "wrote {} ({} samples, {} outliers repaired{})",
            path.display(),
            smoothed.len(),
            repair.replaced,
            if repair.degenerate { ", degenerate repair skipped" } else { "" }
        );
    }
    Ok(())
}

/// Load the processed (unstandardized) series written by `preprocess`.
pub fn load_processed(cfg: &RunConfig) -> Result<Vec<NodeSeries>> {
    load_series_dir(&cfg.processed_dir, cfg.resample_hours as f64)
}

/// Standardize, window, and split every processed series for one (h, p).
pub fn build_clients(cfg: &RunConfig, processed: &[NodeSeries], h: usize, p: usize) -> Result<Vec<ClientData>> {
    processed
        .iter()
        .map(|s| prepare_client(s, h, p, &SplitSpec::default(), cfg.scaler_scope.into()))
        .collect()
}

pub fn train_params(cfg: &RunConfig, h: usize, p: usize) -> TrainParams {
    TrainParams {
        h,
        p,
        hidden: cfg.hidden_size,
        dropout: cfg.dropout,
        rounds: cfg.rounds,
        learning_rate: cfg.learning_rate,
        batch_size: cfg.batch_size,
        clip_norm: cfg.clip_norm,
        seed: cfg.seed,
        weight_by: cfg.weight_by.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    Federated,
    Centralized,
}

impl TrainMode {
    pub fn tag(self) -> &'static str {
        match self {
            TrainMode::Federated => "fed",
            TrainMode::Centralized => "central",
        }
    }

    pub fn eval_mode(self) -> EvalMode {
        match self {
            TrainMode::Federated => EvalMode::Federated,
            TrainMode::Centralized => EvalMode::Centralized,
        }
    }
}

pub fn weights_file(cfg: &RunConfig, mode: TrainMode, h: usize, p: usize) -> PathBuf {
    cfg.output_dir.join(format!("weights_{}_h{h}_p{p}.csv", mode.tag()))
}

pub fn history_file(cfg: &RunConfig, mode: TrainMode, h: usize, p: usize) -> PathBuf {
    cfg.output_dir.join(format!("history_{}_h{h}_p{p}.csv", mode.tag()))
}

pub fn pred_file(cfg: &RunConfig, mode: TrainMode, h: usize, p: usize, node: u32) -> PathBuf {
    cfg.output_dir.join(format!("pred_{}_h{h}_p{p}_node{node}.csv", mode.tag()))
}

pub fn eval_file(cfg: &RunConfig, mode: TrainMode, h: usize, p: usize) -> PathBuf {
    cfg.output_dir.join(format!("eval_{}_h{h}_p{p}.csv", mode.tag()))
}

pub fn grid_file(cfg: &RunConfig, mode: TrainMode) -> PathBuf {
    cfg.output_dir.join(format!("grid_{}.csv", mode.tag()))
}

fn write_weights(path: &Path, model: &Seq2SeqModel, mode: TrainMode) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# fedtraffic weights v1");
    let _ = writeln!(
        out,
        "# mode={} h={} p={} hidden={} dropout={:?}",
        mode.tag(),
        model.h,
        model.p,
        model.hidden,
        model.dropout_rate
    );
    for v in model.get_weights() {
        let _ = writeln!(out, "{v:?}");
    }
    write_text(path, &out)
}

/// Load a weights file into a model shell matching the recorded shape.
pub fn read_weights(path: &Path, h: usize, p: usize, cfg: &RunConfig) -> Result<Seq2SeqModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let magic = lines.next().unwrap_or_default();
    if magic != "# fedtraffic weights v1" {
        return Err(Error::Data(format!("{}: not a weights file", path.display())));
    }
    let meta = lines.next().unwrap_or_default();
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for tok in meta.trim_start_matches('#').split_whitespace() {
        if let Some((k, v)) = tok.split_once('=') {
            fields.insert(k, v);
        }
    }
    let get_usize = |key: &str| -> Result<usize> {
        fields
            .get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Data(format!("{}: missing {key} in header", path.display())))
    };
    let (fh, fp, fhidden) = (get_usize("h")?, get_usize("p")?, get_usize("hidden")?);
    if (fh, fp) != (h, p) || fhidden != cfg.hidden_size {
        return Err(Error::Data(format!(
            "{}: weights are for h={fh} p={fp} hidden={fhidden}, expected h={h} p={p} hidden={}",
            path.display(),
            cfg.hidden_size
        )));
    }
    let mut empty = Seq2SeqModel::init(
        h,
        p,
        cfg.hidden_size,
        cfg.dropout,
        &mut crate::rng::stream_rng(0, "init", 0),
    );
    let mut values = Vec::with_capacity(empty.param_count());
    for (i, line) in lines.enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(t.parse::<f64>().map_err(|_| {
            Error::Data(format!("{}: line {}: bad weight value {t:?}", path.display(), i + 3))
        })?);
    }
    empty.set_weights(&values)?;
    Ok(empty)
}

fn write_history(path: &Path, outcome: &RunOutcome) -> Result<()> {
    let mut out = String::from("round,train_loss,val_loss\n");
    for r in &outcome.history {
        let _ = writeln!(out, "{},{:?},{:?}", r.round, r.train_loss, r.val_loss);
    }
    write_text(path, &out)
}

fn write_pred_dump(path: &Path, preds: &ClientPredictions) -> Result<()> {
    let mut out = String::from("window,step,predicted,actual\n");
    for w in 0..preds.predicted.rows {
        for t in 0..preds.predicted.cols {
            let _ = writeln!(out, "{w},{t},{:?},{:?}", preds.predicted.at(w, t), preds.actual.at(w, t));
        }
    }
    write_text(path, &out)
}

/// Read one prediction dump back as (predicted windows, actual windows).
pub fn read_pred_dump(path: &Path, p: usize) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut predicted: Vec<Vec<f64>> = Vec::new();
    let mut actual: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        let bad = || Error::Data(format!("{}: line {}: malformed row", path.display(), i + 1));
        if parts.len() != 4 {
            return Err(bad());
        }
        let w: usize = parts[0].parse().map_err(|_| bad())?;
        let t: usize = parts[1].parse().map_err(|_| bad())?;
        let pv: f64 = parts[2].parse().map_err(|_| bad())?;
        let av: f64 = parts[3].parse().map_err(|_| bad())?;
        if w != predicted.len().wrapping_sub(1) || t >= p {
            if t != 0 || w != predicted.len() {
                return Err(Error::Data(format!(
                    "{}: line {}: rows out of order",
                    path.display(),
                    i + 1
                )));
            }
            predicted.push(Vec::with_capacity(p));
            actual.push(Vec::with_capacity(p));
        }
        let last = predicted.len() - 1;
        if t != predicted[last].len() {
            return Err(Error::Data(format!(
                "{}: line {}: rows out of order",
                path.display(),
                i + 1
            )));
        }
        predicted[last].push(pv);
        actual[last].push(av);
    }
    if predicted.is_empty() || predicted.iter().any(|w| w.len() != p) {
        return Err(Error::Data(format!(
            "{}: dump does not contain complete {p}-step windows",
            path.display()
        )));
    }
    Ok((predicted, actual))
}

/// `train`: run one (h, p) cell in the requested mode and write weights,
/// history, and per-node prediction dumps.
pub fn cmd_train(cfg: &RunConfig, mode: TrainMode) -> Result<RunOutcome> {
    // Fail early if the topology file is unusable; training is expensive.
    let processed = load_processed(cfg)?;
    let node_ids: Vec<u32> = processed.iter().map(|s| s.node_id).collect();
    Topology::load(&cfg.topology_file, cfg.graph_mode.into(), Some(&node_ids))?;
    let clients = build_clients(cfg, &processed, cfg.h, cfg.p)?;
    let params = train_params(cfg, cfg.h, cfg.p);
    let outcome = match mode {
        TrainMode::Federated => run_federated(&clients, &params)?,
        TrainMode::Centralized => run_centralized(&clients, &params)?,
    };
    write_weights(&weights_file(cfg, mode, cfg.h, cfg.p), &outcome.model, mode)?;
    write_history(&history_file(cfg, mode, cfg.h, cfg.p), &outcome)?;
    for preds in &outcome.predictions {
        write_pred_dump(&pred_file(cfg, mode, cfg.h, cfg.p, preds.node_id), preds)?;
    }
    let last = outcome.history.last().expect("rounds >= 1");
    println!(
        "{} h={} p={}: {} rounds, final train loss {:.6}, val loss {:.6}",
        mode.tag(),
        cfg.h,
        cfg.p,
        outcome.history.len(),
        last.train_loss,
        last.val_loss
    );
    Ok(outcome)
}

fn flatten_predictions(preds: &[ClientPredictions]) -> (BTreeMap<u32, Vec<f64>>, BTreeMap<u32, Vec<f64>>) {
    let mut pm = BTreeMap::new();
    let mut am = BTreeMap::new();
    for c in preds {
        pm.insert(c.node_id, c.predicted.data.clone());
        am.insert(c.node_id, c.actual.data.clone());
    }
    (pm, am)
}

fn write_eval(path: &Path, report: &EvaluationReport) -> Result<()> {
    let mut out = String::from("node,r2,mse\n");
    for (node, s) in &report.per_client {
        let _ = writeln!(out, "{node},{:?},{:?}", s.r2, s.mse);
    }
    let _ = writeln!(out, "average,{:?},", report.average_r2);
    write_text(path, &out)
}

/// Evaluate one (h, p) cell from its stored weights: rebuild the clients,
/// predict, score R²/MSE per client in original units.
pub fn evaluate_cell(
    cfg: &RunConfig,
    processed: &[NodeSeries],
    mode: TrainMode,
    h: usize,
    p: usize,
) -> Result<EvaluationReport> {
    let wpath = weights_file(cfg, mode, h, p);
    if !wpath.exists() {
        return Err(Error::Data(format!(
            "{}: missing weights (train {} h={h} p={p} first)",
            wpath.display(),
            mode.tag()
        )));
    }
    let model = read_weights(&wpath, h, p, cfg)?;
    let clients = build_clients(cfg, processed, h, p)?;
    let preds = predict_clients(&model, &clients, cfg.batch_size)?;
    let (pm, am) = flatten_predictions(&preds);
    let report = evaluate(&pm, &am, mode.eval_mode(), h, p)?;
    write_eval(&eval_file(cfg, mode, h, p), &report)?;
    Ok(report)
}

/// `evaluate`: score every (h, p) in the sweep (or the single configured
/// cell when `single_cell` is set) and write the average-R² grid.
pub fn cmd_evaluate(cfg: &RunConfig, mode: TrainMode, single_cell: bool) -> Result<Vec<EvaluationReport>> {
    let processed = load_processed(cfg)?;
    let (hs, ps) = if single_cell {
        (vec![cfg.h], vec![cfg.p])
    } else {
        (cfg.h_sweep.clone(), cfg.p_sweep.clone())
    };
    let mut reports = Vec::new();
    let mut grid = String::from("h_p");
    for p in &ps {
        let _ = write!(grid, ",{p}");
    }
    grid.push('\n');
    for &h in &hs {
        let _ = write!(grid, "{h}");
        for &p in &ps {
            let report = evaluate_cell(cfg, &processed, mode, h, p)?;
            let _ = write!(grid, ",{:?}", report.average_r2);
            println!(
                "{} h={h} p={p}: average R^2 = {:.4} over {} clients",
                mode.tag(),
                report.average_r2,
                report.per_client.len()
            );
            reports.push(report);
        }
        grid.push('\n');
    }
    write_grid(cfg, mode, &grid)?;
    Ok(reports)
}

fn write_grid(cfg: &RunConfig, mode: TrainMode, grid: &str) -> Result<()> {
    write_text(&grid_file(cfg, mode), grid)
}

/// Everything `rank-links` produces, for callers that want the numbers.
#[derive(Debug, Clone)]
pub struct RankOutcome {
    pub labels: Vec<String>,
    pub zeta_predicted: Vec<f64>,
    pub zeta_actual: Vec<f64>,
    pub comparison: RankComparison,
    pub clamped_negatives: usize,
}

/// Core of `rank-links`, reusable without touching the filesystem: given
/// per-node predicted/actual windows in original units, route, accumulate,
/// score, and compare.
pub fn rank_from_forecasts(
    topology: &Topology,
    predicted: &BTreeMap<u32, Vec<Vec<f64>>>,
    actual: &BTreeMap<u32, Vec<Vec<f64>>>,
    beta: f64,
    q: usize,
    undirected_aggregate: bool,
) -> Result<(RankOutcome, LinkTrafficCube, LinkTrafficCube)> {
    let paths = topology.all_pairs_paths()?;
    let fp = align_truncate(predicted)?;
    let fa = align_truncate(actual)?;
    let cube_p = accumulate_link_traffic(&fp, topology, &paths)?;
    let cube_a = accumulate_link_traffic(&fa, topology, &paths)?;
    let (labels, cube_p, cube_a) = if undirected_aggregate {
        let (labels, mp) = merge_undirected(topology, &cube_p);
        let (_, ma) = merge_undirected(topology, &cube_a);
        (
            labels,
            LinkTrafficCube {
                per_arc: mp,
                sequence_count: cube_p.sequence_count,
                horizon: cube_p.horizon,
            },
            LinkTrafficCube {
                per_arc: ma,
                sequence_count: cube_a.sequence_count,
                horizon: cube_a.horizon,
            },
        )
    } else {
        let labels = topology.arcs.iter().map(|a| a.label.clone()).collect();
        (labels, cube_p, cube_a)
    };
    let zeta_predicted = link_utilization_scores(&aggregate_stats(&sequence_stats(&cube_p)), beta);
    let zeta_actual = link_utilization_scores(&aggregate_stats(&sequence_stats(&cube_a)), beta);
    let comparison = compare_actual_predicted(&labels, &zeta_predicted, &zeta_actual, q)?;
    Ok((
        RankOutcome {
            labels,
            zeta_predicted,
            zeta_actual,
            comparison,
            clamped_negatives: fp.clamped_negatives,
        },
        cube_p,
        cube_a,
    ))
}

fn full_rank_positions(labels: &[String], zeta: &[f64]) -> Result<BTreeMap<String, usize>> {
    let ranked = rank_links(labels, zeta, labels.len())?;
    Ok(ranked
        .into_iter()
        .enumerate()
        .map(|(i, r)| (r.label, i + 1))
        .collect())
}

/// `rank-links`: read the prediction dumps of the configured (h, p, mode),
/// score every link from predicted and actual traffic, and write the score
/// table, the top-q table, and per-link representative-sequence traces.
pub fn cmd_rank_links(cfg: &RunConfig, mode: TrainMode) -> Result<RankOutcome> {
    let processed = load_processed(cfg)?;
    let node_ids: Vec<u32> = processed.iter().map(|s| s.node_id).collect();
    let topology = Topology::load(&cfg.topology_file, cfg.graph_mode.into(), Some(&node_ids))?;
    let mut predicted = BTreeMap::new();
    let mut actual = BTreeMap::new();
    for &k in &node_ids {
        let path = pred_file(cfg, mode, cfg.h, cfg.p, k);
        if !path.exists() {
            return Err(Error::Data(format!(
                "{}: missing prediction dump (train {} h={} p={} first)",
                path.display(),
                mode.tag(),
                cfg.h,
                cfg.p
            )));
        }
        let (pw, aw) = read_pred_dump(&path, cfg.p)?;
        predicted.insert(k, pw);
        actual.insert(k, aw);
    }
    let (outcome, cube_p, cube_a) = rank_from_forecasts(
        &topology,
        &predicted,
        &actual,
        cfg.beta,
        cfg.top_q,
        cfg.undirected_aggregate,
    )?;

    // Score table over all links.
    let agg_p = aggregate_stats(&sequence_stats(&cube_p));
    let pos_p = full_rank_positions(&outcome.labels, &outcome.zeta_predicted)?;
    let pos_a = full_rank_positions(&outcome.labels, &outcome.zeta_actual)?;
    let mut table = String::from("label,mu_bar,sigma_bar,zeta_pred,zeta_actual,rank_pred,rank_actual\n");
    for (i, label) in outcome.labels.iter().enumerate() {
        let _ = writeln!(
            table,
            "{label},{:?},{:?},{:?},{:?},{},{}",
            agg_p[i].0,
            agg_p[i].1,
            outcome.zeta_predicted[i],
            outcome.zeta_actual[i],
            pos_p[label],
            pos_a[label]
        );
    }
    write_text(
        &cfg.output_dir.join(format!("link_scores_{}_{}.csv", cfg.h, cfg.p)),
        &table,
    )?;

    // Top-q side-by-side table.
    let cmp = &outcome.comparison;
    let mut topq = String::from("rank,predicted_label,predicted_zeta,actual_label,actual_zeta\n");
    for i in 0..cfg.top_q {
        let _ = writeln!(
            topq,
            "{},{},{:?},{},{:?}",
            i + 1,
            cmp.top_predicted[i].label,
            cmp.top_predicted[i].zeta,
            cmp.top_actual[i].label,
            cmp.top_actual[i].zeta
        );
    }
    write_text(&cfg.output_dir.join("top_q.csv"), &topq)?;

    // Representative sequence per top-q predicted link.
    let index_of: BTreeMap<&String, usize> =
        outcome.labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
    for r in &cmp.top_predicted {
        let arc = index_of[&r.label];
        let (m, pv, av) = most_utilized_sequence(&cube_p, &cube_a, arc, cfg.beta)?;
        let mut seq = format!("# link {} sequence {m}\nstep,predicted,actual\n", r.label);
        for t in 0..pv.len() {
            let _ = writeln!(seq, "{},{:?},{:?}", t + 1, pv[t], av[t]);
        }
        write_text(
            &cfg.output_dir.join(format!("link_{}_sequence.csv", r.label)),
            &seq,
        )?;
    }

    println!("top-{} links (predicted | actual):", cfg.top_q);
    for i in 0..cfg.top_q {
        println!(
            "  {:>2}. {:<6} zeta={:.4} | {:<6} zeta={:.4}",
            i + 1,
            cmp.top_predicted[i].label,
            cmp.top_predicted[i].zeta,
            cmp.top_actual[i].label,
            cmp.top_actual[i].zeta
        );
    }
    println!(
        "top-{} overlap: {:.3}; rank correlation: {:.3}; negative predictions clamped: {}",
        cfg.top_q, cmp.top_q_overlap, cmp.rank_correlation, outcome.clamped_negatives
    );
    Ok(outcome)
}

/// `report`: summarize whatever artifacts exist in the output directory.
pub fn cmd_report(cfg: &RunConfig) -> Result<()> {
    let mut out = String::from("artifact summary\n================\n");
    let mut found = false;
    for mode in [TrainMode::Federated, TrainMode::Centralized] {
        let grid = grid_file(cfg, mode);
        if grid.exists() {
            found = true;
            let text = std::fs::read_to_string(&grid).map_err(|e| Error::io(&grid, e))?;
            let _ = writeln!(out, "\naverage R^2 grid ({}):", mode.tag());
            for line in text.lines() {
                let _ = writeln!(out, "  {}", line.replace(',', "\t"));
            }
        }
    }
    for mode in [TrainMode::Federated, TrainMode::Centralized] {
        let eval = eval_file(cfg, mode, cfg.h, cfg.p);
        if eval.exists() {
            found = true;
            let text = std::fs::read_to_string(&eval).map_err(|e| Error::io(&eval, e))?;
            let _ = writeln!(out, "\nper-client scores ({}, h={}, p={}):", mode.tag(), cfg.h, cfg.p);
            for line in text.lines() {
                let _ = writeln!(out, "  {}", line.replace(',', "\t"));
            }
        }
    }
    let topq = cfg.output_dir.join("top_q.csv");
    if topq.exists() {
        found = true;
        let text = std::fs::read_to_string(&topq).map_err(|e| Error::io(&topq, e))?;
        let _ = writeln!(out, "\ntop utilized links:");
        for line in text.lines() {
            let _ = writeln!(out, "  {}", line.replace(',', "\t"));
        }
    }
    if !found {
        let _ = writeln!(
            out,
            "\nno artifacts in {} yet; run train/evaluate/rank-links first",
            cfg.output_dir.display()
        );
    }
    print!("{out}");
    write_text(&cfg.output_dir.join("report.txt"), &out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn temp_cfg(dir: &Path) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.data_dir = dir.join("raw");
        cfg.processed_dir = dir.join("processed");
        cfg.output_dir = dir.join("out");
        cfg.topology_file = dir.join("toy.edges");
        cfg
    }

    #[test]
    fn corpus_lengths_match_pinned_counts_at_scale_one() {
        let cfg = RunConfig::default();
        let corpus = generate_corpus(&cfg).unwrap();
        let lens: Vec<usize> = corpus.iter().map(|s| s.len()).collect();
        assert_eq!(lens, PINNED_HOURLY_COUNTS.to_vec());
        assert_eq!(corpus.len(), 9);
    }

    #[test]
    fn corpus_is_deterministic_and_seed_sensitive() {
        let cfg = RunConfig::default();
        let a = generate_corpus(&cfg).unwrap();
        let b = generate_corpus(&cfg).unwrap();
        assert_eq!(a[3].values, b[3].values);
        let mut cfg2 = cfg.clone();
        cfg2.seed = 43;
        let c = generate_corpus(&cfg2).unwrap();
        assert_ne!(a[3].values, c[3].values);
    }

    #[test]
    fn scale_guard_floors_tiny_lengths() {
        let mut cfg = RunConfig::default();
        cfg.scale = 0.001;
        cfg.h = 4;
        cfg.p = 2;
        let spec = synthetic_spec_for_node(&cfg, 1);
        assert_eq!(spec.length, 4 + 2 + 10);
    }

    #[test]
    fn gen_and_preprocess_round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = temp_cfg(dir.path());
        cfg.scale = 0.5;
        cmd_gen_data(&cfg).unwrap();
        let raw = load_series_dir(&cfg.data_dir, 1.0).unwrap();
        assert_eq!(raw.len(), 9);
        let mem = generate_corpus(&cfg).unwrap();
        assert_eq!(raw[0].values, mem[0].values); // exact round trip via {:?}
        cmd_preprocess(&cfg).unwrap();
        let processed = load_processed(&cfg).unwrap();
        assert_eq!(processed.len(), 9);
        let expected = ((845.0 * 0.5_f64).round() as usize) / 6;
        assert_eq!(processed[0].len(), expected);
        // Rerun is byte-identical.
        let before = std::fs::read(node_file(&cfg.processed_dir, 1)).unwrap();
        cmd_preprocess(&cfg).unwrap();
        let after = std::fs::read(node_file(&cfg.processed_dir, 1)).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn weights_file_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = {
            let mut c = temp_cfg(dir.path());
            c.hidden_size = 6;
            c
        };
        let mut rng = crate::rng::stream_rng(5, "init", 0);
        let model = Seq2SeqModel::init(3, 2, 6, cfg.dropout, &mut rng);
        let path = weights_file(&cfg, TrainMode::Federated, 3, 2);
        write_weights(&path, &model, TrainMode::Federated).unwrap();
        let back = read_weights(&path, 3, 2, &cfg).unwrap();
        assert_eq!(back.get_weights(), model.get_weights());
        // Mismatched shape is rejected.
        assert!(read_weights(&path, 3, 3, &cfg).is_err());
    }

    #[test]
    fn pred_dump_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = temp_cfg(dir.path());
        let preds = ClientPredictions {
            node_id: 4,
            predicted: crate::neuralnet::Mat::from_rows(vec![vec![1.5, 2.5], vec![3.5, 4.5]]),
            actual: crate::neuralnet::Mat::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]),
        };
        let path = pred_file(&cfg, TrainMode::Federated, 1, 2, 4);
        write_pred_dump(&path, &preds).unwrap();
        let (pw, aw) = read_pred_dump(&path, 2).unwrap();
        assert_eq!(pw, vec![vec![1.5, 2.5], vec![3.5, 4.5]]);
        assert_eq!(aw, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert!(read_pred_dump(&path, 3).is_err());
    }

    #[test]
    fn evaluate_cell_requires_weights() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = temp_cfg(dir.path());
        let processed = vec![crate::traffic_data::NodeSeries::new(
            1,
            (0..40).map(|t| (t as f64 * 0.7).sin() + 2.0).collect(),
            6.0,
        )];
        let err = evaluate_cell(&cfg, &processed, TrainMode::Federated, 1, 1).unwrap_err();
        assert!(format!("{err}").contains("missing weights"));
    }
}
