//! Link-utilization analysis: align per-node forecast sequences, split each
//! node's traffic uniformly over all other nodes, accumulate per-arc traffic
//! along minimum-hop paths, reduce to per-arc statistics, score links by the
//! β-weighted combination of max-normalized mean and standard deviation, and
//! rank the top q.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::neuralnet::Mat;
use crate::topology::{Route, Topology};

/// Per-node forecast sequences truncated to a common count, non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedForecasts {
    /// node id → M sequences, each a p-length trace in original units.
    pub per_node: BTreeMap<u32, Vec<Vec<f64>>>,
    pub sequence_count: usize,
    pub horizon: usize,
    /// How many negative entries were clamped to zero.
    pub clamped_negatives: usize,
}

/// Truncate every node to the minimum sequence count, clamp negative
/// predictions to zero (counted), and validate a shared horizon.
pub fn align_truncate(per_node: &BTreeMap<u32, Vec<Vec<f64>>>) -> Result<AlignedForecasts> {
    if per_node.is_empty() {
        return Err(Error::Data("align_truncate: no nodes".into()));
    }
    let mut m = usize::MAX;
    for (&node, seqs) in per_node {
        if seqs.is_empty() {
            return Err(Error::Data(format!("align_truncate: node {node} has no sequences")));
        }
        m = m.min(seqs.len());
    }
    let horizon = per_node.values().next().expect("non-empty")[0].len();
    if horizon == 0 {
        return Err(Error::Data("align_truncate: zero-length horizon".into()));
    }
    let mut clamped = 0usize;
    let mut out = BTreeMap::new();
    for (&node, seqs) in per_node {
        let mut kept = Vec::with_capacity(m);
        for seq in &seqs[..m] {
            if seq.len() != horizon {
                return Err(Error::Data(format!(
                    "align_truncate: node {node} has a sequence of length {} (expected {horizon})",
                    seq.len()
                )));
            }
            let mut v = seq.clone();
            for x in v.iter_mut() {
                if !x.is_finite() {
                    return Err(Error::Data(format!(
                        "align_truncate: node {node} has a non-finite prediction"
                    )));
                }
                if *x < 0.0 {
                    *x = 0.0;
                    clamped += 1;
                }
            }
            kept.push(v);
        }
        out.insert(node, kept);
    }
    Ok(AlignedForecasts {
        per_node: out,
        sequence_count: m,
        horizon,
        clamped_negatives: clamped,
    })
}

/// Uniform split: each of the other |K|−1 nodes receives x̂/(|K|−1).
pub fn split_pair_traffic(x: f64, num_nodes: usize) -> Result<f64> {
    if num_nodes < 2 {
        return Err(Error::Data(format!(
            "split_pair_traffic: need at least 2 nodes, got {num_nodes}"
        )));
    }
    Ok(x / (num_nodes - 1) as f64)
}

/// τ_{ℓ,m}(t): accumulated predicted traffic per (arc, sequence, step).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTrafficCube {
    /// Indexed like `Topology::arcs`; each entry is M × p.
    pub per_arc: Vec<Mat>,
    pub sequence_count: usize,
    pub horizon: usize,
}

/// Route every ordered pair's share along its minimum-hop path and
/// accumulate onto the arcs, iterating pairs in ascending (s, d) order so
/// the floating-point accumulation order is fixed.
pub fn accumulate_link_traffic(
    forecasts: &AlignedForecasts,
    topology: &Topology,
    paths: &BTreeMap<(u32, u32), Route>,
) -> Result<LinkTrafficCube> {
    let forecast_nodes: BTreeSet<u32> = forecasts.per_node.keys().copied().collect();
    let topo_nodes: BTreeSet<u32> = topology.node_ids.iter().copied().collect();
    if forecast_nodes != topo_nodes {
        return Err(Error::Data(format!(
            "forecast nodes {forecast_nodes:?} do not match topology nodes {topo_nodes:?}"
        )));
    }
    let k = topology.node_ids.len();
    let (m_count, p) = (forecasts.sequence_count, forecasts.horizon);
    let mut per_arc = vec![Mat::zeros(m_count, p); topology.arcs.len()];
    for (&s, seqs) in &forecasts.per_node {
        for &d in &topology.node_ids {
            if s == d {
                continue;
            }
            let route = paths.get(&(s, d)).ok_or_else(|| {
                Error::Data(format!("no path for ordered pair ({s}, {d})"))
            })?;
            for (m, seq) in seqs.iter().enumerate() {
                for (t, &x) in seq.iter().enumerate() {
                    let share = split_pair_traffic(x, k)?;
                    for &arc in &route.arcs {
                        per_arc[arc].row_mut(m)[t] += share;
                    }
                }
            }
        }
    }
    Ok(LinkTrafficCube { per_arc, sequence_count: m_count, horizon: p })
}

/// Per-(arc, sequence) mean and population standard deviation over the p
/// steps.
pub fn sequence_stats(cube: &LinkTrafficCube) -> Vec<Vec<(f64, f64)>> {
    cube.per_arc
        .iter()
        .map(|arc| {
            (0..cube.sequence_count)
                .map(|m| {
                    let row = arc.row(m);
                    let mu = row.iter().sum::<f64>() / row.len() as f64;
                    let var = row.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>()
                        / row.len() as f64;
                    (mu, var.sqrt())
                })
                .collect()
        })
        .collect()
}

/// Per-arc aggregates: arithmetic means of μ_{ℓ,m} and σ_{ℓ,m} over m.
pub fn aggregate_stats(per_sequence: &[Vec<(f64, f64)>]) -> Vec<(f64, f64)> {
    per_sequence
        .iter()
        .map(|seqs| {
            let m = seqs.len() as f64;
            let mu = seqs.iter().map(|s| s.0).sum::<f64>() / m;
            let sd = seqs.iter().map(|s| s.1).sum::<f64>() / m;
            (mu, sd)
        })
        .collect()
}

/// ζ_ℓ = β·μ̄_ℓ/μ̄_max + (1−β)·σ̄_ℓ/σ̄_max. A zero maximum makes the
/// corresponding term 0 for every arc.
pub fn link_utilization_scores(aggregates: &[(f64, f64)], beta: f64) -> Vec<f64> {
    let mu_max = aggregates.iter().map(|a| a.0).fold(0.0, f64::max);
    let sd_max = aggregates.iter().map(|a| a.1).fold(0.0, f64::max);
    aggregates
        .iter()
        .map(|&(mu, sd)| {
            let mu_term = if mu_max > 0.0 { mu / mu_max } else { 0.0 };
            let sd_term = if sd_max > 0.0 { sd / sd_max } else { 0.0 };
            beta * mu_term + (1.0 - beta) * sd_term
        })
        .collect()
}

/// One scored arc.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedLink {
    pub label: String,
    pub zeta: f64,
}

/// Descending by ζ, ties broken by ascending label; returns the top q.
pub fn rank_links(labels: &[String], zeta: &[f64], q: usize) -> Result<Vec<RankedLink>> {
    if labels.len() != zeta.len() {
        return Err(Error::Data("rank_links: labels/scores length mismatch".into()));
    }
    if q == 0 || q > labels.len() {
        return Err(Error::Usage(format!(
            "rank_links: q={q} out of range 1..={}",
            labels.len()
        )));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| {
        zeta[b]
            .partial_cmp(&zeta[a])
            .expect("finite scores")
            .then_with(|| labels[a].cmp(&labels[b]))
    });
    Ok(order
        .into_iter()
        .take(q)
        .map(|i| RankedLink { label: labels[i].clone(), zeta: zeta[i] })
        .collect())
}

/// Representative sequence for an arc: the m maximizing
/// β·μ_{ℓ,m} + (1−β)·σ_{ℓ,m} on the predicted cube (smallest m on ties).
/// Returns (m*, predicted trace, actual trace).
pub fn most_utilized_sequence(
    predicted: &LinkTrafficCube,
    actual: &LinkTrafficCube,
    arc: usize,
    beta: f64,
) -> Result<(usize, Vec<f64>, Vec<f64>)> {
    if arc >= predicted.per_arc.len() || arc >= actual.per_arc.len() {
        return Err(Error::Data(format!("most_utilized_sequence: arc {arc} out of range")));
    }
    if predicted.sequence_count != actual.sequence_count
        || predicted.horizon != actual.horizon
    {
        return Err(Error::Data(
            "most_utilized_sequence: predicted/actual cube shapes differ".into(),
        ));
    }
    let stats = &sequence_stats(predicted)[arc];
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for (m, &(mu, sd)) in stats.iter().enumerate() {
        let score = beta * mu + (1.0 - beta) * sd;
        if score > best_score {
            best = m;
            best_score = score;
        }
    }
    Ok((
        best,
        predicted.per_arc[arc].row(best).to_vec(),
        actual.per_arc[arc].row(best).to_vec(),
    ))
}

/// Ranks with ties sharing their average rank (1-based, ascending value).
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (average ranks for ties). When both inputs are
/// completely tied the orderings agree trivially (1.0); when exactly one is,
/// there is no monotone association (0.0).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Data("spearman: need two equal-length vectors of size >= 2".into()));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for i in 0..ra.len() {
        let da = ra[i] - ma;
        let db = rb[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if va == 0.0 && vb == 0.0 {
        return Ok(1.0);
    }
    if va == 0.0 || vb == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

/// Predicted-vs-actual ranking comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct RankComparison {
    /// |top-q(pred) ∩ top-q(actual)| / q.
    pub top_q_overlap: f64,
    /// Spearman correlation of the two full ζ vectors.
    pub rank_correlation: f64,
    pub top_predicted: Vec<RankedLink>,
    pub top_actual: Vec<RankedLink>,
}

/// Compare two ζ vectors over the same arcs (same label order).
pub fn compare_actual_predicted(
    labels: &[String],
    zeta_predicted: &[f64],
    zeta_actual: &[f64],
    q: usize,
) -> Result<RankComparison> {
    if zeta_predicted.len() != labels.len() || zeta_actual.len() != labels.len() {
        return Err(Error::Data(
            "compare_actual_predicted: arc sets of the two reports differ".into(),
        ));
    }
    let top_predicted = rank_links(labels, zeta_predicted, q)?;
    let top_actual = rank_links(labels, zeta_actual, q)?;
    let set_p: BTreeSet<&str> = top_predicted.iter().map(|r| r.label.as_str()).collect();
    let inter = top_actual.iter().filter(|r| set_p.contains(r.label.as_str())).count();
    Ok(RankComparison {
        top_q_overlap: inter as f64 / q as f64,
        rank_correlation: spearman(zeta_predicted, zeta_actual)?,
        top_predicted,
        top_actual,
    })
}

/// Merge the two directed arcs of each undirected link by summing their
/// cubes; labels become `L{min}{max}`. Returns (labels, merged per-link
/// cubes) in ascending pair order.
pub fn merge_undirected(
    topology: &Topology,
    cube: &LinkTrafficCube,
) -> (Vec<String>, Vec<Mat>) {
    let mut by_pair: BTreeMap<(u32, u32), Mat> = BTreeMap::new();
    for (i, arc) in topology.arcs.iter().enumerate() {
        let key = (arc.from.min(arc.to), arc.from.max(arc.to));
        let entry = by_pair
            .entry(key)
            .or_insert_with(|| Mat::zeros(cube.sequence_count, cube.horizon));
        for (o, v) in entry.data.iter_mut().zip(&cube.per_arc[i].data) {
            *o += v;
        }
    }
    let labels = by_pair.keys().map(|&(u, v)| crate::topology::arc_label(u, v)).collect();
    (labels, by_pair.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::GraphMode;
    use rand::Rng;

    fn constant_forecasts(nodes: &[u32], value: f64, m: usize, p: usize) -> AlignedForecasts {
        let per_node = nodes
            .iter()
            .map(|&n| (n, vec![vec![value; p]; m]))
            .collect();
        AlignedForecasts { per_node, sequence_count: m, horizon: p, clamped_negatives: 0 }
    }

    fn line_topology() -> Topology {
        Topology::build(&[(1, 2), (2, 3)], GraphMode::Undirected, None).unwrap()
    }

    #[test]
    fn align_truncates_to_minimum_and_clamps() {
        let mut input = BTreeMap::new();
        input.insert(1u32, vec![vec![1.0, 2.0]; 5]);
        input.insert(2u32, vec![vec![0.5, -0.3]; 7]);
        input.insert(3u32, vec![vec![4.0, 4.0]; 6]);
        let a = align_truncate(&input).unwrap();
        assert_eq!(a.sequence_count, 5);
        assert!(a.per_node.values().all(|s| s.len() == 5));
        assert_eq!(a.clamped_negatives, 5); // one negative in each kept copy
        assert_eq!(a.per_node[&2][0], vec![0.5, 0.0]);
    }

    #[test]
    fn align_single_node_is_unchanged() {
        let mut input = BTreeMap::new();
        input.insert(4u32, vec![vec![1.0], vec![2.0]]);
        let a = align_truncate(&input).unwrap();
        assert_eq!(a.sequence_count, 2);
        assert_eq!(a.per_node[&4], vec![vec![1.0], vec![2.0]]);
        assert_eq!(a.clamped_negatives, 0);
    }

    #[test]
    fn align_rejects_empty_and_ragged() {
        let mut input: BTreeMap<u32, Vec<Vec<f64>>> = BTreeMap::new();
        assert!(align_truncate(&input).is_err());
        input.insert(1, vec![]);
        assert!(align_truncate(&input).is_err());
        let mut ragged = BTreeMap::new();
        ragged.insert(1u32, vec![vec![1.0, 2.0]]);
        ragged.insert(2u32, vec![vec![1.0]]);
        assert!(align_truncate(&ragged).is_err());
        let mut nan = BTreeMap::new();
        nan.insert(1u32, vec![vec![f64::NAN]]);
        assert!(align_truncate(&nan).is_err());
    }

    #[test]
    fn split_shares_partition_the_traffic() {
        assert_eq!(split_pair_traffic(8.0, 9).unwrap(), 1.0);
        assert_eq!(split_pair_traffic(0.0, 5).unwrap(), 0.0);
        let x = 7.3;
        let share = split_pair_traffic(x, 6).unwrap();
        assert!((share * 5.0 - x).abs() < 1e-12 * x);
        assert!(split_pair_traffic(1.0, 1).is_err());
    }

    #[test]
    fn line_accumulation_matches_hand_count() {
        let t = line_topology();
        let paths = t.all_pairs_paths().unwrap();
        let f = constant_forecasts(&[1, 2, 3], 1.0, 1, 1);
        let cube = accumulate_link_traffic(&f, &t, &paths).unwrap();
        let tau = |u: u32, v: u32| cube.per_arc[t.arc(u, v).unwrap()].at(0, 0);
        assert!((tau(1, 2) - 1.0).abs() < 1e-12); // (1→2) + (1→3)
        assert!((tau(2, 3) - 1.0).abs() < 1e-12); // (1→3) + (2→3)
        assert!((tau(2, 1) - 1.0).abs() < 1e-12);
        assert!((tau(3, 2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_traffic_node_contributes_nothing() {
        let t = line_topology();
        let paths = t.all_pairs_paths().unwrap();
        let mut f = constant_forecasts(&[1, 2, 3], 1.0, 1, 2);
        f.per_node.insert(2, vec![vec![0.0, 0.0]]);
        let cube = accumulate_link_traffic(&f, &t, &paths).unwrap();
        // Arc 2→3 now carries only the (1→3) flow: 0.5 each step.
        let tau = cube.per_arc[t.arc(2, 3).unwrap()].clone();
        assert!((tau.at(0, 0) - 0.5).abs() < 1e-12);
        assert!((tau.at(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn conservation_identity_on_random_instances() {
        let mut rng = crate::rng::stream_rng(5, "client", 1);
        let t = Topology::build(
            &[(1, 2), (2, 3), (3, 4), (4, 1), (1, 3)],
            GraphMode::Undirected,
            None,
        )
        .unwrap();
        let paths = t.all_pairs_paths().unwrap();
        for _ in 0..10 {
            let per_node: BTreeMap<u32, Vec<Vec<f64>>> = t
                .node_ids
                .iter()
                .map(|&n| {
                    (n, vec![(0..3).map(|_| rng.gen_range(0.0..10.0)).collect::<Vec<f64>>(); 2])
                })
                .collect();
            let f = align_truncate(&per_node).unwrap();
            let cube = accumulate_link_traffic(&f, &t, &paths).unwrap();
            for m in 0..2 {
                for step in 0..3 {
                    let total: f64 = cube.per_arc.iter().map(|a| a.at(m, step)).sum();
                    let mut expected = 0.0;
                    for (&s, seqs) in &f.per_node {
                        for &d in &t.node_ids {
                            if s == d {
                                continue;
                            }
                            let hops = paths[&(s, d)].hops() as f64;
                            expected += hops * seqs[m][step] / (t.node_ids.len() - 1) as f64;
                        }
                    }
                    assert!(
                        (total - expected).abs() <= 1e-9 * expected.max(1.0),
                        "m={m} t={step}: {total} vs {expected}"
                    );
                }
            }
        }
    }

    #[test]
    fn forecast_topology_node_mismatch_is_an_error() {
        let t = line_topology();
        let paths = t.all_pairs_paths().unwrap();
        let f = constant_forecasts(&[1, 2], 1.0, 1, 1);
        assert!(accumulate_link_traffic(&f, &t, &paths).is_err());
    }

    #[test]
    fn sequence_stats_examples() {
        let cube = LinkTrafficCube {
            per_arc: vec![
                Mat::from_rows(vec![vec![2.0, 2.0, 2.0], vec![0.0, 2.0, 1.0]]),
            ],
            sequence_count: 2,
            horizon: 3,
        };
        let s = sequence_stats(&cube);
        assert_eq!(s[0][0], (2.0, 0.0));
        let (mu, sd) = s[0][1];
        assert!((mu - 1.0).abs() < 1e-15);
        assert!((sd - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);

        let two_point = LinkTrafficCube {
            per_arc: vec![Mat::from_rows(vec![vec![0.0, 2.0]])],
            sequence_count: 1,
            horizon: 2,
        };
        assert_eq!(sequence_stats(&two_point)[0][0], (1.0, 1.0));

        let p1 = LinkTrafficCube {
            per_arc: vec![Mat::from_rows(vec![vec![5.0]])],
            sequence_count: 1,
            horizon: 1,
        };
        assert_eq!(sequence_stats(&p1)[0][0], (5.0, 0.0));
    }

    #[test]
    fn aggregate_stats_examples() {
        let single = vec![vec![(3.0, 1.5)]];
        assert_eq!(aggregate_stats(&single), vec![(3.0, 1.5)]);
        let identical = vec![vec![(2.0, 0.5), (2.0, 0.5), (2.0, 0.5)]];
        assert_eq!(aggregate_stats(&identical), vec![(2.0, 0.5)]);
        let mixed = vec![vec![(1.0, 0.0), (3.0, 2.0)]];
        assert_eq!(aggregate_stats(&mixed), vec![(2.0, 1.0)]);
    }

    #[test]
    fn score_arithmetic_and_endpoints() {
        let agg = vec![(4.0, 2.0), (2.0, 1.0)];
        let z = link_utilization_scores(&agg, 0.5);
        assert!((z[0] - 1.0).abs() < 1e-15 && (z[1] - 0.5).abs() < 1e-15);
        let by_mean = link_utilization_scores(&[(4.0, 1.0), (2.0, 9.0)], 1.0);
        assert!(by_mean[0] > by_mean[1]);
        let by_sd = link_utilization_scores(&[(4.0, 1.0), (2.0, 9.0)], 0.0);
        assert!(by_sd[1] > by_sd[0]);
        let same = link_utilization_scores(&[(3.0, 2.0), (3.0, 2.0)], 0.5);
        assert!(same.iter().all(|v| (*v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn degenerate_maxima_zero_out_their_term() {
        let z = link_utilization_scores(&[(0.0, 2.0), (0.0, 1.0)], 0.5);
        assert!((z[0] - 0.5).abs() < 1e-15 && (z[1] - 0.25).abs() < 1e-15);
        let all_zero = link_utilization_scores(&[(0.0, 0.0)], 0.5);
        assert_eq!(all_zero, vec![0.0]);
    }

    #[test]
    fn ranking_orders_and_breaks_ties_by_label() {
        let labels: Vec<String> =
            ["L12", "L23", "L13"].iter().map(|s| s.to_string()).collect();
        let top = rank_links(&labels, &[0.9, 0.5, 0.9], 3).unwrap();
        let names: Vec<&str> = top.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(names, vec!["L12", "L13", "L23"]);
        let one = rank_links(&labels, &[0.9, 0.5, 0.2], 1).unwrap();
        assert_eq!(one[0].label, "L12");
        assert!(rank_links(&labels, &[0.9, 0.5, 0.2], 4).is_err());
        assert!(rank_links(&labels, &[0.9, 0.5, 0.2], 0).is_err());
    }

    #[test]
    fn scale_invariance_of_scores() {
        let t = line_topology();
        let paths = t.all_pairs_paths().unwrap();
        let mut rng = crate::rng::stream_rng(11, "client", 2);
        let base: BTreeMap<u32, Vec<Vec<f64>>> = t
            .node_ids
            .iter()
            .map(|&n| (n, vec![(0..4).map(|_| rng.gen_range(0.0..5.0)).collect::<Vec<f64>>(); 3]))
            .collect();
        let score = |scale: f64| {
            let scaled: BTreeMap<u32, Vec<Vec<f64>>> = base
                .iter()
                .map(|(&n, seqs)| {
                    (n, seqs.iter().map(|s| s.iter().map(|x| x * scale).collect()).collect())
                })
                .collect();
            let f = align_truncate(&scaled).unwrap();
            let cube = accumulate_link_traffic(&f, &t, &paths).unwrap();
            link_utilization_scores(&aggregate_stats(&sequence_stats(&cube)), 0.5)
        };
        let a = score(1.0);
        let b = score(3.0);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn path_identity_gives_bitwise_equal_scores() {
        // Nodes 1 and 4 are leaves off node 3 with identical series; the
        // arcs 3→4 and 3→1 then carry identical flow contributions.
        let t = Topology::build(&[(3, 4), (3, 1)], GraphMode::Undirected, None).unwrap();
        let paths = t.all_pairs_paths().unwrap();
        let mut per_node = BTreeMap::new();
        let leaf = vec![vec![2.5, 0.5, 1.5], vec![3.5, 4.5, 0.25]];
        per_node.insert(1u32, leaf.clone());
        per_node.insert(3u32, vec![vec![9.0, 1.0, 2.0], vec![0.5, 0.5, 8.0]]);
        per_node.insert(4u32, leaf);
        let f = align_truncate(&per_node).unwrap();
        let cube = accumulate_link_traffic(&f, &t, &paths).unwrap();
        let z = link_utilization_scores(&aggregate_stats(&sequence_stats(&cube)), 0.5);
        let z34 = z[t.arc(3, 4).unwrap()];
        let z31 = z[t.arc(3, 1).unwrap()];
        assert_eq!(z34.to_bits(), z31.to_bits());
    }

    #[test]
    fn most_utilized_sequence_selection() {
        let pred = LinkTrafficCube {
            per_arc: vec![Mat::from_rows(vec![vec![1.0, 1.0], vec![5.0, 9.0]])],
            sequence_count: 2,
            horizon: 2,
        };
        let act = LinkTrafficCube {
            per_arc: vec![Mat::from_rows(vec![vec![1.1, 0.9], vec![5.5, 8.5]])],
            sequence_count: 2,
            horizon: 2,
        };
        let (m, p, a) = most_utilized_sequence(&pred, &act, 0, 0.5).unwrap();
        assert_eq!(m, 1); // dominates in both mean and std
        assert_eq!(p, vec![5.0, 9.0]);
        assert_eq!(a, vec![5.5, 8.5]);

        let single = LinkTrafficCube {
            per_arc: vec![Mat::from_rows(vec![vec![2.0, 3.0]])],
            sequence_count: 1,
            horizon: 2,
        };
        let (m1, p1, _) = most_utilized_sequence(&single, &single, 0, 0.5).unwrap();
        assert_eq!((m1, p1), (0, vec![2.0, 3.0]));
    }

    #[test]
    fn spearman_examples() {
        let a = vec![0.1, 0.5, 0.9, 0.7];
        assert!((spearman(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let rev: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((spearman(&a, &rev).unwrap() + 1.0).abs() < 1e-12);
        let flat = vec![1.0; 4];
        assert_eq!(spearman(&flat, &flat).unwrap(), 1.0);
        assert_eq!(spearman(&a, &flat).unwrap(), 0.0);
    }

    #[test]
    fn comparison_overlap_and_correlation() {
        let labels: Vec<String> =
            ["L12", "L21", "L23", "L32"].iter().map(|s| s.to_string()).collect();
        let z = vec![0.9, 0.7, 0.5, 0.3];
        let cmp = compare_actual_predicted(&labels, &z, &z, 2).unwrap();
        assert_eq!(cmp.top_q_overlap, 1.0);
        assert!((cmp.rank_correlation - 1.0).abs() < 1e-12);
        let rev = vec![0.3, 0.5, 0.7, 0.9];
        let cmp2 = compare_actual_predicted(&labels, &z, &rev, 2).unwrap();
        assert_eq!(cmp2.top_q_overlap, 0.0);
        assert!((cmp2.rank_correlation + 1.0).abs() < 1e-12);
        assert!(compare_actual_predicted(&labels, &z, &z[..3].to_vec(), 2).is_err());
    }

    #[test]
    fn undirected_merge_sums_arc_pairs() {
        let t = line_topology();
        let paths = t.all_pairs_paths().unwrap();
        let f = constant_forecasts(&[1, 2, 3], 2.0, 1, 1);
        let cube = accumulate_link_traffic(&f, &t, &paths).unwrap();
        let (labels, merged) = merge_undirected(&t, &cube);
        assert_eq!(labels, vec!["L12".to_string(), "L23".to_string()]);
        let a12 = cube.per_arc[t.arc(1, 2).unwrap()].at(0, 0);
        let a21 = cube.per_arc[t.arc(2, 1).unwrap()].at(0, 0);
        assert!((merged[0].at(0, 0) - (a12 + a21)).abs() < 1e-12);
    }
}
