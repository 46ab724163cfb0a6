//! Directly-follows-graph discovery, the Skip Miner, and the EdgeFil /
//! NodeFil simplification baselines.
//!
//! A [`ProcessModel`] holds raw transition counts (the co-occurrence matrix)
//! and per-edge weights. Freshly discovered models carry row-normalized
//! weights, so the outgoing weights of every node with successors sum to one.
//! EdgeFil keeps surviving weights untouched, so filtered models may not.

mod export;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::{EventLog, Trace};

pub use export::{model_from_json, model_to_dot, model_to_json};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub count: u64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProcessModel {
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), Edge>,
}

impl ProcessModel {
    /// Builds a model from transition counts, normalizing every row.
    /// Edge endpoints are added to the node set; zero counts are dropped.
    pub fn from_counts(
        nodes: impl IntoIterator<Item = String>,
        counts: impl IntoIterator<Item = ((String, String), u64)>,
    ) -> Self {
        let mut nodes: BTreeSet<String> = nodes.into_iter().collect();
        let counts: BTreeMap<(String, String), u64> =
            counts.into_iter().filter(|(_, c)| *c > 0).collect();
        let mut row_totals: BTreeMap<&str, u64> = BTreeMap::new();
        for ((from, _), count) in &counts {
            *row_totals.entry(from.as_str()).or_default() += count;
        }
        let edges: BTreeMap<(String, String), Edge> = counts
            .iter()
            .map(|((from, to), &count)| {
                let total = row_totals[from.as_str()];
                let edge = Edge {
                    count,
                    weight: count as f64 / total as f64,
                };
                ((from.clone(), to.clone()), edge)
            })
            .collect();
        for (from, to) in edges.keys() {
            nodes.insert(from.clone());
            nodes.insert(to.clone());
        }
        ProcessModel { nodes, edges }
    }

    /// Builds a model with explicit weights (no normalization).
    pub fn from_weighted_edges(
        nodes: impl IntoIterator<Item = String>,
        edges: impl IntoIterator<Item = ((String, String), Edge)>,
    ) -> Self {
        let mut nodes: BTreeSet<String> = nodes.into_iter().collect();
        let edges: BTreeMap<(String, String), Edge> = edges.into_iter().collect();
        for (from, to) in edges.keys() {
            nodes.insert(from.clone());
            nodes.insert(to.clone());
        }
        ProcessModel { nodes, edges }
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<(String, String), Edge> {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has_node(&self, activity: &str) -> bool {
        self.nodes.contains(activity)
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.edge(from, to).is_some()
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<&Edge> {
        self.edges.get(&(from.to_string(), to.to_string()))
    }

    /// Edge weight, 0 when the edge is absent.
    pub fn weight(&self, from: &str, to: &str) -> f64 {
        self.edge(from, to).map_or(0.0, |e| e.weight)
    }

    /// Co-occurrence matrix `O` over [`Self::nodes`] in sorted order.
    pub fn count_matrix(&self) -> Vec<Vec<u64>> {
        self.dense(|e| e.count, 0)
    }

    /// Frequency matrix `F` over [`Self::nodes`] in sorted order.
    pub fn frequency_matrix(&self) -> Vec<Vec<f64>> {
        self.dense(|e| e.weight, 0.0)
    }

    fn dense<T: Copy>(&self, get: impl Fn(&Edge) -> T, zero: T) -> Vec<Vec<T>> {
        let index: BTreeMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let n = self.nodes.len();
        let mut m = vec![vec![zero; n]; n];
        for ((from, to), edge) in &self.edges {
            m[index[from.as_str()]][index[to.as_str()]] = get(edge);
        }
        m
    }
}

/// Standard directly-follows graph: every pair of consecutive events inside a
/// trace is one transition.
pub fn discover_dfg(log: &EventLog) -> Result<ProcessModel> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
    for trace in log.traces() {
        for pair in trace.events.windows(2) {
            *counts
                .entry((pair[0].activity.clone(), pair[1].activity.clone()))
                .or_default() += 1;
        }
    }
    let nodes = log.activities().into_iter().map(str::to_string);
    Ok(ProcessModel::from_counts(nodes, counts))
}

/// Skip probability per activity: `1 - 1/n`, `n` being the number of distinct
/// activities that directly follow it anywhere in the log. Activities that are
/// never followed get 0.
pub fn skip_probabilities(log: &EventLog) -> BTreeMap<String, f64> {
    let mut successors: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for trace in log.traces() {
        for event in &trace.events {
            successors.entry(event.activity.as_str()).or_default();
        }
        for pair in trace.events.windows(2) {
            successors
                .get_mut(pair[0].activity.as_str())
                .expect("inserted above")
                .insert(pair[1].activity.as_str());
        }
    }
    successors
        .into_iter()
        .map(|(activity, next)| {
            let n = next.len();
            let sp = if n <= 1 { 0.0 } else { 1.0 - 1.0 / n as f64 };
            (activity.to_string(), sp)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipConfig {
    /// Length of skip: events jumped over when a skip fires.
    pub los: usize,
    pub seed: u64,
}

/// Skip Miner. Each trace is walked from its first event; at every origin a
/// uniform draw below the origin's skip probability jumps `los` events ahead.
///
/// Trace `t` (0-based) draws from its own ChaCha8 stream seeded with
/// `seed ^ t`, so serial and parallel runs agree.
pub fn skip_miner(log: &EventLog, config: &SkipConfig) -> Result<ProcessModel> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let sp = skip_probabilities(log);
    let partials: Vec<Walk> = log
        .traces()
        .par_iter()
        .enumerate()
        .map(|(ordinal, trace)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ ordinal as u64);
            walk_trace(trace, config.los, |activity| {
                let u: f64 = rng.random();
                u < sp[activity]
            })
        })
        .collect();
    Ok(merge_walks(partials))
}

/// Skip Miner walk with caller-supplied skip decisions, called once per
/// origin event with `(trace ordinal, origin activity)`.
pub fn skip_miner_with_decisions(
    log: &EventLog,
    los: usize,
    mut decide: impl FnMut(usize, &str) -> bool,
) -> Result<ProcessModel> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let partials: Vec<Walk> = log
        .traces()
        .iter()
        .enumerate()
        .map(|(ordinal, trace)| walk_trace(trace, los, |a| decide(ordinal, a)))
        .collect();
    Ok(merge_walks(partials))
}

#[derive(Default)]
struct Walk {
    visited: BTreeSet<String>,
    counts: BTreeMap<(String, String), u64>,
}

fn walk_trace(trace: &Trace, los: usize, mut skip: impl FnMut(&str) -> bool) -> Walk {
    let mut walk = Walk::default();
    let events = &trace.events;
    let Some(first) = events.first() else {
        return walk;
    };
    walk.visited.insert(first.activity.clone());
    let last = events.len() - 1;
    let mut i = 0;
    while i < last {
        let origin = events[i].activity.as_str();
        // Past-the-end skips fall back to the direct successor.
        let mut j = if skip(origin) { i + 1 + los } else { i + 1 };
        if j > last {
            j = i + 1;
        }
        let target = events[j].activity.as_str();
        walk.visited.insert(target.to_string());
        *walk
            .counts
            .entry((origin.to_string(), target.to_string()))
            .or_default() += 1;
        i = j;
    }
    walk
}

fn merge_walks(walks: Vec<Walk>) -> ProcessModel {
    let mut nodes = BTreeSet::new();
    let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
    for walk in walks {
        nodes.extend(walk.visited);
        for (key, c) in walk.counts {
            *counts.entry(key).or_default() += c;
        }
    }
    ProcessModel::from_counts(nodes, counts)
}

/// EdgeFil: drops edges whose weight is below `alpha`, then nodes left
/// without any incident edge. Surviving weights are not renormalized.
pub fn edgefil(model: &ProcessModel, alpha: f64) -> Result<ProcessModel> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!(
            "alpha must be in [0, 1], got {alpha}"
        )));
    }
    if alpha == 0.0 {
        return Ok(model.clone());
    }
    let edges: BTreeMap<(String, String), Edge> = model
        .edges
        .iter()
        .filter(|(_, e)| e.weight >= alpha)
        .map(|(k, e)| (k.clone(), *e))
        .collect();
    Ok(ProcessModel::from_weighted_edges(std::iter::empty(), edges))
}

/// NodeFil: removes events whose activity occurs in fewer than a `beta`
/// fraction of the traces, then discovers a DFG from what is left.
pub fn nodefil(log: &EventLog, beta: f64) -> Result<ProcessModel> {
    discover_dfg(&nodefil_log(log, beta)?)
}

/// The event filter behind [`nodefil`], for pairing it with another miner.
pub fn nodefil_log(log: &EventLog, beta: f64) -> Result<EventLog> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::param(format!("beta must be in [0, 1], got {beta}")));
    }
    let support = activity_support(log);
    let filtered = log.filter_events(|e| support[e.activity.as_str()] >= beta);
    if filtered.is_empty() {
        return Err(Error::EmptyLog);
    }
    Ok(filtered)
}

/// Fraction of traces in which each activity occurs at least once.
pub fn activity_support(log: &EventLog) -> BTreeMap<&str, f64> {
    let mut hits: BTreeMap<&str, usize> = BTreeMap::new();
    for trace in log.traces() {
        let distinct: BTreeSet<&str> = trace.activities().collect();
        for a in distinct {
            *hits.entry(a).or_default() += 1;
        }
    }
    let total = log.trace_count().max(1) as f64;
    hits.into_iter()
        .map(|(a, h)| (a, h as f64 / total))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralMetrics {
    #[serde(rename = "nN")]
    pub nodes: usize,
    #[serde(rename = "nE")]
    pub edges: usize,
    /// Edges per node.
    #[serde(rename = "EN")]
    pub edges_per_node: f64,
    /// Directed density `nE / (nN (nN - 1))`; 0 for fewer than two nodes.
    #[serde(rename = "gD")]
    pub density: f64,
}

impl StructuralMetrics {
    pub fn from_counts(nodes: usize, edges: usize) -> Self {
        let edges_per_node = if nodes == 0 {
            0.0
        } else {
            edges as f64 / nodes as f64
        };
        let density = if nodes < 2 {
            0.0
        } else {
            edges as f64 / (nodes as f64 * (nodes as f64 - 1.0))
        };
        StructuralMetrics {
            nodes,
            edges,
            edges_per_node,
            density,
        }
    }
}

pub fn structural_metrics(model: &ProcessModel) -> StructuralMetrics {
    StructuralMetrics::from_counts(model.node_count(), model.edge_count())
}
