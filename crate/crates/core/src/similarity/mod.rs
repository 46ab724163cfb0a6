//! Graph distances between process models, all scaled to `[0, 1]` with 0
//! meaning identical:
//!
//! * **VEO**: vertex/edge overlap, `1 - 2(|V∩V'| + |E∩E'|) / (|V|+|V'|+|E|+|E'|)`.
//! * **VR**: vertex ranking. Weighted PageRank on each model, ranks over the
//!   union of vertices, normalized Spearman footrule between the rankings.
//! * **WD**: weight distance, `Σ|w - w'| / Σ max(w, w')` over the union of edges.
//! * **DC**: DeltaCon. Exact FaBP affinities on the undirected binary
//!   skeletons, compared with the root Euclidean distance `d`, reported as
//!   `1 - 1/(1 + d)`.

mod pagerank;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::discovery::ProcessModel;
use crate::error::{Error, Result};

pub use pagerank::{pagerank, PageRankConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "VEO")]
    Veo,
    #[serde(rename = "VR")]
    Vr,
    #[serde(rename = "WD")]
    Wd,
    #[serde(rename = "DC")]
    Dc,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Measure::Veo, Measure::Vr, Measure::Wd, Measure::Dc];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Veo => "VEO",
            Measure::Vr => "VR",
            Measure::Wd => "WD",
            Measure::Dc => "DC",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "veo" => Ok(Measure::Veo),
            "vr" => Ok(Measure::Vr),
            "wd" => Ok(Measure::Wd),
            "dc" => Ok(Measure::Dc),
            other => Err(Error::param(format!("unknown measure `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub measure: Measure,
    pub value: f64,
}

pub fn distance(measure: Measure, a: &ProcessModel, b: &ProcessModel) -> Result<Distance> {
    match measure {
        Measure::Veo => Ok(veo(a, b)),
        Measure::Vr => Ok(vertex_ranking(a, b)),
        Measure::Wd => Ok(weight_distance(a, b)),
        Measure::Dc => deltacon(a, b),
    }
}

pub fn all_distances(a: &ProcessModel, b: &ProcessModel) -> Result<BTreeMap<Measure, Distance>> {
    Measure::ALL
        .iter()
        .map(|&m| distance(m, a, b).map(|d| (m, d)))
        .collect()
}

pub fn veo(a: &ProcessModel, b: &ProcessModel) -> Distance {
    let shared_nodes = a.nodes().intersection(b.nodes()).count();
    let shared_edges = a
        .edges()
        .keys()
        .filter(|k| b.edges().contains_key(*k))
        .count();
    let total = a.node_count() + b.node_count() + a.edge_count() + b.edge_count();
    let value = if total == 0 {
        0.0
    } else {
        1.0 - 2.0 * (shared_nodes + shared_edges) as f64 / total as f64
    };
    Distance {
        measure: Measure::Veo,
        value: clamp_unit(value),
    }
}

/// Two PageRank values closer than this are treated as tied.
const RANK_TIE_TOLERANCE: f64 = 1e-9;

pub fn vertex_ranking(a: &ProcessModel, b: &ProcessModel) -> Distance {
    let union: BTreeSet<&str> = a
        .nodes()
        .iter()
        .chain(b.nodes().iter())
        .map(String::as_str)
        .collect();
    let m = union.len();
    let max_footrule = (m * m / 2) as f64;
    if max_footrule == 0.0 {
        return Distance {
            measure: Measure::Vr,
            value: 0.0,
        };
    }
    let ra = ranks_over(&union, &pagerank(a, &PageRankConfig::default()));
    let rb = ranks_over(&union, &pagerank(b, &PageRankConfig::default()));
    let footrule: f64 = union.iter().map(|v| (ra[v] - rb[v]).abs()).sum();
    Distance {
        measure: Measure::Vr,
        value: clamp_unit(footrule / max_footrule),
    }
}

/// Ranks `1..=m` by descending score with averaged ties. Vertices the model
/// lacks share the bottom positions as one tie block.
fn ranks_over<'a>(
    union: &BTreeSet<&'a str>,
    scores: &BTreeMap<String, f64>,
) -> BTreeMap<&'a str, f64> {
    let mut present: Vec<(&'a str, f64)> = union
        .iter()
        .filter_map(|v| scores.get(*v).map(|s| (*v, *s)))
        .collect();
    present.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(y.0)));

    let mut ranks = BTreeMap::new();
    let mut start = 0;
    while start < present.len() {
        let head = present[start].1;
        let mut end = start + 1;
        while end < present.len() && head - present[end].1 <= RANK_TIE_TOLERANCE {
            end += 1;
        }
        // Positions start+1 ..= end, averaged.
        let avg = (start + 1 + end) as f64 / 2.0;
        for (v, _) in &present[start..end] {
            ranks.insert(*v, avg);
        }
        start = end;
    }
    let absent_avg = (present.len() + 1 + union.len()) as f64 / 2.0;
    for v in union {
        ranks.entry(*v).or_insert(absent_avg);
    }
    ranks
}

pub fn weight_distance(a: &ProcessModel, b: &ProcessModel) -> Distance {
    let keys: BTreeSet<&(String, String)> = a.edges().keys().chain(b.edges().keys()).collect();
    let mut diff = 0.0;
    let mut max = 0.0;
    for key in keys {
        let wa = a.edges().get(key).map_or(0.0, |e| e.weight);
        let wb = b.edges().get(key).map_or(0.0, |e| e.weight);
        diff += (wa - wb).abs();
        max += wa.max(wb);
    }
    let value = if max == 0.0 { 0.0 } else { diff / max };
    Distance {
        measure: Measure::Wd,
        value: clamp_unit(value),
    }
}

pub fn deltacon(a: &ProcessModel, b: &ProcessModel) -> Result<Distance> {
    let union: Vec<&str> = a
        .nodes()
        .iter()
        .chain(b.nodes().iter())
        .map(String::as_str)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = union.len();
    if n == 0 {
        return Ok(Distance {
            measure: Measure::Dc,
            value: 0.0,
        });
    }
    let adj_a = undirected_adjacency(a, &union);
    let adj_b = undirected_adjacency(b, &union);
    let max_degree = degrees(&adj_a)
        .into_iter()
        .chain(degrees(&adj_b))
        .fold(0.0, f64::max);
    let eps = 1.0 / (1.0 + max_degree);
    let sa = fabp_affinity(&adj_a, eps)?;
    let sb = fabp_affinity(&adj_b, eps)?;
    let d = sa
        .iter()
        .zip(sb.iter())
        .map(|(x, y)| {
            let delta = x.max(0.0).sqrt() - y.max(0.0).sqrt();
            delta * delta
        })
        .sum::<f64>()
        .sqrt();
    Ok(Distance {
        measure: Measure::Dc,
        value: clamp_unit(1.0 - 1.0 / (1.0 + d)),
    })
}

/// Symmetric 0/1 adjacency over `order`; an edge in either direction (or a
/// self-loop) sets the entry.
pub(crate) fn undirected_adjacency(model: &ProcessModel, order: &[&str]) -> DMatrix<f64> {
    let index: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let n = order.len();
    let mut adj = DMatrix::zeros(n, n);
    for (from, to) in model.edges().keys() {
        let i = index[from.as_str()];
        let j = index[to.as_str()];
        adj[(i, j)] = 1.0;
        adj[(j, i)] = 1.0;
    }
    adj
}

fn degrees(adj: &DMatrix<f64>) -> Vec<f64> {
    adj.row_iter().map(|r| r.sum()).collect()
}

/// `(I + eps² D - eps A)^-1`.
fn fabp_affinity(adj: &DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
    let n = adj.nrows();
    let mut system = DMatrix::identity(n, n) - adj * eps;
    for (i, d) in degrees(adj).into_iter().enumerate() {
        system[(i, i)] += eps * eps * d;
    }
    system
        .try_inverse()
        .ok_or_else(|| Error::Internal("DeltaCon system matrix is singular".into()))
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}
