//! Microaggregation over a pairwise distance matrix. With no coordinate
//! space the "centroid" of a set is its medoid. Ties resolve towards the
//! smaller identity string.

mod matrix;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::EventLog;

pub use matrix::DistanceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClusterMethod {
    #[serde(rename = "MDAV")]
    Mdav,
    #[serde(rename = "KM")]
    KMember,
    #[serde(rename = "OKA")]
    Oka,
    #[serde(rename = "BL")]
    Baseline,
}

impl ClusterMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ClusterMethod::Mdav => "MDAV",
            ClusterMethod::KMember => "KM",
            ClusterMethod::Oka => "OKA",
            ClusterMethod::Baseline => "BL",
        }
    }
}

impl fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mdav" => Ok(ClusterMethod::Mdav),
            "km" | "k-member" | "kmember" => Ok(ClusterMethod::KMember),
            "oka" => Ok(ClusterMethod::Oka),
            "bl" | "baseline" => Ok(ClusterMethod::Baseline),
            other => Err(Error::param(format!("unknown clustering method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub method: ClusterMethod,
    pub clusters: Vec<Vec<String>>,
}

impl ClusterAssignment {
    /// Checks the partition, size and count invariants for `k` over `labels`.
    pub fn validate(&self, labels: &[String], k: usize) -> Result<()> {
        let p = labels.len();
        if self.clusters.len() != p / k {
            return Err(Error::Internal(format!(
                "{} clusters for p = {p}, k = {k}",
                self.clusters.len()
            )));
        }
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for cluster in &self.clusters {
            if cluster.len() < k || cluster.len() > 2 * k - 1 {
                return Err(Error::Internal(format!(
                    "cluster of size {} outside [{k}, {}]",
                    cluster.len(),
                    2 * k - 1
                )));
            }
            for member in cluster {
                *seen.entry(member.as_str()).or_default() += 1;
            }
        }
        let all_once = seen.len() == p && labels.iter().all(|l| seen.get(l.as_str()) == Some(&1));
        if !all_once {
            return Err(Error::Internal(
                "clusters do not partition the individuals".into(),
            ));
        }
        Ok(())
    }

    pub fn cluster_of(&self, identity: &str) -> Option<usize> {
        self.clusters
            .iter()
            .position(|c| c.iter().any(|m| m == identity))
    }
}

fn check_k(p: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::param(format!("k must be at least 2, got {k}")));
    }
    if k > p {
        return Err(Error::param(format!("k = {k} exceeds the {p} individuals")));
    }
    Ok(())
}

/// Runs one of the distance-based methods.
pub fn cluster(dm: &DistanceMatrix, k: usize, method: ClusterMethod) -> Result<ClusterAssignment> {
    match method {
        ClusterMethod::Mdav => mdav(dm, k),
        ClusterMethod::KMember => k_member(dm, k),
        ClusterMethod::Oka => oka(dm, k),
        ClusterMethod::Baseline => Err(Error::param(
            "the BL baseline groups by trace counts, not by a distance matrix",
        )),
    }
}

/// Index view of a matrix whose iteration order is ascending identity, so a
/// strict comparison keeps the first candidate on ties.
struct View<'a> {
    dm: &'a DistanceMatrix,
    order: Vec<usize>,
}

impl<'a> View<'a> {
    fn new(dm: &'a DistanceMatrix) -> Self {
        let mut order: Vec<usize> = (0..dm.len()).collect();
        order.sort_by(|&a, &b| dm.labels()[a].cmp(&dm.labels()[b]));
        View { dm, order }
    }

    fn d(&self, a: usize, b: usize) -> f64 {
        self.dm.get(a, b)
    }

    fn label(&self, i: usize) -> &str {
        &self.dm.labels()[i]
    }

    fn medoid(&self, set: &[usize]) -> usize {
        let mut best = set[0];
        let mut best_sum = f64::INFINITY;
        for &i in set {
            let sum: f64 = set.iter().map(|&j| self.d(i, j)).sum();
            if sum < best_sum {
                best = i;
                best_sum = sum;
            }
        }
        best
    }

    fn farthest(&self, from: usize, set: &[usize]) -> usize {
        let mut best = set[0];
        let mut best_d = f64::NEG_INFINITY;
        for &i in set {
            if self.d(from, i) > best_d {
                best = i;
                best_d = self.d(from, i);
            }
        }
        best
    }

    /// `center` together with its `k - 1` nearest records from `set`.
    fn with_nearest(&self, center: usize, set: &[usize], k: usize) -> Vec<usize> {
        let mut others: Vec<usize> = set.iter().copied().filter(|&i| i != center).collect();
        others.sort_by(|&a, &b| {
            self.d(center, a)
                .total_cmp(&self.d(center, b))
                .then_with(|| self.label(a).cmp(self.label(b)))
        });
        let mut out = vec![center];
        out.extend(others.into_iter().take(k - 1));
        out
    }

    fn labels_of(&self, mut members: Vec<usize>) -> Vec<String> {
        members.sort_by(|&a, &b| self.label(a).cmp(self.label(b)));
        members
            .into_iter()
            .map(|i| self.label(i).to_string())
            .collect()
    }
}

fn remove_all(set: &mut Vec<usize>, taken: &[usize]) {
    set.retain(|i| !taken.contains(i));
}

/// MDAV with medoids: while at least `3k` records remain, build two clusters
/// around the record farthest from the medoid and the record farthest from
/// that one. Between `2k` and `3k - 1` one more cluster is built and the rest
/// form the last; fewer than `2k` form a single cluster.
pub fn mdav(dm: &DistanceMatrix, k: usize) -> Result<ClusterAssignment> {
    check_k(dm.len(), k)?;
    let view = View::new(dm);
    let mut rest = view.order.clone();
    let mut clusters = Vec::new();
    while rest.len() >= 3 * k {
        let c = view.medoid(&rest);
        let r = view.farthest(c, &rest);
        let cr = view.with_nearest(r, &rest, k);
        remove_all(&mut rest, &cr);
        clusters.push(cr);
        let s = view.farthest(r, &rest);
        let cs = view.with_nearest(s, &rest, k);
        remove_all(&mut rest, &cs);
        clusters.push(cs);
    }
    if rest.len() >= 2 * k {
        let c = view.medoid(&rest);
        let r = view.farthest(c, &rest);
        let cr = view.with_nearest(r, &rest, k);
        remove_all(&mut rest, &cr);
        clusters.push(cr);
    }
    if !rest.is_empty() {
        clusters.push(rest);
    }
    Ok(ClusterAssignment {
        method: ClusterMethod::Mdav,
        clusters: clusters.into_iter().map(|c| view.labels_of(c)).collect(),
    })
}

/// Greedy k-member: grow each cluster from a seed by the record adding the
/// least summed distance; the next seed is the record farthest from the
/// previous cluster's medoid. Leftovers join the cluster with the nearest
/// medoid that still has room.
pub fn k_member(dm: &DistanceMatrix, k: usize) -> Result<ClusterAssignment> {
    check_k(dm.len(), k)?;
    let view = View::new(dm);
    let mut rest = view.order.clone();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut seed = view.farthest(view.medoid(&rest), &rest);
    while rest.len() >= k {
        let mut current = vec![seed];
        remove_all(&mut rest, &[seed]);
        while current.len() < k {
            let mut best = rest[0];
            let mut best_cost = f64::INFINITY;
            for &x in &rest {
                let cost: f64 = current.iter().map(|&c| view.d(x, c)).sum();
                if cost < best_cost {
                    best = x;
                    best_cost = cost;
                }
            }
            current.push(best);
            remove_all(&mut rest, &[best]);
        }
        let medoid = view.medoid(&current);
        clusters.push(current);
        if rest.len() >= k {
            seed = view.farthest(medoid, &rest);
        }
    }
    let medoids: Vec<usize> = clusters.iter().map(|c| view.medoid(c)).collect();
    for x in rest {
        let mut by_distance: Vec<usize> = (0..clusters.len()).collect();
        by_distance.sort_by(|&a, &b| view.d(x, medoids[a]).total_cmp(&view.d(x, medoids[b])));
        let target = by_distance
            .into_iter()
            .find(|&c| clusters[c].len() < 2 * k - 1)
            .ok_or_else(|| Error::Internal("no cluster has room for a leftover record".into()))?;
        clusters[target].push(x);
    }
    Ok(ClusterAssignment {
        method: ClusterMethod::KMember,
        clusters: clusters.into_iter().map(|c| view.labels_of(c)).collect(),
    })
}

/// One-pass k-means. Seeds are chosen farthest-first: the record with the
/// smallest summed distance, then repeatedly the record whose nearest seed is
/// farthest away. A single pass in summed-distance order assigns every other
/// record to its nearest seed with capacity `2k - 1`, and a repair phase
/// fills clusters below `k` from clusters above it.
pub fn oka(dm: &DistanceMatrix, k: usize) -> Result<ClusterAssignment> {
    let p = dm.len();
    check_k(p, k)?;
    let view = View::new(dm);
    let n = p / k;
    let mut order = view.order.clone();
    let totals: Vec<f64> = (0..p).map(|i| (0..p).map(|j| view.d(i, j)).sum()).collect();
    order.sort_by(|&a, &b| {
        totals[a]
            .total_cmp(&totals[b])
            .then_with(|| view.label(a).cmp(view.label(b)))
    });
    let mut seeds: Vec<usize> = vec![order[0]];
    while seeds.len() < n {
        let mut best = None;
        let mut best_d = f64::NEG_INFINITY;
        for &x in order.iter().filter(|x| !seeds.contains(x)) {
            let d = seeds
                .iter()
                .map(|&s| view.d(x, s))
                .fold(f64::INFINITY, f64::min);
            if d > best_d {
                best = Some(x);
                best_d = d;
            }
        }
        seeds.push(best.expect("fewer seeds than records"));
    }
    let mut clusters: Vec<Vec<usize>> = seeds.iter().map(|&s| vec![s]).collect();

    for &x in order.iter().filter(|x| !seeds.contains(x)) {
        let mut by_distance: Vec<usize> = (0..n).collect();
        by_distance.sort_by(|&a, &b| view.d(x, seeds[a]).total_cmp(&view.d(x, seeds[b])));
        let target = by_distance
            .into_iter()
            .find(|&c| clusters[c].len() < 2 * k - 1)
            .ok_or_else(|| Error::Internal("no cluster has room in the assignment pass".into()))?;
        clusters[target].push(x);
    }

    while let Some(target) = clusters.iter().position(|c| c.len() < k) {
        let mut best: Option<(usize, usize)> = None;
        for (ci, cluster) in clusters.iter().enumerate() {
            if cluster.len() <= k {
                continue;
            }
            for &x in cluster.iter().filter(|&&x| x != seeds[ci]) {
                let better = match best {
                    None => true,
                    Some((_, b)) => {
                        let (dx, db) = (view.d(x, seeds[target]), view.d(b, seeds[target]));
                        dx < db || (dx == db && view.label(x) < view.label(b))
                    }
                };
                if better {
                    best = Some((ci, x));
                }
            }
        }
        let (from, x) =
            best.ok_or_else(|| Error::Internal("repair found no record to move".into()))?;
        clusters[from].retain(|&y| y != x);
        clusters[target].push(x);
    }
    Ok(ClusterAssignment {
        method: ClusterMethod::Oka,
        clusters: clusters.into_iter().map(|c| view.labels_of(c)).collect(),
    })
}

/// Trace-count baseline: sort by count descending (ties by identity), cut
/// into blocks of `k`, and let the last block absorb the remainder.
pub fn baseline_bl_counts(counts: &BTreeMap<String, usize>, k: usize) -> Result<ClusterAssignment> {
    check_k(counts.len(), k)?;
    let mut ordered: Vec<(&String, usize)> = counts.iter().map(|(i, c)| (i, *c)).collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let n = counts.len() / k;
    let mut clusters: Vec<Vec<String>> = vec![Vec::new(); n];
    for (pos, (id, _)) in ordered.into_iter().enumerate() {
        clusters[(pos / k).min(n - 1)].push(id.clone());
    }
    Ok(ClusterAssignment {
        method: ClusterMethod::Baseline,
        clusters,
    })
}

pub fn baseline_bl(log: &EventLog, k: usize, include_unknown: bool) -> Result<ClusterAssignment> {
    let counts: BTreeMap<String, usize> = log
        .case_counts()
        .iter()
        .filter(|(id, _)| include_unknown || id.as_str() != crate::eventlog::UNKNOWN_RESOURCE)
        .map(|(id, c)| (id.clone(), *c))
        .collect();
    baseline_bl_counts(&counts, k)
}
