use std::collections::BTreeMap;

use crate::discovery::ProcessModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankConfig {
    pub damping: f64,
    /// L1 change between sweeps below which iteration stops.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        PageRankConfig {
            damping: 0.85,
            tolerance: 1e-9,
            max_iterations: 200,
        }
    }
}

/// Weighted PageRank. Transition probabilities are edge weights normalized
/// per source node; mass on nodes without successors is spread uniformly.
pub fn pagerank(model: &ProcessModel, config: &PageRankConfig) -> BTreeMap<String, f64> {
    let nodes: Vec<&str> = model.nodes().iter().map(String::as_str).collect();
    let n = nodes.len();
    if n == 0 {
        return BTreeMap::new();
    }
    let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, v)| (*v, i)).collect();

    let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for ((from, to), edge) in model.edges() {
        if edge.weight > 0.0 {
            out[index[from.as_str()]].push((index[to.as_str()], edge.weight));
        }
    }
    for row in &mut out {
        let total: f64 = row.iter().map(|(_, w)| w).sum();
        for (_, w) in row.iter_mut() {
            *w /= total;
        }
    }

    let nf = n as f64;
    let d = config.damping;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..config.max_iterations {
        let dangling: f64 = (0..n).filter(|&i| out[i].is_empty()).map(|i| rank[i]).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for (i, row) in out.iter().enumerate() {
            for &(j, p) in row {
                next[j] += d * rank[i] * p;
            }
        }
        let delta: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if delta < config.tolerance {
            break;
        }
    }
    nodes.into_iter().map(str::to_string).zip(rank).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_to_one_and_orders_sink_first() {
        let model = ProcessModel::from_counts(
            Vec::new(),
            vec![(("A".into(), "B".into()), 1), (("C".into(), "B".into()), 1)],
        );
        let pr = pagerank(&model, &PageRankConfig::default());
        let total: f64 = pr.values().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(pr["B"] > pr["A"]);
        assert!((pr["A"] - pr["C"]).abs() < 1e-12);
    }

    #[test]
    fn two_node_chain_closed_form() {
        // A -> B with B dangling: a = 0.075 + 0.425 b and a + b = 1,
        // so a = 0.5 / 1.425.
        let model = ProcessModel::from_counts(Vec::new(), vec![(("A".into(), "B".into()), 1)]);
        let pr = pagerank(&model, &PageRankConfig::default());
        let a = 0.5 / 1.425;
        assert!((pr["A"] - a).abs() < 1e-8, "{}", pr["A"]);
        assert!((pr["B"] - (1.0 - a)).abs() < 1e-8);
    }
}
