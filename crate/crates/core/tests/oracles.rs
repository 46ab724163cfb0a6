//! Results checked against independent recomputations.

mod common;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use privmine_core::anonymize::{
    individual_models, k_pppm, pseudonymize, u_pppm, uniformise, KpppmConfig, PseudonymMap,
    Strategy, UpppmConfig,
};
use privmine_core::attack::{distribution_attack, modelling_attack};
use privmine_core::clustering::{cluster, ClusterMethod, DistanceMatrix};
use privmine_core::discovery::{discover_dfg, skip_miner_with_decisions, ProcessModel};
use privmine_core::evaluate::{information_loss_score, quality_score, welch_t_test};
use privmine_core::similarity::{deltacon, distance, Measure};
use privmine_core::synth::{random_log, RandomLogConfig};

/// Plain Gauss-Jordan inverse with partial pivoting.
fn gauss_jordan_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                for (v, pv) in a[r].iter_mut().zip(pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn deltacon_oracle(a: &[(usize, usize)], b: &[(usize, usize)], n: usize) -> f64 {
    let adj = |edges: &[(usize, usize)]| {
        let mut m = vec![vec![0.0; n]; n];
        for &(i, j) in edges {
            m[i][j] = 1.0;
            m[j][i] = 1.0;
        }
        m
    };
    let (aa, ab) = (adj(a), adj(b));
    let deg = |m: &Vec<Vec<f64>>| m.iter().map(|r| r.iter().sum::<f64>()).collect::<Vec<_>>();
    let maxdeg = deg(&aa).into_iter().chain(deg(&ab)).fold(0.0, f64::max);
    let eps = 1.0 / (1.0 + maxdeg);
    let affinity = |m: &Vec<Vec<f64>>| {
        let d = deg(m);
        let sys: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let id = if i == j { 1.0 } else { 0.0 };
                        let dd = if i == j { eps * eps * d[i] } else { 0.0 };
                        id + dd - eps * m[i][j]
                    })
                    .collect()
            })
            .collect();
        gauss_jordan_inverse(&sys)
    };
    let (sa, sb) = (affinity(&aa), affinity(&ab));
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            sum += (sa[i][j].max(0.0).sqrt() - sb[i][j].max(0.0).sqrt()).powi(2);
        }
    }
    1.0 - 1.0 / (1.0 + sum.sqrt())
}

fn model_of(edges: &[(usize, usize)], n: usize) -> ProcessModel {
    ProcessModel::from_counts(
        (0..n).map(|i| format!("v{i}")),
        edges
            .iter()
            .map(|&(i, j)| ((format!("v{i}"), format!("v{j}")), 1)),
    )
}

#[test]
fn deltacon_matches_gauss_jordan() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let n = rng.random_range(2..9);
        let mut edges = || {
            let m = rng.random_range(1..2 * n);
            (0..m)
                .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect::<Vec<_>>()
        };
        let (a, b) = (edges(), edges());
        let got = deltacon(&model_of(&a, n), &model_of(&b, n)).unwrap().value;
        let want = deltacon_oracle(&a, &b, n);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

/// Cheapest split of `p` records into two halves of size `p/2`.
fn best_bisection(dm: &DistanceMatrix) -> BTreeSet<BTreeSet<String>> {
    let p = dm.len();
    let mut best = (f64::INFINITY, 0u32);
    for mask in 0u32..(1 << p) {
        if mask.count_ones() as usize != p / 2 || mask & 1 == 0 {
            continue;
        }
        let mut cost = 0.0;
        for i in 0..p {
            for j in i + 1..p {
                if (mask >> i) & 1 == (mask >> j) & 1 {
                    cost += dm.get(i, j);
                }
            }
        }
        if cost < best.0 {
            best = (cost, mask);
        }
    }
    let side = |bit: u32| -> BTreeSet<String> {
        (0..p)
            .filter(|i| (best.1 >> i) & 1 == bit)
            .map(|i| dm.labels()[i].clone())
            .collect()
    };
    [side(0), side(1)].into()
}

#[test]
fn two_blobs_match_brute_force_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..40 {
        let k = rng.random_range(2..=5);
        let p = 2 * k;
        let blob: Vec<bool> = {
            let mut v: Vec<bool> = (0..p).map(|i| i < k).collect();
            rand::seq::SliceRandom::shuffle(v.as_mut_slice(), &mut rng);
            v
        };
        let noise: Vec<f64> = (0..p * p).map(|_| rng.random_range(0.0..0.05)).collect();
        let labels: Vec<String> = (0..p).map(|i| format!("r{i}")).collect();
        let dm = DistanceMatrix::from_fn(labels, |i, j| {
            (if blob[i] == blob[j] { 0.1 } else { 0.8 }) + noise[i * p + j]
        })
        .unwrap();
        let want = best_bisection(&dm);
        for method in [
            ClusterMethod::Mdav,
            ClusterMethod::KMember,
            ClusterMethod::Oka,
        ] {
            let got: BTreeSet<BTreeSet<String>> = cluster(&dm, k, method)
                .unwrap()
                .clusters
                .into_iter()
                .map(|c| c.into_iter().collect())
                .collect();
            assert_eq!(got, want, "{method}");
        }
    }
}

#[test]
fn welch_agrees_with_exhaustive_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let na = rng.random_range(3..=7);
        let nb = rng.random_range(3..=7);
        let shift = rng.random_range(0.0..1.5);
        let a: Vec<f64> = (0..na).map(|_| rng.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..nb)
            .map(|_| rng.random_range(0.0..1.0) + shift)
            .collect();
        let w = welch_t_test(&a, &b).unwrap();
        let p = common::permutation_p_value(&a, &b);
        // Small samples make the permutation distribution coarse.
        assert!((w - p).abs() < 0.1, "{w} vs {p} for {a:?} {b:?}");
    }
    let w = welch_t_test(&common::SLEEP_A, &common::SLEEP_B).unwrap();
    assert!((w - common::permutation_p_value(&common::SLEEP_A, &common::SLEEP_B)).abs() <= 0.01);
}

fn small_population(seed: u64) -> privmine_core::EventLog {
    random_log(&RandomLogConfig {
        individuals: 4,
        cases: 16,
        activities: 5,
        max_trace_len: 5,
        seed,
    })
}

#[test]
fn ils_matches_first_principles() {
    let log = small_population(21);
    let (protected, map) = pseudonymize(&log, b"k", false).unwrap();
    // Perturb: drop a few events so the protected side differs.
    let protected = protected.filter_events(|e| !e.event_id.ends_with("#2"));
    let ids = log.participants(false);
    let mut maes = Vec::new();
    for measure in Measure::ALL {
        let mut diffs = Vec::new();
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                let oi = discover_dfg(
                    &privmine_core::eventlog::sublog_by_resource(&log, &ids[i]).unwrap(),
                )
                .unwrap();
                let oj = discover_dfg(
                    &privmine_core::eventlog::sublog_by_resource(&log, &ids[j]).unwrap(),
                )
                .unwrap();
                let pi = discover_dfg(
                    &privmine_core::eventlog::sublog_by_resource(
                        &protected,
                        map.pseudonym_of(&ids[i]).unwrap(),
                    )
                    .unwrap(),
                )
                .unwrap();
                let pj = discover_dfg(
                    &privmine_core::eventlog::sublog_by_resource(
                        &protected,
                        map.pseudonym_of(&ids[j]).unwrap(),
                    )
                    .unwrap(),
                )
                .unwrap();
                let before = distance(measure, &oi, &oj).unwrap().value;
                let after = distance(measure, &pi, &pj).unwrap().value;
                diffs.push((before - after).abs());
            }
        }
        maes.push(diffs.iter().sum::<f64>() / diffs.len() as f64);
    }
    let want = maes.iter().sum::<f64>() / 4.0;
    let got = information_loss_score(&log, &protected, &map).unwrap();
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
}

#[test]
fn qs_with_one_cluster_is_distance_to_representative() {
    let log = common::build(&[
        ("1", "A", "ann"),
        ("1", "B", "ann"),
        ("2", "A", "ann"),
        ("2", "C", "ann"),
        ("3", "X", "bob"),
        ("3", "Y", "bob"),
    ]);
    let config = KpppmConfig {
        k: 2,
        clustering: ClusterMethod::Mdav,
        measure: Measure::Veo,
        seed: 3,
        include_unknown: false,
    };
    let out = k_pppm(&log, &config, b"k").unwrap();
    let rep_model = individual_models(
        &out.log,
        &[out.pseudonyms.pseudonym_of("ann").unwrap().to_string()],
    )
    .unwrap()
    .into_values()
    .next()
    .unwrap();
    let originals = individual_models(&log, &["ann".to_string(), "bob".to_string()]).unwrap();
    let mut all = Vec::new();
    for m in originals.values() {
        for measure in Measure::ALL {
            all.push(distance(measure, m, &rep_model).unwrap().value);
        }
    }
    let want = all.iter().sum::<f64>() / all.len() as f64;
    let got = quality_score(&log, &out.log, &out.pseudonyms).unwrap();
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn forced_skips_keep_a_d_e() {
    // Skipping two events from A lands on D; no other origin skips.
    let log = common::build(&[
        ("1", "A", "x"),
        ("1", "B", "x"),
        ("1", "C", "x"),
        ("1", "D", "x"),
        ("1", "E", "x"),
    ]);
    let model = skip_miner_with_decisions(&log, 2, |_, a| a == "A").unwrap();
    let nodes: Vec<&str> = model.nodes().iter().map(String::as_str).collect();
    assert_eq!(nodes, vec!["A", "D", "E"]);
    assert!(model.has_edge("A", "D") && model.has_edge("D", "E"));
}

#[test]
fn distribution_attack_on_uniform_groups_is_bounded_by_one_over_k() {
    // Group totals divide evenly: (9, 6, 6) and (5, 4, 3).
    let log = common::disjoint_log(&[("a", 9), ("b", 6), ("c", 6), ("d", 5), ("e", 4), ("f", 3)]);
    for strategy in Strategy::ALL {
        let config = UpppmConfig {
            k: 3,
            strategy,
            seed: 8,
            include_unknown: false,
        };
        let out = u_pppm(&log, &config, b"k").unwrap();
        assert!(out.groups.groups.iter().all(|g| g.residual == 0));
        let r = distribution_attack(&out.log, log.case_counts(), &out.pseudonyms).unwrap();
        for v in &r.victims {
            assert!(v.candidates.len() >= 3, "{v:?}");
            assert!(v.success_probability <= 1.0 / 3.0 + 1e-12);
        }
    }
}

#[test]
fn modelling_attack_candidates_span_the_cluster() {
    let log = random_log(&RandomLogConfig {
        individuals: 9,
        cases: 40,
        activities: 6,
        max_trace_len: 5,
        seed: 5,
    });
    let config = KpppmConfig {
        k: 3,
        clustering: ClusterMethod::KMember,
        measure: Measure::Wd,
        seed: 1,
        include_unknown: false,
    };
    let out = k_pppm(&log, &config, b"k").unwrap();
    let victims = individual_models(&log, &log.participants(false)).unwrap();
    let r = modelling_attack(&out.log, &victims, Measure::Wd, &out.pseudonyms).unwrap();
    for v in &r.victims {
        assert!(v.candidates.len() >= 3);
        assert!(v.success_probability <= 1.0 / 3.0 + 1e-12);
    }
}

#[test]
fn pseudonyms_are_unique_and_preserve_count_multiset() {
    let log = random_log(&RandomLogConfig {
        individuals: 200,
        cases: 400,
        activities: 4,
        max_trace_len: 3,
        seed: 2,
    });
    let (out, map) = pseudonymize(&log, b"another key", false).unwrap();
    let distinct: BTreeSet<&str> = map.iter().map(|(_, p)| p).collect();
    assert_eq!(distinct.len(), 200);
    let multiset = |l: &privmine_core::EventLog| {
        let mut v: Vec<usize> = l.case_counts().values().copied().collect();
        v.sort_unstable();
        v
    };
    assert_eq!(multiset(&log), multiset(&out));
    let r = PseudonymMap::identity(["x"]);
    assert_eq!(r.pseudonym_of("x"), Some("x"));
}

#[test]
fn upppm_is_seed_deterministic() {
    let log = small_population(13);
    let config = UpppmConfig {
        k: 2,
        strategy: Strategy::S3,
        seed: 99,
        include_unknown: false,
    };
    let (a, ga) = uniformise(&log, &config).unwrap();
    let (b, gb) = uniformise(&log, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(ga, gb);
}
