//! Microaggregation of behaviour: individuals are clustered by the distance
//! between their process models, and every member of a cluster is given the
//! same sampled set of traces.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pseudonym::PseudonymMap;
use crate::clustering::{
    baseline_bl_counts, cluster, ClusterAssignment, ClusterMethod, DistanceMatrix,
};
use crate::discovery::{discover_dfg, ProcessModel};
use crate::error::{Error, Result};
use crate::eventlog::{sublog_by_resource, Event, EventLog, Trace};
use crate::similarity::Measure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KpppmConfig {
    pub k: usize,
    pub clustering: ClusterMethod,
    pub measure: Measure,
    pub seed: u64,
    pub include_unknown: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Representative {
    pub cluster: usize,
    pub members: Vec<String>,
    /// Traces in the cluster's aggregate sub-log.
    pub available_traces: usize,
    /// Sum of the members' case counts.
    pub member_traces: usize,
    pub sample_size: usize,
    pub sampled_cases: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct KpppmOutput {
    pub log: EventLog,
    pub clusters: ClusterAssignment,
    pub representatives: Vec<Representative>,
    pub pseudonyms: PseudonymMap,
}

/// `round(total / members)` with halves rounded up.
pub fn sample_size(total_traces: usize, members: usize) -> usize {
    (2 * total_traces + members) / (2 * members)
}

/// Directly-follows model of each listed individual's own events.
pub fn individual_models(
    log: &EventLog,
    individuals: &[String],
) -> Result<BTreeMap<String, ProcessModel>> {
    individuals
        .par_iter()
        .map(|id| {
            let sub = sublog_by_resource(log, id)?;
            Ok((id.clone(), discover_dfg(&sub)?))
        })
        .collect()
}

/// Steps up to the clustering: models, distance matrix, assignment.
pub fn cluster_individuals(log: &EventLog, config: &KpppmConfig) -> Result<ClusterAssignment> {
    let individuals = log.participants(config.include_unknown);
    if config.clustering == ClusterMethod::Baseline {
        let counts: BTreeMap<String, usize> = individuals
            .iter()
            .map(|id| (id.clone(), log.case_counts()[id]))
            .collect();
        return baseline_bl_counts(&counts, config.k);
    }
    if config.k > individuals.len() || config.k < 2 {
        return Err(Error::param(format!(
            "k = {} is not in [2, {}]",
            config.k,
            individuals.len()
        )));
    }
    let models = individual_models(log, &individuals)?;
    let dm = DistanceMatrix::from_models(&models, config.measure)?;
    cluster(&dm, config.k, config.clustering)
}

/// Members' events grouped by case, in log order.
fn aggregate_sublog(log: &EventLog, members: &BTreeSet<&str>) -> Vec<Trace> {
    log.traces()
        .iter()
        .filter_map(|t| {
            let events: Vec<Event> = t
                .events
                .iter()
                .filter(|e| members.contains(e.resource.as_str()))
                .cloned()
                .collect();
            (!events.is_empty()).then(|| Trace {
                case_id: t.case_id.clone(),
                events,
            })
        })
        .collect()
}

/// Runs k-PPPM with a prepared clustering; used by [`k_pppm`] and by callers
/// that want to inspect or fix the clusters.
pub fn k_pppm_with_clusters(
    log: &EventLog,
    clusters: ClusterAssignment,
    pseudonyms: PseudonymMap,
    seed: u64,
) -> Result<KpppmOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    let mut representatives = Vec::with_capacity(clusters.clusters.len());
    for (ci, members) in clusters.clusters.iter().enumerate() {
        let set: BTreeSet<&str> = members.iter().map(String::as_str).collect();
        let traces = aggregate_sublog(log, &set);
        if traces.is_empty() {
            return Err(Error::InvalidLog(format!("cluster {ci} has no traces")));
        }
        let member_traces: usize = members
            .iter()
            .map(|m| log.case_counts().get(m).copied().unwrap_or(0))
            .sum();
        let m = sample_size(member_traces, members.len()).clamp(1, traces.len());
        let mut picked = sample(&mut rng, traces.len(), m).into_vec();
        picked.sort_unstable();

        for (ri, member) in members.iter().enumerate() {
            let resource = pseudonyms
                .pseudonym_of(member)
                .ok_or_else(|| Error::Internal(format!("no pseudonym for `{member}`")))?;
            for &ti in &picked {
                let trace = &traces[ti];
                let case_id = format!("c{ci}r{ri}_{}", trace.case_id);
                events.extend(trace.events.iter().map(|e| Event {
                    event_id: String::new(),
                    case_id: case_id.clone(),
                    resource: resource.to_string(),
                    ..e.clone()
                }));
            }
        }
        representatives.push(Representative {
            cluster: ci,
            members: members.clone(),
            available_traces: traces.len(),
            member_traces,
            sample_size: m,
            sampled_cases: picked.iter().map(|&i| traces[i].case_id.clone()).collect(),
        });
    }
    Ok(KpppmOutput {
        log: EventLog::from_events(events)?,
        clusters,
        representatives,
        pseudonyms,
    })
}

pub fn k_pppm(log: &EventLog, config: &KpppmConfig, key: &[u8]) -> Result<KpppmOutput> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let pseudonyms = PseudonymMap::derive(key, log.participants(config.include_unknown))?;
    let clusters = cluster_individuals(log, config)?;
    k_pppm_with_clusters(log, clusters, pseudonyms, config.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::distance;
    use chrono::{TimeZone, Utc};

    #[test]
    fn sample_size_rounds_half_up() {
        assert_eq!(sample_size(54, 3), 18);
        assert_eq!(sample_size(5, 2), 3);
        assert_eq!(sample_size(4, 3), 1);
        assert_eq!(sample_size(5, 3), 2);
    }

    fn log() -> EventLog {
        let acts = [
            ["A", "B", "C"],
            ["A", "C", "B"],
            ["X", "Y", "Z"],
            ["X", "Z", "Y"],
        ];
        let mut events = Vec::new();
        let mut t = 0;
        for (who, pattern) in ["p0", "p1", "p2", "p3"].iter().zip(acts) {
            for case in 0..3 {
                for act in pattern {
                    t += 1;
                    events.push(Event::new(
                        format!("{who}-{case}"),
                        act,
                        Utc.timestamp_opt(t, 0).unwrap(),
                        *who,
                    ));
                }
            }
        }
        EventLog::from_events(events).unwrap()
    }

    #[test]
    fn members_share_one_model() {
        let config = KpppmConfig {
            k: 2,
            clustering: ClusterMethod::Mdav,
            measure: Measure::Veo,
            seed: 7,
            include_unknown: false,
        };
        let out = k_pppm(&log(), &config, b"key").unwrap();
        assert_eq!(out.clusters.clusters.len(), 2);
        let mut sorted = out.clusters.clusters.clone();
        sorted.sort();
        assert_eq!(sorted, vec![vec!["p0", "p1"], vec!["p2", "p3"]]);
        for rep in &out.representatives {
            assert_eq!(rep.sample_size, 3);
            let ids: Vec<String> = rep
                .members
                .iter()
                .map(|m| out.pseudonyms.pseudonym_of(m).unwrap().to_string())
                .collect();
            let models = individual_models(&out.log, &ids).unwrap();
            for measure in Measure::ALL {
                let d = distance(measure, &models[&ids[0]], &models[&ids[1]]).unwrap();
                assert_eq!(d.value, 0.0);
            }
        }
        assert_eq!(out.log.trace_count(), 12);
    }

    #[test]
    fn k_equal_p_gives_one_cluster() {
        for method in [ClusterMethod::Mdav, ClusterMethod::Baseline] {
            let config = KpppmConfig {
                k: 4,
                clustering: method,
                measure: Measure::Wd,
                seed: 1,
                include_unknown: false,
            };
            let out = k_pppm(&log(), &config, b"key").unwrap();
            assert_eq!(out.clusters.clusters.len(), 1);
            assert!(k_pppm(&log(), &KpppmConfig { k: 5, ..config }, b"key").is_err());
        }
    }
}
