use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean, sample_sd};
use super::{score, OriginalSide, Scores};
use crate::anonymize::{k_pppm, u_pppm, KpppmConfig, Strategy, UpppmConfig};
use crate::clustering::ClusterMethod;
use crate::error::{Error, Result};
use crate::eventlog::EventLog;
use crate::similarity::Measure;
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum MethodConfig {
    Upppm {
        k: usize,
        strategy: Strategy,
    },
    Kpppm {
        k: usize,
        clustering: ClusterMethod,
        measure: Measure,
    },
}

impl MethodConfig {
    pub fn k(&self) -> usize {
        match *self {
            MethodConfig::Upppm { k, .. } | MethodConfig::Kpppm { k, .. } => k,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MethodConfig::Upppm { .. } => "upppm",
            MethodConfig::Kpppm { .. } => "kpppm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        Summary {
            mean: mean(values),
            sd: sample_sd(values),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScores {
    pub seed: u64,
    pub qs: f64,
    pub ils: f64,
    pub cs: f64,
    pub qs_by_measure: BTreeMap<Measure, f64>,
    pub ils_by_measure: BTreeMap<Measure, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub config: MethodConfig,
    pub repetitions: usize,
    pub seeds: Vec<u64>,
    pub qs: Summary,
    pub ils: Summary,
    pub cs: Summary,
    pub qs_by_measure: BTreeMap<Measure, Summary>,
    pub ils_by_measure: BTreeMap<Measure, Summary>,
    /// Replay rate per individual, averaged over runs.
    pub replay: BTreeMap<String, f64>,
    pub runs: Vec<RunScores>,
}

impl MetricsReport {
    pub fn from_runs(config: MethodConfig, scores: Vec<(u64, Scores)>) -> Self {
        let pick =
            |f: &dyn Fn(&Scores) -> f64| scores.iter().map(|(_, s)| f(s)).collect::<Vec<_>>();
        let by_measure = |f: &dyn Fn(&Scores) -> &BTreeMap<Measure, f64>| {
            Measure::ALL
                .iter()
                .filter(|m| scores.iter().all(|(_, s)| f(s).contains_key(m)))
                .map(|m| (*m, Summary::of(&pick(&|s| f(s)[m]))))
                .collect::<BTreeMap<_, _>>()
        };
        let mut replay: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (_, s) in &scores {
            for (id, r) in &s.replay {
                replay.entry(id.clone()).or_default().push(*r);
            }
        }
        MetricsReport {
            schema_version: SCHEMA_VERSION,
            config,
            repetitions: scores.len(),
            seeds: scores.iter().map(|(seed, _)| *seed).collect(),
            qs: Summary::of(&pick(&|s| s.qs)),
            ils: Summary::of(&pick(&|s| s.ils)),
            cs: Summary::of(&pick(&|s| s.cs)),
            qs_by_measure: by_measure(&|s| &s.qs_by_measure),
            ils_by_measure: by_measure(&|s| &s.ils_by_measure),
            replay: replay.into_iter().map(|(id, v)| (id, mean(&v))).collect(),
            runs: scores
                .into_iter()
                .map(|(seed, s)| RunScores {
                    seed,
                    qs: s.qs,
                    ils: s.ils,
                    cs: s.cs,
                    qs_by_measure: s.qs_by_measure,
                    ils_by_measure: s.ils_by_measure,
                })
                .collect(),
        }
    }
}

/// Anonymizes `log` once per seed in `base_seed .. base_seed + repetitions`
/// and summarizes the scores as mean and sample standard deviation. Runs
/// execute in parallel; results are ordered by seed.
pub fn run_experiment(
    log: &EventLog,
    original: &OriginalSide,
    config: MethodConfig,
    repetitions: usize,
    base_seed: u64,
    key: &[u8],
) -> Result<MetricsReport> {
    if repetitions == 0 {
        return Err(Error::param("repetitions must be at least 1"));
    }
    let seeds: Vec<u64> = (0..repetitions as u64)
        .map(|i| base_seed.wrapping_add(i))
        .collect();
    let scores: Vec<(u64, Scores)> = seeds
        .par_iter()
        .map(|&seed| {
            let (protected, linkage) = match config {
                MethodConfig::Upppm { k, strategy } => {
                    let out = u_pppm(
                        log,
                        &UpppmConfig {
                            k,
                            strategy,
                            seed,
                            include_unknown: false,
                        },
                        key,
                    )?;
                    (out.log, out.pseudonyms)
                }
                MethodConfig::Kpppm {
                    k,
                    clustering,
                    measure,
                } => {
                    let out = k_pppm(
                        log,
                        &KpppmConfig {
                            k,
                            clustering,
                            measure,
                            seed,
                            include_unknown: false,
                        },
                        key,
                    )?;
                    (out.log, out.pseudonyms)
                }
            };
            Ok((seed, score(original, &protected, &linkage)?))
        })
        .collect::<Result<_>>()?;
    Ok(MetricsReport::from_runs(config, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::Event;
    use chrono::{TimeZone, Utc};

    fn log() -> EventLog {
        let mut events = Vec::new();
        let mut t = 0;
        for (who, cases) in [("a", 5), ("b", 3), ("c", 3), ("d", 1)] {
            for c in 0..cases {
                for act in ["A", "B", if c % 2 == 0 { "C" } else { "D" }] {
                    t += 1;
                    events.push(Event::new(
                        format!("{who}{c}"),
                        act,
                        Utc.timestamp_opt(t, 0).unwrap(),
                        who,
                    ));
                }
            }
        }
        EventLog::from_events(events).unwrap()
    }

    #[test]
    fn single_run_has_zero_sd_and_is_reproducible() {
        let log = log();
        let side = OriginalSide::new(&log, log.participants(false)).unwrap();
        let config = MethodConfig::Upppm {
            k: 2,
            strategy: Strategy::S3,
        };
        let one = run_experiment(&log, &side, config, 1, 4, b"k").unwrap();
        assert_eq!(one.qs.sd, 0.0);
        assert_eq!(one.seeds, vec![4]);
        let a = run_experiment(&log, &side, config, 5, 10, b"k").unwrap();
        let b = run_experiment(&log, &side, config, 5, 10, b"k").unwrap();
        assert_eq!(a.qs.mean.to_bits(), b.qs.mean.to_bits());
        assert_eq!(a.seeds, vec![10, 11, 12, 13, 14]);
        assert!(run_experiment(&log, &side, config, 0, 0, b"k").is_err());
    }
}
