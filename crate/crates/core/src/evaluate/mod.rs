//! Utility of a protected log, measured three ways:
//!
//! * **QS**: mean distance, over individuals and the four measures, between
//!   each individual's original model and their protected model.
//! * **ILS**: for each measure, mean absolute error between the original and
//!   protected inter-individual distance matrices (strict upper triangle),
//!   averaged over measures.
//! * **CS**: share of each individual's original traces that replay on their
//!   protected model, averaged over individuals.

mod experiment;
mod stats;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anonymize::{individual_models, PseudonymMap};
use crate::clustering::DistanceMatrix;
use crate::discovery::ProcessModel;
use crate::error::{Error, Result};
use crate::eventlog::{sublog_by_resource, EventLog};
use crate::similarity::{distance, Measure};

pub use experiment::{run_experiment, MethodConfig, MetricsReport, RunScores, Summary};
pub use stats::{average_ranks, mean, sample_sd, spearman, welch_statistic, welch_t_test};

/// Everything about the original log the scores need, computed once and
/// reused across protected logs.
#[derive(Debug, Clone)]
pub struct OriginalSide {
    individuals: Vec<String>,
    models: BTreeMap<String, ProcessModel>,
    matrices: BTreeMap<Measure, DistanceMatrix>,
    traces: BTreeMap<String, Vec<Vec<String>>>,
}

impl OriginalSide {
    pub fn new(log: &EventLog, individuals: Vec<String>) -> Result<Self> {
        let models = individual_models(log, &individuals)?;
        let matrices = if individuals.len() >= 2 {
            Measure::ALL
                .par_iter()
                .map(|&m| DistanceMatrix::from_models(&models, m).map(|dm| (m, dm)))
                .collect::<Result<_>>()?
        } else {
            BTreeMap::new()
        };
        let traces = individuals
            .iter()
            .map(|id| {
                let sub = sublog_by_resource(log, id)?;
                let seqs = sub
                    .traces()
                    .iter()
                    .map(|t| t.activities().map(str::to_string).collect())
                    .collect();
                Ok((id.clone(), seqs))
            })
            .collect::<Result<_>>()?;
        Ok(OriginalSide {
            individuals,
            models,
            matrices,
            traces,
        })
    }

    pub fn individuals(&self) -> &[String] {
        &self.individuals
    }

    pub fn models(&self) -> &BTreeMap<String, ProcessModel> {
        &self.models
    }

    pub fn matrix(&self, measure: Measure) -> Option<&DistanceMatrix> {
        self.matrices.get(&measure)
    }
}

/// Protected models keyed by the original identity they link to.
pub fn protected_models(
    protected: &EventLog,
    individuals: &[String],
    linkage: &PseudonymMap,
) -> Result<BTreeMap<String, ProcessModel>> {
    individuals
        .par_iter()
        .map(|id| {
            let pseudo = linkage
                .pseudonym_of(id)
                .ok_or_else(|| Error::MissingIndividual(id.clone()))?;
            let sub = sublog_by_resource(protected, pseudo)
                .map_err(|_| Error::MissingIndividual(id.clone()))?;
            Ok((id.clone(), crate::discovery::discover_dfg(&sub)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub qs: f64,
    pub ils: f64,
    pub cs: f64,
    pub qs_by_measure: BTreeMap<Measure, f64>,
    pub ils_by_measure: BTreeMap<Measure, f64>,
    /// Replay rate per individual; individuals without traces are absent.
    pub replay: BTreeMap<String, f64>,
}

/// QS, ILS and CS of `protected` against a prepared original side. ILS is
/// reported as 0 when fewer than two individuals take part.
pub fn score(
    original: &OriginalSide,
    protected: &EventLog,
    linkage: &PseudonymMap,
) -> Result<Scores> {
    let models = protected_models(protected, &original.individuals, linkage)?;
    let (qs, qs_by_measure) = qs_from_models(original, &models)?;
    let (ils, ils_by_measure) = if original.individuals.len() >= 2 {
        ils_from_models(original, &models)?
    } else {
        (0.0, BTreeMap::new())
    };
    let replay = replay_scores(original, &models);
    let cs = mean(&replay.values().copied().collect::<Vec<_>>());
    Ok(Scores {
        qs,
        ils,
        cs,
        qs_by_measure,
        ils_by_measure,
        replay,
    })
}

fn qs_from_models(
    original: &OriginalSide,
    protected: &BTreeMap<String, ProcessModel>,
) -> Result<(f64, BTreeMap<Measure, f64>)> {
    let mut by_measure = BTreeMap::new();
    let mut all = Vec::with_capacity(4 * original.individuals.len());
    for measure in Measure::ALL {
        let values: Vec<f64> = original
            .individuals
            .par_iter()
            .map(|id| distance(measure, &original.models[id], &protected[id]).map(|d| d.value))
            .collect::<Result<_>>()?;
        by_measure.insert(measure, mean(&values));
        all.extend(values);
    }
    Ok((mean(&all), by_measure))
}

fn ils_from_models(
    original: &OriginalSide,
    protected: &BTreeMap<String, ProcessModel>,
) -> Result<(f64, BTreeMap<Measure, f64>)> {
    let mut by_measure = BTreeMap::new();
    for measure in Measure::ALL {
        let before = &original.matrices[&measure];
        let after = DistanceMatrix::from_models(protected, measure)?;
        let a = before.upper_triangle();
        let b = after.upper_triangle();
        let mae = mean(
            &a.iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .collect::<Vec<_>>(),
        );
        by_measure.insert(measure, mae);
    }
    let ils = mean(&by_measure.values().copied().collect::<Vec<_>>());
    Ok((ils, by_measure))
}

/// Whether the activity sequence replays on `model`: every consecutive pair
/// must be an edge, and a lone activity must be a node.
pub fn replays(model: &ProcessModel, trace: &[String]) -> bool {
    match trace {
        [] => true,
        [only] => model.has_node(only),
        _ => trace.windows(2).all(|w| model.has_edge(&w[0], &w[1])),
    }
}

fn replay_scores(
    original: &OriginalSide,
    protected: &BTreeMap<String, ProcessModel>,
) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for id in &original.individuals {
        let traces = &original.traces[id];
        if traces.is_empty() {
            log::warn!(
                "individual `{id}` has no original traces and is left out of the conformance score"
            );
            continue;
        }
        let ok = traces.iter().filter(|t| replays(&protected[id], t)).count();
        out.insert(id.clone(), ok as f64 / traces.len() as f64);
    }
    out
}

pub fn quality_score(
    original: &EventLog,
    protected: &EventLog,
    linkage: &PseudonymMap,
) -> Result<f64> {
    let ids = linked_individuals(linkage);
    let side = OriginalSide::new(original, ids)?;
    let models = protected_models(protected, &side.individuals, linkage)?;
    Ok(qs_from_models(&side, &models)?.0)
}

pub fn information_loss_score(
    original: &EventLog,
    protected: &EventLog,
    linkage: &PseudonymMap,
) -> Result<f64> {
    let ids = linked_individuals(linkage);
    if ids.len() < 2 {
        return Err(Error::param(
            "the information loss score needs at least two individuals",
        ));
    }
    let side = OriginalSide::new(original, ids)?;
    let models = protected_models(protected, &side.individuals, linkage)?;
    Ok(ils_from_models(&side, &models)?.0)
}

pub fn conformance_score(
    original: &EventLog,
    protected: &EventLog,
    linkage: &PseudonymMap,
) -> Result<f64> {
    let ids = linked_individuals(linkage);
    let side = OriginalSide::new(original, ids)?;
    let models = protected_models(protected, &side.individuals, linkage)?;
    let replay = replay_scores(&side, &models);
    Ok(mean(&replay.values().copied().collect::<Vec<_>>()))
}

fn linked_individuals(linkage: &PseudonymMap) -> Vec<String> {
    linkage.iter().map(|(id, _)| id.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::Event;
    use chrono::{TimeZone, Utc};

    fn build(rows: &[(&str, &str, &str)]) -> EventLog {
        EventLog::from_events(rows.iter().enumerate().map(|(i, (case, act, who))| {
            Event::new(*case, *act, Utc.timestamp_opt(i as i64, 0).unwrap(), *who)
        }))
        .unwrap()
    }

    fn original() -> EventLog {
        build(&[
            ("1", "A", "ann"),
            ("1", "B", "ann"),
            ("2", "A", "ann"),
            ("2", "C", "ann"),
            ("3", "X", "bob"),
            ("3", "Y", "bob"),
            ("4", "Z", "bob"),
        ])
    }

    #[test]
    fn identity_scores() {
        let log = original();
        let link = PseudonymMap::identity(log.participants(false));
        let side = OriginalSide::new(&log, log.participants(false)).unwrap();
        let s = score(&side, &log, &link).unwrap();
        assert_eq!((s.qs, s.ils, s.cs), (0.0, 0.0, 1.0));
    }

    #[test]
    fn half_of_four_traces_replay() {
        let log = build(&[
            ("1", "A", "ann"),
            ("1", "B", "ann"),
            ("2", "B", "ann"),
            ("2", "C", "ann"),
            ("3", "A", "ann"),
            ("3", "C", "ann"),
            ("4", "C", "ann"),
            ("4", "A", "ann"),
        ]);
        // Protected behaviour keeps only A->B and B->C.
        let protected = build(&[("9", "A", "ann"), ("9", "B", "ann"), ("9", "C", "ann")]);
        let link = PseudonymMap::identity(["ann"]);
        assert_eq!(conformance_score(&log, &protected, &link).unwrap(), 0.5);
    }

    #[test]
    fn missing_individual_is_named() {
        let log = original();
        let protected = build(&[("1", "A", "ann")]);
        let link = PseudonymMap::identity(["ann", "bob"]);
        match quality_score(&log, &protected, &link) {
            Err(Error::MissingIndividual(id)) => assert_eq!(id, "bob"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn disjoint_models_give_veo_one() {
        let log = original();
        let protected = build(&[("1", "P", "ann"), ("1", "Q", "ann"), ("2", "R", "bob")]);
        let link = PseudonymMap::identity(["ann", "bob"]);
        let side = OriginalSide::new(&log, vec!["ann".into(), "bob".into()]).unwrap();
        let s = score(&side, &protected, &link).unwrap();
        assert_eq!(s.qs_by_measure[&Measure::Veo], 1.0);
        assert_eq!(s.cs, 0.0);
        assert!(
            information_loss_score(&log, &protected, &PseudonymMap::identity(["ann"])).is_err()
        );
    }

    #[test]
    fn single_event_trace_needs_node() {
        let model = ProcessModel::from_counts(vec!["A".to_string()], Vec::new());
        assert!(replays(&model, &["A".to_string()]));
        assert!(!replays(&model, &["B".to_string()]));
    }
}
