//! Re-identification attackers. Both report, per victim, the set of
//! pseudonyms the attacker cannot tell apart; a guess is uniform over that
//! set, so the success probability is `1/|candidates|` when the victim's
//! pseudonym is among them.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anonymize::{individual_models, PseudonymMap};
use crate::discovery::ProcessModel;
use crate::error::{Error, Result};
use crate::eventlog::EventLog;
use crate::similarity::{distance, Measure};
use crate::SCHEMA_VERSION;

/// Distances closer than this to the minimum count as tied.
pub const DISTANCE_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    Distribution,
    Modelling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VictimResult {
    pub victim: String,
    pub candidates: Vec<String>,
    pub hit: bool,
    pub success_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub schema_version: u32,
    pub attack: AttackKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<Measure>,
    pub victims: Vec<VictimResult>,
    pub success_rate: f64,
}

impl AttackResult {
    fn new(attack: AttackKind, measure: Option<Measure>, victims: Vec<VictimResult>) -> Self {
        let success_rate = if victims.is_empty() {
            0.0
        } else {
            victims.iter().map(|v| v.success_probability).sum::<f64>() / victims.len() as f64
        };
        AttackResult {
            schema_version: SCHEMA_VERSION,
            attack,
            measure,
            victims,
            success_rate,
        }
    }
}

fn victim_result(victim: &str, candidates: Vec<String>, linkage: &PseudonymMap) -> VictimResult {
    let hit = linkage
        .pseudonym_of(victim)
        .is_some_and(|p| candidates.iter().any(|c| c == p));
    let success_probability = if hit {
        1.0 / candidates.len() as f64
    } else {
        0.0
    };
    VictimResult {
        victim: victim.to_string(),
        candidates,
        hit,
        success_probability,
    }
}

/// Groups of positions `[start, end)` holding equal values in a list sorted
/// by descending count.
fn tie_blocks(sorted_counts: &[usize]) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < sorted_counts.len() {
        let mut end = start + 1;
        while end < sorted_counts.len() && sorted_counts[end] == sorted_counts[start] {
            end += 1;
        }
        blocks.push((start, end));
        start = end;
    }
    blocks
}

fn descending(counts: &BTreeMap<String, usize>) -> Vec<(String, usize)> {
    let mut v: Vec<(String, usize)> = counts.iter().map(|(k, c)| (k.clone(), *c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

/// Rank-matches observed per-identity case counts against per-pseudonym
/// case counts in the protected log. A victim's candidates are all
/// pseudonyms whose rank block overlaps the victim's own rank block.
pub fn distribution_attack(
    protected: &EventLog,
    observed: &BTreeMap<String, usize>,
    linkage: &PseudonymMap,
) -> Result<AttackResult> {
    let pseudo_counts: BTreeMap<String, usize> = protected
        .participants(false)
        .into_iter()
        .map(|p| {
            let c = protected.case_counts()[&p];
            (p, c)
        })
        .collect();
    if pseudo_counts.len() != observed.len() {
        return Err(Error::param(format!(
            "{} observed identities but {} pseudonyms in the protected log",
            observed.len(),
            pseudo_counts.len()
        )));
    }
    let ids = descending(observed);
    let pseudos = descending(&pseudo_counts);
    let id_blocks = tie_blocks(&ids.iter().map(|x| x.1).collect::<Vec<_>>());
    let pseudo_blocks = tie_blocks(&pseudos.iter().map(|x| x.1).collect::<Vec<_>>());

    let mut victims = Vec::with_capacity(ids.len());
    for &(s, e) in &id_blocks {
        let mut candidates: Vec<String> = pseudo_blocks
            .iter()
            .filter(|&&(ps, pe)| ps < e && s < pe)
            .flat_map(|&(ps, pe)| pseudos[ps..pe].iter().map(|x| x.0.clone()))
            .collect();
        candidates.sort();
        for (id, _) in &ids[s..e] {
            victims.push(victim_result(id, candidates.clone(), linkage));
        }
    }
    victims.sort_by(|a, b| a.victim.cmp(&b.victim));
    Ok(AttackResult::new(AttackKind::Distribution, None, victims))
}

/// Per-pseudonym models of a protected log, for repeated modelling attacks.
pub fn pseudonym_models(protected: &EventLog) -> Result<BTreeMap<String, ProcessModel>> {
    if protected.is_empty() {
        return Err(Error::EmptyLog);
    }
    individual_models(protected, &protected.participants(false))
}

/// Pseudonyms whose model is closest to `victim_model`, ties included.
pub fn closest_pseudonyms(
    models: &BTreeMap<String, ProcessModel>,
    victim_model: &ProcessModel,
    measure: Measure,
) -> Result<Vec<String>> {
    if models.is_empty() {
        return Err(Error::EmptyLog);
    }
    let scored: Vec<(&String, f64)> = models
        .par_iter()
        .map(|(p, m)| distance(measure, victim_model, m).map(|d| (p, d.value)))
        .collect::<Result<_>>()?;
    let min = scored.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    Ok(scored
        .into_iter()
        .filter(|(_, d)| *d - min <= DISTANCE_TIE_TOLERANCE)
        .map(|(p, _)| p.clone())
        .collect())
}

/// Matches each victim's true model against every protected per-pseudonym
/// model and keeps the nearest ones.
pub fn modelling_attack(
    protected: &EventLog,
    victim_models: &BTreeMap<String, ProcessModel>,
    measure: Measure,
    linkage: &PseudonymMap,
) -> Result<AttackResult> {
    let models = pseudonym_models(protected)?;
    modelling_attack_on_models(&models, victim_models, measure, linkage)
}

pub fn modelling_attack_on_models(
    models: &BTreeMap<String, ProcessModel>,
    victim_models: &BTreeMap<String, ProcessModel>,
    measure: Measure,
    linkage: &PseudonymMap,
) -> Result<AttackResult> {
    let victims = victim_models
        .iter()
        .map(|(victim, vm)| {
            closest_pseudonyms(models, vm, measure).map(|c| victim_result(victim, c, linkage))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AttackResult::new(
        AttackKind::Modelling,
        Some(measure),
        victims,
    ))
}
