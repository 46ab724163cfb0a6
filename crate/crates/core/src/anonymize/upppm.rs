//! Uniformisation: individuals are ordered by case count, cut into groups of
//! `k` neighbours, and whole case participations are moved from providers to
//! receivers until every member of a group handles the same number of cases
//! (within one when the group total does not divide evenly).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pseudonym::{is_participant, PseudonymMap};
use crate::error::{Error, Result};
use crate::eventlog::{Event, EventLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Roulette wheel on the deviation from the group mean.
    S1,
    /// Highest count provides to lowest count.
    S2,
    /// Uniformly random pair.
    S3,
    /// Lateral: equalize the first `m` members before admitting the next.
    S4,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::S1, Strategy::S2, Strategy::S3, Strategy::S4];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(Strategy::S1),
            "s2" => Ok(Strategy::S2),
            "s3" => Ok(Strategy::S3),
            "s4" => Ok(Strategy::S4),
            other => Err(Error::param(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Consecutive draws that could not move a case before the group switches
/// to max/min pairing.
pub const MAX_FAILED_DRAWS: usize = 50;
/// Draw budget per case of the group.
pub const ITERATIONS_PER_CASE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpppmConfig {
    pub k: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub include_unknown: bool,
}

/// Case counts of one group while it is being uniformised. `members` keeps
/// the descending-count order the group was formed in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupState {
    pub members: Vec<String>,
    pub counts: Vec<usize>,
    /// Prefix length admitted so far by the lateral strategy.
    pub lateral_prefix: usize,
}

impl GroupState {
    pub fn new(members: Vec<String>, counts: Vec<usize>) -> Self {
        GroupState {
            members,
            counts,
            lateral_prefix: 2,
        }
    }

    pub fn is_uniform(&self) -> bool {
        spread(&self.counts) <= 1
    }
}

fn spread(counts: &[usize]) -> usize {
    let max = counts.iter().copied().max().unwrap_or(0);
    let min = counts.iter().copied().min().unwrap_or(0);
    max - min
}

/// First index holding the maximum (or minimum) of `counts[..len]`.
fn arg_extreme(counts: &[usize], len: usize, max: bool) -> usize {
    let mut best = 0;
    for i in 1..len {
        let better = if max {
            counts[i] > counts[best]
        } else {
            counts[i] < counts[best]
        };
        if better {
            best = i;
        }
    }
    best
}

fn roulette(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = i;
        if target < w {
            return i;
        }
        target -= w;
    }
    last
}

/// Picks `(provider, receiver)` member indexes. The lateral strategy first
/// widens its prefix while the prefix is already within one case.
pub fn select_pair(
    state: &mut GroupState,
    strategy: Strategy,
    rng: &mut impl Rng,
) -> (usize, usize) {
    let n = state.counts.len();
    match strategy {
        Strategy::S1 => {
            let mean = state.counts.iter().sum::<usize>() as f64 / n as f64;
            let above: Vec<f64> = state
                .counts
                .iter()
                .map(|&c| (c as f64 - mean).max(0.0))
                .collect();
            let below: Vec<f64> = state
                .counts
                .iter()
                .map(|&c| (mean - c as f64).max(0.0))
                .collect();
            (roulette(&above, rng), roulette(&below, rng))
        }
        Strategy::S2 => (
            arg_extreme(&state.counts, n, true),
            arg_extreme(&state.counts, n, false),
        ),
        Strategy::S3 => {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            if state.counts[a] >= state.counts[b] {
                (a, b)
            } else {
                (b, a)
            }
        }
        Strategy::S4 => {
            state.lateral_prefix = state.lateral_prefix.clamp(2, n);
            while state.lateral_prefix < n && spread(&state.counts[..state.lateral_prefix]) <= 1 {
                state.lateral_prefix += 1;
            }
            let m = state.lateral_prefix;
            (
                arg_extreme(&state.counts, m, true),
                arg_extreme(&state.counts, m, false),
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub members: Vec<String>,
    pub before: Vec<usize>,
    pub after: Vec<usize>,
    /// Case participations moved between members.
    pub moves: usize,
    /// `max - min` of the final counts; 0 or 1.
    pub residual: usize,
    /// Whether the group fell back to max/min pairing.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub k: usize,
    pub strategy: Strategy,
    pub groups: Vec<GroupRecord>,
}

impl GroupAssignment {
    /// Same record with member names passed through `map`.
    pub fn pseudonymized(&self, map: &PseudonymMap) -> GroupAssignment {
        let mut out = self.clone();
        for g in &mut out.groups {
            for m in &mut g.members {
                if let Some(p) = map.pseudonym_of(m) {
                    *m = p.to_string();
                }
            }
        }
        out
    }
}

/// Orders individuals by descending case count (ties by identity) and cuts
/// them into `⌊p/k⌋` groups, the last one taking the remainder.
pub fn form_groups(counts: &BTreeMap<String, usize>, k: usize) -> Result<Vec<Vec<String>>> {
    let p = counts.len();
    if k < 2 {
        return Err(Error::param(format!("k must be at least 2, got {k}")));
    }
    if k > p {
        return Err(Error::param(format!("k = {k} exceeds the {p} individuals")));
    }
    let mut ordered: Vec<(&String, usize)> = counts.iter().map(|(i, c)| (i, *c)).collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let n = p / k;
    let mut groups = vec![Vec::new(); n];
    for (pos, (id, _)) in ordered.into_iter().enumerate() {
        groups[(pos / k).min(n - 1)].push(id.clone());
    }
    Ok(groups)
}

/// Mutable view of who takes part in which case.
struct Participation {
    events: Vec<Event>,
    case_events: BTreeMap<String, Vec<usize>>,
    cases_of: BTreeMap<String, BTreeSet<String>>,
}

impl Participation {
    fn new(log: &EventLog) -> Self {
        let events: Vec<Event> = log.events().cloned().collect();
        let mut case_events: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut cases_of: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (i, e) in events.iter().enumerate() {
            case_events.entry(e.case_id.clone()).or_default().push(i);
            cases_of
                .entry(e.resource.clone())
                .or_default()
                .insert(e.case_id.clone());
        }
        Participation {
            events,
            case_events,
            cases_of,
        }
    }

    fn eligible(&self, provider: &str, receiver: &str) -> Vec<String> {
        let empty = BTreeSet::new();
        let theirs = self.cases_of.get(receiver).unwrap_or(&empty);
        self.cases_of
            .get(provider)
            .unwrap_or(&empty)
            .iter()
            .filter(|c| !theirs.contains(*c))
            .cloned()
            .collect()
    }

    fn move_case(&mut self, case: &str, provider: &str, receiver: &str) {
        for &i in &self.case_events[case] {
            if self.events[i].resource == provider {
                self.events[i].resource = receiver.to_string();
            }
        }
        self.cases_of
            .get_mut(provider)
            .expect("provider known")
            .remove(case);
        self.cases_of
            .entry(receiver.to_string())
            .or_default()
            .insert(case.to_string());
    }
}

fn uniformise_group(
    index: usize,
    members: Vec<String>,
    strategy: Strategy,
    parts: &mut Participation,
    rng: &mut ChaCha8Rng,
) -> Result<GroupRecord> {
    let counts: Vec<usize> = members.iter().map(|m| parts.cases_of[m].len()).collect();
    let before = counts.clone();
    let total: usize = counts.iter().sum();
    let budget = ITERATIONS_PER_CASE * total.max(1);
    let mut state = GroupState::new(members, counts);
    let mut active = strategy;
    let mut failed = 0;
    let mut moves = 0;
    let mut iterations = 0;

    while !state.is_uniform() {
        iterations += 1;
        if iterations > budget {
            return Err(Error::NonTermination {
                group: index,
                iterations: budget,
            });
        }
        let (pv, rc) = select_pair(&mut state, active, rng);
        let diff = state.counts[pv].saturating_sub(state.counts[rc]);
        let wanted = match active {
            Strategy::S2 => diff / 2,
            _ => 1,
        };
        let eligible = if diff >= 2 && pv != rc {
            parts.eligible(&state.members[pv], &state.members[rc])
        } else {
            Vec::new()
        };
        if eligible.is_empty() {
            failed += 1;
            if failed >= MAX_FAILED_DRAWS {
                active = Strategy::S2;
            }
            continue;
        }
        failed = 0;
        let quantum = wanted.min(eligible.len());
        let mut picked = sample(rng, eligible.len(), quantum).into_vec();
        picked.sort_unstable();
        let provider = state.members[pv].clone();
        let receiver = state.members[rc].clone();
        for i in picked {
            parts.move_case(&eligible[i], &provider, &receiver);
        }
        state.counts[pv] -= quantum;
        state.counts[rc] += quantum;
        moves += quantum;
    }

    Ok(GroupRecord {
        residual: spread(&state.counts),
        members: state.members,
        before,
        after: state.counts,
        moves,
        fallback: active != strategy,
    })
}

/// u-PPPM without the final pseudonymization step: resources keep their
/// original identities.
pub fn uniformise(log: &EventLog, config: &UpppmConfig) -> Result<(EventLog, GroupAssignment)> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let counts: BTreeMap<String, usize> = log
        .case_counts()
        .iter()
        .filter(|(id, _)| is_participant(id, config.include_unknown))
        .map(|(id, c)| (id.clone(), *c))
        .collect();
    let groups = form_groups(&counts, config.k)?;
    let mut parts = Participation::new(log);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::with_capacity(groups.len());
    for (index, members) in groups.into_iter().enumerate() {
        records.push(uniformise_group(
            index,
            members,
            config.strategy,
            &mut parts,
            &mut rng,
        )?);
    }
    let out = EventLog::from_events(parts.events)?;
    Ok((
        out,
        GroupAssignment {
            k: config.k,
            strategy: config.strategy,
            groups: records,
        },
    ))
}

#[derive(Debug, Clone)]
pub struct UpppmOutput {
    pub log: EventLog,
    pub groups: GroupAssignment,
    pub pseudonyms: PseudonymMap,
}

/// Uniformises case counts and pseudonymizes the result under `key`.
pub fn u_pppm(log: &EventLog, config: &UpppmConfig, key: &[u8]) -> Result<UpppmOutput> {
    let pseudonyms = PseudonymMap::derive(key, log.participants(config.include_unknown))?;
    let (uniform, groups) = uniformise(log, config)?;
    Ok(UpppmOutput {
        log: pseudonyms.apply(&uniform)?,
        groups,
        pseudonyms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::Event;
    use chrono::{TimeZone, Utc};

    /// Bob in t1..t5, Pete in t1 t2 t4, Marie in t2 t4 t5, Sam in t3.
    fn toy() -> EventLog {
        let mut events = Vec::new();
        let mut tick = 0;
        let mut ev = |case: &str, act: &str, who: &str| {
            tick += 60;
            events.push(Event::new(
                case,
                act,
                Utc.timestamp_opt(tick, 0).unwrap(),
                who,
            ));
        };
        ev("t1", "register", "Bob");
        ev("t1", "triage", "Pete");
        ev("t2", "register", "Bob");
        ev("t2", "triage", "Pete");
        ev("t2", "treat", "Marie");
        ev("t3", "register", "Bob");
        ev("t3", "treat", "Sam");
        ev("t4", "register", "Bob");
        ev("t4", "triage", "Pete");
        ev("t4", "treat", "Marie");
        ev("t5", "register", "Bob");
        ev("t5", "treat", "Marie");
        EventLog::from_events(events).unwrap()
    }

    fn sorted_counts(log: &EventLog) -> Vec<usize> {
        let mut c: Vec<usize> = log.case_counts().values().copied().collect();
        c.sort_unstable_by(|a, b| b.cmp(a));
        c
    }

    #[test]
    fn toy_counts() {
        let log = toy();
        assert_eq!(sorted_counts(&log), vec![5, 3, 3, 1]);
        for strategy in Strategy::ALL {
            for seed in 0..5 {
                let config = UpppmConfig {
                    k: 2,
                    strategy,
                    seed,
                    include_unknown: false,
                };
                let (out, groups) = uniformise(&log, &config).unwrap();
                assert_eq!(sorted_counts(&out), vec![4, 4, 2, 2], "{strategy} {seed}");
                assert_eq!(groups.groups.len(), 2);
                let config = UpppmConfig { k: 4, ..config };
                let (out, _) = uniformise(&log, &config).unwrap();
                assert_eq!(sorted_counts(&out), vec![3, 3, 3, 3]);
            }
        }
    }

    #[test]
    fn groups_by_descending_count() {
        let counts: BTreeMap<String, usize> = [("Bob", 5), ("Pete", 3), ("Marie", 3), ("Sam", 1)]
            .map(|(a, b)| (a.to_string(), b))
            .into();
        assert_eq!(
            form_groups(&counts, 2).unwrap(),
            vec![vec!["Bob", "Marie"], vec!["Pete", "Sam"]]
        );
        assert_eq!(form_groups(&counts, 3).unwrap().len(), 1);
        assert!(form_groups(&counts, 5).is_err());
    }

    #[test]
    fn s2_pair_and_s1_roulette() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut st = GroupState::new(vec!["a".into(), "b".into()], vec![10, 2]);
        assert_eq!(select_pair(&mut st, Strategy::S2, &mut rng), (0, 1));
        let mut st = GroupState::new(vec!["a".into(), "b".into(), "c".into()], vec![8, 4, 0]);
        for _ in 0..100 {
            assert_eq!(select_pair(&mut st, Strategy::S1, &mut rng), (0, 2));
        }
    }

    #[test]
    fn s4_admits_members_laterally() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut st = GroupState::new(vec!["a".into(), "b".into(), "c".into()], vec![6, 6, 0]);
        // First two already equal, so the third joins as receiver.
        assert_eq!(select_pair(&mut st, Strategy::S4, &mut rng), (0, 2));
        assert_eq!(st.lateral_prefix, 3);
        let mut st = GroupState::new(vec!["a".into(), "b".into(), "c".into()], vec![9, 3, 0]);
        assert_eq!(select_pair(&mut st, Strategy::S4, &mut rng), (0, 1));
    }

    #[test]
    fn u_pppm_pseudonymizes() {
        let config = UpppmConfig {
            k: 2,
            strategy: Strategy::S2,
            seed: 3,
            include_unknown: false,
        };
        let out = u_pppm(&toy(), &config, b"key").unwrap();
        assert!(out.log.case_counts().keys().all(|r| r.len() == 16));
        assert_eq!(out.log.event_count(), 12);
        assert!(u_pppm(&toy(), &config, b"").is_err());
    }
}
