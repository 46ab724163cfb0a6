//! Seeded synthetic event logs for tests, benchmarks and experiments.

use chrono::{Duration, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eventlog::{Event, EventLog, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub individuals: usize,
    pub activity_pool: usize,
    pub min_activities: usize,
    pub max_activities: usize,
    pub min_cases: usize,
    pub max_cases: usize,
    /// Exponent of the power law spreading case counts between the bounds.
    pub skew: f64,
    /// Share of cases finished by a second individual.
    pub handoff_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            individuals: 60,
            activity_pool: 24,
            min_activities: 6,
            max_activities: 9,
            min_cases: 4,
            max_cases: 60,
            skew: 0.9,
            handoff_rate: 0.15,
            seed: 0,
        }
    }
}

pub fn activity_name(i: usize) -> String {
    format!("act{i:02}")
}

pub fn individual_name(i: usize) -> String {
    format!("ind{i:03}")
}

/// An individual's habits: a start activity and a weighted successor list
/// per activity, plus a stop probability.
struct Habit {
    activities: Vec<usize>,
    successors: Vec<Vec<(usize, f64)>>,
    stop: f64,
}

impl Habit {
    fn random(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Self {
        let size = rng
            .random_range(config.min_activities..=config.max_activities.max(config.min_activities));
        let size = size.min(config.activity_pool);
        let mut pool: Vec<usize> = (0..config.activity_pool).collect();
        pool.shuffle(rng);
        let activities: Vec<usize> = pool.into_iter().take(size).collect();
        let successors = (0..size)
            .map(|_| {
                let fanout = rng.random_range(1..=3.min(size));
                let mut local: Vec<usize> = (0..size).collect();
                local.shuffle(rng);
                local
                    .into_iter()
                    .take(fanout)
                    .map(|j| (j, rng.random_range(0.2..1.0)))
                    .collect()
            })
            .collect();
        Habit {
            activities,
            successors,
            stop: rng.random_range(0.15..0.3),
        }
    }

    fn next(&self, at: usize, rng: &mut ChaCha8Rng) -> usize {
        let options = &self.successors[at];
        let total: f64 = options.iter().map(|o| o.1).sum();
        let mut u = rng.random::<f64>() * total;
        for &(j, w) in options {
            if u < w {
                return j;
            }
            u -= w;
        }
        options.last().map_or(at, |o| o.0)
    }

    /// A walk of local activity indexes, at least 2 and at most 12 long.
    fn walk(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut at = if rng.random::<f64>() < 0.8 {
            0
        } else {
            rng.random_range(0..self.activities.len())
        };
        let mut out = vec![at];
        while out.len() < 12 && (out.len() < 2 || rng.random::<f64>() >= self.stop) {
            at = self.next(at, rng);
            out.push(at);
        }
        out
    }
}

/// Multi-individual log: each individual follows its own small Markov chain
/// over a subset of a shared activity pool, case counts follow a power law,
/// and a share of cases is handed over to a second individual midway.
pub fn generate_log(config: &SynthConfig) -> EventLog {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let habits: Vec<Habit> = (0..config.individuals)
        .map(|_| Habit::random(config, &mut rng))
        .collect();
    let mut ranks: Vec<usize> = (0..config.individuals).collect();
    ranks.shuffle(&mut rng);

    let start: Timestamp = Utc.with_ymd_and_hms(2023, 1, 1, 8, 0, 0).unwrap();
    let mut events = Vec::new();
    let mut case_no = 0usize;
    for (who, habit) in habits.iter().enumerate() {
        let span = (config.max_cases - config.min_cases) as f64;
        let cases = config.min_cases
            + (span / (1.0 + ranks[who] as f64).powf(config.skew)).round() as usize;
        for _ in 0..cases {
            case_no += 1;
            let case_id = format!("case{case_no:05}");
            let mut t = start + Duration::minutes(rng.random_range(0..525_600));
            let walk = habit.walk(&mut rng);
            let handoff = config.individuals > 1 && rng.random::<f64>() < config.handoff_rate;
            let cut = if handoff {
                rng.random_range(1..walk.len())
            } else {
                walk.len()
            };
            for &a in &walk[..cut] {
                t += Duration::minutes(rng.random_range(1..120));
                events.push(Event::new(
                    &case_id,
                    activity_name(habit.activities[a]),
                    t,
                    individual_name(who),
                ));
            }
            if handoff {
                let mut other = rng.random_range(0..config.individuals - 1);
                if other >= who {
                    other += 1;
                }
                let tail = habits[other].walk(&mut rng);
                for &a in tail.iter().take(walk.len() - cut + 1) {
                    t += Duration::minutes(rng.random_range(1..120));
                    events.push(Event::new(
                        &case_id,
                        activity_name(habits[other].activities[a]),
                        t,
                        individual_name(other),
                    ));
                }
            }
        }
    }
    EventLog::from_events(events).expect("generated events are well formed")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomLogConfig {
    pub individuals: usize,
    pub cases: usize,
    pub activities: usize,
    pub max_trace_len: usize,
    pub seed: u64,
}

/// Unstructured log: uniformly random activities and resources. Every
/// individual gets at least one case.
pub fn random_log(config: &RandomLogConfig) -> EventLog {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start: Timestamp = Utc.with_ymd_and_hms(2022, 6, 1, 0, 0, 0).unwrap();
    let names: Vec<String> = (0..config.individuals).map(individual_name).collect();
    let mut events = Vec::new();
    let cases = config.cases.max(config.individuals);
    for c in 0..cases {
        let case_id = format!("r{c:04}");
        let len = rng.random_range(1..=config.max_trace_len.max(1));
        let owner = if c < config.individuals {
            names[c].clone()
        } else {
            names
                .choose(&mut rng)
                .expect("at least one individual")
                .clone()
        };
        let mut t = start + Duration::seconds(rng.random_range(0..10_000_000));
        for i in 0..len {
            t += Duration::seconds(rng.random_range(1..3600));
            let who = if i == 0 || rng.random::<f64>() < 0.7 {
                owner.clone()
            } else {
                names
                    .choose(&mut rng)
                    .expect("at least one individual")
                    .clone()
            };
            events.push(Event::new(
                &case_id,
                activity_name(rng.random_range(0..config.activities)),
                t,
                who,
            ));
        }
    }
    EventLog::from_events(events).expect("generated events are well formed")
}

/// Dense single-process log whose directly-follows graph is close to
/// complete: the kind of model that is hard to read without simplification.
pub fn spaghetti_log(activities: usize, cases: usize, seed: u64) -> EventLog {
    random_log(&RandomLogConfig {
        individuals: 5.min(cases.max(1)),
        cases,
        activities,
        max_trace_len: 3 * activities,
        seed,
    })
}
