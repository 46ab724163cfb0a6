#![allow(dead_code)]

use chrono::{Duration, TimeZone, Utc};
use privmine_core::eventlog::{Event, EventLog};

/// Bob handles t1..t5, Pete t1 t2 t4, Marie t2 t4 t5, Sam t3: case counts
/// 5, 3, 3, 1.
pub fn toy_log() -> EventLog {
    let rows = [
        ("t1", "register", "Bob"),
        ("t1", "triage", "Pete"),
        ("t2", "register", "Bob"),
        ("t2", "triage", "Pete"),
        ("t2", "treat", "Marie"),
        ("t3", "register", "Bob"),
        ("t3", "treat", "Sam"),
        ("t4", "register", "Bob"),
        ("t4", "triage", "Pete"),
        ("t4", "treat", "Marie"),
        ("t5", "register", "Bob"),
        ("t5", "treat", "Marie"),
    ];
    build(&rows)
}

pub fn build(rows: &[(&str, &str, &str)]) -> EventLog {
    let t0 = Utc.with_ymd_and_hms(2024, 3, 1, 9, 0, 0).unwrap();
    EventLog::from_events(rows.iter().enumerate().map(|(i, (case, act, who))| {
        Event::new(*case, *act, t0 + Duration::minutes(i as i64), *who)
    }))
    .unwrap()
}

/// Individuals with their own cases only; `counts[i]` cases of two events.
pub fn disjoint_log(counts: &[(&str, usize)]) -> EventLog {
    let t0 = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
    let mut events = Vec::new();
    let mut t = 0;
    for (who, n) in counts {
        for c in 0..*n {
            for act in ["A", "B"] {
                t += 1;
                events.push(Event::new(
                    format!("{who}-{c}"),
                    act,
                    t0 + Duration::seconds(t),
                    *who,
                ));
            }
        }
    }
    EventLog::from_events(events).unwrap()
}

/// Individual `i` handles `i + 1` cases and works on its own activity
/// chain, so both case counts and models tell everyone apart.
pub fn distinct_profile_log(p: usize) -> EventLog {
    let t0 = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
    let mut events = Vec::new();
    let mut t = 0;
    for i in 0..p {
        let who = format!("p{i:02}");
        for c in 0..=i {
            for step in 0..3 {
                t += 1;
                events.push(Event::new(
                    format!("{who}-{c}"),
                    format!("a{i}_{step}"),
                    t0 + Duration::seconds(t),
                    who.as_str(),
                ));
            }
        }
    }
    EventLog::from_events(events).unwrap()
}

/// Two-sided exhaustive permutation test on `|welch t|`: the share of all
/// relabelings of the pooled sample whose statistic reaches the observed one.
pub fn permutation_p_value(a: &[f64], b: &[f64]) -> f64 {
    fn t_stat(x: &[f64], y: &[f64]) -> f64 {
        let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64]| {
            let mv = m(v);
            v.iter().map(|z| (z - mv).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        };
        (m(x) - m(y)) / (var(x) / x.len() as f64 + var(y) / y.len() as f64).sqrt()
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let na = a.len();
    let observed = t_stat(a, b).abs();
    let mut extreme = 0u64;
    let mut total = 0u64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        let mut x = Vec::with_capacity(na);
        let mut y = Vec::with_capacity(n - na);
        for (i, v) in pooled.iter().enumerate() {
            if mask & (1 << i) != 0 {
                x.push(*v);
            } else {
                y.push(*v);
            }
        }
        total += 1;
        if t_stat(&x, &y).abs() >= observed - 1e-12 {
            extreme += 1;
        }
    }
    extreme as f64 / total as f64
}

pub const SLEEP_A: [f64; 8] = [0.7, -1.6, -0.2, -1.2, -0.1, 3.4, 3.7, 0.8];
pub const SLEEP_B: [f64; 8] = [1.9, 0.8, 1.1, 0.1, -0.1, 4.4, 5.5, 1.6];
pub const YIELD_A: [f64; 8] = [19.1, 21.3, 20.4, 22.8, 18.7, 20.9, 21.6, 19.8];
pub const YIELD_B: [f64; 8] = [22.4, 23.9, 21.7, 24.6, 22.9, 23.1, 25.2, 22.0];
