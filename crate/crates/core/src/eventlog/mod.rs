//! Event-log data model: events grouped into traces, plus the per-individual
//! indexes every anonymizer and attacker works from.
//!
//! An [`EventLog`] is immutable once built. Construction canonicalizes the
//! layout so that serialization is deterministic:
//!
//! * events are grouped by case id,
//! * events inside a trace are stably sorted by timestamp (ties keep input order),
//! * traces are ordered by their first timestamp, then by case id.

mod csv;
mod xes;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use chrono::{DateTime, NaiveDate, NaiveDateTime, SubsecRound, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::csv::{parse_csv, serialize_csv, ColumnMap};
pub use self::xes::{parse_xes, serialize_xes, XesImport};

/// Resource value assigned to events that carry no individual.
pub const UNKNOWN_RESOURCE: &str = "unknown";

pub type Timestamp = DateTime<Utc>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub event_id: String,
    pub case_id: String,
    pub activity: String,
    pub timestamp: Timestamp,
    pub resource: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, String>,
}

impl Event {
    /// Event with an empty id; [`EventLog::from_events`] synthesizes one.
    pub fn new(
        case_id: impl Into<String>,
        activity: impl Into<String>,
        timestamp: Timestamp,
        resource: impl Into<String>,
    ) -> Self {
        Event {
            event_id: String::new(),
            case_id: case_id.into(),
            activity: activity.into(),
            timestamp: truncate_millis(timestamp),
            resource: resource.into(),
            extras: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn activities(&self) -> impl Iterator<Item = &str> {
        self.events.iter().map(|e| e.activity.as_str())
    }

    pub fn first_timestamp(&self) -> Option<Timestamp> {
        self.events.first().map(|e| e.timestamp)
    }
}

/// How an individual's "frequency of activity" is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyMode {
    /// Number of distinct cases the individual takes part in.
    #[default]
    Cases,
    /// Number of events the individual executed. Experimental.
    Events,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    traces: Vec<Trace>,
    case_counts: BTreeMap<String, usize>,
    event_counts: BTreeMap<String, usize>,
}

impl EventLog {
    pub fn empty() -> Self {
        EventLog::default()
    }

    /// Builds a log from loose events.
    ///
    /// Events with an empty `event_id` receive `"<case_id>#<ordinal>"`, the
    /// ordinal being the 1-based position inside the (sorted) trace.
    pub fn from_events(events: impl IntoIterator<Item = Event>) -> Result<Self> {
        let mut order: Vec<String> = Vec::new();
        let mut by_case: HashMap<String, Vec<Event>> = HashMap::new();
        for mut event in events {
            if event.case_id.is_empty() {
                return Err(Error::InvalidLog("event with empty case id".into()));
            }
            if event.activity.is_empty() {
                return Err(Error::InvalidLog(format!(
                    "event in case `{}` has an empty activity",
                    event.case_id
                )));
            }
            if event.resource.is_empty() {
                event.resource = UNKNOWN_RESOURCE.to_string();
            }
            event.timestamp = truncate_millis(event.timestamp);
            let slot = by_case.entry(event.case_id.clone()).or_insert_with(|| {
                order.push(event.case_id.clone());
                Vec::new()
            });
            slot.push(event);
        }

        let mut traces: Vec<Trace> = order
            .into_iter()
            .map(|case_id| {
                let mut events = by_case.remove(&case_id).unwrap_or_default();
                events.sort_by_key(|e| e.timestamp);
                for (ordinal, event) in events.iter_mut().enumerate() {
                    if event.event_id.is_empty() {
                        event.event_id = format!("{}#{}", case_id, ordinal + 1);
                    }
                }
                Trace { case_id, events }
            })
            .collect();
        traces.sort_by(|a, b| {
            a.first_timestamp()
                .cmp(&b.first_timestamp())
                .then_with(|| a.case_id.cmp(&b.case_id))
        });
        Self::from_sorted_traces(traces)
    }

    /// Builds a log from traces whose layout is already canonical.
    fn from_sorted_traces(traces: Vec<Trace>) -> Result<Self> {
        let mut seen: HashSet<&str> = HashSet::new();
        let mut case_counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut event_counts: BTreeMap<String, usize> = BTreeMap::new();
        for trace in &traces {
            let mut in_case: BTreeSet<&str> = BTreeSet::new();
            for event in &trace.events {
                if !seen.insert(event.event_id.as_str()) {
                    return Err(Error::InvalidLog(format!(
                        "duplicate event id `{}`",
                        event.event_id
                    )));
                }
                in_case.insert(event.resource.as_str());
                *event_counts.entry(event.resource.clone()).or_default() += 1;
            }
            for resource in in_case {
                *case_counts.entry(resource.to_string()).or_default() += 1;
            }
        }
        Ok(EventLog {
            traces,
            case_counts,
            event_counts,
        })
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn into_traces(self) -> Vec<Trace> {
        self.traces
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.traces.iter().flat_map(|t| t.events.iter())
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn trace_count(&self) -> usize {
        self.traces.len()
    }

    pub fn event_count(&self) -> usize {
        self.traces.iter().map(|t| t.events.len()).sum()
    }

    /// Distinct resource values, sorted.
    pub fn individuals(&self) -> Vec<&str> {
        self.case_counts.keys().map(String::as_str).collect()
    }

    /// Individuals that take part in anonymization: every resource except
    /// [`UNKNOWN_RESOURCE`] unless `include_unknown` is set.
    pub fn participants(&self, include_unknown: bool) -> Vec<String> {
        self.case_counts
            .keys()
            .filter(|r| include_unknown || r.as_str() != UNKNOWN_RESOURCE)
            .cloned()
            .collect()
    }

    /// Number of distinct cases each individual has at least one event in.
    pub fn case_counts(&self) -> &BTreeMap<String, usize> {
        &self.case_counts
    }

    pub fn event_counts(&self) -> &BTreeMap<String, usize> {
        &self.event_counts
    }

    pub fn frequency(&self, mode: FrequencyMode) -> &BTreeMap<String, usize> {
        match mode {
            FrequencyMode::Cases => &self.case_counts,
            FrequencyMode::Events => &self.event_counts,
        }
    }

    /// Distinct activity names, sorted.
    pub fn activities(&self) -> BTreeSet<&str> {
        self.events().map(|e| e.activity.as_str()).collect()
    }

    /// Keeps the events for which `keep` holds; traces left empty disappear.
    pub fn filter_events(&self, mut keep: impl FnMut(&Event) -> bool) -> EventLog {
        let traces: Vec<Trace> = self
            .traces
            .iter()
            .filter_map(|t| {
                let events: Vec<Event> = t.events.iter().filter(|e| keep(e)).cloned().collect();
                (!events.is_empty()).then(|| Trace {
                    case_id: t.case_id.clone(),
                    events,
                })
            })
            .collect();
        // Filtering cannot break uniqueness, but a trace's first timestamp may
        // move, so re-sort.
        let mut traces = traces;
        traces.sort_by(|a, b| {
            a.first_timestamp()
                .cmp(&b.first_timestamp())
                .then_with(|| a.case_id.cmp(&b.case_id))
        });
        Self::from_sorted_traces(traces).expect("subset of a valid log is valid")
    }
}

/// Events of one individual, regrouped into (partial) traces by case.
pub fn sublog_by_resource(log: &EventLog, resource: &str) -> Result<EventLog> {
    if !log.case_counts.contains_key(resource) {
        return Err(Error::UnknownResource(resource.to_string()));
    }
    Ok(log.filter_events(|e| e.resource == resource))
}

/// Splits the log into one sub-log per individual in a single pass.
pub fn sublogs_by_resource(log: &EventLog) -> BTreeMap<String, EventLog> {
    let mut per: BTreeMap<String, Vec<Event>> = BTreeMap::new();
    for event in log.events() {
        per.entry(event.resource.clone())
            .or_default()
            .push(event.clone());
    }
    per.into_iter()
        .map(|(r, events)| {
            let sub = EventLog::from_events(events).expect("subset of a valid log is valid");
            (r, sub)
        })
        .collect()
}

pub(crate) fn truncate_millis(ts: Timestamp) -> Timestamp {
    ts.trunc_subsecs(3)
}

/// Parses an ISO-8601 timestamp. Offsets are honoured; timestamps without
/// one are taken as UTC. Anything finer than milliseconds is truncated.
pub fn parse_timestamp(raw: &str) -> Result<Timestamp, String> {
    let s = raw.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(truncate_millis(dt.with_timezone(&Utc)));
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f%:z",
        "%Y-%m-%d %H:%M:%S%.f%:z",
        "%Y-%m-%dT%H:%M:%S%.f%z",
    ] {
        if let Ok(dt) = DateTime::parse_from_str(s, fmt) {
            return Ok(truncate_millis(dt.with_timezone(&Utc)));
        }
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(truncate_millis(Utc.from_utc_datetime(&naive)));
        }
    }
    if let Ok(date) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        let naive = date.and_hms_opt(0, 0, 0).expect("midnight exists");
        return Ok(Utc.from_utc_datetime(&naive));
    }
    Err(format!("unparsable timestamp `{s}`"))
}

pub fn format_timestamp(ts: &Timestamp) -> String {
    ts.to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(min: u32) -> Timestamp {
        Utc.with_ymd_and_hms(2024, 1, 1, 9, min, 0).unwrap()
    }

    #[test]
    fn groups_and_sorts_within_case() {
        let log = EventLog::from_events(vec![
            Event::new("c1", "B", at(5), "ann"),
            Event::new("c2", "X", at(1), "bob"),
            Event::new("c1", "A", at(0), "ann"),
        ])
        .unwrap();
        assert_eq!(log.trace_count(), 2);
        assert_eq!(log.traces()[0].case_id, "c1");
        let acts: Vec<_> = log.traces()[0].activities().collect();
        assert_eq!(acts, ["A", "B"]);
        assert_eq!(log.traces()[0].events[0].event_id, "c1#1");
    }

    #[test]
    fn equal_timestamps_keep_input_order() {
        let log = EventLog::from_events(vec![
            Event::new("c", "Z", at(0), "r"),
            Event::new("c", "A", at(0), "r"),
            Event::new("c", "M", at(0), "r"),
        ])
        .unwrap();
        let acts: Vec<_> = log.traces()[0].activities().collect();
        assert_eq!(acts, ["Z", "A", "M"]);
    }

    #[test]
    fn rejects_duplicate_ids_and_empty_fields() {
        let mut a = Event::new("c", "A", at(0), "r");
        a.event_id = "e1".into();
        let mut b = Event::new("d", "B", at(1), "r");
        b.event_id = "e1".into();
        assert!(matches!(
            EventLog::from_events(vec![a, b]),
            Err(Error::InvalidLog(_))
        ));
        assert!(EventLog::from_events(vec![Event::new("c", "", at(0), "r")]).is_err());
        assert!(EventLog::from_events(vec![Event::new("", "A", at(0), "r")]).is_err());
    }

    #[test]
    fn empty_resource_becomes_unknown() {
        let log = EventLog::from_events(vec![Event::new("c", "A", at(0), "")]).unwrap();
        assert_eq!(log.individuals(), [UNKNOWN_RESOURCE]);
        assert!(log.participants(false).is_empty());
        assert_eq!(log.participants(true), [UNKNOWN_RESOURCE]);
    }

    #[test]
    fn case_counts_count_distinct_cases() {
        let log = EventLog::from_events(vec![
            Event::new("c1", "A", at(0), "ann"),
            Event::new("c1", "B", at(1), "ann"),
            Event::new("c1", "C", at(2), "bob"),
            Event::new("c2", "A", at(3), "ann"),
        ])
        .unwrap();
        assert_eq!(log.case_counts()["ann"], 2);
        assert_eq!(log.case_counts()["bob"], 1);
        assert_eq!(log.event_counts()["ann"], 3);
        assert_eq!(log.frequency(FrequencyMode::Events)["ann"], 3);
    }

    #[test]
    fn sublog_unknown_resource_is_an_error() {
        let log = EventLog::from_events(vec![Event::new("c", "A", at(0), "ann")]).unwrap();
        assert!(matches!(
            sublog_by_resource(&log, "zed"),
            Err(Error::UnknownResource(_))
        ));
    }

    #[test]
    fn timestamp_formats() {
        let expected = Utc.with_ymd_and_hms(2024, 3, 1, 9, 0, 0).unwrap();
        assert_eq!(parse_timestamp("2024-03-01T09:00:00Z").unwrap(), expected);
        assert_eq!(parse_timestamp("2024-03-01 09:00:00").unwrap(), expected);
        assert_eq!(
            parse_timestamp("2024-03-01T10:00:00+01:00").unwrap(),
            expected
        );
        assert_eq!(parse_timestamp("2024-03-01T09:00").unwrap(), expected);
        let fine = parse_timestamp("2024-03-01T09:00:00.123456Z").unwrap();
        assert_eq!(format_timestamp(&fine), "2024-03-01T09:00:00.123Z");
        assert!(parse_timestamp("yesterday").is_err());
    }
}
