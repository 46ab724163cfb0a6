use std::collections::BTreeSet;

use crate::error::{Error, Result};

use super::{format_timestamp, parse_timestamp, Event, EventLog, UNKNOWN_RESOURCE};

/// Which CSV header names feed which event fields. Columns not named here
/// end up in [`Event::extras`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub case_id: String,
    pub activity: String,
    pub timestamp: String,
    /// Optional column; events default to `"unknown"` when it is absent.
    pub resource: String,
    /// Optional column; ids are synthesized when it is absent.
    pub event_id: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            case_id: "case_id".into(),
            activity: "activity".into(),
            timestamp: "timestamp".into(),
            resource: "resource".into(),
            event_id: "event_id".into(),
        }
    }
}

pub fn parse_csv(bytes: &[u8], columns: &ColumnMap) -> Result<EventLog> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let mandatory = |name: &str| {
        find(name).ok_or_else(|| Error::Csv(format!("missing mandatory column `{name}`")))
    };
    let case_col = mandatory(&columns.case_id)?;
    let activity_col = mandatory(&columns.activity)?;
    let ts_col = mandatory(&columns.timestamp)?;
    let resource_col = find(&columns.resource);
    let id_col = find(&columns.event_id);
    let mapped: BTreeSet<usize> = [
        Some(case_col),
        Some(activity_col),
        Some(ts_col),
        resource_col,
        id_col,
    ]
    .into_iter()
    .flatten()
    .collect();

    let mut events = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::CsvRow {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        let timestamp =
            parse_timestamp(field(ts_col)).map_err(|message| Error::CsvRow { line, message })?;
        let resource = resource_col
            .map(field)
            .filter(|r| !r.is_empty())
            .unwrap_or(UNKNOWN_RESOURCE);
        let mut event = Event::new(field(case_col), field(activity_col), timestamp, resource);
        if let Some(i) = id_col {
            event.event_id = field(i).to_string();
        }
        for (i, name) in headers.iter().enumerate() {
            if !mapped.contains(&i) && !field(i).is_empty() {
                event.extras.insert(name.to_string(), field(i).to_string());
            }
        }
        if event.case_id.is_empty() || event.activity.is_empty() {
            return Err(Error::CsvRow {
                line,
                message: "empty case id or activity".into(),
            });
        }
        events.push(event);
    }
    EventLog::from_events(events)
}

/// Writes the log with the default [`ColumnMap`] headers followed by the
/// sorted union of extra attribute keys. Absent extras are written empty.
pub fn serialize_csv(log: &EventLog) -> Vec<u8> {
    let defaults = ColumnMap::default();
    let extra_keys: BTreeSet<&str> = log
        .events()
        .flat_map(|e| e.extras.keys().map(String::as_str))
        .collect();
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        defaults.event_id.as_str(),
        defaults.case_id.as_str(),
        defaults.activity.as_str(),
        defaults.timestamp.as_str(),
        defaults.resource.as_str(),
    ];
    header.extend(extra_keys.iter().copied());
    writer.write_record(&header).expect("write to Vec");
    for event in log.events() {
        let ts = format_timestamp(&event.timestamp);
        let mut row = vec![
            event.event_id.as_str(),
            event.case_id.as_str(),
            event.activity.as_str(),
            ts.as_str(),
            event.resource.as_str(),
        ];
        row.extend(
            extra_keys
                .iter()
                .map(|k| event.extras.get(*k).map(String::as_str).unwrap_or("")),
        );
        writer.write_record(&row).expect("write to Vec");
    }
    writer.into_inner().expect("flush to Vec")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows_one_case() {
        let csv = "case_id,activity,timestamp,resource\n\
                   c1,A,2024-01-01T09:00:00Z,ann\n\
                   c1,B,2024-01-01T09:05:00Z,ann\n\
                   c1,C,2024-01-01T09:10:00Z,bob\n";
        let log = parse_csv(csv.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(log.trace_count(), 1);
        let acts: Vec<_> = log.traces()[0].activities().collect();
        assert_eq!(acts, ["A", "B", "C"]);
        assert_eq!(log.traces()[0].events[2].event_id, "c1#3");
    }

    #[test]
    fn identical_timestamps_preserve_row_order() {
        let csv = "case_id,activity,timestamp\n\
                   c1,B,2024-01-01T09:00:00Z\n\
                   c1,A,2024-01-01T09:00:00Z\n";
        let log = parse_csv(csv.as_bytes(), &ColumnMap::default()).unwrap();
        let acts: Vec<_> = log.traces()[0].activities().collect();
        assert_eq!(acts, ["B", "A"]);
        assert_eq!(log.traces()[0].events[0].resource, UNKNOWN_RESOURCE);
    }

    #[test]
    fn custom_columns_and_extras() {
        let csv = "Case,Task,When,Who,cost\nx,A,2024-01-01 09:00:00,ann,12\n";
        let columns = ColumnMap {
            case_id: "Case".into(),
            activity: "Task".into(),
            timestamp: "When".into(),
            resource: "Who".into(),
            ..ColumnMap::default()
        };
        let log = parse_csv(csv.as_bytes(), &columns).unwrap();
        let event = &log.traces()[0].events[0];
        assert_eq!(event.resource, "ann");
        assert_eq!(event.extras["cost"], "12");
    }

    #[test]
    fn missing_mandatory_column_is_fatal() {
        let csv = "case_id,activity\nc1,A\n";
        let err = parse_csv(csv.as_bytes(), &ColumnMap::default()).unwrap_err();
        assert!(err.to_string().contains("timestamp"), "{err}");
    }

    #[test]
    fn bad_timestamp_reports_line() {
        let csv = "case_id,activity,timestamp\nc1,A,2024-01-01T09:00:00Z\nc1,B,not-a-time\n";
        match parse_csv(csv.as_bytes(), &ColumnMap::default()) {
            Err(Error::CsvRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quoted_fields_roundtrip() {
        let csv = "case_id,activity,timestamp,resource\n\
                   c1,\"Check, then \"\"approve\"\"\",2024-01-01T09:00:00Z,ann\n";
        let log = parse_csv(csv.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(
            log.traces()[0].events[0].activity,
            "Check, then \"approve\""
        );
        let again = parse_csv(&serialize_csv(&log), &ColumnMap::default()).unwrap();
        assert_eq!(again, log);
    }
}
