//! Minimal XES (IEEE 1849-2016) support: `log` / `trace` / `event` elements
//! with flat typed attributes. The concept, time, org and identity
//! extensions map onto [`Event`] fields; every other attribute is kept as a
//! string in [`Event::extras`]. Nested attributes, globals and classifiers
//! are read past and ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event as XmlEvent};
use quick_xml::Reader;

use crate::error::{Error, Result};

use super::{format_timestamp, parse_timestamp, Event, EventLog, UNKNOWN_RESOURCE};

const CONCEPT_NAME: &str = "concept:name";
const TIME_TIMESTAMP: &str = "time:timestamp";
const ORG_RESOURCE: &str = "org:resource";
const IDENTITY_ID: &str = "identity:id";

const ATTRIBUTE_TAGS: [&str; 6] = ["string", "date", "int", "float", "boolean", "id"];

/// Result of reading an XES document.
#[derive(Debug, Clone)]
pub struct XesImport {
    pub log: EventLog,
    /// Events dropped because they had no `concept:name`.
    pub skipped_events: usize,
}

#[derive(Default)]
struct PendingEvent {
    attrs: BTreeMap<String, String>,
    position: u64,
}

enum Scope {
    Log,
    Trace,
    Event,
    /// Anything we do not interpret (nested attributes, globals, ...).
    Other,
}

pub fn parse_xes(bytes: &[u8]) -> Result<XesImport> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().trim_text(true);
    let mut buf = Vec::new();
    let mut stack: Vec<Scope> = Vec::new();

    let mut events: Vec<Event> = Vec::new();
    let mut skipped = 0usize;
    let mut trace_ordinal = 0usize;
    let mut trace_name: Option<String> = None;
    let mut trace_events: Vec<PendingEvent> = Vec::new();
    let mut current: Option<PendingEvent> = None;
    let mut saw_log = false;

    loop {
        let position = reader.buffer_position();
        let xml_event = reader.read_event_into(&mut buf).map_err(|e| Error::Xes {
            position: reader.error_position(),
            message: e.to_string(),
        })?;
        match xml_event {
            XmlEvent::Start(ref start) | XmlEvent::Empty(ref start) => {
                let is_empty = matches!(xml_event, XmlEvent::Empty(_));
                let name = String::from_utf8_lossy(start.local_name().as_ref()).into_owned();
                let parent = stack.last();
                let scope = match (parent, name.as_str()) {
                    (None, "log") => {
                        saw_log = true;
                        Scope::Log
                    }
                    (None, other) => {
                        return Err(Error::Xes {
                            position,
                            message: format!("expected <log> root element, found <{other}>"),
                        })
                    }
                    (Some(Scope::Log), "trace") => {
                        trace_ordinal += 1;
                        trace_name = None;
                        trace_events.clear();
                        Scope::Trace
                    }
                    (Some(Scope::Trace), "event") => {
                        current = Some(PendingEvent {
                            position,
                            ..PendingEvent::default()
                        });
                        Scope::Event
                    }
                    (Some(Scope::Trace), tag) if ATTRIBUTE_TAGS.contains(&tag) => {
                        let (key, value) = key_value(start, position)?;
                        if key == CONCEPT_NAME {
                            trace_name = Some(value);
                        }
                        Scope::Other
                    }
                    (Some(Scope::Event), tag) if ATTRIBUTE_TAGS.contains(&tag) => {
                        let (key, value) = key_value(start, position)?;
                        if let Some(pending) = current.as_mut() {
                            pending.attrs.insert(key, value);
                        }
                        Scope::Other
                    }
                    _ => Scope::Other,
                };
                if is_empty {
                    // Self-closing elements never see an End event.
                    close_scope(
                        scope,
                        &mut current,
                        &mut trace_events,
                        &mut trace_name,
                        trace_ordinal,
                        &mut events,
                        &mut skipped,
                    )?;
                } else {
                    stack.push(scope);
                }
            }
            XmlEvent::End(_) => {
                let scope = stack.pop().ok_or_else(|| Error::Xes {
                    position,
                    message: "unbalanced closing tag".into(),
                })?;
                close_scope(
                    scope,
                    &mut current,
                    &mut trace_events,
                    &mut trace_name,
                    trace_ordinal,
                    &mut events,
                    &mut skipped,
                )?;
            }
            XmlEvent::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if !stack.is_empty() {
        return Err(Error::Xes {
            position: reader.buffer_position(),
            message: "unexpected end of document".into(),
        });
    }
    if !saw_log {
        return Err(Error::Xes {
            position: 0,
            message: "document has no <log> element".into(),
        });
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} XES event(s) without {CONCEPT_NAME}");
    }
    Ok(XesImport {
        log: EventLog::from_events(events)?,
        skipped_events: skipped,
    })
}

fn close_scope(
    scope: Scope,
    current: &mut Option<PendingEvent>,
    trace_events: &mut Vec<PendingEvent>,
    trace_name: &mut Option<String>,
    trace_ordinal: usize,
    events: &mut Vec<Event>,
    skipped: &mut usize,
) -> Result<()> {
    match scope {
        Scope::Event => {
            if let Some(pending) = current.take() {
                trace_events.push(pending);
            }
        }
        Scope::Trace => {
            let case_id = trace_name
                .take()
                .unwrap_or_else(|| format!("trace{trace_ordinal}"));
            for pending in trace_events.drain(..) {
                match finish_event(pending, &case_id)? {
                    Some(event) => events.push(event),
                    None => *skipped += 1,
                }
            }
        }
        Scope::Log | Scope::Other => {}
    }
    Ok(())
}

fn finish_event(mut pending: PendingEvent, case_id: &str) -> Result<Option<Event>> {
    let Some(activity) = pending.attrs.remove(CONCEPT_NAME).filter(|a| !a.is_empty()) else {
        return Ok(None);
    };
    let raw_ts = pending
        .attrs
        .remove(TIME_TIMESTAMP)
        .ok_or_else(|| Error::Xes {
            position: pending.position,
            message: format!("event `{activity}` has no {TIME_TIMESTAMP}"),
        })?;
    let timestamp = parse_timestamp(&raw_ts).map_err(|message| Error::Xes {
        position: pending.position,
        message,
    })?;
    let resource = pending
        .attrs
        .remove(ORG_RESOURCE)
        .filter(|r| !r.is_empty())
        .unwrap_or_else(|| UNKNOWN_RESOURCE.to_string());
    let mut event = Event::new(case_id, activity, timestamp, resource);
    event.event_id = pending.attrs.remove(IDENTITY_ID).unwrap_or_default();
    event.extras = pending.attrs;
    Ok(Some(event))
}

fn key_value(start: &BytesStart<'_>, position: u64) -> Result<(String, String)> {
    let mut key = None;
    let mut value = None;
    for attr in start.attributes() {
        let attr = attr.map_err(|e| Error::Xes {
            position,
            message: e.to_string(),
        })?;
        let text = attr
            .unescape_value()
            .map_err(|e| Error::Xes {
                position,
                message: e.to_string(),
            })?
            .into_owned();
        match attr.key.local_name().as_ref() {
            b"key" => key = Some(text),
            b"value" => value = Some(text),
            _ => {}
        }
    }
    match (key, value) {
        (Some(k), Some(v)) => Ok((k, v)),
        _ => Err(Error::Xes {
            position,
            message: "attribute element without key/value".into(),
        }),
    }
}

pub fn serialize_xes(log: &EventLog) -> Vec<u8> {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<log xes.version=\"1849-2016\" xes.features=\"\" xmlns=\"http://www.xes-standard.org/\">\n");
    for (name, prefix) in [
        ("Concept", "concept"),
        ("Time", "time"),
        ("Organizational", "org"),
        ("Identity", "identity"),
    ] {
        let _ = writeln!(
            out,
            "  <extension name=\"{name}\" prefix=\"{prefix}\" uri=\"http://www.xes-standard.org/{prefix}.xesext\"/>"
        );
    }
    for trace in log.traces() {
        out.push_str("  <trace>\n");
        let _ = writeln!(
            out,
            "    <string key=\"{CONCEPT_NAME}\" value=\"{}\"/>",
            escape(trace.case_id.as_str())
        );
        for event in &trace.events {
            out.push_str("    <event>\n");
            let _ = writeln!(
                out,
                "      <id key=\"{IDENTITY_ID}\" value=\"{}\"/>",
                escape(event.event_id.as_str())
            );
            let _ = writeln!(
                out,
                "      <string key=\"{CONCEPT_NAME}\" value=\"{}\"/>",
                escape(event.activity.as_str())
            );
            let _ = writeln!(
                out,
                "      <date key=\"{TIME_TIMESTAMP}\" value=\"{}\"/>",
                format_timestamp(&event.timestamp)
            );
            let _ = writeln!(
                out,
                "      <string key=\"{ORG_RESOURCE}\" value=\"{}\"/>",
                escape(event.resource.as_str())
            );
            for (key, value) in &event.extras {
                let _ = writeln!(
                    out,
                    "      <string key=\"{}\" value=\"{}\"/>",
                    escape(key.as_str()),
                    escape(value.as_str())
                );
            }
            out.push_str("    </event>\n");
        }
        out.push_str("  </trace>\n");
    }
    out.push_str("</log>\n");
    out.into_bytes()
}
