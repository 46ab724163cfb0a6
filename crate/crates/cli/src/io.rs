use std::fs;
use std::path::Path;

use log::{info, warn};
use serde::Serialize;

use privmine_core::eventlog::{parse_csv, parse_xes, serialize_csv, serialize_xes, ColumnMap};
use privmine_core::EventLog;

use crate::args::{Format, InputArgs};
use crate::failure::{CliResult, Failure};

pub fn guess_format(path: &Path, explicit: Option<Format>) -> CliResult<Format> {
    if let Some(f) = explicit {
        return Ok(f);
    }
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
    {
        Some(ext) if ext == "xes" => Ok(Format::Xes),
        Some(ext) if ext == "csv" => Ok(Format::Csv),
        _ => Err(Failure::parameter(format!(
            "cannot tell the format of {}; pass --format",
            path.display()
        ))),
    }
}

fn columns(input: &InputArgs) -> ColumnMap {
    ColumnMap {
        case_id: input.case_column.clone(),
        activity: input.activity_column.clone(),
        timestamp: input.timestamp_column.clone(),
        resource: input.resource_column.clone(),
        event_id: input.event_id_column.clone(),
    }
}

pub fn read_log_at(path: &Path, format: Option<Format>, input: &InputArgs) -> CliResult<EventLog> {
    let format = guess_format(path, format)?;
    let bytes = fs::read(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    let log = match format {
        Format::Xes => {
            let import = parse_xes(&bytes)?;
            if import.skipped_events > 0 {
                warn!(
                    "{}: skipped {} events without a name",
                    path.display(),
                    import.skipped_events
                );
            }
            import.log
        }
        Format::Csv => parse_csv(&bytes, &columns(input))?,
    };
    info!(
        "read {}: {} traces, {} events",
        path.display(),
        log.trace_count(),
        log.event_count()
    );
    Ok(log)
}

pub fn read_input(input: &InputArgs) -> CliResult<EventLog> {
    read_log_at(&input.input, input.format, input)
}

pub fn serialize_log(log: &EventLog, format: Format) -> Vec<u8> {
    match format {
        Format::Xes => serialize_xes(log),
        Format::Csv => serialize_csv(log),
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::internal(e.to_string()))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}
