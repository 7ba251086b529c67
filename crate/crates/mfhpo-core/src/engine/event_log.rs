//! JSON-lines event log: one object per consumed epoch.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One consumed training epoch. `decision` is `continue` or
/// `stop:<reason>`; `cum_epochs` is the global counter after this event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub trial: usize,
    pub epoch: usize,
    pub valid: f64,
    pub test: f64,
    pub decision: String,
    pub cum_epochs: usize,
}

/// Serializes events one JSON object per line.
pub fn event_log_to_string(events: &[Event]) -> String {
    let mut out = String::new();
    for event in events {
        out.push_str(&serde_json::to_string(event).expect("event serializes"));
        out.push('\n');
    }
    out
}

pub fn write_event_log(events: &[Event], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(event_log_to_string(events).as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn read_event_log(path: impl AsRef<Path>) -> Result<Vec<Event>> {
    let reader = BufReader::new(File::open(path)?);
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let event: Event = serde_json::from_str(&line)
            .map_err(|e| Error::EventLog(format!("line {}: {e}", i + 1)))?;
        events.push(event);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_events() {
        let events = vec![
            Event {
                trial: 0,
                epoch: 1,
                valid: 0.123456789012345,
                test: -0.5,
                decision: "continue".into(),
                cum_epochs: 1,
            },
            Event {
                trial: 0,
                epoch: 2,
                valid: 1.0 / 3.0,
                test: 2.0 / 7.0,
                decision: "stop:budget".into(),
                cum_epochs: 2,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        write_event_log(&events, &path).unwrap();
        assert_eq!(read_event_log(&path).unwrap(), events);
    }
}
