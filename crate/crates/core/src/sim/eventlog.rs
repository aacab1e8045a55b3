//! Line-delimited event log of a replication.
//!
//! One tab-separated record per line:
//!
//! ```text
//! time  kind  sr  cell  [customer priority complexity deadline service]
//! ```
//!
//! `time`, `deadline` and `service` are minutes printed in shortest
//! round-trip form; `-` marks an absent SR or cell. The five trailing fields
//! appear on `ARRIVE` and `DROP` lines only.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Arrive,
    Drop,
    Start,
    Done,
    Preempt,
    ShiftOn,
    ShiftOff,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Arrive => "ARRIVE",
            EventKind::Drop => "DROP",
            EventKind::Start => "START",
            EventKind::Done => "DONE",
            EventKind::Preempt => "PREEMPT",
            EventKind::ShiftOn => "SHIFT_ON",
            EventKind::ShiftOff => "SHIFT_OFF",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrInfo {
    pub customer: usize,
    pub priority: usize,
    pub complexity: usize,
    pub deadline: f64,
    pub service: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub sr: Option<usize>,
    pub cell: Option<usize>,
    pub info: Option<SrInfo>,
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

impl fmt::Display for EventRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t{}", self.time, self.kind.as_str(), opt(self.sr), opt(self.cell))?;
        if let Some(i) = &self.info {
            write!(f, "\t{}\t{}\t{}\t{}\t{}", i.customer, i.priority, i.complexity, i.deadline, i.service)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed event log line: {0}")]
pub struct ParseEventError(pub String);

impl FromStr for EventRecord {
    type Err = ParseEventError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let bad = || ParseEventError(line.to_string());
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 && f.len() != 9 {
            return Err(bad());
        }
        let kind = match f[1] {
            "ARRIVE" => EventKind::Arrive,
            "DROP" => EventKind::Drop,
            "START" => EventKind::Start,
            "DONE" => EventKind::Done,
            "PREEMPT" => EventKind::Preempt,
            "SHIFT_ON" => EventKind::ShiftOn,
            "SHIFT_OFF" => EventKind::ShiftOff,
            _ => return Err(bad()),
        };
        let idx = |s: &str| -> Result<Option<usize>, ParseEventError> {
            if s == "-" { Ok(None) } else { s.parse().map(Some).map_err(|_| bad()) }
        };
        let info = if f.len() == 9 {
            Some(SrInfo {
                customer: f[4].parse().map_err(|_| bad())?,
                priority: f[5].parse().map_err(|_| bad())?,
                complexity: f[6].parse().map_err(|_| bad())?,
                deadline: f[7].parse().map_err(|_| bad())?,
                service: f[8].parse().map_err(|_| bad())?,
            })
        } else {
            None
        };
        Ok(EventRecord { time: f[0].parse().map_err(|_| bad())?, kind, sr: idx(f[2])?, cell: idx(f[3])?, info })
    }
}

/// Renders a log, one record per line.
pub fn render(events: &[EventRecord]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}

pub fn parse(text: &str) -> Result<Vec<EventRecord>, ParseEventError> {
    text.lines().filter(|l| !l.is_empty()).map(str::parse).collect()
}
