//! Trace events, the text trace format, and the indexed [`IOFrame`].

mod classify;
mod format;
mod frame;
mod session;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use classify::{classify_function, function_info, is_collective, Family, FUNCTION_TABLE};
pub use format::{parse_trace, write_trace, TRACE_HEADER};
pub use frame::{EventFilter, IOFrame};
pub use session::{OpenCloseSession, SessionReport};

/// Errors raised while parsing or validating traces.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TraceError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("duplicate event_id {event_id} at line {line}")]
    DuplicateEventId { event_id: u64, line: usize },
    #[error("negative duration at line {line}")]
    NegativeDuration { line: usize },
    #[error("event {event_id}: {reason}")]
    InvalidEvent { event_id: u64, reason: String },
    #[error("missing trace header, expected `{TRACE_HEADER}`")]
    MissingHeader,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Metadata,
    Read,
    Write,
    Other,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Metadata, Category::Read, Category::Write, Category::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Metadata => "metadata",
            Category::Read => "read",
            Category::Write => "write",
            Category::Other => "other",
        }
    }

    pub fn is_data(self) -> bool {
        matches!(self, Category::Read | Category::Write)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Interface {
    #[serde(rename = "POSIX")]
    Posix,
    #[serde(rename = "MPIIO")]
    MpiIo,
    #[serde(rename = "HDF5")]
    Hdf5,
    #[serde(rename = "OTHER")]
    Other,
}

impl Interface {
    pub const ALL: [Interface; 4] = [Interface::Posix, Interface::MpiIo, Interface::Hdf5, Interface::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Interface::Posix => "POSIX",
            Interface::MpiIo => "MPIIO",
            Interface::Hdf5 => "HDF5",
            Interface::Other => "OTHER",
        }
    }
}

impl fmt::Display for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Interface {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Interface::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown interface `{s}`"))
    }
}

/// Seconds since the trace epoch, stored as integer nanoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(u64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub const fn from_nanos(nanos: u64) -> Self {
        Timestamp(nanos)
    }

    /// Rounds to the nearest nanosecond. Negative and non-finite inputs clamp
    /// to zero.
    pub fn from_secs_f64(secs: f64) -> Self {
        if secs.is_finite() && secs > 0.0 {
            Timestamp((secs * 1e9).round() as u64)
        } else {
            Timestamp(0)
        }
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    /// Nanoseconds from `earlier` to `self`, saturating at zero.
    pub fn nanos_since(self, earlier: Timestamp) -> u64 {
        self.0.saturating_sub(earlier.0)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:09}", self.0 / 1_000_000_000, self.0 % 1_000_000_000)
    }
}

impl FromStr for Timestamp {
    type Err = String;

    /// Accepts `S`, `S.F` with up to nine fractional digits.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (int, frac) = match s.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (s, None),
        };
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if !digits(int) || !frac.is_none_or(digits) {
            return Err(format!("invalid timestamp `{s}`"));
        }
        let frac = frac.unwrap_or("");
        if frac.len() > 9 {
            return Err(format!("timestamp `{s}` has more than 9 fractional digits"));
        }
        let secs: u64 = int.parse().map_err(|_| format!("timestamp `{s}` out of range"))?;
        let mut nanos: u64 = if frac.is_empty() { 0 } else { frac.parse().unwrap() };
        for _ in frac.len()..9 {
            nanos *= 10;
        }
        secs.checked_mul(1_000_000_000)
            .and_then(|n| n.checked_add(nanos))
            .map(Timestamp)
            .ok_or_else(|| format!("timestamp `{s}` out of range"))
    }
}

/// One recorded I/O function call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub event_id: u64,
    pub rank: u32,
    /// Compute node hosting the rank.
    pub node: u32,
    pub function: String,
    pub category: Category,
    pub interface: Interface,
    pub file: Option<String>,
    pub start: Timestamp,
    pub end: Timestamp,
    pub bytes: Option<u64>,
    pub offset: Option<u64>,
}

impl TraceEvent {
    /// Builds an event whose category and interface come from
    /// [`classify_function`].
    pub fn new(
        event_id: u64,
        rank: u32,
        function: impl Into<String>,
        file: Option<&str>,
        start: Timestamp,
        end: Timestamp,
    ) -> Self {
        let function = function.into();
        let (category, interface) = classify_function(&function);
        TraceEvent {
            event_id,
            rank,
            node: 0,
            function,
            category,
            interface,
            file: file.map(str::to_owned),
            start,
            end,
            bytes: None,
            offset: None,
        }
    }

    pub fn with_node(mut self, node: u32) -> Self {
        self.node = node;
        self
    }

    pub fn with_io(mut self, offset: u64, bytes: u64) -> Self {
        self.offset = Some(offset);
        self.bytes = Some(bytes);
        self
    }

    pub fn duration_nanos(&self) -> u64 {
        self.end.nanos_since(self.start)
    }

    pub fn duration_secs(&self) -> f64 {
        self.duration_nanos() as f64 / 1e9
    }

    pub fn family(&self) -> Family {
        function_info(&self.function).0
    }

    /// Checks the per-event invariants.
    pub fn validate(&self) -> Result<(), String> {
        if self.end < self.start {
            return Err("end precedes start".into());
        }
        if self.category.is_data() {
            if self.bytes.is_none() {
                return Err(format!("{} event without bytes", self.category));
            }
            if self.file.is_none() {
                return Err(format!("{} event without file", self.category));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamp_parse_and_display() {
        let t: Timestamp = "1.5".parse().unwrap();
        assert_eq!(t.as_nanos(), 1_500_000_000);
        assert_eq!(t.to_string(), "1.500000000");
        let t: Timestamp = "0.000000001".parse().unwrap();
        assert_eq!(t.as_nanos(), 1);
        assert_eq!("12".parse::<Timestamp>().unwrap().to_string(), "12.000000000");
        assert!("1.0000000001".parse::<Timestamp>().is_err());
        assert!("-1.0".parse::<Timestamp>().is_err());
        assert!("1.".parse::<Timestamp>().is_err());
        assert!("abc".parse::<Timestamp>().is_err());
    }

    #[test]
    fn event_validation() {
        let e = TraceEvent::new(0, 0, "write", Some("/a"), Timestamp::ZERO, Timestamp::from_nanos(5));
        assert!(e.validate().is_err(), "write without bytes");
        assert!(e.clone().with_io(0, 10).validate().is_ok());
        let e = TraceEvent::new(1, 0, "open", None, Timestamp::from_nanos(5), Timestamp::ZERO);
        assert!(e.validate().is_err());
    }
}
