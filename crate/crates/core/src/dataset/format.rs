//! Line-oriented trace file format.
//!
//! ```text
//! TRACESET v1 monitor=<label>
//! D <destination> <R|N> <hopcount> <hop1> ... <hopK>
//! ```
//!
//! Hops are dotted quads or `*` for a silent hop. `R` marks a destination that
//! replied, in which case the last hop is the destination itself. Lines
//! starting with `#` and blank lines are ignored; fields are separated by
//! exactly one space.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::TraceSet;
use crate::model::{HopResponse, InterfaceAddr, RecordedPath, MAX_TTL};

const HEADER_PREFIX: &str = "TRACESET v1 monitor=";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

impl ParseError {
    fn new(line: usize, reason: impl Into<String>) -> Self {
        Self {
            line,
            reason: reason.into(),
        }
    }
}

pub fn parse_trace_file(input: &[u8]) -> Result<TraceSet, ParseError> {
    let text = std::str::from_utf8(input).map_err(|e| {
        let line = input[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        ParseError::new(line, "invalid UTF-8")
    })?;

    let mut monitor: Option<String> = None;
    let mut paths = Vec::new();
    let mut seen = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(_) = monitor else {
            let label = line
                .strip_prefix(HEADER_PREFIX)
                .ok_or_else(|| ParseError::new(lineno, "expected header `TRACESET v1 monitor=<label>`"))?;
            if label.is_empty() || label.contains(char::is_whitespace) {
                return Err(ParseError::new(lineno, "monitor label must be a single non-empty token"));
            }
            monitor = Some(label.to_string());
            continue;
        };

        let path = parse_path_line(line).map_err(|reason| ParseError::new(lineno, reason))?;
        if !seen.insert(path.destination()) {
            return Err(ParseError::new(
                lineno,
                format!("duplicate destination {}", path.destination()),
            ));
        }
        paths.push(path);
    }

    let monitor = monitor.ok_or_else(|| ParseError::new(1, "missing header"))?;
    TraceSet::new(monitor, paths).map_err(|e| ParseError::new(0, e.to_string()))
}

fn parse_path_line(line: &str) -> Result<RecordedPath, String> {
    let fields: Vec<&str> = line.split(' ').collect();
    if fields.iter().any(|f| f.is_empty()) {
        return Err("fields must be separated by single spaces".into());
    }
    let [tag, dest, flag, count, hops @ ..] = fields.as_slice() else {
        return Err("expected `D <dest> <R|N> <hopcount> <hops...>`".into());
    };
    if *tag != "D" {
        return Err(format!("unknown record type {tag:?}"));
    }
    let destination: InterfaceAddr = dest.parse().map_err(|e| format!("{e}"))?;
    let dest_responded = match *flag {
        "R" => true,
        "N" => false,
        other => return Err(format!("flag must be R or N, got {other:?}")),
    };
    let count: usize = count
        .parse()
        .map_err(|_| format!("invalid hop count {count:?}"))?;
    if count == 0 || count > MAX_TTL as usize {
        return Err(format!("hop count must be in 1..={MAX_TTL}, got {count}"));
    }
    if hops.len() != count {
        return Err(format!("hop count {count} but {} hops listed", hops.len()));
    }
    let hops = hops
        .iter()
        .map(|h| match *h {
            "*" => Ok(HopResponse::Silent),
            s => s
                .parse()
                .map(HopResponse::Responding)
                .map_err(|e| format!("{e}")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    RecordedPath::new(destination, hops, dest_responded).map_err(|e| e.to_string())
}

pub fn write_trace_file(ts: &TraceSet) -> Vec<u8> {
    let mut out = String::new();
    writeln!(out, "{HEADER_PREFIX}{}", ts.monitor_id()).unwrap();
    for path in ts.paths() {
        let flag = if path.dest_responded() { 'R' } else { 'N' };
        write!(out, "D {} {flag} {}", path.destination(), path.len()).unwrap();
        for hop in path.hops() {
            match hop {
                HopResponse::Responding(a) => write!(out, " {a}").unwrap(),
                HopResponse::Silent => out.push_str(" *"),
            }
        }
        out.push('\n');
    }
    out.into_bytes()
}
