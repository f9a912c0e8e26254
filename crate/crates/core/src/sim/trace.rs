//! Run trace: one row per processed event plus effect rows emitted by the
//! handlers, serialized as
//!
//! ```text
//! time_ms,kind,entity,attrs
//! 120,AuctionClear,type/F1-50,slots=3;winners=v0|v4;payment=12.5
//! ```
//!
//! `attrs` is a `;`-separated list of `key=value` pairs in emission order.
//! Keys, values and entities never contain `,`, `;` or `=`; list-valued
//! attributes join their items with `|`. Floats use Rust's shortest
//! round-trip formatting so re-parsed values are bit-identical.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::EventKind;

pub const TRACE_HEADER: &str = "time_ms,kind,entity,attrs";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time_ms: u64,
    pub kind: EventKind,
    pub entity: String,
    pub attrs: Vec<(String, String)>,
}

impl TraceRow {
    pub fn new(time_ms: u64, kind: EventKind, entity: impl Into<String>) -> Self {
        TraceRow {
            time_ms,
            kind,
            entity: entity.into(),
            attrs: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.attrs.push((key.to_string(), value.to_string()));
        self
    }

    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn write_to(&self, out: &mut impl Write) -> io::Result<()> {
        write!(out, "{},{},{},", self.time_ms, self.kind, self.entity)?;
        for (i, (k, v)) in self.attrs.iter().enumerate() {
            debug_assert!(!k.contains([',', ';', '=']) && !v.contains([',', ';', '=']));
            if i > 0 {
                out.write_all(b";")?;
            }
            write!(out, "{k}={v}")?;
        }
        out.write_all(b"\n")
    }
}

/// Destination for trace rows. Sinks that report `enabled() == false` let the
/// simulation skip building rows entirely.
pub trait TraceSink {
    fn enabled(&self) -> bool {
        true
    }

    fn record(&mut self, row: TraceRow);
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullTrace;

impl TraceSink for NullTrace {
    fn enabled(&self) -> bool {
        false
    }

    fn record(&mut self, _row: TraceRow) {}
}

/// In-memory trace.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct RunTrace {
    rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<TraceRow> {
        self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        let mut w = CsvTraceWriter::new(&mut buf).expect("in-memory write");
        for row in &self.rows {
            w.record(row.clone());
        }
        w.finish().expect("in-memory write");
        drop(w);
        String::from_utf8(buf).expect("utf8")
    }
}

impl From<Vec<TraceRow>> for RunTrace {
    fn from(rows: Vec<TraceRow>) -> Self {
        RunTrace { rows }
    }
}

impl TraceSink for RunTrace {
    fn record(&mut self, row: TraceRow) {
        self.rows.push(row);
    }
}

/// Streams rows to a writer as they are produced. I/O errors are latched and
/// surfaced by [`CsvTraceWriter::finish`].
pub struct CsvTraceWriter<W: Write> {
    out: io::BufWriter<W>,
    error: Option<io::Error>,
}

impl<W: Write> CsvTraceWriter<W> {
    pub fn new(out: W) -> io::Result<Self> {
        let mut out = io::BufWriter::new(out);
        writeln!(out, "{TRACE_HEADER}")?;
        Ok(CsvTraceWriter { out, error: None })
    }

    pub fn finish(&mut self) -> io::Result<()> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()
    }
}

impl<W: Write> TraceSink for CsvTraceWriter<W> {
    fn record(&mut self, row: TraceRow) {
        if self.error.is_none() {
            if let Err(e) = row.write_to(&mut self.out) {
                self.error = Some(e);
            }
        }
    }
}

/// Forwards each row to two sinks.
pub struct TeeTrace<'a> {
    pub first: &'a mut dyn TraceSink,
    pub second: &'a mut dyn TraceSink,
}

impl TraceSink for TeeTrace<'_> {
    fn enabled(&self) -> bool {
        self.first.enabled() || self.second.enabled()
    }

    fn record(&mut self, row: TraceRow) {
        match (self.first.enabled(), self.second.enabled()) {
            (true, true) => {
                self.first.record(row.clone());
                self.second.record(row);
            }
            (true, false) => self.first.record(row),
            (false, true) => self.second.record(row),
            (false, false) => {}
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace I/O: {0}")]
    Io(#[from] io::Error),
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Parses a serialized trace back into rows.
pub fn read_trace_csv(input: impl BufRead) -> Result<Vec<TraceRow>, TraceError> {
    let mut rows = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if idx == 0 {
            if line != TRACE_HEADER {
                return Err(TraceError::Parse {
                    line: lineno,
                    message: format!("expected header `{TRACE_HEADER}`"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let err = |message: String| TraceError::Parse {
            line: lineno,
            message,
        };
        let mut parts = line.splitn(4, ',');
        let (Some(time), Some(kind), Some(entity), Some(attrs)) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(err("expected 4 columns".into()));
        };
        let time_ms = time
            .parse()
            .map_err(|e| err(format!("bad time_ms `{time}`: {e}")))?;
        let kind = kind.parse().map_err(err)?;
        let attrs = if attrs.is_empty() {
            Vec::new()
        } else {
            attrs
                .split(';')
                .map(|kv| {
                    kv.split_once('=')
                        .map(|(k, v)| (k.to_string(), v.to_string()))
                        .ok_or_else(|| err(format!("attribute `{kv}` lacks `=`")))
                })
                .collect::<Result<_, _>>()?
        };
        rows.push(TraceRow {
            time_ms,
            kind,
            entity: entity.to_string(),
            attrs,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let trace = RunTrace::from(vec![
            TraceRow::new(0, EventKind::ServiceArrival, "request/1")
                .with("vehicle", "v0")
                .with("omega", 0.1f64 + 0.2),
            TraceRow::new(10, EventKind::AuctionClear, "type/F1-50"),
        ]);
        let csv = trace.to_csv();
        assert!(csv.starts_with(TRACE_HEADER));
        let rows = read_trace_csv(csv.as_bytes()).unwrap();
        assert_eq!(rows, trace.rows());
        let omega: f64 = rows[0].attr("omega").unwrap().parse().unwrap();
        assert_eq!(omega.to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = format!("{TRACE_HEADER}\n1,ServiceArrival,x,\nzz,ServiceArrival,x,\n");
        match read_trace_csv(bad.as_bytes()) {
            Err(TraceError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
