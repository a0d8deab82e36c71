//! JSON Lines trace IO.
//!
//! One event per line, UTF-8, field names `ts`, `action`, `subject`,
//! `object`, `label` (label omitted when benign). Files ending in `.gz`
//! are transparently gzip-compressed. Parsing assigns `seq` in file order
//! and enforces the two trace invariants: subjects are processes and
//! timestamps never regress.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use provlab_core::event::{EntityKind, Event};

#[derive(Debug)]
pub enum TraceError {
    Io(io::Error),
    /// Malformed JSON or an unknown kind/action string; the serde message
    /// names the offending value.
    Json {
        line: u64,
        source: serde_json::Error,
    },
    SubjectNotProcess {
        line: u64,
        seq: u64,
    },
    TimestampRegression {
        prev_seq: u64,
        seq: u64,
        prev_ts: i64,
        ts: i64,
    },
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceError::Io(e) => write!(f, "{e}"),
            TraceError::Json { line, source } => write!(f, "line {line}: {source}"),
            TraceError::SubjectNotProcess { line, seq } => {
                write!(f, "line {line} (seq {seq}): subject kind must be process")
            }
            TraceError::TimestampRegression {
                prev_seq,
                seq,
                prev_ts,
                ts,
            } => write!(
                f,
                "timestamp regression: seq {seq} has ts {ts} after seq {prev_seq} with ts {prev_ts}"
            ),
        }
    }
}

impl std::error::Error for TraceError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            TraceError::Io(e) => Some(e),
            TraceError::Json { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<io::Error> for TraceError {
    fn from(e: io::Error) -> Self {
        TraceError::Io(e)
    }
}

/// Parses a JSON Lines stream into events. Blank lines are skipped; line
/// numbers in errors are 1-based.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<Vec<Event>, TraceError> {
    let mut events = Vec::new();
    let mut seq = 0u64;
    for (line0, line) in reader.lines().enumerate() {
        let line_no = line0 as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut event: Event = serde_json::from_str(&line).map_err(|source| TraceError::Json {
            line: line_no,
            source,
        })?;
        event.seq = seq;
        if event.subject.kind != EntityKind::Process {
            return Err(TraceError::SubjectNotProcess { line: line_no, seq });
        }
        if let Some(prev) = events.last() {
            let prev: &Event = prev;
            if event.timestamp < prev.timestamp {
                return Err(TraceError::TimestampRegression {
                    prev_seq: prev.seq,
                    seq,
                    prev_ts: prev.timestamp,
                    ts: event.timestamp,
                });
            }
        }
        events.push(event);
        seq += 1;
    }
    Ok(events)
}

fn open_reader(path: &Path) -> Result<Box<dyn BufRead>, TraceError> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(BufReader::new(GzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// Parses one trace file, gunzipping when the name ends in `.gz`.
pub fn parse_trace_file(path: &Path) -> Result<Vec<Event>, TraceError> {
    parse_trace(open_reader(path)?)
}

/// Parses and concatenates several trace files in order, reassigning `seq`
/// across the concatenation. Timestamps must be non-decreasing across the
/// file boundary as well.
pub fn parse_trace_files(paths: &[impl AsRef<Path>]) -> Result<Vec<Event>, TraceError> {
    let mut all: Vec<Event> = Vec::new();
    for path in paths {
        let mut events = parse_trace_file(path.as_ref())?;
        for e in &mut events {
            e.seq += all.len() as u64;
        }
        all.extend(events);
    }
    Ok(all)
}

/// Serializes events as JSON Lines.
pub fn write_trace<W: Write>(mut writer: W, events: &[Event]) -> Result<(), TraceError> {
    for e in events {
        serde_json::to_writer(&mut writer, e).map_err(|source| TraceError::Json {
            line: e.seq + 1,
            source,
        })?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes a trace file, gzipping when the name ends in `.gz`.
pub fn write_trace_file(path: &Path, events: &[Event]) -> Result<(), TraceError> {
    let file = File::create(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut encoder = GzEncoder::new(BufWriter::new(file), flate2::Compression::default());
        write_trace(&mut encoder, events)?;
        encoder.finish()?;
    } else {
        let mut writer = BufWriter::new(file);
        write_trace(&mut writer, events)?;
        writer.flush()?;
    }
    Ok(())
}

fn decode_all<R: Read>(r: R) -> io::Result<String> {
    let mut s = String::new();
    let mut r = r;
    r.read_to_string(&mut s)?;
    Ok(s)
}

/// Raw text of a trace file (post-gunzip), for checksumming and byte-level
/// comparisons.
pub fn read_trace_text(path: &Path) -> Result<String, TraceError> {
    let file = File::open(path)?;
    let text = if path.extension().is_some_and(|e| e == "gz") {
        decode_all(GzDecoder::new(file))?
    } else {
        decode_all(file)?
    };
    Ok(text)
}
