//! Recording file format.
//!
//! A recording is UTF-8 text. The first line is a JSON header, every
//! following newline-terminated line is one frame:
//!
//! ```text
//! {"formatVersion":1,"createdAt":"…","host":"…","sensors":[…],"headings":[…],…}
//! {"t":1700000000000,"elapsed":0.1,"v":[41,7357,null]}
//! {"t":1700000000100,"elapsed":0.1,"v":[103,21357,19092],"label":"phase-2"}
//! ```
//!
//! Only newline-terminated lines count as complete, so any prefix of a file
//! that contains the header reads back as a prefix of its frames. A frame
//! costs roughly `40 + 9 * headings` bytes at busy counter rates (about
//! 7 KiB/s for 70 events at 10 Hz), growing linearly with the number of
//! headings and the sample rate.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::SampleFrame;
use crate::sensor::SensorDescriptor;

pub const FORMAT_VERSION: u32 = 1;

/// Buffered bytes that force a flush.
pub const FLUSH_BYTES: usize = 64 * 1024;
/// Maximum age of unflushed frames.
pub const FLUSH_INTERVAL: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RecordingHeader {
    pub format_version: u32,
    pub created_at: String,
    pub host: String,
    pub sensors: Vec<SensorDescriptor>,
    pub headings: Vec<String>,
    pub descriptions: Vec<String>,
    pub discrete: bool,
    /// Sampling period when the recording started, in milliseconds.
    pub initial_interval: u32,
    /// Cycle-counter frequency per sensor, `null` for wall-clock sensors.
    pub core_clock_hz: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub header: RecordingHeader,
    pub frames: Vec<SampleFrame>,
}

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("missing or corrupt header: {0}")]
    BadHeader(String),
    #[error("recording format version {found} is newer than the supported version {supported}")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("frame has {got} values but the recording has {expected} headings")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("frame timestamp {got} precedes the previous frame at {last}")]
    OutOfOrder { last: u64, got: u64 },
    #[error("corrupt frame on line {line}: {reason}")]
    BadFrame { line: usize, reason: String },
    #[error("headings and descriptions differ in length")]
    InconsistentHeader,
    #[error(transparent)]
    Serialize(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StorageError + '_ {
    move |source| StorageError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Appends frames to a recording file.
///
/// The header is on disk when [`create`](Self::create) returns; frames are
/// buffered and flushed every [`FLUSH_BYTES`] or [`FLUSH_INTERVAL`],
/// whichever comes first.
pub struct RecordingWriter {
    path: PathBuf,
    out: BufWriter<File>,
    width: usize,
    line: Vec<u8>,
    last_flush: Instant,
    last_t: u64,
    frames: u64,
    bytes: u64,
}

impl RecordingWriter {
    pub fn create(path: impl AsRef<Path>, header: &RecordingHeader) -> Result<Self, StorageError> {
        let path = path.as_ref();
        if header.headings.len() != header.descriptions.len() {
            return Err(StorageError::InconsistentHeader);
        }
        let file = File::create(path).map_err(io_err(path))?;
        let mut out = BufWriter::with_capacity(FLUSH_BYTES, file);
        let mut line = serde_json::to_vec(header)?;
        line.push(b'\n');
        out.write_all(&line).map_err(io_err(path))?;
        out.flush().map_err(io_err(path))?;
        Ok(RecordingWriter {
            path: path.to_owned(),
            out,
            width: header.headings.len(),
            bytes: line.len() as u64,
            line,
            last_flush: Instant::now(),
            last_t: 0,
            frames: 0,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn frames_written(&self) -> u64 {
        self.frames
    }

    pub fn bytes_written(&self) -> u64 {
        self.bytes
    }

    /// Appends one frame. A rejected frame is dropped and the writer stays
    /// usable.
    pub fn append(&mut self, frame: &SampleFrame) -> Result<(), StorageError> {
        if frame.values.len() != self.width {
            return Err(StorageError::ShapeMismatch {
                expected: self.width,
                got: frame.values.len(),
            });
        }
        if frame.timestamp_ms < self.last_t {
            return Err(StorageError::OutOfOrder {
                last: self.last_t,
                got: frame.timestamp_ms,
            });
        }
        self.line.clear();
        serde_json::to_writer(&mut self.line, frame)?;
        self.line.push(b'\n');
        self.out.write_all(&self.line).map_err(io_err(&self.path))?;
        self.last_t = frame.timestamp_ms;
        self.frames += 1;
        self.bytes += self.line.len() as u64;
        if self.last_flush.elapsed() >= FLUSH_INTERVAL {
            self.flush()?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), StorageError> {
        self.out.flush().map_err(io_err(&self.path))?;
        self.last_flush = Instant::now();
        Ok(())
    }

    /// Flushes and closes the file, returning the number of frames written.
    pub fn finish(mut self) -> Result<u64, StorageError> {
        self.flush()?;
        self.out.get_ref().sync_data().map_err(io_err(&self.path))?;
        Ok(self.frames)
    }
}

pub fn read_recording(path: impl AsRef<Path>) -> Result<Recording, StorageError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    parse_recording(&bytes)
}

/// Parses recording bytes. A trailing record without its newline is treated
/// as an interrupted write and dropped.
pub fn parse_recording(bytes: &[u8]) -> Result<Recording, StorageError> {
    let mut lines = bytes.split_inclusive(|&b| b == b'\n');
    let header_line = lines
        .next()
        .filter(|l| l.ends_with(b"\n"))
        .ok_or_else(|| StorageError::BadHeader("no complete header line".into()))?;
    let header = parse_header(header_line)?;
    let width = header.headings.len();

    let mut frames = Vec::new();
    for (i, line) in lines.enumerate() {
        if !line.ends_with(b"\n") {
            break;
        }
        let body = &line[..line.len() - 1];
        if body.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let frame: SampleFrame = serde_json::from_slice(body).map_err(|e| StorageError::BadFrame {
            line: i + 2,
            reason: e.to_string(),
        })?;
        if frame.values.len() != width {
            return Err(StorageError::BadFrame {
                line: i + 2,
                reason: format!("{} values for {width} headings", frame.values.len()),
            });
        }
        frames.push(frame);
    }
    Ok(Recording { header, frames })
}

fn parse_header(line: &[u8]) -> Result<RecordingHeader, StorageError> {
    #[derive(Deserialize)]
    #[serde(rename_all = "camelCase")]
    struct Version {
        format_version: u32,
    }
    let version: Version = serde_json::from_slice(line).map_err(|e| StorageError::BadHeader(e.to_string()))?;
    if version.format_version > FORMAT_VERSION {
        return Err(StorageError::UnsupportedVersion {
            found: version.format_version,
            supported: FORMAT_VERSION,
        });
    }
    let header: RecordingHeader = serde_json::from_slice(line).map_err(|e| StorageError::BadHeader(e.to_string()))?;
    if header.headings.len() != header.descriptions.len() {
        return Err(StorageError::InconsistentHeader);
    }
    Ok(header)
}
