//! Kernel virtual-memory statistics from `/proc/vmstat`.
//!
//! The file is opened once at probe time. Each sample repositions the
//! handle to the start and issues one bounded read, so the per-sample cost
//! is two system calls regardless of how many events are enabled.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};

use ccscope_core::{CounterMode, EventDescriptor, EventKind, Sensor, SensorError, SENTINEL};

pub const SENSOR_NAME: &str = "vmstat";
pub const DEFAULT_PATH: &str = "/proc/vmstat";
pub const READ_BUFFER: usize = 64 * 1024;

/// Splits one `name value` line. Returns `None` unless the line is exactly
/// a non-empty name and a signed decimal integer separated by whitespace.
pub fn parse_line(line: &[u8]) -> Option<(&[u8], i64)> {
    let line = line.trim_ascii();
    let split = line.iter().position(u8::is_ascii_whitespace)?;
    let (name, rest) = line.split_at(split);
    let value = rest.trim_ascii_start();
    let value = parse_i64(value)?;
    std::str::from_utf8(name).ok()?;
    Some((name, value))
}

/// A decimal integer with an optional sign, rejecting overflow.
fn parse_i64(s: &[u8]) -> Option<i64> {
    let (negative, digits) = match s {
        [b'-', rest @ ..] => (true, rest),
        [b'+', rest @ ..] => (false, rest),
        _ => (false, s),
    };
    if digits.is_empty() {
        return None;
    }
    let mut v: i64 = 0;
    for &b in digits {
        let d = b.wrapping_sub(b'0');
        if d > 9 {
            return None;
        }
        v = v.checked_mul(10)?;
        v = if negative {
            v.checked_sub(d as i64)?
        } else {
            v.checked_add(d as i64)?
        };
    }
    Some(v)
}

/// All well-formed pairs in `buf`, in file order.
pub fn parse(buf: &[u8]) -> impl Iterator<Item = (&[u8], i64)> {
    buf.split(|&b| b == b'\n').filter_map(parse_line)
}

type Opener<S> = Box<dyn FnMut() -> io::Result<S> + Send>;

pub struct VmstatSensor<S = File> {
    origin: String,
    opener: Option<Opener<S>>,
    handle: Option<S>,
    /// Name to ordinal, fixed at probe time.
    table: HashMap<Box<[u8]>, usize>,
    names: Vec<Box<[u8]>>,
    events: Vec<EventDescriptor>,
    enabled: Vec<usize>,
    latest: Vec<i64>,
    /// Read generation in which each ordinal was last seen.
    seen: Vec<u64>,
    generation: u64,
    buf: Vec<u8>,
    malformed: u64,
}

impl VmstatSensor<File> {
    pub fn new() -> Self {
        Self::with_path(DEFAULT_PATH)
    }

    pub fn with_path(path: impl AsRef<Path>) -> Self {
        let path: PathBuf = path.as_ref().to_owned();
        let mut s = Self::empty(path.display().to_string());
        s.opener = Some(Box::new(move || File::open(&path)));
        s
    }
}

impl Default for VmstatSensor<File> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Read + Seek + Send> VmstatSensor<S> {
    /// Uses an already open handle, for tests and non-file sources.
    pub fn from_reader(reader: S) -> Self {
        let mut s = Self::empty("reader".into());
        s.handle = Some(reader);
        s
    }

    fn empty(origin: String) -> Self {
        VmstatSensor {
            origin,
            opener: None,
            handle: None,
            table: HashMap::new(),
            names: Vec::new(),
            events: Vec::new(),
            enabled: Vec::new(),
            latest: Vec::new(),
            seen: Vec::new(),
            generation: 0,
            buf: vec![0; READ_BUFFER],
            malformed: 0,
        }
    }

    /// Lines skipped because they did not parse.
    pub fn malformed_lines(&self) -> u64 {
        self.malformed
    }

    pub fn handle(&self) -> Option<&S> {
        self.handle.as_ref()
    }

    fn read(&mut self) -> io::Result<usize> {
        let handle = self
            .handle
            .as_mut()
            .ok_or_else(|| io::Error::other("vmstat not probed"))?;
        handle.seek(SeekFrom::Start(0))?;
        let n = handle.read(&mut self.buf)?;
        if n == self.buf.len() {
            log::warn!("vmstat: read filled the {READ_BUFFER} byte buffer; trailing lines are dropped");
        }
        Ok(n)
    }

    fn ingest(&mut self, n: usize) {
        self.generation += 1;
        let generation = self.generation;
        let end = self.buf[..n].iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
        for (line_no, line) in self.buf[..end].split(|&b| b == b'\n').enumerate() {
            if line.is_empty() {
                continue;
            }
            // Kernels keep the order stable, so the name expected at this
            // line usually matches and only the number needs parsing.
            if let Some(name) = self.names.get(line_no).filter(|n| !n.is_empty()) {
                if let Some(value) = line
                    .strip_prefix(&name[..])
                    .filter(|rest| rest.first().is_some_and(u8::is_ascii_whitespace))
                    .and_then(|rest| parse_i64(rest.trim_ascii()))
                {
                    self.latest[line_no] = value;
                    self.seen[line_no] = generation;
                    continue;
                }
            }
            let Some((name, value)) = parse_line(line) else {
                self.malformed += 1;
                log::debug!("vmstat: skipping malformed line {}", line_no + 1);
                continue;
            };
            if let Some(&o) = self.table.get(name) {
                self.latest[o] = value;
                self.seen[o] = generation;
            }
        }
    }
}

impl<S: Read + Seek + Send> Sensor for VmstatSensor<S> {
    fn name(&self) -> &str {
        SENSOR_NAME
    }

    fn probe(&mut self) -> Result<bool, SensorError> {
        if let Some(open) = &mut self.opener {
            match open() {
                Ok(f) => self.handle = Some(f),
                Err(e) => {
                    log::info!("vmstat: {}: {e}", self.origin);
                    return Ok(false);
                }
            }
        }
        let n = match self.read() {
            Ok(n) => n,
            Err(e) => {
                log::info!("vmstat: {}: {e}", self.origin);
                self.handle = None;
                return Ok(false);
            }
        };
        let end = self.buf[..n].iter().rposition(|&b| b == b'\n').map_or(n, |p| p + 1);
        self.table.clear();
        self.names.clear();
        self.events.clear();
        for (line_no, line) in self.buf[..end].split(|&b| b == b'\n').enumerate() {
            let Some((name, _)) = parse_line(line) else {
                continue;
            };
            if self.table.contains_key(name) {
                continue;
            }
            // Keep ordinals aligned with line positions where possible.
            while self.names.len() < line_no {
                self.names.push(Box::default());
            }
            let ordinal = self.names.len();
            self.names.push(name.into());
            self.table.insert(name.into(), ordinal);
            let text = String::from_utf8_lossy(name);
            self.events
                .push(EventDescriptor::new(text.as_ref(), text.as_ref(), EventKind::Counter));
        }
        if self.table.is_empty() {
            self.handle = None;
            return Ok(false);
        }
        self.latest = vec![0; self.names.len()];
        self.seen = vec![0; self.names.len()];
        self.enabled.clear();
        Ok(true)
    }

    fn rate(&self) -> u64 {
        1
    }

    fn sources(&self) -> usize {
        1
    }

    fn events(&self) -> &[EventDescriptor] {
        &self.events
    }

    fn set_enabled(&mut self, mnemonics: &[&str]) -> Result<(), SensorError> {
        if let Some(bad) = mnemonics.iter().find(|m| !self.table.contains_key(m.as_bytes())) {
            return Err(SensorError::UnknownEvent((*bad).to_owned()));
        }
        self.enabled.clear();
        for e in &mut self.events {
            e.enabled = mnemonics.contains(&e.mnemonic.as_str());
            if e.enabled {
                self.enabled.push(self.table[e.mnemonic.as_bytes()]);
            }
        }
        Ok(())
    }

    fn counter_mode(&self) -> CounterMode {
        CounterMode::Signed
    }

    fn sample(&mut self, values: &mut [i64], _cycles: &mut [i64]) -> Result<(), SensorError> {
        let n = self.read()?;
        self.ingest(n);
        for (slot, &o) in values.iter_mut().zip(&self.enabled) {
            *slot = if self.seen[o] == self.generation {
                self.latest[o]
            } else {
                SENTINEL
            };
        }
        Ok(())
    }
}
