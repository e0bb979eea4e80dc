//! Named-pipe command channel.

use std::ffi::CString;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader};
use std::os::unix::ffi::OsStrExt;
use std::os::unix::fs::{FileTypeExt, PermissionsExt};
use std::path::{Path, PathBuf};
use std::thread::JoinHandle;

use crate::control::ControlCommand;

pub const DEFAULT_FIFO_PATH: &str = "/run/ccscope-ctl";
pub const FIFO_ENV: &str = "CCSCOPE_CTL";
const FIFO_MODE: u32 = 0o622;

/// The control pipe. Removed on drop if this process created it.
pub struct ControlFifo {
    path: PathBuf,
    created: bool,
    file: Option<File>,
}

impl ControlFifo {
    /// Opens `path`, creating the pipe first if absent.
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_owned();
        let created = match std::fs::metadata(&path) {
            Ok(meta) if meta.file_type().is_fifo() => false,
            Ok(_) => {
                return Err(io::Error::new(
                    io::ErrorKind::AlreadyExists,
                    format!("{} exists and is not a FIFO", path.display()),
                ))
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                let c = CString::new(path.as_os_str().as_bytes())
                    .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "path contains NUL"))?;
                // SAFETY: c is a valid NUL-terminated path.
                if unsafe { libc::mkfifo(c.as_ptr(), FIFO_MODE as libc::mode_t) } != 0 {
                    return Err(io::Error::last_os_error());
                }
                std::fs::set_permissions(&path, std::fs::Permissions::from_mode(FIFO_MODE))?;
                true
            }
            Err(e) => return Err(e),
        };
        // Holding a write end too means the reader never sees EOF when
        // writers come and go.
        let file = match OpenOptions::new().read(true).write(true).open(&path) {
            Ok(f) => f,
            Err(e) => {
                if created {
                    let _ = std::fs::remove_file(&path);
                }
                return Err(e);
            }
        };
        Ok(ControlFifo {
            path,
            created,
            file: Some(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Starts the reader thread, handing every parsed command to `sink`.
    /// The thread ends when `sink` returns `false` or after the pipe closes.
    pub fn spawn_reader<F>(&mut self, sink: F) -> io::Result<JoinHandle<()>>
    where
        F: FnMut(ControlCommand) -> bool + Send + 'static,
    {
        let file = self
            .file
            .take()
            .ok_or_else(|| io::Error::other("reader already started"))?;
        std::thread::Builder::new().name("ccscope-fifo".into()).spawn(move || {
            read_commands(BufReader::new(file), sink);
        })
    }
}

impl Drop for ControlFifo {
    fn drop(&mut self) {
        if self.created {
            let _ = std::fs::remove_file(&self.path);
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReaderStats {
    pub applied: usize,
    pub rejected: usize,
}

/// Reads newline-terminated commands until end of input. Malformed lines
/// are logged and skipped; an unterminated trailing line is ignored.
pub fn read_commands<R: BufRead>(mut reader: R, mut sink: impl FnMut(ControlCommand) -> bool) -> ReaderStats {
    let mut stats = ReaderStats::default();
    let mut line = Vec::with_capacity(256);
    loop {
        line.clear();
        match reader.read_until(b'\n', &mut line) {
            Ok(0) => break,
            Ok(_) if !line.ends_with(b"\n") => {
                log::warn!("control: ignoring unterminated command at end of input");
                break;
            }
            Ok(_) => {}
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => {
                log::error!("control: read failed: {e}");
                break;
            }
        }
        let Ok(text) = std::str::from_utf8(&line) else {
            log::warn!("control: ignoring non-UTF-8 command");
            stats.rejected += 1;
            continue;
        };
        if text.trim().is_empty() {
            continue;
        }
        match text.parse::<ControlCommand>() {
            Ok(cmd) => {
                stats.applied += 1;
                if !sink(cmd) {
                    break;
                }
            }
            Err(e) => {
                log::warn!("control: rejected {:?}: {e}", text.trim_end());
                stats.rejected += 1;
            }
        }
    }
    stats
}
