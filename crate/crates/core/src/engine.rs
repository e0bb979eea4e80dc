//! Periodic capture, recording state machine and frame fan-out.
//!
//! All mutations (control pipe, web clients) arrive as [`ControlRequest`]s
//! on one channel and are applied by the engine thread between samples,
//! so the sampler has a single writer.

use std::path::PathBuf;
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use thiserror::Error;
use tokio::sync::broadcast;

use crate::control::{ControlCommand, IntervalMs};
use crate::frame::SampleFrame;
use crate::registry::RegistryError;
use crate::sampler::{SampleError, Sampler, SamplerStats};
use crate::sensor::SensorDescriptor;
use crate::storage::{RecordingHeader, RecordingWriter, StorageError, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordingState {
    Off,
    Active(PathBuf),
    /// Capture continues but frames are not persisted.
    Paused(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerState {
    pub interval: IntervalMs,
    pub discrete: bool,
    pub recording: RecordingState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ControlRequest {
    Command(ControlCommand),
    SetEvents(Vec<String>),
    SetDiscrete(bool),
    Shutdown,
}

impl From<ControlCommand> for ControlRequest {
    fn from(c: ControlCommand) -> Self {
        ControlRequest::Command(c)
    }
}

/// Current shape of emitted frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub headings: Vec<String>,
    pub descriptions: Vec<String>,
    pub discrete: bool,
    pub sensors: Vec<SensorDescriptor>,
    /// Cycle-counter frequency per sensor, aligned with `sensors`.
    pub clock_hz: Vec<Option<f64>>,
    /// Number of headings contributed by each sensor, aligned with `sensors`.
    pub widths: Vec<usize>,
}

impl Layout {
    /// The owning sensor's 100% rate for each heading.
    pub fn rate_references(&self) -> Vec<u64> {
        self.sensors
            .iter()
            .zip(&self.widths)
            .flat_map(|(s, &w)| std::iter::repeat_n(s.rate, w))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub enum EngineEvent {
    Frame(Arc<SampleFrame>),
    /// Headings changed; frames after this event use the new layout.
    Layout(Arc<Layout>),
    IntervalChanged(IntervalMs),
    Label(String),
}

#[derive(Debug, Error)]
pub enum ControlError {
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("headings cannot change while a recording is open; start a new recording first")]
    HeadingsLocked,
    #[error("no recording is open")]
    NoRecording,
}

/// What a request changed, so the scheduler can react.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applied {
    Nothing,
    Interval,
    Layout,
    Recording,
    Label,
    Shutdown,
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub interval: IntervalMs,
    /// Pin the capture thread to the first NUMA node when possible.
    pub pin_threads: bool,
    pub bus_capacity: usize,
    /// Stop after this many frames.
    pub max_frames: Option<u64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            interval: IntervalMs::new(1000).unwrap(),
            pin_threads: true,
            bus_capacity: 8192,
            max_frames: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EngineReport {
    pub frames: u64,
    pub persisted: u64,
    pub cpu_time: Duration,
    pub wall_time: Duration,
    pub sampler: SamplerStats,
    pub pinned: bool,
}

impl EngineReport {
    /// Fraction of one core used by the capture thread.
    pub fn utilization(&self) -> f64 {
        self.cpu_time.as_secs_f64() / self.wall_time.as_secs_f64().max(f64::MIN_POSITIVE)
    }
}

pub struct Engine {
    sampler: Sampler,
    state: SamplerState,
    writer: Option<RecordingWriter>,
    pending_label: Option<String>,
    bus: broadcast::Sender<EngineEvent>,
    layout: Arc<Layout>,
    config: EngineConfig,
    host: String,
    frames: u64,
    persisted: u64,
}

impl Engine {
    pub fn new(sampler: Sampler, config: EngineConfig) -> Self {
        let (bus, _) = broadcast::channel(config.bus_capacity.max(1));
        let state = SamplerState {
            interval: config.interval,
            discrete: sampler.discrete(),
            recording: RecordingState::Off,
        };
        let layout = Arc::new(build_layout(&sampler));
        Engine {
            sampler,
            state,
            writer: None,
            pending_label: None,
            bus,
            layout,
            config,
            host: crate::os::hostname(),
            frames: 0,
            persisted: 0,
        }
    }

    pub fn state(&self) -> &SamplerState {
        &self.state
    }

    pub fn layout(&self) -> Arc<Layout> {
        self.layout.clone()
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    pub fn frames_emitted(&self) -> u64 {
        self.frames
    }

    pub fn frames_persisted(&self) -> u64 {
        self.persisted
    }

    pub fn subscribe(&self) -> broadcast::Receiver<EngineEvent> {
        self.bus.subscribe()
    }

    pub fn bus(&self) -> broadcast::Sender<EngineEvent> {
        self.bus.clone()
    }

    pub fn header(&self) -> RecordingHeader {
        RecordingHeader {
            format_version: FORMAT_VERSION,
            created_at: chrono::Utc::now().to_rfc3339(),
            host: self.host.clone(),
            sensors: self.layout.sensors.clone(),
            headings: self.layout.headings.clone(),
            descriptions: self.layout.descriptions.clone(),
            discrete: self.layout.discrete,
            initial_interval: self.state.interval.get(),
            core_clock_hz: self.layout.clock_hz.clone(),
        }
    }

    pub fn apply(&mut self, request: ControlRequest) -> Result<Applied, ControlError> {
        match request {
            ControlRequest::Command(cmd) => self.apply_command(cmd),
            ControlRequest::SetEvents(events) => {
                self.ensure_unlocked()?;
                self.sampler.enable(&events)?;
                self.publish_layout();
                Ok(Applied::Layout)
            }
            ControlRequest::SetDiscrete(discrete) => {
                if discrete == self.state.discrete {
                    return Ok(Applied::Nothing);
                }
                self.ensure_unlocked()?;
                self.sampler.set_discrete(discrete);
                self.state.discrete = discrete;
                self.publish_layout();
                Ok(Applied::Layout)
            }
            ControlRequest::Shutdown => Ok(Applied::Shutdown),
        }
    }

    fn apply_command(&mut self, cmd: ControlCommand) -> Result<Applied, ControlError> {
        match cmd {
            ControlCommand::Record(path) => {
                // Open the new file first so a bad path leaves the current
                // recording untouched.
                let writer = RecordingWriter::create(&path, &self.header())?;
                if let Some(old) = self.writer.replace(writer) {
                    let old_path = old.path().to_owned();
                    match old.finish() {
                        Ok(n) => log::info!("closed {} after {n} frames", old_path.display()),
                        Err(e) => log::error!("closing {}: {e}", old_path.display()),
                    }
                }
                log::info!("recording to {}", path.display());
                self.state.recording = RecordingState::Active(path);
                Ok(Applied::Recording)
            }
            ControlCommand::Label(text) => {
                self.pending_label = Some(match self.pending_label.take() {
                    Some(prev) => format!("{prev}; {text}"),
                    None => text.clone(),
                });
                let _ = self.bus.send(EngineEvent::Label(text));
                Ok(Applied::Label)
            }
            ControlCommand::Pause => match &self.state.recording {
                RecordingState::Active(p) => {
                    self.state.recording = RecordingState::Paused(p.clone());
                    Ok(Applied::Recording)
                }
                RecordingState::Paused(_) => Ok(Applied::Nothing),
                RecordingState::Off => Err(ControlError::NoRecording),
            },
            ControlCommand::Resume => match &self.state.recording {
                RecordingState::Paused(p) => {
                    self.state.recording = RecordingState::Active(p.clone());
                    Ok(Applied::Recording)
                }
                RecordingState::Active(_) => Ok(Applied::Nothing),
                RecordingState::Off => Err(ControlError::NoRecording),
            },
            ControlCommand::Interval(interval) => {
                self.state.interval = interval;
                let _ = self.bus.send(EngineEvent::IntervalChanged(interval));
                Ok(Applied::Interval)
            }
        }
    }

    fn ensure_unlocked(&self) -> Result<(), ControlError> {
        if self.writer.is_some() {
            Err(ControlError::HeadingsLocked)
        } else {
            Ok(())
        }
    }

    fn publish_layout(&mut self) {
        self.layout = Arc::new(build_layout(&self.sampler));
        let _ = self.bus.send(EngineEvent::Layout(self.layout.clone()));
    }

    /// Advances simulated sensors by `wall_dt`, samples, persists and
    /// broadcasts. Returns `None` when no frame was produced.
    pub fn tick(&mut self, wall_dt: f64, timestamp_ms: u64) -> Option<Arc<SampleFrame>> {
        self.sampler.advance(wall_dt);
        let mut frame = match self.sampler.sample_once(wall_dt, timestamp_ms) {
            Ok(f) => f,
            Err(SampleError::NothingEnabled) => return None,
            Err(e) => {
                log::debug!("{e}");
                return None;
            }
        };
        frame.label = self.pending_label.take();
        if let (RecordingState::Active(_), Some(writer)) = (&self.state.recording, self.writer.as_mut()) {
            match writer.append(&frame) {
                Ok(()) => self.persisted += 1,
                Err(e) => log::error!("dropping frame: {e}"),
            }
        }
        self.frames += 1;
        let frame = Arc::new(frame);
        let _ = self.bus.send(EngineEvent::Frame(frame.clone()));
        Some(frame)
    }

    /// Closes any open recording.
    pub fn finish(&mut self) -> Result<(), StorageError> {
        if let Some(w) = self.writer.take() {
            w.finish()?;
        }
        self.state.recording = RecordingState::Off;
        Ok(())
    }

    /// Starts the capture thread.
    pub fn spawn(self) -> std::io::Result<EngineHandle> {
        let (control, rx) = mpsc::channel();
        let bus = self.bus.clone();
        let join = std::thread::Builder::new()
            .name("ccscope-capture".into())
            .spawn(move || self.run(rx))?;
        Ok(EngineHandle { control, bus, join })
    }

    /// Runs the periodic schedule on the calling thread until shutdown,
    /// the control channel closes or `max_frames` is reached.
    pub fn run(mut self, control: mpsc::Receiver<ControlRequest>) -> EngineReport {
        let pinned = self.config.pin_threads
            && match crate::os::pin_current_thread_to_first_node() {
                Ok(p) => p,
                Err(e) => {
                    log::warn!("could not pin capture thread: {e}");
                    false
                }
            };
        let cpu_start = crate::os::thread_cpu_time();
        let wall_start = Instant::now();
        let epoch_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default()
            .as_millis() as u64;

        self.sampler.prime();
        let mut last_tick = Instant::now();
        let mut next = last_tick + self.state.interval.as_duration();
        let mut control_open = true;
        loop {
            let now = Instant::now();
            if now < next {
                let wait = next - now;
                let request = if control_open {
                    control.recv_timeout(wait)
                } else {
                    std::thread::sleep(wait);
                    Err(RecvTimeoutError::Timeout)
                };
                match request {
                    Ok(req) => {
                        match self.apply(req) {
                            Ok(Applied::Shutdown) => break,
                            Ok(Applied::Interval) => {
                                next = (last_tick + self.state.interval.as_duration()).max(Instant::now());
                            }
                            Ok(Applied::Layout) => last_tick = Instant::now(),
                            Ok(_) => {}
                            Err(e) => log::warn!("control request rejected: {e}"),
                        }
                        continue;
                    }
                    Err(RecvTimeoutError::Timeout) => continue,
                    Err(RecvTimeoutError::Disconnected) => {
                        control_open = false;
                        continue;
                    }
                }
            }
            let wall_dt = (now - last_tick).as_secs_f64();
            last_tick = now;
            let ts = epoch_ms + (now - wall_start).as_millis() as u64;
            self.tick(wall_dt, ts);
            if self.config.max_frames.is_some_and(|max| self.frames >= max) {
                break;
            }
            next += self.state.interval.as_duration();
            if next <= now {
                next = now + self.state.interval.as_duration();
            }
        }
        if let Err(e) = self.finish() {
            log::error!("closing recording: {e}");
        }
        EngineReport {
            frames: self.frames,
            persisted: self.persisted,
            cpu_time: crate::os::thread_cpu_time().saturating_sub(cpu_start),
            wall_time: wall_start.elapsed(),
            sampler: self.sampler.stats(),
            pinned,
        }
    }
}

fn build_layout(sampler: &Sampler) -> Layout {
    let registry = sampler.registry();
    Layout {
        headings: sampler.headings(true),
        descriptions: sampler.headings(false),
        discrete: sampler.discrete(),
        sensors: registry.descriptors(),
        clock_hz: registry
            .handles()
            .map(|h| {
                if registry.descriptor(h).present {
                    registry.lock(h).clock_hz()
                } else {
                    None
                }
            })
            .collect(),
        widths: registry
            .handles()
            .map(|h| {
                if registry.descriptor(h).present {
                    registry.lock(h).headings(true, sampler.discrete()).len()
                } else {
                    0
                }
            })
            .collect(),
    }
}

/// A running capture thread.
pub struct EngineHandle {
    control: mpsc::Sender<ControlRequest>,
    bus: broadcast::Sender<EngineEvent>,
    join: JoinHandle<EngineReport>,
}

impl EngineHandle {
    pub fn control(&self) -> mpsc::Sender<ControlRequest> {
        self.control.clone()
    }

    pub fn subscribe(&self) -> broadcast::Receiver<EngineEvent> {
        self.bus.subscribe()
    }

    pub fn send(&self, request: impl Into<ControlRequest>) -> bool {
        self.control.send(request.into()).is_ok()
    }

    pub fn is_finished(&self) -> bool {
        self.join.is_finished()
    }

    /// Stops the thread and waits for its report.
    pub fn shutdown(self) -> EngineReport {
        let _ = self.control.send(ControlRequest::Shutdown);
        self.join.join().unwrap_or_default()
    }

    /// Waits for the thread to stop on its own.
    pub fn join(self) -> EngineReport {
        self.join.join().unwrap_or_default()
    }
}
