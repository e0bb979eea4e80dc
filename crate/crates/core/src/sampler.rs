//! The capture hot path: read every present sensor, normalize to rates,
//! aggregate across sources.

use thiserror::Error;

use crate::frame::SampleFrame;
use crate::rate::{elapsed_from_cycles, to_rate, wrap_aware_delta, CounterMode, RateError};
use crate::registry::{Registry, RegistryError, SensorHandle};
use crate::sensor::SENTINEL;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("no events are enabled")]
    NothingEnabled,
    #[error("frame discarded: {0}")]
    Discarded(#[from] RateError),
}

struct Channel {
    handle: SensorHandle,
    sources: usize,
    enabled: usize,
    mode: CounterMode,
    clock_hz: Option<f64>,
    prev: Vec<i64>,
    cur: Vec<i64>,
    prev_cycles: Vec<i64>,
    cur_cycles: Vec<i64>,
    elapsed: Vec<f64>,
    primed: bool,
    read_ok: bool,
}

impl Channel {
    fn width(&self, discrete: bool) -> usize {
        if discrete {
            self.enabled * self.sources
        } else {
            self.enabled
        }
    }
}

/// Counters kept for diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SamplerStats {
    pub frames: u64,
    pub read_failures: u64,
    pub discarded: u64,
}

pub struct Sampler {
    registry: Registry,
    discrete: bool,
    channels: Vec<Channel>,
    pending_wall: f64,
    stats: SamplerStats,
}

impl Sampler {
    pub fn new(registry: Registry, discrete: bool) -> Self {
        let mut sampler = Sampler {
            registry,
            discrete,
            channels: Vec::new(),
            pending_wall: 0.0,
            stats: SamplerStats::default(),
        };
        sampler.relayout();
        sampler
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn discrete(&self) -> bool {
        self.discrete
    }

    pub fn stats(&self) -> SamplerStats {
        self.stats
    }

    /// Number of values in every frame under the current layout.
    pub fn width(&self) -> usize {
        self.channels.iter().map(|c| c.width(self.discrete)).sum()
    }

    pub fn headings(&self, mnemonic: bool) -> Vec<String> {
        self.registry.headings(mnemonic, self.discrete)
    }

    pub fn enable(&mut self, mnemonics: &[impl AsRef<str>]) -> Result<(), RegistryError> {
        self.registry.enable(mnemonics)?;
        self.relayout();
        Ok(())
    }

    pub fn enable_all(&mut self) {
        self.registry.enable_all();
        self.relayout();
    }

    pub fn set_discrete(&mut self, discrete: bool) {
        self.discrete = discrete;
    }

    /// Rebuilds per-sensor buffers after the enabled set changed and takes
    /// a fresh baseline.
    pub fn relayout(&mut self) {
        self.channels = self
            .registry
            .present()
            .map(|handle| {
                let sensor = self.registry.lock(handle);
                let sources = sensor.sources().max(1);
                let enabled = sensor.enabled_count();
                let clock_hz = sensor.clock_hz();
                let cycles = if clock_hz.is_some() { sources } else { 0 };
                Channel {
                    handle,
                    sources,
                    enabled,
                    mode: sensor.counter_mode(),
                    clock_hz,
                    prev: vec![SENTINEL; enabled * sources],
                    cur: vec![SENTINEL; enabled * sources],
                    prev_cycles: vec![0; cycles],
                    cur_cycles: vec![0; cycles],
                    elapsed: vec![0.0; cycles],
                    primed: false,
                    read_ok: false,
                }
            })
            .collect();
        self.prime();
    }

    /// Reads a baseline without emitting anything.
    pub fn prime(&mut self) {
        self.read_all();
        for ch in &mut self.channels {
            if ch.read_ok {
                std::mem::swap(&mut ch.prev, &mut ch.cur);
                std::mem::swap(&mut ch.prev_cycles, &mut ch.cur_cycles);
            }
            ch.primed = ch.read_ok;
        }
        self.pending_wall = 0.0;
    }

    fn read_all(&mut self) {
        for ch in self.channels.iter_mut().filter(|c| c.enabled > 0) {
            let mut sensor = self.registry.lock(ch.handle);
            match sensor.sample(&mut ch.cur, &mut ch.cur_cycles) {
                Ok(()) => ch.read_ok = true,
                Err(e) => {
                    log::debug!("sensor {} read failed: {e}", sensor.name());
                    self.stats.read_failures += 1;
                    ch.read_ok = false;
                }
            }
        }
    }

    /// Takes one sample. `wall_elapsed` is the wall time since the previous
    /// call and normalizes sensors without a cycle counter.
    pub fn sample_once(&mut self, wall_elapsed: f64, timestamp_ms: u64) -> Result<SampleFrame, SampleError> {
        let mut values = Vec::with_capacity(self.width());
        let elapsed = self.sample_into(wall_elapsed, &mut values)?;
        Ok(SampleFrame {
            timestamp_ms,
            elapsed,
            values,
            label: None,
        })
    }

    /// Like [`sample_once`](Self::sample_once) but writes into a reusable
    /// buffer. Returns the frame's window length in seconds.
    pub fn sample_into(&mut self, wall_elapsed: f64, out: &mut Vec<i64>) -> Result<f64, SampleError> {
        if self.width() == 0 {
            return Err(SampleError::NothingEnabled);
        }
        self.pending_wall += wall_elapsed;
        self.read_all();

        // Validate every window before committing any snapshot, so a
        // discarded frame leaves all baselines in place.
        let mut frame_elapsed = None;
        for ch in &mut self.channels {
            if !(ch.read_ok && ch.primed) {
                continue;
            }
            if let Some(hz) = ch.clock_hz {
                for s in 0..ch.sources {
                    let d = wrap_aware_delta(ch.prev_cycles[s], ch.cur_cycles[s], ch.mode);
                    match elapsed_from_cycles(d.max(0) as u64, hz) {
                        Ok(e) => ch.elapsed[s] = e,
                        Err(e) => {
                            self.stats.discarded += 1;
                            log::debug!("discarding frame: {e}");
                            return Err(e.into());
                        }
                    }
                }
                frame_elapsed.get_or_insert(ch.elapsed[0]);
            }
        }
        let wall = self.pending_wall;
        let needs_wall = self
            .channels
            .iter()
            .any(|c| c.read_ok && c.primed && c.clock_hz.is_none() && c.enabled > 0);
        if needs_wall && (wall.is_nan() || wall <= 0.0) {
            self.stats.discarded += 1;
            return Err(RateError::NonPositiveElapsed(wall).into());
        }

        out.clear();
        let discrete = self.discrete;
        for ch in &mut self.channels {
            let width = ch.width(discrete);
            if !ch.read_ok {
                out.extend(std::iter::repeat_n(SENTINEL, width));
                ch.primed = false;
                continue;
            }
            if !ch.primed {
                out.extend(std::iter::repeat_n(SENTINEL, width));
            } else {
                let n = ch.sources;
                for e in 0..ch.enabled {
                    let mut sum = 0i64;
                    for s in 0..n {
                        let i = e * n + s;
                        let window = if ch.clock_hz.is_some() { ch.elapsed[s] } else { wall };
                        let r = to_rate(wrap_aware_delta(ch.prev[i], ch.cur[i], ch.mode), window);
                        if discrete {
                            out.push(r);
                        } else if sum != SENTINEL {
                            sum = if r == SENTINEL {
                                SENTINEL
                            } else {
                                sum.saturating_add(r).max(SENTINEL + 1)
                            };
                        }
                    }
                    if !discrete {
                        out.push(sum);
                    }
                }
            }
            std::mem::swap(&mut ch.prev, &mut ch.cur);
            std::mem::swap(&mut ch.prev_cycles, &mut ch.cur_cycles);
            ch.primed = true;
        }
        self.pending_wall = 0.0;
        self.stats.frames += 1;
        Ok(frame_elapsed.unwrap_or(wall))
    }

    /// Moves simulated time forward on every sensor.
    pub fn advance(&self, dt: f64) {
        self.registry.advance(dt);
    }
}
