use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::EventDescriptor;
use crate::rate::CounterMode;

/// Reserved value marking a slot whose reading failed or is unavailable.
///
/// Rendered as `-` by the terminal renderer and as `null` in recordings and
/// on the websocket stream.
pub const SENTINEL: i64 = i64::MIN;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SensorDescriptor {
    pub name: String,
    pub present: bool,
    /// Maximum events per second, used as the 100% reference.
    pub rate: u64,
    /// Number of hardware elements detected.
    pub sources: u32,
}

#[derive(Debug, Error)]
pub enum SensorError {
    #[error("sensor initialization failed: {0}")]
    Init(String),
    #[error("unknown event {0:?}")]
    UnknownEvent(String),
    #[error("read failed: {0}")]
    Read(#[from] std::io::Error),
}

/// Interface implemented by every source of events.
///
/// Raw values are cumulative counters; the [`Sampler`](crate::Sampler)
/// subtracts consecutive snapshots. Exclusive access is provided by
/// the registry, which keeps each sensor behind its own mutex.
pub trait Sensor: Send {
    /// Human-readable name, unique within a registry.
    fn name(&self) -> &str;

    /// Probes for the backing hardware (or file) and initializes it.
    ///
    /// `Ok(false)` means not present; `Err` means present but unusable.
    fn probe(&mut self) -> Result<bool, SensorError>;

    /// Maximum value per second for percentage views.
    fn rate(&self) -> u64;

    /// Hardware elements detected by [`probe`](Sensor::probe).
    fn sources(&self) -> usize;

    /// Full catalog, in a stable order, with current enablement.
    fn events(&self) -> &[EventDescriptor];

    /// Replaces the enabled set. Unknown mnemonics are rejected and leave
    /// the previous set untouched.
    fn set_enabled(&mut self, mnemonics: &[&str]) -> Result<(), SensorError>;

    fn counter_mode(&self) -> CounterMode;

    /// Frequency of the sensor's cycle counter, if it has one. When present,
    /// rates are normalized by the cycle-derived window instead of wall time.
    fn clock_hz(&self) -> Option<f64> {
        None
    }

    /// Reads cumulative values for the enabled events into `values`, laid
    /// out event-major (`values[event * sources + source]`), and, for
    /// clocked sensors, one cycle counter per source into `cycles`.
    fn sample(&mut self, values: &mut [i64], cycles: &mut [i64]) -> Result<(), SensorError>;

    /// Moves simulated time forward. Real hardware ignores this.
    fn advance(&mut self, _dt: f64) {}

    fn enabled_count(&self) -> usize {
        self.events().iter().filter(|e| e.enabled).count()
    }

    /// Names of enabled events. In discrete mode a multi-source sensor
    /// reports each event once per source, suffixed `@<index>`.
    fn headings(&self, mnemonic: bool, discrete: bool) -> Vec<String> {
        let sources = self.sources();
        let mut out = Vec::new();
        for event in self.events().iter().filter(|e| e.enabled) {
            let base = if mnemonic { &event.mnemonic } else { &event.description };
            if discrete && sources > 1 {
                out.extend((0..sources).map(|s| format!("{base}@{s}")));
            } else {
                out.push(base.clone());
            }
        }
        out
    }
}
