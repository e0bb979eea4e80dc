use serde::{Deserialize, Serialize};

/// Normalization class of an event.
///
/// `OccupancyCycles` and `ContextLevel` events count clock cycles in which
/// some condition held, so their per-second rate is bounded by the sensor
/// clock. `Counter` events count occurrences and have no such bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Counter,
    OccupancyCycles,
    ContextLevel,
}

impl EventKind {
    pub fn is_cycle_bounded(self) -> bool {
        !matches!(self, EventKind::Counter)
    }
}

/// One entry in a sensor's event catalog. Rates are always events per second.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDescriptor {
    pub mnemonic: String,
    pub description: String,
    pub enabled: bool,
    pub kind: EventKind,
}

impl EventDescriptor {
    pub fn new(mnemonic: impl Into<String>, description: impl Into<String>, kind: EventKind) -> Self {
        let mnemonic = mnemonic.into();
        debug_assert!(
            !mnemonic.is_empty() && !mnemonic.chars().any(char::is_whitespace),
            "mnemonic {mnemonic:?} must be a non-empty token"
        );
        EventDescriptor {
            mnemonic,
            description: description.into(),
            enabled: false,
            kind,
        }
    }
}
