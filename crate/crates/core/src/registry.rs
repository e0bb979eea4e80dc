use std::sync::{Mutex, MutexGuard};

use thiserror::Error;

use crate::event::EventDescriptor;
use crate::sensor::{Sensor, SensorDescriptor};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("a sensor named {0:?} is already registered")]
    DuplicateSensor(String),
    #[error("unknown event {name:?}{}", suggest(.suggestions))]
    UnknownEvent { name: String, suggestions: Vec<String> },
}

fn suggest(s: &[String]) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!("; did you mean {}?", s.join(", "))
    }
}

/// Index of a sensor in its registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorHandle(pub usize);

pub(crate) struct Slot {
    pub descriptor: SensorDescriptor,
    pub diagnostic: Option<String>,
    pub sensor: Mutex<Box<dyn Sensor>>,
}

/// Ordered set of sensors. Headings are the concatenation of each present
/// sensor's headings in registration order.
#[derive(Default)]
pub struct Registry {
    slots: Vec<Slot>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Probes `sensor` and adds it. A sensor whose probe fails is kept as
    /// "not present" and contributes no headings.
    pub fn register(&mut self, mut sensor: Box<dyn Sensor>) -> Result<SensorHandle, RegistryError> {
        let name = sensor.name().to_owned();
        if self.slots.iter().any(|s| s.descriptor.name == name) {
            return Err(RegistryError::DuplicateSensor(name));
        }
        let (present, diagnostic) = match sensor.probe() {
            Ok(true) => (true, None),
            Ok(false) => (false, None),
            Err(e) => {
                log::warn!("sensor {name}: {e}; marking absent");
                (false, Some(e.to_string()))
            }
        };
        let descriptor = SensorDescriptor {
            name,
            present,
            rate: sensor.rate(),
            sources: if present { sensor.sources().max(1) as u32 } else { 0 },
        };
        self.slots.push(Slot {
            descriptor,
            diagnostic,
            sensor: Mutex::new(sensor),
        });
        Ok(SensorHandle(self.slots.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn descriptors(&self) -> Vec<SensorDescriptor> {
        self.slots.iter().map(|s| s.descriptor.clone()).collect()
    }

    pub fn descriptor(&self, handle: SensorHandle) -> &SensorDescriptor {
        &self.slots[handle.0].descriptor
    }

    /// Why a sensor is absent, when its probe reported an error.
    pub fn diagnostic(&self, handle: SensorHandle) -> Option<&str> {
        self.slots[handle.0].diagnostic.as_deref()
    }

    /// Acquires the sensor's exclusion lock.
    pub fn lock(&self, handle: SensorHandle) -> MutexGuard<'_, Box<dyn Sensor>> {
        lock(&self.slots[handle.0].sensor)
    }

    pub fn handles(&self) -> impl Iterator<Item = SensorHandle> {
        (0..self.slots.len()).map(SensorHandle)
    }

    pub fn present(&self) -> impl Iterator<Item = SensorHandle> + '_ {
        self.handles().filter(|h| self.slots[h.0].descriptor.present)
    }

    /// Catalog of every present sensor.
    pub fn catalog(&self) -> Vec<(SensorDescriptor, Vec<EventDescriptor>)> {
        self.slots
            .iter()
            .map(|s| {
                let events = if s.descriptor.present {
                    lock(&s.sensor).events().to_vec()
                } else {
                    Vec::new()
                };
                (s.descriptor.clone(), events)
            })
            .collect()
    }

    /// Enables exactly `mnemonics` across all present sensors.
    pub fn enable(&mut self, mnemonics: &[impl AsRef<str>]) -> Result<(), RegistryError> {
        let mut per_sensor: Vec<Vec<&str>> = vec![Vec::new(); self.slots.len()];
        for name in mnemonics {
            let name = name.as_ref();
            let owner = self.present().find(|h| {
                lock(&self.slots[h.0].sensor)
                    .events()
                    .iter()
                    .any(|e| e.mnemonic == name)
            });
            match owner {
                Some(h) => per_sensor[h.0].push(name),
                None => {
                    return Err(RegistryError::UnknownEvent {
                        name: name.to_owned(),
                        suggestions: self.near_matches(name),
                    })
                }
            }
        }
        for (slot, names) in self.slots.iter().zip(per_sensor) {
            if slot.descriptor.present {
                lock(&slot.sensor)
                    .set_enabled(&names)
                    .expect("mnemonics were validated against the catalog");
            }
        }
        Ok(())
    }

    pub fn enable_all(&mut self) {
        for slot in self.slots.iter().filter(|s| s.descriptor.present) {
            let mut sensor = lock(&slot.sensor);
            let names: Vec<String> = sensor.events().iter().map(|e| e.mnemonic.clone()).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            sensor.set_enabled(&refs).expect("catalog mnemonics are valid");
        }
    }

    pub fn enabled_mnemonics(&self) -> Vec<String> {
        self.present()
            .flat_map(|h| {
                lock(&self.slots[h.0].sensor)
                    .events()
                    .iter()
                    .filter(|e| e.enabled)
                    .map(|e| e.mnemonic.clone())
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    pub fn headings(&self, mnemonic: bool, discrete: bool) -> Vec<String> {
        self.present()
            .flat_map(|h| lock(&self.slots[h.0].sensor).headings(mnemonic, discrete))
            .collect()
    }

    /// Up to three catalog mnemonics closest to `name`.
    pub fn near_matches(&self, name: &str) -> Vec<String> {
        let mut scored: Vec<(f64, String)> = self
            .catalog()
            .into_iter()
            .flat_map(|(_, events)| events)
            .map(|e| (strsim::jaro_winkler(name, &e.mnemonic), e.mnemonic))
            .filter(|(score, _)| *score > 0.8)
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        scored.into_iter().take(3).map(|(_, m)| m).collect()
    }

    /// Advances simulated time on every present sensor.
    pub fn advance(&self, dt: f64) {
        for h in self.present() {
            lock(&self.slots[h.0].sensor).advance(dt);
        }
    }
}

// A panic while a sensor was locked leaves no partial state worth refusing.
fn lock(m: &Mutex<Box<dyn Sensor>>) -> MutexGuard<'_, Box<dyn Sensor>> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}
