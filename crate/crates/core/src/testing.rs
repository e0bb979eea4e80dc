//! A scripted sensor for exercising the engine without hardware.

use std::collections::VecDeque;

use crate::event::{EventDescriptor, EventKind};
use crate::rate::CounterMode;
use crate::sensor::{Sensor, SensorError};

/// One scripted reading: the full catalog's raw values, event-major, plus
/// one cycle count per source (ignored when the sensor has no clock).
#[derive(Debug, Clone, PartialEq)]
pub struct Reading {
    pub values: Vec<i64>,
    pub cycles: Vec<i64>,
}

/// Replays queued readings; an empty queue repeats the last one, `None`
/// entries fail the read.
pub struct ScriptedSensor {
    name: String,
    present: Result<bool, String>,
    sources: usize,
    mode: CounterMode,
    clock_hz: Option<f64>,
    rate: u64,
    events: Vec<EventDescriptor>,
    queue: VecDeque<Option<Reading>>,
    last: Option<Reading>,
}

impl ScriptedSensor {
    pub fn new(name: &str, mnemonics: &[&str], sources: usize, mode: CounterMode) -> Self {
        ScriptedSensor {
            name: name.to_owned(),
            present: Ok(true),
            sources,
            mode,
            clock_hz: None,
            rate: 1,
            events: mnemonics
                .iter()
                .map(|m| EventDescriptor::new(*m, format!("scripted event {m}"), EventKind::Counter))
                .collect(),
            queue: VecDeque::new(),
            last: None,
        }
    }

    pub fn with_clock(mut self, hz: f64) -> Self {
        self.clock_hz = Some(hz);
        self.rate = hz as u64;
        self
    }

    pub fn absent(mut self) -> Self {
        self.present = Ok(false);
        self
    }

    pub fn failing_probe(mut self, why: &str) -> Self {
        self.present = Err(why.to_owned());
        self
    }

    pub fn push(&mut self, reading: Reading) -> &mut Self {
        self.queue.push_back(Some(reading));
        self
    }

    pub fn push_failure(&mut self) -> &mut Self {
        self.queue.push_back(None);
        self
    }

    pub fn with_readings(mut self, readings: impl IntoIterator<Item = Reading>) -> Self {
        self.queue.extend(readings.into_iter().map(Some));
        self
    }
}

impl Sensor for ScriptedSensor {
    fn name(&self) -> &str {
        &self.name
    }

    fn probe(&mut self) -> Result<bool, SensorError> {
        self.present.clone().map_err(SensorError::Init)
    }

    fn rate(&self) -> u64 {
        self.rate
    }

    fn sources(&self) -> usize {
        self.sources
    }

    fn events(&self) -> &[EventDescriptor] {
        &self.events
    }

    fn set_enabled(&mut self, mnemonics: &[&str]) -> Result<(), SensorError> {
        if let Some(bad) = mnemonics
            .iter()
            .find(|m| !self.events.iter().any(|e| e.mnemonic == **m))
        {
            return Err(SensorError::UnknownEvent((*bad).to_owned()));
        }
        for e in &mut self.events {
            e.enabled = mnemonics.contains(&e.mnemonic.as_str());
        }
        Ok(())
    }

    fn counter_mode(&self) -> CounterMode {
        self.mode
    }

    fn clock_hz(&self) -> Option<f64> {
        self.clock_hz
    }

    fn sample(&mut self, values: &mut [i64], cycles: &mut [i64]) -> Result<(), SensorError> {
        let reading = match self.queue.pop_front() {
            Some(Some(r)) => {
                self.last = Some(r.clone());
                r
            }
            Some(None) => return Err(SensorError::Read(std::io::Error::other("scripted failure"))),
            None => self.last.clone().unwrap_or(Reading {
                values: vec![0; self.events.len() * self.sources],
                cycles: vec![0; self.sources],
            }),
        };
        let n = self.sources;
        let mut slot = 0;
        for (e, desc) in self.events.iter().enumerate() {
            if desc.enabled {
                values[slot * n..(slot + 1) * n].copy_from_slice(&reading.values[e * n..(e + 1) * n]);
                slot += 1;
            }
        }
        cycles.copy_from_slice(&reading.cycles[..cycles.len()]);
        Ok(())
    }
}
