//! Simulated NumaChip2 interconnects.
//!
//! Each interconnect exposes a 48-bit register file driven by a
//! [`Scenario`]. Simulated time only moves through [`Sensor::advance`], so
//! runs are reproducible for a given seed.

pub mod catalog;
pub mod regfile;
pub mod scenario;

use std::ops::Range;

use ccscope_core::{CounterMode, EventDescriptor, Sensor, SensorError};

use catalog::{backing_counters, CATALOG, SCALAR_COUNTERS, STRIPES, TAG_UNITS};
pub use regfile::{RegisterFile, CLOCK_HZ};
pub use scenario::{Scenario, ScenarioDriver, ScenarioError};

pub const SENSOR_NAME: &str = "NumaConnect2";
pub const DEFAULT_SOURCES: usize = 6;

#[derive(Debug, Clone)]
pub struct NumachipOptions {
    pub sources: usize,
    pub scenario: Scenario,
    pub seed: u64,
    /// Report each stripe of the tag-cache events as its own event instead
    /// of the summed logical event.
    pub expose_stripes: bool,
    /// Initial value of every counter, masked to 48 bits.
    pub initial_counter: u64,
}

impl Default for NumachipOptions {
    fn default() -> Self {
        NumachipOptions {
            sources: DEFAULT_SOURCES,
            scenario: Scenario::builtin("idle", DEFAULT_SOURCES).expect("builtin"),
            seed: 0,
            expose_stripes: false,
            initial_counter: 0,
        }
    }
}

pub struct NumachipSim {
    options: NumachipOptions,
    events: Vec<EventDescriptor>,
    /// Register-file range summed for each entry of `events`.
    backing: Vec<Range<usize>>,
    enabled: Vec<usize>,
    files: Vec<RegisterFile>,
    driver: Option<ScenarioDriver>,
}

impl NumachipSim {
    pub fn new(options: NumachipOptions) -> Self {
        let (events, backing) = catalog_view(options.expose_stripes);
        NumachipSim {
            options,
            events,
            backing,
            enabled: Vec::new(),
            files: Vec::new(),
            driver: None,
        }
    }

    pub fn files(&self) -> &[RegisterFile] {
        &self.files
    }

    pub fn scenario(&self) -> &Scenario {
        &self.options.scenario
    }

    /// Simulated seconds since probe.
    pub fn elapsed(&self) -> f64 {
        self.driver.as_ref().map_or(0.0, |d| d.elapsed())
    }
}

fn catalog_view(expose_stripes: bool) -> (Vec<EventDescriptor>, Vec<Range<usize>>) {
    let mut events = Vec::new();
    let mut backing = Vec::new();
    for (i, entry) in CATALOG.iter().enumerate() {
        if entry.striped && expose_stripes {
            let counters = backing_counters(i);
            let generic = entry.description.trim_end_matches(" C/Mtag cache 0..3");
            for (k, c) in counters.enumerate() {
                let (unit, stripe) = (["C", "M"][k / STRIPES], k % STRIPES);
                debug_assert!(k / STRIPES < TAG_UNITS);
                events.push(EventDescriptor::new(
                    format!("{}{unit}{stripe}", entry.mnemonic),
                    format!("{generic} {unit}tag cache {stripe}"),
                    entry.kind,
                ));
                backing.push(c..c + 1);
            }
        } else {
            events.push(EventDescriptor::new(entry.mnemonic, entry.description, entry.kind));
            backing.push(backing_counters(i));
        }
    }
    debug_assert!(backing[..SCALAR_COUNTERS].iter().all(|r| r.len() == 1));
    (events, backing)
}

impl Sensor for NumachipSim {
    fn name(&self) -> &str {
        SENSOR_NAME
    }

    fn probe(&mut self) -> Result<bool, SensorError> {
        let n = self.options.sources;
        if n == 0 {
            return Ok(false);
        }
        let driver = ScenarioDriver::new(&self.options.scenario, n, self.options.seed)
            .map_err(|e| SensorError::Init(e.to_string()))?;
        self.files = (0..n)
            .map(|i| RegisterFile::preset(i, self.options.initial_counter))
            .collect();
        self.driver = Some(driver);
        Ok(true)
    }

    fn rate(&self) -> u64 {
        CLOCK_HZ as u64
    }

    fn sources(&self) -> usize {
        self.files.len()
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
        self.enabled.clear();
        for (i, e) in self.events.iter_mut().enumerate() {
            e.enabled = mnemonics.contains(&e.mnemonic.as_str());
            if e.enabled {
                self.enabled.push(i);
            }
        }
        Ok(())
    }

    fn counter_mode(&self) -> CounterMode {
        CounterMode::HARDWARE
    }

    fn clock_hz(&self) -> Option<f64> {
        Some(CLOCK_HZ)
    }

    fn sample(&mut self, values: &mut [i64], cycles: &mut [i64]) -> Result<(), SensorError> {
        let n = self.files.len();
        // The registry lock is held, so all interconnects latch together.
        for (slot, &event) in self.enabled.iter().enumerate() {
            let range = &self.backing[event];
            for (s, file) in self.files.iter().enumerate() {
                let raw = range.clone().fold(0u64, |acc, c| acc.wrapping_add(file.counter(c))) & regfile::COUNTER_MASK;
                values[slot * n + s] = raw as i64;
            }
        }
        for (c, file) in cycles.iter_mut().zip(&self.files) {
            *c = file.cycles() as i64;
        }
        Ok(())
    }

    fn advance(&mut self, dt: f64) {
        if let Some(driver) = &mut self.driver {
            driver.advance(&mut self.files, dt);
        }
    }
}
