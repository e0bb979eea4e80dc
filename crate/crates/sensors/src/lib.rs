//! Sensors for ccscope.
//!
//! Each kind is registered by name in [`SENSOR_KINDS`] and built at runtime
//! from [`SensorOptions`].

pub mod numachip;
pub mod vmstat;

use std::path::PathBuf;

use ccscope_core::Sensor;

pub use numachip::{NumachipOptions, NumachipSim, Scenario, ScenarioError};
pub use vmstat::VmstatSensor;

/// Settings shared by all sensor builders. Each builder reads the fields
/// relevant to it.
#[derive(Debug, Clone)]
pub struct SensorOptions {
    pub numachip: NumachipOptions,
    pub vmstat_path: PathBuf,
}

impl Default for SensorOptions {
    fn default() -> Self {
        SensorOptions {
            numachip: NumachipOptions::default(),
            vmstat_path: PathBuf::from(vmstat::DEFAULT_PATH),
        }
    }
}

pub type SensorBuilder = fn(&SensorOptions) -> Box<dyn Sensor>;

pub struct SensorKind {
    pub name: &'static str,
    pub summary: &'static str,
    pub build: SensorBuilder,
}

/// Known sensor kinds in default registration order.
pub static SENSOR_KINDS: &[SensorKind] = &[
    SensorKind {
        name: "numachip",
        summary: "simulated NumaConnect2 interconnect counters",
        build: |o| Box::new(NumachipSim::new(o.numachip.clone())),
    },
    SensorKind {
        name: "vmstat",
        summary: "kernel virtual-memory statistics",
        build: |o| Box::new(VmstatSensor::with_path(&o.vmstat_path)),
    },
];

pub fn kind(name: &str) -> Option<&'static SensorKind> {
    SENSOR_KINDS.iter().find(|k| k.name == name)
}

pub fn kind_names() -> Vec<&'static str> {
    SENSOR_KINDS.iter().map(|k| k.name).collect()
}

/// Builds sensors by kind name, in the order given.
pub fn build(names: &[impl AsRef<str>], options: &SensorOptions) -> Result<Vec<Box<dyn Sensor>>, String> {
    names
        .iter()
        .map(|n| {
            let n = n.as_ref();
            kind(n)
                .map(|k| (k.build)(options))
                .ok_or_else(|| format!("unknown sensor {n:?}; available: {}", kind_names().join(", ")))
        })
        .collect()
}
