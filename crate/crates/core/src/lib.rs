//! Core of the ccscope event capture framework.
//!
//! Sensors plug in through the [`Sensor`] trait and are collected in a
//! [`Registry`]. A [`Sampler`] turns raw cumulative counters into signed
//! per-second rates, and an [`Engine`] drives the sampler on a schedule,
//! persists frames through the [`storage`] writer and fans them out to
//! consumers (terminal renderer, web server) over a broadcast bus.

pub mod control;
pub mod engine;
pub mod event;
pub mod fifo;
pub mod frame;
pub mod metrics;
pub mod os;
pub mod rate;
pub mod registry;
pub mod render;
pub mod sampler;
pub mod sensor;
pub mod storage;
#[doc(hidden)]
pub mod testing;

pub use control::{ControlCommand, IntervalMs};
pub use engine::{
    Applied, ControlError, ControlRequest, Engine, EngineConfig, EngineEvent, EngineHandle, EngineReport, Layout,
    RecordingState, SamplerState,
};
pub use event::{EventDescriptor, EventKind};
pub use frame::SampleFrame;
pub use rate::CounterMode;
pub use registry::{Registry, RegistryError};
pub use sampler::{SampleError, Sampler};
pub use sensor::{Sensor, SensorDescriptor, SensorError, SENTINEL};
