//! Websocket message schema.
//!
//! Every message is a JSON text frame with a `type` discriminator. The
//! first message on a connection is always `hello`; a new `hello` follows
//! every change of headings.

use ccscope_core::{ControlCommand, ControlRequest, IntervalMs, Layout, SampleFrame, SensorDescriptor};
use serde::{Deserialize, Serialize};

pub const SUBPROTOCOL: &str = "ccscope.v1";
pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Hello {
    pub version: u32,
    pub headings: Vec<String>,
    pub descriptions: Vec<String>,
    pub discrete: bool,
    pub interval: IntervalMs,
    /// 100% reference per heading.
    pub rates: Vec<u64>,
    pub sensors: Vec<SensorDescriptor>,
}

impl Hello {
    pub fn new(layout: &Layout, interval: IntervalMs) -> Self {
        Hello {
            version: PROTOCOL_VERSION,
            headings: layout.headings.clone(),
            descriptions: layout.descriptions.clone(),
            discrete: layout.discrete,
            interval,
            rates: layout.rate_references(),
            sensors: layout.sensors.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum ServerMessage {
    Hello(Hello),
    Batch { frames: Vec<SampleFrame> },
    IntervalChanged { interval: IntervalMs },
    Label { text: String },
    Sensors { sensors: Vec<SensorDescriptor> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum ClientMessage {
    SetInterval {
        interval: IntervalMs,
    },
    SetEvents {
        events: Vec<String>,
    },
    SetDiscrete {
        discrete: bool,
    },
    /// A file name inside the server's recordings directory.
    Record {
        name: String,
    },
    Pause,
    Resume,
    Label {
        text: String,
    },
}

impl ClientMessage {
    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// The equivalent engine request. `Record` names are resolved against
    /// `recordings_dir`; names that could escape it yield `None`.
    pub fn into_request(self, recordings_dir: &std::path::Path) -> Option<ControlRequest> {
        Some(match self {
            ClientMessage::SetInterval { interval } => ControlCommand::Interval(interval).into(),
            ClientMessage::SetEvents { events } => ControlRequest::SetEvents(events),
            ClientMessage::SetDiscrete { discrete } => ControlRequest::SetDiscrete(discrete),
            ClientMessage::Record { name } => {
                if !is_plain_file_name(&name) {
                    return None;
                }
                ControlCommand::Record(recordings_dir.join(name)).into()
            }
            ClientMessage::Pause => ControlCommand::Pause.into(),
            ClientMessage::Resume => ControlCommand::Resume.into(),
            ClientMessage::Label { text } => ControlCommand::Label(text).into(),
        })
    }
}

/// A single path component that is neither hidden nor a parent reference.
pub fn is_plain_file_name(name: &str) -> bool {
    !name.is_empty() && !name.starts_with('.') && !name.contains(['/', '\\', '\0'])
}
