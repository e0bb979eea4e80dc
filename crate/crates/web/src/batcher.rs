//! Collects frames from the engine bus and releases them in batches.

use std::time::Duration;

use ccscope_core::{EngineEvent, SampleFrame};
use tokio::sync::broadcast::{self, error::RecvError};
use tokio::time::{self, MissedTickBehavior};

use crate::hub::Hub;
use crate::protocol::ServerMessage;

pub const BATCH_WINDOW: Duration = Duration::from_millis(400);

/// Runs until the engine bus closes. Frames are flushed before any layout
/// change so a batch never mixes layouts; empty windows send nothing.
pub async fn run(hub: Hub, mut events: broadcast::Receiver<EngineEvent>) {
    let mut ticker = time::interval_at(time::Instant::now() + BATCH_WINDOW, BATCH_WINDOW);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let mut pending: Vec<SampleFrame> = Vec::new();
    loop {
        tokio::select! {
            event = events.recv() => match event {
                Ok(EngineEvent::Frame(frame)) => pending.push((*frame).clone()),
                Ok(EngineEvent::Layout(layout)) => {
                    flush(&hub, &mut pending);
                    hub.set_layout(&layout);
                }
                Ok(EngineEvent::IntervalChanged(interval)) => hub.set_interval(interval),
                Ok(EngineEvent::Label(text)) => hub.broadcast(&ServerMessage::Label { text }),
                Err(RecvError::Lagged(n)) => log::warn!("live view fell behind; {n} events lost"),
                Err(RecvError::Closed) => break,
            },
            _ = ticker.tick() => flush(&hub, &mut pending),
        }
    }
    flush(&hub, &mut pending);
}

fn flush(hub: &Hub, pending: &mut Vec<SampleFrame>) {
    if !pending.is_empty() {
        hub.broadcast(&ServerMessage::Batch {
            frames: std::mem::take(pending),
        });
    }
}
