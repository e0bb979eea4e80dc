//! Client registry and fan-out.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::ws::Utf8Bytes;
use ccscope_core::{IntervalMs, Layout};
use tokio::sync::mpsc;

use crate::protocol::{Hello, ServerMessage};

/// Encoded messages a client may have queued before it is dropped.
pub const CLIENT_QUEUE: usize = 32;

pub type ClientId = u64;

struct State {
    hello: Hello,
    hello_text: Utf8Bytes,
    clients: HashMap<ClientId, mpsc::Sender<Utf8Bytes>>,
    next_id: ClientId,
    dropped: u64,
}

/// Shared by the batcher and every connection. Holds the current `hello`
/// so late joiners see the same layout and interval as everyone else.
#[derive(Clone)]
pub struct Hub {
    state: Arc<Mutex<State>>,
}

fn encode(message: &ServerMessage) -> Utf8Bytes {
    serde_json::to_string(message)
        .expect("server messages serialize")
        .into()
}

impl Hub {
    pub fn new(layout: &Layout, interval: IntervalMs) -> Self {
        let hello = Hello::new(layout, interval);
        let hello_text = encode(&ServerMessage::Hello(hello.clone()));
        Hub {
            state: Arc::new(Mutex::new(State {
                hello,
                hello_text,
                clients: HashMap::new(),
                next_id: 0,
                dropped: 0,
            })),
        }
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Registers a client and queues the current `hello` as its first
    /// message.
    pub fn join(&self) -> (ClientId, mpsc::Receiver<Utf8Bytes>) {
        let (tx, rx) = mpsc::channel(CLIENT_QUEUE);
        let mut state = self.lock();
        let id = state.next_id;
        state.next_id += 1;
        tx.try_send(state.hello_text.clone()).expect("fresh queue has room");
        state.clients.insert(id, tx);
        (id, rx)
    }

    pub fn leave(&self, id: ClientId) {
        self.lock().clients.remove(&id);
    }

    pub fn clients(&self) -> usize {
        self.lock().clients.len()
    }

    /// Clients disconnected because their queue overflowed.
    pub fn dropped(&self) -> u64 {
        self.lock().dropped
    }

    pub fn hello(&self) -> Hello {
        self.lock().hello.clone()
    }

    pub fn set_layout(&self, layout: &Layout) {
        let mut state = self.lock();
        let interval = state.hello.interval;
        state.hello = Hello::new(layout, interval);
        state.hello_text = encode(&ServerMessage::Hello(state.hello.clone()));
        let text = state.hello_text.clone();
        send_locked(&mut state, text);
    }

    pub fn set_interval(&self, interval: IntervalMs) {
        let mut state = self.lock();
        state.hello.interval = interval;
        state.hello_text = encode(&ServerMessage::Hello(state.hello.clone()));
        send_locked(&mut state, encode(&ServerMessage::IntervalChanged { interval }));
    }

    /// Encodes once and queues for every client. A client whose queue is
    /// full is removed, which closes its connection.
    pub fn broadcast(&self, message: &ServerMessage) {
        let text = encode(message);
        send_locked(&mut self.lock(), text);
    }
}

fn send_locked(state: &mut State, text: Utf8Bytes) {
    let mut dropped = 0;
    state.clients.retain(|id, tx| match tx.try_send(text.clone()) {
        Ok(()) => true,
        Err(mpsc::error::TrySendError::Full(_)) => {
            log::warn!("client {id} is not keeping up; disconnecting");
            dropped += 1;
            false
        }
        Err(mpsc::error::TrySendError::Closed(_)) => false,
    });
    state.dropped += dropped;
}
