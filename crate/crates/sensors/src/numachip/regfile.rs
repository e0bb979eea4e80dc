use super::catalog::{backing_counters, COUNTERS_PER_INTERCONNECT};

pub const COUNTER_BITS: u32 = ccscope_core::rate::HW_COUNTER_BITS;
pub const COUNTER_MASK: u64 = (1 << COUNTER_BITS) - 1;
/// Interconnect core clock.
pub const CLOCK_HZ: f64 = 200e6;

/// Raw counters of one simulated interconnect. Every value wraps at 2^48.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterFile {
    index: usize,
    counters: [u64; COUNTERS_PER_INTERCONNECT],
    cycles: u64,
}

impl RegisterFile {
    pub fn new(index: usize) -> Self {
        RegisterFile {
            index,
            counters: [0; COUNTERS_PER_INTERCONNECT],
            cycles: 0,
        }
    }

    /// Starts every counter at `start` (masked), for exercising wrap.
    pub fn preset(index: usize, start: u64) -> Self {
        let v = start & COUNTER_MASK;
        RegisterFile {
            index,
            counters: [v; COUNTERS_PER_INTERCONNECT],
            cycles: v,
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn counter(&self, i: usize) -> u64 {
        self.counters[i]
    }

    pub fn counters(&self) -> &[u64] {
        &self.counters
    }

    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    pub fn add(&mut self, i: usize, n: u64) {
        self.counters[i] = self.counters[i].wrapping_add(n) & COUNTER_MASK;
    }

    pub fn add_cycles(&mut self, n: u64) {
        self.cycles = self.cycles.wrapping_add(n) & COUNTER_MASK;
    }

    /// Raw value of a logical event: its single counter, or the wrapped
    /// sum of its stripe set.
    pub fn logical(&self, event: usize) -> u64 {
        backing_counters(event)
            .map(|c| self.counters[c])
            .fold(0u64, |acc, v| acc.wrapping_add(v))
            & COUNTER_MASK
    }
}
