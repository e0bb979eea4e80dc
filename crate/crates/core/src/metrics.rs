//! Derived views over captured rates.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct WaitPercent {
    /// Percent of the window each interconnect spent waiting, in `[0, 100]`.
    pub per_interconnect: Vec<f64>,
    /// Sum of the per-interconnect percentages; at most `100 * n`.
    pub total: f64,
    /// How many inputs exceeded the cycles available in the window.
    pub clamped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MetricsError {
    #[error("window must be positive, got {0} s")]
    BadWindow(f64),
    #[error("clock frequency must be positive, got {0} Hz")]
    BadClock(f64),
}

/// Share of clock cycles spent in wait states, per interconnect and summed.
///
/// `wait_cycles[n]` is the number of wait cycles interconnect `n` counted
/// over `window_s` seconds. A counter cannot exceed the cycles in its
/// window, so larger inputs are clamped to 100%.
pub fn wait_cycle_percent(wait_cycles: &[f64], window_s: f64, clock_hz: f64) -> Result<WaitPercent, MetricsError> {
    if window_s.is_nan() || window_s <= 0.0 {
        return Err(MetricsError::BadWindow(window_s));
    }
    if clock_hz.is_nan() || clock_hz <= 0.0 {
        return Err(MetricsError::BadClock(clock_hz));
    }
    let capacity = clock_hz * window_s;
    let mut clamped = 0;
    let per_interconnect: Vec<f64> = wait_cycles
        .iter()
        .map(|&w| {
            let pct = 100.0 * w.max(0.0) / capacity;
            if pct > 100.0 {
                clamped += 1;
                log::warn!("wait cycles {w} exceed the {capacity} cycles in the window; clamping");
                100.0
            } else {
                pct
            }
        })
        .collect();
    let total = per_interconnect.iter().sum();
    Ok(WaitPercent {
        per_interconnect,
        total,
        clamped,
    })
}

/// Same as [`wait_cycle_percent`] for inputs that are already per-second rates.
pub fn wait_percent_from_rates(rates: &[i64], clock_hz: f64) -> Result<WaitPercent, MetricsError> {
    let cycles: Vec<f64> = rates.iter().map(|&r| r as f64).collect();
    wait_cycle_percent(&cycles, 1.0, clock_hz)
}
