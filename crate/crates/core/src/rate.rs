//! Delta and rate arithmetic on raw counter snapshots.

use thiserror::Error;

use crate::sensor::SENTINEL;

/// How consecutive raw readings of a counter relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterMode {
    /// Unsigned hardware counter of the given width. A reading lower than
    /// its predecessor is a single wrap.
    Wrapping { bits: u32 },
    /// Signed software value that may legitimately decrease.
    Signed,
}

/// Width of the simulated interconnect's counters.
pub const HW_COUNTER_BITS: u32 = 48;

impl CounterMode {
    pub const HARDWARE: CounterMode = CounterMode::Wrapping { bits: HW_COUNTER_BITS };
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RateError {
    #[error("sampling window must be positive, got {0} s")]
    NonPositiveElapsed(f64),
    #[error("cycle counter did not advance; window too short to normalize")]
    ZeroCycles,
    #[error("clock frequency must be positive, got {0} Hz")]
    BadClock(f64),
}

/// Difference between two raw readings, honoring wrap for hardware counters.
///
/// Either side being [`SENTINEL`] yields [`SENTINEL`].
#[inline]
pub fn wrap_aware_delta(prev: i64, cur: i64, mode: CounterMode) -> i64 {
    if prev == SENTINEL || cur == SENTINEL {
        return SENTINEL;
    }
    match mode {
        CounterMode::Signed => cur.saturating_sub(prev),
        CounterMode::Wrapping { bits } => {
            let mask = (1i64 << bits) - 1;
            let delta = (cur & mask) - (prev & mask);
            if delta < 0 {
                delta + (1i64 << bits)
            } else {
                delta
            }
        }
    }
}

/// `delta / elapsed`, rounded to nearest with ties away from zero.
#[inline]
pub fn to_rate(delta: i64, elapsed: f64) -> i64 {
    if delta == SENTINEL {
        return SENTINEL;
    }
    let rate = (delta as f64 / elapsed).round();
    // `as` saturates; keep clear of the sentinel value.
    (rate as i64).max(SENTINEL + 1)
}

/// Fills `out[i]` with the per-second rate between `prev[i]` and `cur[i]`.
///
/// # Panics
///
/// If the three slices differ in length.
pub fn compute_rates(
    prev: &[i64],
    cur: &[i64],
    elapsed: f64,
    mode: CounterMode,
    out: &mut [i64],
) -> Result<(), RateError> {
    assert_eq!(prev.len(), cur.len(), "raw snapshot length mismatch");
    assert_eq!(prev.len(), out.len(), "rate buffer length mismatch");
    if elapsed.is_nan() || elapsed <= 0.0 {
        return Err(RateError::NonPositiveElapsed(elapsed));
    }
    for ((p, c), o) in prev.iter().zip(cur).zip(out.iter_mut()) {
        *o = to_rate(wrap_aware_delta(*p, *c, mode), elapsed);
    }
    Ok(())
}

/// Window length implied by a cycle-counter delta.
pub fn elapsed_from_cycles(cycles_delta: u64, clock_hz: f64) -> Result<f64, RateError> {
    if clock_hz.is_nan() || clock_hz <= 0.0 {
        return Err(RateError::BadClock(clock_hz));
    }
    if cycles_delta == 0 {
        return Err(RateError::ZeroCycles);
    }
    Ok(cycles_delta as f64 / clock_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn oracle_delta(prev: i64, cur: i64, bits: u32) -> i64 {
        let modulus = 1i128 << bits;
        ((cur as i128 - prev as i128).rem_euclid(modulus)) as i64
    }

    #[test]
    fn plain_delta() {
        let mut out = [0];
        compute_rates(&[1000], &[1100], 1.0, CounterMode::HARDWARE, &mut out).unwrap();
        assert_eq!(out, [100]);
    }

    #[test]
    fn software_counter_goes_negative() {
        let mut out = [0];
        compute_rates(&[500], &[300], 1.0, CounterMode::Signed, &mut out).unwrap();
        assert_eq!(out, [-200]);
    }

    #[test]
    fn hardware_counter_wraps_once() {
        let prev = (1i64 << 48) - 10;
        assert_eq!(oracle_delta(prev, 40, 48), 50);
        let mut out = [0];
        compute_rates(&[prev], &[40], 1.0, CounterMode::HARDWARE, &mut out).unwrap();
        assert_eq!(out, [50]);
    }

    #[test]
    fn rounding_is_ties_away_from_zero() {
        assert_eq!(to_rate(5, 2.0), 3);
        assert_eq!(to_rate(-5, 2.0), -3);
        assert_eq!(to_rate(4, 3.0), 1);
    }

    #[test]
    fn non_positive_window_is_rejected() {
        let mut out = [0];
        let err = compute_rates(&[0], &[1], 0.0, CounterMode::Signed, &mut out).unwrap_err();
        assert_eq!(err, RateError::NonPositiveElapsed(0.0));
        assert!(compute_rates(&[0], &[1], -1.0, CounterMode::Signed, &mut out).is_err());
    }

    #[test]
    #[should_panic(expected = "length mismatch")]
    fn length_mismatch_is_a_fault() {
        let mut out = [0, 0];
        let _ = compute_rates(&[0, 1], &[1], 1.0, CounterMode::Signed, &mut out);
    }

    #[test]
    fn sentinel_propagates() {
        assert_eq!(wrap_aware_delta(SENTINEL, 5, CounterMode::Signed), SENTINEL);
        assert_eq!(to_rate(SENTINEL, 1.0), SENTINEL);
    }

    #[test]
    fn cycles_to_seconds() {
        assert_eq!(elapsed_from_cycles(200_000_000, 200e6).unwrap(), 1.0);
        assert_eq!(elapsed_from_cycles(100_000_000, 200e6).unwrap(), 0.5);
        assert!((elapsed_from_cycles(20_000_000, 200e6).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(elapsed_from_cycles(0, 200e6), Err(RateError::ZeroCycles));
        assert!(elapsed_from_cycles(1, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn wrap_delta_matches_modular_oracle(prev in 0i64..(1 << 48), cur in 0i64..(1 << 48)) {
            prop_assert_eq!(wrap_aware_delta(prev, cur, CounterMode::HARDWARE), oracle_delta(prev, cur, 48));
        }

        #[test]
        fn increasing_counters_never_go_negative(prev in 0i64..(1 << 48), step in 0i64..(1 << 40), ms in 1u32..60_000) {
            let cur = (prev + step) & ((1 << 48) - 1);
            let rate = to_rate(wrap_aware_delta(prev, cur, CounterMode::HARDWARE), ms as f64 / 1000.0);
            prop_assert!(rate >= 0);
        }

        #[test]
        fn decreasing_software_counter_has_exact_magnitude(cur in -1_000_000_000i64..1_000_000_000, drop in 0i64..1_000_000_000) {
            let prev = cur + drop;
            prop_assert_eq!(to_rate(wrap_aware_delta(prev, cur, CounterMode::Signed), 1.0), -drop);
        }
    }
}
