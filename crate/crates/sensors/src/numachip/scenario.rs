//! Scripted workloads that drive the simulated register files.
//!
//! A scenario is a list of phases, each holding per-interconnect target
//! rates for any subset of catalog events. The last phase holds for as
//! long as the simulation runs. The JSON form is
//!
//! ```json
//! {"name": "demo", "phases": [
//!   {"duration_s": 10, "jitter": 0.01,
//!    "rates": {"n2CachelinesSent": [1e6, 2e6]}}
//! ]}
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::catalog::{self, backing_counters, CATALOG, COUNTERS_PER_INTERCONNECT, CYCLES};
use super::regfile::{RegisterFile, CLOCK_HZ};

pub const MAX_JITTER: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub phases: Vec<Phase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub duration_s: f64,
    /// Events per second, one entry per interconnect. Missing events and
    /// missing trailing interconnects are zero.
    #[serde(default)]
    pub rates: BTreeMap<String, Vec<f64>>,
    /// Multiplicative noise amplitude in `[0, 0.5]`.
    #[serde(default)]
    pub jitter: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("unknown scenario {name:?}; available: {}", available.join(", "))]
    UnknownBuiltin { name: String, available: Vec<&'static str> },
    #[error("scenario {0:?} has no phases")]
    NoPhases(String),
    #[error("phase {phase}: duration must be positive, got {value}")]
    BadDuration { phase: usize, value: f64 },
    #[error("phase {phase}: jitter must be within [0, 0.5], got {value}")]
    BadJitter { phase: usize, value: f64 },
    #[error("phase {phase}: unknown event {name:?}")]
    UnknownEvent { phase: usize, name: String },
    #[error("phase {phase}: n2Cycles follows the interconnect clock and cannot be scripted")]
    ScriptedClock { phase: usize },
    #[error("phase {phase}: {name} rate must be finite and non-negative, got {value}")]
    BadRate { phase: usize, name: String, value: f64 },
    #[error("phase {phase}: {name} on interconnect {interconnect} may reach {value:.3e} cycles/s, beyond the {CLOCK_HZ:.1e} Hz clock")]
    ExceedsClock {
        phase: usize,
        name: String,
        interconnect: usize,
        value: f64,
    },
    #[error("phase {phase}: {name} lists {len} interconnects but only {sources} exist")]
    TooManyInterconnects {
        phase: usize,
        name: String,
        len: usize,
        sources: usize,
    },
    #[error("scenario {name:?} needs at least {needed} interconnects, have {sources}")]
    TooFewInterconnects {
        name: String,
        needed: usize,
        sources: usize,
    },
    #[error("reading scenario: {0}")]
    Io(String),
    #[error("parsing scenario: {0}")]
    Parse(String),
}

pub const BUILTIN: [&str; 4] = ["idle", "balanced", "imbalanced-stack", "patched-stack"];

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    /// A builtin name, or else a path to a scenario file.
    pub fn select(selector: &str, sources: usize) -> Result<Self, ScenarioError> {
        if BUILTIN.contains(&selector) {
            return Self::builtin(selector, sources);
        }
        if Path::new(selector).is_file() {
            return Self::load(selector);
        }
        Err(ScenarioError::UnknownBuiltin {
            name: selector.to_owned(),
            available: BUILTIN.to_vec(),
        })
    }

    pub fn builtin(name: &str, sources: usize) -> Result<Self, ScenarioError> {
        let scenario = match name {
            "idle" => Scenario {
                name: name.into(),
                phases: vec![Phase {
                    duration_s: 1.0,
                    rates: BTreeMap::new(),
                    jitter: 0.0,
                }],
            },
            "balanced" => balanced(sources),
            "imbalanced-stack" => {
                if sources < 2 {
                    return Err(ScenarioError::TooFewInterconnects {
                        name: name.into(),
                        needed: 2,
                        sources,
                    });
                }
                imbalanced_stack(sources)
            }
            "patched-stack" => patched_stack(sources),
            other => {
                return Err(ScenarioError::UnknownBuiltin {
                    name: other.into(),
                    available: BUILTIN.to_vec(),
                })
            }
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.phases.is_empty() {
            return Err(ScenarioError::NoPhases(self.name.clone()));
        }
        for (p, phase) in self.phases.iter().enumerate() {
            if !(phase.duration_s > 0.0 && phase.duration_s.is_finite()) {
                return Err(ScenarioError::BadDuration {
                    phase: p,
                    value: phase.duration_s,
                });
            }
            if !(0.0..=MAX_JITTER).contains(&phase.jitter) {
                return Err(ScenarioError::BadJitter {
                    phase: p,
                    value: phase.jitter,
                });
            }
            for (name, rates) in &phase.rates {
                let event = catalog::find(name).ok_or_else(|| ScenarioError::UnknownEvent {
                    phase: p,
                    name: name.clone(),
                })?;
                if event == CYCLES {
                    return Err(ScenarioError::ScriptedClock { phase: p });
                }
                for (n, &rate) in rates.iter().enumerate() {
                    if !(rate >= 0.0 && rate.is_finite()) {
                        return Err(ScenarioError::BadRate {
                            phase: p,
                            name: name.clone(),
                            value: rate,
                        });
                    }
                    let peak = rate * (1.0 + phase.jitter);
                    if CATALOG[event].kind.is_cycle_bounded() && peak > CLOCK_HZ {
                        return Err(ScenarioError::ExceedsClock {
                            phase: p,
                            name: name.clone(),
                            interconnect: n,
                            value: peak,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Equal shares of `total` over `n` interconnects.
fn spread(total: f64, n: usize) -> Vec<f64> {
    vec![total / n as f64; n]
}

fn phase(duration_s: f64, jitter: f64, rates: impl IntoIterator<Item = (&'static str, Vec<f64>)>) -> Phase {
    Phase {
        duration_s,
        jitter,
        rates: rates.into_iter().map(|(k, v)| (k.to_owned(), v)).collect(),
    }
}

/// Every event active on every interconnect at plausible rates.
fn balanced(sources: usize) -> Scenario {
    let mut rates = BTreeMap::new();
    for (i, entry) in CATALOG.iter().enumerate().skip(1) {
        let base = match entry.kind {
            ccscope_core::EventKind::Counter => 2.0e5 * (1 + i % 7) as f64,
            ccscope_core::EventKind::OccupancyCycles if entry.mnemonic.ends_with("Wait") => 2.0e6,
            ccscope_core::EventKind::OccupancyCycles => 4.0e7,
            ccscope_core::EventKind::ContextLevel if entry.mnemonic.contains("Half") => 2.0e7,
            ccscope_core::EventKind::ContextLevel => 1.5e8,
        };
        let per_board = (0..sources).map(|b| base * (1.0 + 0.05 * (b % 5) as f64)).collect();
        rates.insert(entry.mnemonic.to_owned(), per_board);
    }
    Scenario {
        name: "balanced".into(),
        phases: vec![Phase {
            duration_s: 60.0,
            rates,
            jitter: 0.05,
        }],
    }
}

/// Remote stack traffic concentrated on interconnect 1: it spends about 97%
/// of its cycles waiting on SIU to RMPE requests, interconnect 0 about 2.5%.
fn imbalanced_stack(sources: usize) -> Scenario {
    let board = |b0: f64, b1: f64, rest: f64| -> Vec<f64> {
        (0..sources)
            .map(|b| match b {
                0 => b0,
                1 => b1,
                _ => rest,
            })
            .collect()
    };
    Scenario {
        name: "imbalanced-stack".into(),
        phases: vec![phase(
            600.0,
            0.01,
            [
                ("n2SiuRmpeReqWait", board(0.5e7, 1.94e8, 0.0)),
                ("n2SiuRmpeReq", board(1.2e6, 5.5e6, 2.0e4)),
                ("n2SiuRmpeReqAcked", board(2.4e6, 1.1e7, 4.0e4)),
                ("n2CachelinesSent", board(1.5e6, 6.0e6, 2.0e5)),
                ("n2CachelinesRecv", board(6.0e6, 1.5e6, 2.0e5)),
                ("n2RdBlkRecv", board(1.2e6, 5.2e6, 1.5e5)),
                ("n2RdBlkSent", board(5.2e6, 1.2e6, 1.5e5)),
                ("n2DirPrbRecv", board(2.6e5, 9.4e5, 4.0e4)),
                ("n2PrbRespSent", board(2.6e5, 9.4e5, 4.0e4)),
                ("n2CacheRolloutRmpe", board(7.0e4, 2.2e5, 6.0e3)),
                ("n2CacheReadHitRmpe", board(4.0e5, 1.6e6, 3.0e4)),
                ("n2RmpeHalfCtxInUse", board(2.0e7, 1.9e8, 0.0)),
            ],
        )],
    }
}

/// Stack pages placed locally: a burst of transfers during start-up, then
/// near-idle interconnects with about 2% total wait.
fn patched_stack(sources: usize) -> Scenario {
    Scenario {
        name: "patched-stack".into(),
        phases: vec![
            phase(
                10.0,
                0.01,
                [
                    ("n2CachelinesSent", spread(6.0e6, sources)),
                    ("n2CachelinesRecv", spread(6.0e6, sources)),
                    ("n2RdBlkRecv", spread(5.0e6, sources)),
                    ("n2SiuRmpeReq", spread(4.5e6, sources)),
                    ("n2SiuRmpeReqWait", spread(3.0e7, sources)),
                ],
            ),
            phase(
                600.0,
                0.01,
                [
                    ("n2CachelinesSent", spread(3.80e5, sources)),
                    ("n2CachelinesRecv", spread(3.80e5, sources)),
                    ("n2RdBlkRecv", spread(3.2e5, sources)),
                    ("n2SiuRmpeReq", spread(2.9e5, sources)),
                    ("n2SiuRmpeReqWait", spread(4.0e6, sources)),
                    ("n2PartialSent", spread(1.9e5, sources)),
                ],
            ),
        ],
    }
}

/// One event on one interconnect; striped events spread `rate` evenly
/// over their backing counters.
struct Target {
    interconnect: usize,
    counters: std::ops::Range<usize>,
    rate: f64,
}

struct CompiledPhase {
    duration_s: f64,
    jitter: f64,
    targets: Vec<Target>,
}

/// Position within a scenario plus the noise source and the fractional
/// remainders that keep long runs of short steps exact.
pub struct ScenarioDriver {
    phases: Vec<CompiledPhase>,
    phase: usize,
    in_phase: f64,
    elapsed: f64,
    rng: ChaCha8Rng,
    residual: Vec<[f64; COUNTERS_PER_INTERCONNECT]>,
    cycle_residual: Vec<f64>,
}

impl ScenarioDriver {
    pub fn new(scenario: &Scenario, sources: usize, seed: u64) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let mut phases = Vec::with_capacity(scenario.phases.len());
        for (p, phase) in scenario.phases.iter().enumerate() {
            let mut targets = Vec::new();
            for (name, rates) in &phase.rates {
                let event = catalog::find(name).expect("validated");
                if rates.len() > sources && rates[sources..].iter().any(|&r| r != 0.0) {
                    return Err(ScenarioError::TooManyInterconnects {
                        phase: p,
                        name: name.clone(),
                        len: rates.len(),
                        sources,
                    });
                }
                let counters = backing_counters(event);
                let share = counters.len() as f64;
                for (interconnect, &rate) in rates.iter().enumerate().take(sources) {
                    if rate == 0.0 {
                        continue;
                    }
                    targets.push(Target {
                        interconnect,
                        counters: counters.clone(),
                        rate: rate / share,
                    });
                }
            }
            phases.push(CompiledPhase {
                duration_s: phase.duration_s,
                jitter: phase.jitter,
                targets,
            });
        }
        Ok(ScenarioDriver {
            phases,
            phase: 0,
            in_phase: 0.0,
            elapsed: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            residual: vec![[0.0; COUNTERS_PER_INTERCONNECT]; sources],
            cycle_residual: vec![0.0; sources],
        })
    }

    /// Simulated seconds since the start.
    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    /// Moves the register files forward by `dt` simulated seconds.
    pub fn advance(&mut self, files: &mut [RegisterFile], dt: f64) {
        if dt.is_nan() || dt <= 0.0 {
            return;
        }
        for (file, residual) in files.iter_mut().zip(self.cycle_residual.iter_mut()) {
            let exact = CLOCK_HZ * dt + *residual;
            let inc = exact.round().max(0.0);
            *residual = exact - inc;
            file.add_cycles(inc as u64);
            file.add(CYCLES, inc as u64);
        }
        let mut remaining = dt;
        while remaining > 0.0 {
            let last = self.phase + 1 == self.phases.len();
            let phase = &self.phases[self.phase];
            let span = if last {
                remaining
            } else {
                remaining.min(phase.duration_s - self.in_phase)
            };
            for t in &phase.targets {
                let noise = if phase.jitter > 0.0 {
                    // 32 bits of resolution is plenty for noise.
                    let u = self.rng.next_u32() as f64 / u32::MAX as f64;
                    1.0 + phase.jitter * (2.0 * u - 1.0)
                } else {
                    1.0
                };
                let step = t.rate * span * noise;
                let residual = &mut self.residual[t.interconnect];
                let file = &mut files[t.interconnect];
                for c in t.counters.clone() {
                    let exact = step + residual[c];
                    // Round half up; negative totals saturate to zero.
                    let inc = (exact + 0.5) as u64;
                    residual[c] = exact - inc as f64;
                    file.add(c, inc);
                }
            }
            self.in_phase += span;
            remaining -= span;
            if !last && self.in_phase >= phase.duration_s - 1e-12 {
                self.phase += 1;
                self.in_phase = 0.0;
            }
        }
        self.elapsed += dt;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(name: &str, rates: Vec<f64>, jitter: f64) -> Scenario {
        Scenario {
            name: "t".into(),
            phases: vec![Phase {
                duration_s: 10.0,
                rates: [(name.to_owned(), rates)].into_iter().collect(),
                jitter,
            }],
        }
    }

    #[test]
    fn one_second_step() {
        let s = single("n2CachelinesSent", vec![100.0], 0.0);
        let mut files = vec![RegisterFile::new(0)];
        let mut d = ScenarioDriver::new(&s, 1, 1).unwrap();
        d.advance(&mut files, 1.0);
        let i = catalog::find("n2CachelinesSent").unwrap();
        assert_eq!(files[0].counter(i), 100);
        assert_eq!(files[0].cycles(), 200_000_000);
        assert_eq!(files[0].counter(CYCLES), 200_000_000);
    }

    #[test]
    fn thousand_millisecond_steps() {
        // Oracle: the exact integral of 100/s over 1000 steps of 1 ms.
        let oracle: f64 = (0..1000).map(|_| 100.0 * 0.001).sum();
        let s = single("n2CachelinesSent", vec![100.0], 0.0);
        let mut files = vec![RegisterFile::new(0)];
        let mut d = ScenarioDriver::new(&s, 1, 1).unwrap();
        for _ in 0..1000 {
            d.advance(&mut files, 0.001);
        }
        let got = files[0].counter(catalog::find("n2CachelinesSent").unwrap()) as f64;
        assert!((got - oracle).abs() <= 1.0, "{got} vs {oracle}");
        assert_eq!(files[0].cycles(), 200_000_000);
    }

    #[test]
    fn phases_split_steps() {
        let mut s = single("n2DirPrbRecv", vec![10.0], 0.0);
        s.phases[0].duration_s = 1.5;
        s.phases.push(phase(1.0, 0.0, [("n2DirPrbRecv", vec![1000.0])]));
        let mut files = vec![RegisterFile::new(0)];
        let mut d = ScenarioDriver::new(&s, 1, 1).unwrap();
        d.advance(&mut files, 1.0);
        d.advance(&mut files, 1.0);
        // 1.5 s at 10/s then 0.5 s at 1000/s; the last phase then holds.
        assert_eq!(files[0].counter(catalog::find("n2DirPrbRecv").unwrap()), 515);
        assert_eq!(d.phase(), 1);
        d.advance(&mut files, 10.0);
        assert_eq!(files[0].counter(catalog::find("n2DirPrbRecv").unwrap()), 10_515);
    }

    #[test]
    fn striped_rates_are_shared_across_stripes() {
        let s = single("n2TagAccess", vec![800.0], 0.0);
        let mut files = vec![RegisterFile::new(0)];
        let mut d = ScenarioDriver::new(&s, 1, 1).unwrap();
        d.advance(&mut files, 1.0);
        let e = catalog::find("n2TagAccess").unwrap();
        for c in backing_counters(e) {
            assert_eq!(files[0].counter(c), 100);
        }
        assert_eq!(files[0].logical(e), 800);
    }

    #[test]
    fn validation() {
        assert!(matches!(
            single("n2Bogus", vec![1.0], 0.0).validate(),
            Err(ScenarioError::UnknownEvent { .. })
        ));
        assert!(matches!(
            single("n2Cycles", vec![1.0], 0.0).validate(),
            Err(ScenarioError::ScriptedClock { .. })
        ));
        assert!(matches!(
            single("n2DirPrbRecv", vec![-1.0], 0.0).validate(),
            Err(ScenarioError::BadRate { .. })
        ));
        assert!(matches!(
            single("n2DirPrbRecv", vec![1.0], 0.6).validate(),
            Err(ScenarioError::BadJitter { .. })
        ));
        assert!(matches!(
            single("n2SiuRmpeReqWait", vec![1.95e8], 0.05).validate(),
            Err(ScenarioError::ExceedsClock { .. })
        ));
        // Traffic counters are not bounded by the clock.
        assert!(single("n2DirPrbRecv", vec![5e8], 0.0).validate().is_ok());
        let mut s = single("n2DirPrbRecv", vec![1.0], 0.0);
        s.phases[0].duration_s = 0.0;
        assert!(matches!(s.validate(), Err(ScenarioError::BadDuration { .. })));
        s.phases.clear();
        assert!(matches!(s.validate(), Err(ScenarioError::NoPhases(_))));
        assert!(matches!(
            ScenarioDriver::new(&single("n2DirPrbRecv", vec![1.0, 2.0], 0.0), 1, 0),
            Err(ScenarioError::TooManyInterconnects { .. })
        ));
    }

    #[test]
    fn builtins_validate_and_unknown_lists_names() {
        for name in BUILTIN {
            Scenario::builtin(name, 6).unwrap();
        }
        let err = Scenario::builtin("nope", 6).unwrap_err();
        assert!(
            err.to_string()
                .contains("idle, balanced, imbalanced-stack, patched-stack"),
            "{err}"
        );
        assert!(Scenario::builtin("imbalanced-stack", 1).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = Scenario::builtin("patched-stack", 6).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(Scenario::from_json(&text).unwrap(), s);
        let minimal = r#"{"name":"m","phases":[{"duration_s":1,"rates":{"n2DirPrbRecv":[5]}}]}"#;
        assert_eq!(Scenario::from_json(minimal).unwrap().phases[0].jitter, 0.0);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let s = Scenario::builtin("balanced", 6).unwrap();
        let run = |seed| {
            let mut files: Vec<_> = (0..6).map(RegisterFile::new).collect();
            let mut d = ScenarioDriver::new(&s, 6, seed).unwrap();
            for _ in 0..50 {
                d.advance(&mut files, 0.01);
            }
            files
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }
}
