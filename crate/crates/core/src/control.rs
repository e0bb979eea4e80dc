//! Line protocol of the control pipe.
//!
//! ```text
//! record <path>
//! label <text...>
//! pause
//! resume
//! interval <digits>ms
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sampling period in milliseconds, within `[1, 60000]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct IntervalMs(u32);

impl IntervalMs {
    pub const MIN: u32 = 1;
    pub const MAX: u32 = 60_000;

    pub fn new(ms: u32) -> Result<Self, CommandError> {
        if (Self::MIN..=Self::MAX).contains(&ms) {
            Ok(IntervalMs(ms))
        } else {
            Err(CommandError::IntervalOutOfRange(ms as u64))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_duration(self) -> std::time::Duration {
        std::time::Duration::from_millis(self.0 as u64)
    }
}

impl TryFrom<u32> for IntervalMs {
    type Error = CommandError;
    fn try_from(ms: u32) -> Result<Self, Self::Error> {
        IntervalMs::new(ms)
    }
}

impl From<IntervalMs> for u32 {
    fn from(i: IntervalMs) -> u32 {
        i.0
    }
}

impl fmt::Display for IntervalMs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ControlCommand {
    Record(PathBuf),
    Label(String),
    Pause,
    Resume,
    Interval(IntervalMs),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommandError {
    #[error("empty command")]
    Empty,
    #[error("unknown command {0:?}")]
    UnknownVerb(String),
    #[error("{0} requires an argument")]
    MissingArgument(&'static str),
    #[error("{0} takes no argument")]
    UnexpectedArgument(&'static str),
    #[error("interval must be written as <number>ms, got {0:?}")]
    MalformedInterval(String),
    #[error("interval {0} ms is outside [1, 60000]")]
    IntervalOutOfRange(u64),
}

impl FromStr for ControlCommand {
    type Err = CommandError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let line = line.trim_end_matches(['\n', '\r']);
        let trimmed = line.trim_start();
        if trimmed.trim_end().is_empty() {
            return Err(CommandError::Empty);
        }
        let (verb, rest) = match trimmed.find(char::is_whitespace) {
            Some(i) => (&trimmed[..i], trimmed[i..].trim()),
            None => (trimmed, ""),
        };
        match verb {
            "record" if rest.is_empty() => Err(CommandError::MissingArgument("record")),
            "record" => Ok(ControlCommand::Record(PathBuf::from(rest))),
            "label" if rest.is_empty() => Err(CommandError::MissingArgument("label")),
            "label" => Ok(ControlCommand::Label(rest.to_owned())),
            "pause" if rest.is_empty() => Ok(ControlCommand::Pause),
            "pause" => Err(CommandError::UnexpectedArgument("pause")),
            "resume" if rest.is_empty() => Ok(ControlCommand::Resume),
            "resume" => Err(CommandError::UnexpectedArgument("resume")),
            "interval" if rest.is_empty() => Err(CommandError::MissingArgument("interval")),
            "interval" => parse_interval(rest).map(ControlCommand::Interval),
            other => Err(CommandError::UnknownVerb(other.to_owned())),
        }
    }
}

/// Accepts `100ms` and `100 ms`.
fn parse_interval(arg: &str) -> Result<IntervalMs, CommandError> {
    let malformed = || CommandError::MalformedInterval(arg.to_owned());
    let digits = arg.strip_suffix("ms").ok_or_else(malformed)?.trim_end();
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }
    let ms: u64 = digits.parse().map_err(|_| CommandError::IntervalOutOfRange(u64::MAX))?;
    let ms = u32::try_from(ms).map_err(|_| CommandError::IntervalOutOfRange(ms))?;
    IntervalMs::new(ms)
}

impl fmt::Display for ControlCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlCommand::Record(p) => write!(f, "record {}", p.display()),
            ControlCommand::Label(t) => write!(f, "label {t}"),
            ControlCommand::Pause => f.write_str("pause"),
            ControlCommand::Resume => f.write_str("resume"),
            ControlCommand::Interval(i) => write!(f, "interval {i}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<ControlCommand, CommandError> {
        s.parse()
    }

    #[test]
    fn grammar() {
        assert_eq!(parse("interval 100ms"), Ok(ControlCommand::Interval(IntervalMs(100))));
        assert_eq!(
            parse("interval 100 ms\n"),
            Ok(ControlCommand::Interval(IntervalMs(100)))
        );
        assert_eq!(
            parse("label phase-2 start"),
            Ok(ControlCommand::Label("phase-2 start".into()))
        );
        assert_eq!(
            parse("record /tmp/a.json\n"),
            Ok(ControlCommand::Record("/tmp/a.json".into()))
        );
        assert_eq!(parse("pause"), Ok(ControlCommand::Pause));
        assert_eq!(parse("resume\r\n"), Ok(ControlCommand::Resume));
    }

    #[test]
    fn rejects() {
        assert_eq!(
            parse("interval 100"),
            Err(CommandError::MalformedInterval("100".into()))
        );
        assert_eq!(parse("interval ms"), Err(CommandError::MalformedInterval("ms".into())));
        assert_eq!(
            parse("interval -5ms"),
            Err(CommandError::MalformedInterval("-5ms".into()))
        );
        assert_eq!(parse("interval 0ms"), Err(CommandError::IntervalOutOfRange(0)));
        assert_eq!(parse("interval 60001ms"), Err(CommandError::IntervalOutOfRange(60001)));
        assert_eq!(
            parse("interval 99999999999ms"),
            Err(CommandError::IntervalOutOfRange(99999999999))
        );
        assert_eq!(parse("record"), Err(CommandError::MissingArgument("record")));
        assert_eq!(parse("label   "), Err(CommandError::MissingArgument("label")));
        assert_eq!(parse("pause now"), Err(CommandError::UnexpectedArgument("pause")));
        assert_eq!(parse("stop"), Err(CommandError::UnknownVerb("stop".into())));
        assert_eq!(parse(""), Err(CommandError::Empty));
        assert_eq!(parse("Pause"), Err(CommandError::UnknownVerb("Pause".into())));
    }

    #[test]
    fn interval_bounds() {
        assert!(IntervalMs::new(1).is_ok());
        assert!(IntervalMs::new(60_000).is_ok());
        assert!(IntervalMs::new(0).is_err());
        assert!(serde_json::from_str::<IntervalMs>("0").is_err());
    }

    proptest! {
        #[test]
        fn parser_is_total(line in "\\PC*") {
            let _ = parse(&line);
        }

        #[test]
        fn display_round_trips(ms in 1u32..=60_000, text in "[a-z0-9][a-z0-9 -]{0,20}[a-z0-9]") {
            for cmd in [ControlCommand::Interval(IntervalMs(ms)), ControlCommand::Label(text.clone()), ControlCommand::Pause] {
                prop_assert_eq!(parse(&cmd.to_string()), Ok(cmd));
            }
        }
    }
}
