//! `vmstat`-style columnar output.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::frame::SampleFrame;
use crate::sensor::SENTINEL;

pub const MIN_COLUMN_WIDTH: usize = 12;
/// Data lines between repeated headers.
pub const HEADER_EVERY: usize = 25;

pub fn column_widths(headings: &[String]) -> Vec<usize> {
    headings
        .iter()
        .map(|h| h.chars().count().max(MIN_COLUMN_WIDTH))
        .collect()
}

pub fn render_header(headings: &[String]) -> String {
    let widths = column_widths(headings);
    let mut line = String::new();
    for (i, (h, w)) in headings.iter().zip(widths).enumerate() {
        if i > 0 {
            line.push(' ');
        }
        let _ = write!(line, "{h:>w$}");
    }
    line
}

/// The data line for `frame`, preceded by a `# <label>` line when labelled.
pub fn render_frame(frame: &SampleFrame, widths: &[usize]) -> String {
    let mut out = String::new();
    if let Some(label) = &frame.label {
        let _ = writeln!(out, "# {label}");
    }
    for (i, (v, w)) in frame.values.iter().zip(widths).enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if *v == SENTINEL {
            let _ = write!(out, "{:>w$}", "-");
        } else {
            let _ = write!(out, "{v:>w$}");
        }
    }
    out
}

/// Writes frames with a header every [`HEADER_EVERY`] data lines, flushing
/// after each line.
pub struct StatRenderer<W: Write> {
    out: W,
    headings: Vec<String>,
    widths: Vec<usize>,
    since_header: usize,
}

impl<W: Write> StatRenderer<W> {
    pub fn new(out: W, headings: Vec<String>) -> Self {
        StatRenderer {
            out,
            widths: column_widths(&headings),
            headings,
            since_header: 0,
        }
    }

    /// Switches to new headings; the next frame reprints the header.
    pub fn set_headings(&mut self, headings: Vec<String>) {
        self.widths = column_widths(&headings);
        self.headings = headings;
        self.since_header = 0;
    }

    pub fn write_frame(&mut self, frame: &SampleFrame) -> io::Result<()> {
        if frame.values.len() != self.widths.len() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!(
                    "frame has {} values for {} columns",
                    frame.values.len(),
                    self.widths.len()
                ),
            ));
        }
        if self.since_header.is_multiple_of(HEADER_EVERY) {
            writeln!(self.out, "{}", render_header(&self.headings))?;
            self.since_header = 0;
        }
        writeln!(self.out, "{}", render_frame(frame, &self.widths))?;
        self.since_header += 1;
        self.out.flush()
    }

    pub fn write_note(&mut self, note: &str) -> io::Result<()> {
        writeln!(self.out, "# {note}")?;
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trio() -> Vec<String> {
        ["n2DirPrbRecv", "n2CachelinesSent", "n2CacheRolloutRmpe"]
            .map(String::from)
            .to_vec()
    }

    fn frame(values: Vec<i64>) -> SampleFrame {
        SampleFrame {
            timestamp_ms: 0,
            elapsed: 1.0,
            values,
            label: None,
        }
    }

    #[test]
    fn header_matches_reference_listing() {
        assert_eq!(
            render_header(&trio()),
            "n2DirPrbRecv n2CachelinesSent n2CacheRolloutRmpe"
        );
    }

    #[test]
    fn rows_match_reference_listing() {
        let w = column_widths(&trio());
        assert_eq!(
            render_frame(&frame(vec![41, 7357, 6689]), &w),
            "          41             7357               6689"
        );
        assert_eq!(
            render_frame(&frame(vec![258872, 944292, 72099]), &w),
            "      258872           944292              72099"
        );
    }

    #[test]
    fn minimum_width_and_specials() {
        let h = vec!["x".to_string()];
        let w = column_widths(&h);
        assert_eq!(w, vec![12]);
        assert_eq!(render_header(&h), "           x");
        assert_eq!(render_frame(&frame(vec![-200]), &w), "        -200");
        assert_eq!(render_frame(&frame(vec![SENTINEL]), &w), "           -");
        let mut labelled = frame(vec![1]);
        labelled.label = Some("checkpoint".into());
        assert_eq!(render_frame(&labelled, &w), "# checkpoint\n           1");
    }

    #[test]
    fn header_repeats_every_25_lines() {
        let mut r = StatRenderer::new(Vec::new(), vec!["x".into()]);
        for i in 0..26 {
            r.write_frame(&frame(vec![i])).unwrap();
        }
        let text = String::from_utf8(r.into_inner()).unwrap();
        let headers = text.lines().filter(|l| l.trim() == "x").count();
        assert_eq!(headers, 2);
        assert_eq!(text.lines().count(), 28);
    }

    #[test]
    fn shape_mismatch_is_refused() {
        let mut r = StatRenderer::new(Vec::new(), trio());
        assert!(r.write_frame(&frame(vec![1])).is_err());
    }

    proptest! {
        #[test]
        fn data_lines_parse_back(values in proptest::collection::vec(prop_oneof![Just(SENTINEL), -99_999_999_999i64..99_999_999_999], 3)) {
            let h = trio();
            let w = column_widths(&h);
            let line = render_frame(&frame(values.clone()), &w);
            prop_assert!(line.len() <= render_header(&h).len());
            let parsed: Vec<i64> = line
                .split_whitespace()
                .map(|t| if t == "-" { SENTINEL } else { t.parse().unwrap() })
                .collect();
            prop_assert_eq!(parsed, values);
        }
    }
}
