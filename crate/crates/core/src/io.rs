//! CSV formats for price series, Hurst tracks, signal timelines,
//! fluctuation-curve dumps, and crash reports.
//!
//! Price series: header `date,close`, one row per session in session order.
//! Lines starting with `#` are comments and blank lines are ignored. Series
//! values are written in shortest round-trip form so fixtures reload exactly.
//!
//! Hurst tracks: header `session,h_loc,d_loc,ma5,ma21,r_squared,status`,
//! values rounded to 10 significant digits, undefined values left empty.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::dfa::FluctuationCurve;
use crate::error::{HlocError, Result};
use crate::series::PriceSeries;
use crate::signals::{CrashEvent, SignalVerdict, SlopeCorrectionModel};
use crate::track::{EntryStatus, HurstTrack, TrackEntry};

pub const SERIES_HEADER: [&str; 2] = ["date", "close"];
pub const TRACK_HEADER: [&str; 7] = ["session", "h_loc", "d_loc", "ma5", "ma21", "r_squared", "status"];
pub const SIGNAL_HEADER: [&str; 6] = ["session", "cond1", "cond2", "cond3", "cond4", "verdict"];
pub const CURVE_HEADER: [&str; 4] = ["session", "tau", "ln_tau", "ln_f2"];
pub const CRASH_HEADER: [&str; 7] = [
    "rupture_session",
    "rupture_date",
    "initial_3session_drop",
    "total_drop",
    "duration",
    "is_crash",
    "hloc_slope",
];

const DATE_FORMAT: &str = "%Y-%m-%d";

/// Rounds to 10 significant digits and prints the shortest decimal form.
pub fn format_sig(v: f64) -> String {
    if !v.is_finite() {
        return String::new();
    }
    let rounded: f64 = format!("{v:.9e}").parse().unwrap_or(v);
    format!("{rounded}")
}

fn opt_sig(v: Option<f64>) -> String {
    v.map(format_sig).unwrap_or_default()
}

/// A non-blank, non-comment line split on commas, with its 1-based line number.
struct Row {
    line: u64,
    fields: Vec<String>,
}

impl Row {
    fn get(&self, idx: usize) -> &str {
        self.fields.get(idx).map(String::as_str).unwrap_or("")
    }
}

fn rows<R: Read>(input: R) -> impl Iterator<Item = Result<Row>> {
    BufReader::new(input)
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(HlocError::from(e))),
            };
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                return None;
            }
            Some(Ok(Row {
                line: i as u64 + 1,
                fields: trimmed.split(',').map(|f| f.trim().to_string()).collect(),
            }))
        })
}

/// Consumes the first row, which must match `header`.
fn expect_header(rows: &mut impl Iterator<Item = Result<Row>>, header: &[&str]) -> Result<()> {
    let row = match rows.next() {
        Some(r) => r?,
        None => return Err(HlocError::EmptyInput),
    };
    if row.fields != header {
        return Err(HlocError::Parse {
            line: row.line,
            message: format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                row.fields.join(",")
            ),
        });
    }
    Ok(())
}

fn expect_width(row: &Row, width: usize) -> Result<()> {
    if row.fields.len() != width {
        return Err(HlocError::Parse {
            line: row.line,
            message: format!("expected {width} fields, found {}", row.fields.len()),
        });
    }
    Ok(())
}

fn parse_f64(s: &str, line: u64, name: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| HlocError::Parse {
        line,
        message: format!("cannot parse {name} `{s}`"),
    })
}

fn parse_opt_f64(s: &str, line: u64, name: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(s, line, name).map(Some)
    }
}

pub fn read_series<R: Read>(input: R) -> Result<PriceSeries> {
    let mut rows = rows(input);
    expect_header(&mut rows, &SERIES_HEADER)?;

    let mut closes = Vec::new();
    let mut dates = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.line;
        expect_width(&row, SERIES_HEADER.len())?;
        let date = match row.get(0) {
            "" => None,
            s => Some(NaiveDate::parse_from_str(s, DATE_FORMAT).map_err(|e| HlocError::Parse {
                line,
                message: format!("invalid date `{s}`: {e}"),
            })?),
        };
        let close = parse_f64(row.get(1), line, "close")?;
        if !(close.is_finite() && close > 0.0) {
            return Err(HlocError::Validation {
                line,
                message: format!("close must be finite and positive, got {close}"),
            });
        }
        dates.push(date);
        closes.push(close);
    }
    if closes.is_empty() {
        return Err(HlocError::EmptyInput);
    }
    PriceSeries::with_dates(closes, dates)
}

pub fn read_series_path(path: &Path) -> Result<PriceSeries> {
    read_series(File::open(path)?)
}

/// Writes a series with optional `# key: value` metadata lines before the
/// header.
pub fn write_series<W: Write>(series: &PriceSeries, metadata: &[(&str, String)], out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    for (k, v) in metadata {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "{}", SERIES_HEADER.join(","))?;
    for (close, date) in series.closes().iter().zip(series.dates()) {
        let date = date.map(|d| d.format(DATE_FORMAT).to_string()).unwrap_or_default();
        writeln!(out, "{date},{close}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_series_path(series: &PriceSeries, metadata: &[(&str, String)], path: &Path) -> Result<()> {
    write_series(series, metadata, File::create(path)?)
}

pub fn write_track<W: Write>(track: &HurstTrack, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{}", TRACK_HEADER.join(","))?;
    for (i, e) in track.entries().iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.session,
            opt_sig(e.h_loc),
            opt_sig(e.d_loc()),
            opt_sig(track.ma5()[i]),
            opt_sig(track.ma21()[i]),
            opt_sig(e.r_squared),
            e.status().as_str()
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_track_path(track: &HurstTrack, path: &Path) -> Result<()> {
    write_track(track, File::create(path)?)
}

/// Reads a track file, keeping the stored moving averages.
pub fn read_track<R: Read>(input: R) -> Result<HurstTrack> {
    let mut rows = rows(input);
    expect_header(&mut rows, &TRACK_HEADER)?;

    let mut entries = Vec::new();
    let mut ma5 = Vec::new();
    let mut ma21 = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.line;
        expect_width(&row, TRACK_HEADER.len())?;
        let session: usize = row.get(0).parse().map_err(|_| HlocError::Parse {
            line,
            message: format!("invalid session `{}`", row.get(0)),
        })?;
        let h_loc = parse_opt_f64(row.get(1), line, "h_loc")?;
        let r_squared = parse_opt_f64(row.get(5), line, "r_squared")?;
        let status = match row.get(6) {
            "ok" => EntryStatus::Ok,
            "gap" => EntryStatus::Gap,
            s => {
                return Err(HlocError::Parse {
                    line,
                    message: format!("unknown status `{s}`"),
                })
            }
        };
        if (status == EntryStatus::Ok) != h_loc.is_some() {
            return Err(HlocError::Validation {
                line,
                message: "status disagrees with the h_loc column".into(),
            });
        }
        entries.push(TrackEntry {
            session,
            h_loc,
            r_squared,
        });
        ma5.push(parse_opt_f64(row.get(3), line, "ma5")?);
        ma21.push(parse_opt_f64(row.get(4), line, "ma21")?);
    }
    if entries.is_empty() {
        return Err(HlocError::EmptyInput);
    }
    HurstTrack::from_parts(entries, ma5, ma21)
}

pub fn read_track_path(path: &Path) -> Result<HurstTrack> {
    read_track(File::open(path)?)
}

pub fn write_signals<W: Write>(verdicts: &[SignalVerdict], out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{}", SIGNAL_HEADER.join(","))?;
    for v in verdicts {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            v.session,
            v.cond1,
            v.cond2,
            v.cond3,
            v.cond4,
            v.verdict.as_str()
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Long-format `(ln tau, ln F²)` dump; vanishing variances leave `ln_f2` empty.
pub fn write_curves<W: Write>(curves: &[(usize, FluctuationCurve)], out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{}", CURVE_HEADER.join(","))?;
    for (session, curve) in curves {
        for (&(tau, _), (ln_tau, ln_f2)) in curve.points.iter().zip(curve.log_points()) {
            writeln!(out, "{session},{tau},{},{}", format_sig(ln_tau), format_sig(ln_f2))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Crash report: one row per event (slope empty when no trend was fitted)
/// followed by a `# regression:` summary when a model is given.
pub fn write_crash_report<W: Write>(
    events: &[(CrashEvent, Option<f64>)],
    model: Option<&SlopeCorrectionModel>,
    out: W,
) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{}", CRASH_HEADER.join(","))?;
    for (ev, slope) in events {
        let date = ev
            .rupture_date
            .map(|d| d.format(DATE_FORMAT).to_string())
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            ev.rupture_session,
            date,
            ev.initial_3session_drop,
            ev.total_drop,
            ev.duration,
            ev.is_crash,
            slope.map(format_sig).unwrap_or_default()
        )?;
    }
    if let Some(m) = model {
        writeln!(
            out,
            "# regression: total_drop = a*|slope| + b; a={}, b={}, r_squared={}, n={}, low_confidence={}",
            format_sig(m.a),
            format_sig(m.b),
            format_sig(m.r_squared),
            m.n_points,
            m.low_confidence
        )?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_series_file() {
        let s = read_series("date,close\n1994-03-17,20760\n".as_bytes()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.closes(), &[20760.0]);
        assert_eq!(s.date(0), NaiveDate::from_ymd_opt(1994, 3, 17));
    }

    #[test]
    fn negative_close_names_the_line() {
        let err = read_series("date,close\n,10\n,-5\n".as_bytes()).unwrap_err();
        match err {
            HlocError::Validation { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn unparsable_close_names_the_line() {
        let err = read_series("date,close\n,10\n\n,abc\n".as_bytes()).unwrap_err();
        match err {
            HlocError::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(read_series("".as_bytes()), Err(HlocError::EmptyInput)));
        assert!(matches!(read_series("date,close\n".as_bytes()), Err(HlocError::EmptyInput)));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let s = read_series("# seed: 1\ndate,close\n\n,1.5\n\n,2.5\n".as_bytes()).unwrap();
        assert_eq!(s.closes(), &[1.5, 2.5]);
    }

    #[test]
    fn wrong_header_is_a_parse_error() {
        assert!(matches!(
            read_series("day,price\n,1\n".as_bytes()),
            Err(HlocError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn rows_are_positional_not_date_sorted() {
        let s = read_series("date,close\n2001-01-03,3\n2001-01-01,1\n".as_bytes()).unwrap();
        assert_eq!(s.closes(), &[3.0, 1.0]);
    }

    #[test]
    fn single_entry_track_is_two_lines() {
        let t = HurstTrack::from_h_values(214, &[Some(0.5)]).unwrap();
        let mut buf = Vec::new();
        write_track(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().nth(1).unwrap(), "214,0.5,1.5,,,1,ok");
    }

    #[test]
    fn gap_rows_have_empty_fields() {
        let t = HurstTrack::from_h_values(0, &[Some(0.5), None]).unwrap();
        let mut buf = Vec::new();
        write_track(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(2).unwrap(), "1,,,,,,gap");
        let back = read_track(text.as_bytes()).unwrap();
        assert_eq!(back.entries()[1].status(), EntryStatus::Gap);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.123456789012345), "0.123456789");
        assert_eq!(format_sig(1.5), "1.5");
        assert_eq!(format_sig(f64::NAN), "");
    }
}
