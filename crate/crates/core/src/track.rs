//! Sliding-window local Hurst exponent track.

use rayon::prelude::*;

use crate::dfa::{estimate_window, fractal_dimension, DfaConfig, HurstEstimate, ObservationWindow};
use crate::error::{HlocError, Result};
use crate::series::PriceSeries;

/// One trading week.
pub const SHORT_MA: usize = 5;
/// One trading month.
pub const LONG_MA: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryStatus {
    Ok,
    /// The window was degenerate and produced no estimate.
    Gap,
}

impl EntryStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            EntryStatus::Ok => "ok",
            EntryStatus::Gap => "gap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackEntry {
    pub session: usize,
    pub h_loc: Option<f64>,
    pub r_squared: Option<f64>,
}

impl TrackEntry {
    pub fn ok(session: usize, h_loc: f64, r_squared: f64) -> Self {
        Self {
            session,
            h_loc: Some(h_loc),
            r_squared: Some(r_squared),
        }
    }

    pub fn gap(session: usize) -> Self {
        Self {
            session,
            h_loc: None,
            r_squared: None,
        }
    }

    fn from_estimate(session: usize, est: &HurstEstimate) -> Self {
        Self::ok(session, est.h_loc, est.r_squared)
    }

    pub fn status(&self) -> EntryStatus {
        if self.h_loc.is_some() {
            EntryStatus::Ok
        } else {
            EntryStatus::Gap
        }
    }

    pub fn d_loc(&self) -> Option<f64> {
        self.h_loc.map(fractal_dimension)
    }
}

/// Time-indexed local Hurst exponents with their weekly and monthly moving
/// averages. Sessions are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct HurstTrack {
    entries: Vec<TrackEntry>,
    ma5: Vec<Option<f64>>,
    ma21: Vec<Option<f64>>,
    config: Option<DfaConfig>,
}

impl HurstTrack {
    /// Builds a track from contiguous entries, computing both moving averages.
    pub fn from_entries(entries: Vec<TrackEntry>, config: Option<DfaConfig>) -> Result<Self> {
        check_contiguous(&entries)?;
        let h: Vec<Option<f64>> = entries.iter().map(|e| e.h_loc).collect();
        let ma5 = moving_average(&h, SHORT_MA)?;
        let ma21 = moving_average(&h, LONG_MA)?;
        Ok(Self {
            entries,
            ma5,
            ma21,
            config,
        })
    }

    /// Builds a track from `h_loc` values (None for gaps) starting at
    /// `first_session`, with unit r².
    pub fn from_h_values(first_session: usize, values: &[Option<f64>]) -> Result<Self> {
        let entries = values
            .iter()
            .enumerate()
            .map(|(i, h)| match h {
                Some(h) => TrackEntry::ok(first_session + i, *h, 1.0),
                None => TrackEntry::gap(first_session + i),
            })
            .collect();
        Self::from_entries(entries, None)
    }

    /// Reassembles a track with stored moving averages, as read from disk.
    pub fn from_parts(
        entries: Vec<TrackEntry>,
        ma5: Vec<Option<f64>>,
        ma21: Vec<Option<f64>>,
    ) -> Result<Self> {
        check_contiguous(&entries)?;
        if ma5.len() != entries.len() || ma21.len() != entries.len() {
            return Err(HlocError::InvalidData(
                "moving averages must align with entries".into(),
            ));
        }
        Ok(Self {
            entries,
            ma5,
            ma21,
            config: None,
        })
    }

    pub fn entries(&self) -> &[TrackEntry] {
        &self.entries
    }

    pub fn ma5(&self) -> &[Option<f64>] {
        &self.ma5
    }

    pub fn ma21(&self) -> &[Option<f64>] {
        &self.ma21
    }

    pub fn config(&self) -> Option<&DfaConfig> {
        self.config.as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn first_session(&self) -> Option<usize> {
        self.entries.first().map(|e| e.session)
    }

    pub fn last_session(&self) -> Option<usize> {
        self.entries.last().map(|e| e.session)
    }

    /// Position of `session` in the entry list.
    pub fn position(&self, session: usize) -> Option<usize> {
        let first = self.first_session()?;
        let pos = session.checked_sub(first)?;
        (pos < self.entries.len()).then_some(pos)
    }

    pub fn h_values(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.h_loc).collect()
    }

    /// The `keep` entries ending at `session`, moving averages carried over
    /// unchanged.
    pub fn window_ending(&self, session: usize, keep: usize) -> Result<Self> {
        let pos = self.position(session).ok_or_else(|| {
            HlocError::InvalidParameter(format!("session {session} is not in the track"))
        })?;
        let start = (pos + 1).saturating_sub(keep);
        Ok(Self {
            entries: self.entries[start..=pos].to_vec(),
            ma5: self.ma5[start..=pos].to_vec(),
            ma21: self.ma21[start..=pos].to_vec(),
            config: self.config.clone(),
        })
    }
}

fn check_contiguous(entries: &[TrackEntry]) -> Result<()> {
    if entries.windows(2).any(|w| w[1].session != w[0].session + 1) {
        return Err(HlocError::InvalidData(
            "track sessions must be contiguous and ascending".into(),
        ));
    }
    Ok(())
}

/// Mean of the `k` most recent non-gap values ending at each position, or a
/// gap while fewer than `k` such values exist. Gaps are skipped, so a gap
/// position repeats the average of the values before it.
pub fn moving_average(values: &[Option<f64>], k: usize) -> Result<Vec<Option<f64>>> {
    if k == 0 {
        return Err(HlocError::InvalidParameter(
            "moving-average window must be at least 1".into(),
        ));
    }
    let mut recent: Vec<f64> = Vec::with_capacity(values.len());
    let mut out = Vec::with_capacity(values.len());
    for v in values {
        if let Some(x) = v {
            recent.push(*x);
        }
        if recent.len() >= k {
            let tail = &recent[recent.len() - k..];
            // shifted by the oldest value so constant runs average exactly
            let anchor = tail[0];
            let dev = tail.iter().map(|v| v - anchor).sum::<f64>() / k as f64;
            out.push(Some(anchor + dev));
        } else {
            out.push(None);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Serial,
    Parallel,
}

/// Local Hurst exponent for every session `i >= N - 1`, estimated on the
/// window `<i - N + 1, i>`.
pub fn sliding_hurst(series: &PriceSeries, config: &DfaConfig) -> Result<HurstTrack> {
    sliding_hurst_with(series, config, Execution::Serial)
}

pub fn sliding_hurst_with(series: &PriceSeries, config: &DfaConfig, exec: Execution) -> Result<HurstTrack> {
    config.validate()?;
    let n = config.window_len;
    let closes = series.closes();
    if closes.len() < n {
        return Err(HlocError::InsufficientData {
            needed: n,
            available: closes.len(),
        });
    }

    let estimate = |end: usize| -> Result<TrackEntry> {
        let window = ObservationWindow::ending_at(closes, end, n)?;
        match estimate_window(&window, config) {
            Ok((_, est)) => Ok(TrackEntry::from_estimate(end, &est)),
            Err(HlocError::DegenerateWindow) => Ok(TrackEntry::gap(end)),
            Err(e) => Err(e),
        }
    };

    let sessions = n - 1..closes.len();
    let entries: Result<Vec<TrackEntry>> = match exec {
        Execution::Serial => sessions.map(estimate).collect(),
        Execution::Parallel => sessions.into_par_iter().map(estimate).collect(),
    };
    HurstTrack::from_entries(entries?, Some(config.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_of_constants() {
        let v = vec![Some(0.42); 9];
        let ma = moving_average(&v, 5).unwrap();
        assert!(ma[..4].iter().all(Option::is_none));
        assert!(ma[4..].iter().all(|m| *m == Some(0.42)));
    }

    #[test]
    fn moving_average_arithmetic() {
        let v: Vec<Option<f64>> = (1..=6).map(|i| Some(i as f64)).collect();
        let ma = moving_average(&v, 5).unwrap();
        assert_eq!(ma, vec![None, None, None, None, Some(3.0), Some(4.0)]);
    }

    #[test]
    fn moving_average_skips_gaps() {
        // [1, 2, gap, 4, 5] with k = 2: the average after the gap pairs 2 and 4
        let v = vec![Some(1.0), Some(2.0), None, Some(4.0), Some(5.0)];
        let ma = moving_average(&v, 2).unwrap();
        assert_eq!(ma, vec![None, Some(1.5), Some(1.5), Some(3.0), Some(4.5)]);
    }

    #[test]
    fn moving_average_rejects_zero_window() {
        assert!(matches!(
            moving_average(&[Some(1.0)], 0),
            Err(HlocError::InvalidParameter(_))
        ));
    }

    #[test]
    fn series_shorter_than_window() {
        let s = PriceSeries::new((0..214).map(|i| 100.0 + (i as f64).sin()).collect()).unwrap();
        assert!(matches!(
            sliding_hurst(&s, &DfaConfig::new(215)),
            Err(HlocError::InsufficientData { needed: 215, available: 214 })
        ));
    }

    #[test]
    fn degenerate_windows_become_gaps() {
        // flat stretch long enough to fill a whole window
        let mut closes: Vec<f64> = vec![50.0; 80];
        closes.extend((0..20).map(|i| 50.0 + ((i * 7919) % 13) as f64));
        let s = PriceSeries::new(closes).unwrap();
        let track = sliding_hurst(&s, &DfaConfig::new(64)).unwrap();
        assert_eq!(track.len(), 100 - 64 + 1);
        assert_eq!(track.entries()[0].status(), EntryStatus::Gap);
        assert!(track.entries()[0].d_loc().is_none());
        assert_eq!(track.entries().last().unwrap().status(), EntryStatus::Ok);
    }

    #[test]
    fn window_ending_keeps_stored_averages() {
        let v: Vec<Option<f64>> = (0..30).map(|i| Some(0.5 + 0.01 * i as f64)).collect();
        let t = HurstTrack::from_h_values(100, &v).unwrap();
        let w = t.window_ending(125, 21).unwrap();
        assert_eq!(w.len(), 21);
        assert_eq!(w.first_session(), Some(105));
        assert_eq!(w.ma21().last(), t.ma21().get(25));
        assert!(t.window_ending(200, 5).is_err());
    }

    #[test]
    fn non_contiguous_entries_are_rejected() {
        let e = vec![TrackEntry::ok(3, 0.5, 1.0), TrackEntry::ok(5, 0.5, 1.0)];
        assert!(HurstTrack::from_entries(e, None).is_err());
    }
}
