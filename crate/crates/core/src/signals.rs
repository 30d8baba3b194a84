//! Crash-warning conditions on a Hurst track, trend lines, crash
//! corrections, and the slope-versus-correction regression.
//!
//! The sell signal requires four conditions at once:
//!
//! 1. `h_loc` is falling (negative OLS slope over `trend_lookback` sessions)
//!    and the weekly average sits below the monthly one on at least
//!    `cross_fraction` of the last `cross_lookback` sessions;
//! 2. the monthly average is at most `ma21_ceiling`;
//! 3. the weekly average is at most `ma5_ceiling`;
//! 4. at least `minima_count` local minima of `h_loc` inside the trend
//!    lookback are at most `minima_ceiling`.
//!
//! The buy signal is the joint failure of all four.

use chrono::NaiveDate;

use crate::error::{HlocError, Result};
use crate::regression::linear_fit;
use crate::series::PriceSeries;
use crate::track::{HurstTrack, LONG_MA};

/// Default search horizon for the post-crash minimum, in sessions.
pub const DEFAULT_HORIZON: usize = 60;

/// Minimum number of ok entries a trend-line fit accepts.
pub const MIN_TREND_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalThresholds {
    pub ma21_ceiling: f64,
    pub ma5_ceiling: f64,
    pub minima_ceiling: f64,
    pub trend_lookback: usize,
    pub cross_lookback: usize,
    pub cross_fraction: f64,
    pub minima_count: usize,
}

impl Default for SignalThresholds {
    fn default() -> Self {
        Self {
            ma21_ceiling: 0.5,
            ma5_ceiling: 0.45,
            minima_ceiling: 0.4,
            trend_lookback: 21,
            cross_lookback: 10,
            cross_fraction: 0.8,
            minima_count: 2,
        }
    }
}

impl SignalThresholds {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HlocError::InvalidParameter(m));
        if !(self.minima_ceiling < self.ma5_ceiling && self.ma5_ceiling < self.ma21_ceiling) {
            return bad(format!(
                "ceilings must satisfy minima < ma5 < ma21, got {} / {} / {}",
                self.minima_ceiling, self.ma5_ceiling, self.ma21_ceiling
            ));
        }
        if self.trend_lookback < 2 || self.cross_lookback < 2 {
            return bad("lookbacks must be at least 2 sessions".into());
        }
        if !(self.cross_fraction > 0.0 && self.cross_fraction <= 1.0) {
            return bad(format!("cross fraction {} outside (0, 1]", self.cross_fraction));
        }
        if self.minima_count == 0 {
            return bad("minima count must be at least 1".into());
        }
        Ok(())
    }

    /// Number of trailing track entries a verdict depends on.
    pub fn history_len(&self) -> usize {
        self.trend_lookback.max(self.cross_lookback).max(LONG_MA)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Sell,
    Buy,
    Neutral,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Sell => "sell",
            Verdict::Buy => "buy",
            Verdict::Neutral => "neutral",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalVerdict {
    pub session: usize,
    pub cond1: bool,
    pub cond2: bool,
    pub cond3: bool,
    pub cond4: bool,
    pub verdict: Verdict,
}

impl SignalVerdict {
    pub fn from_conditions(session: usize, conds: [bool; 4]) -> Self {
        let verdict = if conds.iter().all(|&c| c) {
            Verdict::Sell
        } else if conds.iter().all(|&c| !c) {
            Verdict::Buy
        } else {
            Verdict::Neutral
        };
        let [cond1, cond2, cond3, cond4] = conds;
        Self {
            session,
            cond1,
            cond2,
            cond3,
            cond4,
            verdict,
        }
    }

    pub fn conditions(&self) -> [bool; 4] {
        [self.cond1, self.cond2, self.cond3, self.cond4]
    }
}

/// Evaluates the four conditions at `session`.
pub fn evaluate_signal(track: &HurstTrack, session: usize, thresholds: &SignalThresholds) -> Result<SignalVerdict> {
    thresholds.validate()?;
    let history = |reason: &str| HlocError::InsufficientHistory {
        session,
        reason: reason.to_string(),
    };
    let pos = track
        .position(session)
        .ok_or_else(|| history("session is outside the track"))?;
    let entries = track.entries();
    if entries[pos].h_loc.is_none() {
        return Err(history("no estimate at this session"));
    }
    let (ma5, ma21) = match (track.ma5()[pos], track.ma21()[pos]) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(history("moving averages are undefined")),
    };
    let needed = thresholds.trend_lookback.max(thresholds.cross_lookback);
    if pos + 1 < needed {
        return Err(history("not enough preceding sessions"));
    }

    let trend_start = pos + 1 - thresholds.trend_lookback;
    let trend = &entries[trend_start..=pos];
    let (xs, ys): (Vec<f64>, Vec<f64>) = trend
        .iter()
        .filter_map(|e| e.h_loc.map(|h| (e.session as f64, h)))
        .unzip();
    let falling = match linear_fit(&xs, &ys) {
        Ok(fit) => fit.slope < 0.0,
        Err(_) => false,
    };

    let cross_start = pos + 1 - thresholds.cross_lookback;
    let below = (cross_start..=pos)
        .filter(|&i| matches!((track.ma5()[i], track.ma21()[i]), (Some(a), Some(b)) if a < b))
        .count();
    let crossed = below as f64 >= thresholds.cross_fraction * thresholds.cross_lookback as f64;

    let cond1 = falling && crossed;
    let cond2 = ma21 <= thresholds.ma21_ceiling;
    let cond3 = ma5 <= thresholds.ma5_ceiling;
    let deep_minima = local_minima(&ys)
        .into_iter()
        .filter(|&i| ys[i] <= thresholds.minima_ceiling)
        .count();
    let cond4 = deep_minima >= thresholds.minima_count;

    Ok(SignalVerdict::from_conditions(session, [cond1, cond2, cond3, cond4]))
}

/// Every session of the track at which the conditions can be evaluated.
pub fn signal_timeline(track: &HurstTrack, thresholds: &SignalThresholds) -> Result<Vec<SignalVerdict>> {
    thresholds.validate()?;
    let mut out = Vec::new();
    for e in track.entries() {
        match evaluate_signal(track, e.session, thresholds) {
            Ok(v) => out.push(v),
            Err(HlocError::InsufficientHistory { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Indices of interior local minima: strictly below the left neighbour and
/// below the first differing value to the right. A flat bottom counts once,
/// at its first element.
pub fn local_minima(values: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    if values.len() < 3 {
        return out;
    }
    let mut i = 1;
    while i + 1 < values.len() {
        if values[i] < values[i - 1] {
            let mut j = i + 1;
            while j < values.len() && values[j] == values[i] {
                j += 1;
            }
            if j < values.len() && values[j] > values[i] {
                out.push(i);
            }
            i = j.max(i + 1);
        } else {
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendFit {
    /// Change of `h_loc` per session.
    pub slope: f64,
    /// Fitted `h_loc` at session 0.
    pub intercept: f64,
    /// Inclusive session bounds.
    pub fit_window: (usize, usize),
    pub r_squared: f64,
}

impl TrendFit {
    pub fn value_at(&self, session: f64) -> f64 {
        self.intercept + self.slope * session
    }
}

/// Straight line through the ok entries of the inclusive session window.
pub fn fit_hloc_trend(track: &HurstTrack, fit_window: (usize, usize)) -> Result<TrendFit> {
    let (start, end) = fit_window;
    if end < start {
        return Err(HlocError::InvalidParameter(format!(
            "fit window [{start}, {end}] is inverted"
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = track
        .entries()
        .iter()
        .filter(|e| e.session >= start && e.session <= end)
        .filter_map(|e| e.h_loc.map(|h| (e.session as f64, h)))
        .unzip();
    if xs.len() < MIN_TREND_POINTS {
        return Err(HlocError::InsufficientData {
            needed: MIN_TREND_POINTS,
            available: xs.len(),
        });
    }
    let fit = linear_fit(&xs, &ys)?;
    Ok(TrendFit {
        slope: fit.slope,
        intercept: fit.intercept,
        fit_window,
        r_squared: fit.r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrashEvent {
    pub rupture_session: usize,
    pub rupture_date: Option<NaiveDate>,
    pub initial_3session_drop: f64,
    pub total_drop: f64,
    /// Sessions from the rupture to the post-crash minimum; 0 for non-crashes.
    pub duration: usize,
    /// False when the price never fell below the rupture close.
    pub is_crash: bool,
}

/// Relative correction after a rupture: the three-session drop and the drop
/// to the lowest close within `horizon` sessions (clipped to the series end).
pub fn measure_correction(series: &PriceSeries, rupture_session: usize, horizon: usize) -> Result<CrashEvent> {
    if horizon < 3 {
        return Err(HlocError::InvalidParameter(format!(
            "horizon must be at least 3 sessions, got {horizon}"
        )));
    }
    let closes = series.closes();
    if rupture_session + 3 >= closes.len() {
        return Err(HlocError::InsufficientData {
            needed: rupture_session + 4,
            available: closes.len(),
        });
    }
    let peak = closes[rupture_session];
    let last = (rupture_session + horizon).min(closes.len() - 1);

    let mut min_offset = 1;
    let mut min_close = closes[rupture_session + 1];
    for (off, &c) in closes[rupture_session + 1..=last].iter().enumerate() {
        if c < min_close {
            min_close = c;
            min_offset = off + 1;
        }
    }

    let total = (peak - min_close) / peak;
    let initial = (peak - closes[rupture_session + 3]) / peak;
    let is_crash = total > 0.0;
    Ok(CrashEvent {
        rupture_session,
        rupture_date: series.date(rupture_session),
        initial_3session_drop: initial.max(0.0),
        total_drop: total.max(0.0),
        duration: if is_crash { min_offset } else { 0 },
        is_crash,
    })
}

/// Linear model `total_drop = a * |slope| + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeCorrectionModel {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// Set when three or fewer events support the fit.
    pub low_confidence: bool,
}

/// OLS of total drop against absolute trend slope over `(slope, total_drop)`
/// pairs.
pub fn slope_correction_regression(events: &[(f64, f64)]) -> Result<SlopeCorrectionModel> {
    if events.len() < 2 {
        return Err(HlocError::InsufficientData {
            needed: 2,
            available: events.len(),
        });
    }
    let xs: Vec<f64> = events.iter().map(|(s, _)| s.abs()).collect();
    let ys: Vec<f64> = events.iter().map(|(_, d)| *d).collect();
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(HlocError::DegenerateRegression(
            "all trend slopes have the same magnitude".into(),
        ));
    }
    let fit = linear_fit(&xs, &ys)?;
    Ok(SlopeCorrectionModel {
        a: fit.slope,
        b: fit.intercept,
        r_squared: fit.r_squared,
        n_points: events.len(),
        low_confidence: events.len() <= 3,
    })
}

/// First whole session at which a falling trend line reaches `target_h`.
pub fn extrapolate_trend(fit: &TrendFit, target_h: f64) -> Result<usize> {
    if !(fit.slope < 0.0) {
        return Err(HlocError::NoCrossing { slope: fit.slope });
    }
    let end = fit.fit_window.1 as f64;
    let h_end = fit.value_at(end);
    if !(target_h < h_end) {
        return Err(HlocError::InvalidParameter(format!(
            "target {target_h} is not below the fitted value {h_end} at the window end"
        )));
    }
    // offsets from the window end keep the arithmetic well conditioned
    let offset = (target_h - h_end) / fit.slope;
    let crossing = end + offset;
    Ok((crossing - 1e-9).ceil() as usize)
}
