//! Detrended fluctuation analysis on a single observation window.
//!
//! The window is covered by boxes of size `tau` laid backwards from its most
//! recent session. Each box is detrended by a least-squares polynomial (a
//! straight line by default) and the mean squared residuals are averaged over
//! boxes to give `F²(tau)`. The local Hurst exponent is half the slope of
//! `ln F²` against `ln tau` over the scaling range.

use std::ops::Range;

use crate::error::{HlocError, Result};
use crate::regression::{linear_fit, polyfit_mean_sq_residual};

/// Minimum number of grid points the log-log fit accepts.
pub const MIN_SCALES: usize = 4;

/// Smallest box size used by the default grid.
pub const DEFAULT_TAU_MIN: usize = 4;

/// How the remainder of a window that is not a multiple of `tau` is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coverage {
    /// An extra box covers the oldest `tau` sessions, overlapping its neighbour.
    #[default]
    WithOverlapTail,
    /// The oldest `N mod tau` sessions are left out.
    TruncateTail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfaConfig {
    /// Observation box length `N`, in sessions.
    pub window_len: usize,
    /// Ascending box sizes.
    pub tau_grid: Vec<usize>,
    /// Inclusive `[lo, hi]` bounds on the box sizes used by the fit.
    pub scaling_range: (usize, usize),
    pub detrend_order: usize,
    pub coverage: Coverage,
    /// Cumulate mean-subtracted values before detrending. Off by default:
    /// price levels are already a random-walk-like profile.
    pub integrate_profile: bool,
}

impl DfaConfig {
    /// Default configuration: linear detrending, overlapping tail box, raw
    /// profile, and the default grid from 4 to `window_len / 4`.
    pub fn new(window_len: usize) -> Self {
        let tau_max = window_len / 4;
        let tau_grid = default_tau_grid(DEFAULT_TAU_MIN, tau_max);
        let scaling_range = (DEFAULT_TAU_MIN, tau_max.max(DEFAULT_TAU_MIN));
        Self {
            window_len,
            tau_grid,
            scaling_range,
            detrend_order: 1,
            coverage: Coverage::WithOverlapTail,
            integrate_profile: false,
        }
    }

    /// Replaces the grid with the default grid between the given bounds and
    /// resets the scaling range to span it.
    pub fn with_tau_bounds(mut self, tau_min: usize, tau_max: usize) -> Self {
        self.tau_grid = default_tau_grid(tau_min, tau_max);
        self.scaling_range = (tau_min, tau_max);
        self
    }

    pub fn with_tau_grid(mut self, grid: Vec<usize>) -> Self {
        self.scaling_range = (
            grid.first().copied().unwrap_or(0),
            grid.last().copied().unwrap_or(0),
        );
        self.tau_grid = grid;
        self
    }

    pub fn with_scaling_range(mut self, lo: usize, hi: usize) -> Self {
        self.scaling_range = (lo, hi);
        self
    }

    pub fn with_detrend_order(mut self, order: usize) -> Self {
        self.detrend_order = order;
        self
    }

    pub fn with_coverage(mut self, coverage: Coverage) -> Self {
        self.coverage = coverage;
        self
    }

    pub fn with_integrated_profile(mut self, integrate: bool) -> Self {
        self.integrate_profile = integrate;
        self
    }

    /// Box sizes inside the scaling range.
    pub fn fit_scales(&self) -> impl Iterator<Item = usize> + '_ {
        let (lo, hi) = self.scaling_range;
        self.tau_grid.iter().copied().filter(move |&t| t >= lo && t <= hi)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HlocError::InvalidConfig(msg));
        if self.tau_grid.is_empty() {
            return bad("empty tau grid".into());
        }
        if self.tau_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("tau grid must be strictly ascending: {:?}", self.tau_grid));
        }
        let tau_min = self.tau_grid[0];
        let tau_max = *self.tau_grid.last().unwrap();
        if tau_min < self.detrend_order + 2 {
            return bad(format!(
                "smallest box {tau_min} leaves no residual degree of freedom for order {} detrending",
                self.detrend_order
            ));
        }
        if tau_max > self.window_len / 4 {
            return bad(format!(
                "largest box {tau_max} exceeds window_len/4 = {}",
                self.window_len / 4
            ));
        }
        let (lo, hi) = self.scaling_range;
        if lo > hi {
            return bad(format!("scaling range [{lo}, {hi}] is inverted"));
        }
        let n = self.fit_scales().count();
        if n < MIN_SCALES {
            return bad(format!(
                "scaling range [{lo}, {hi}] holds {n} grid points, at least {MIN_SCALES} required"
            ));
        }
        Ok(())
    }
}

/// Integer grid from `tau_min` to `tau_max` with ratio close to `2^(1/4)`,
/// rounded and deduplicated. `tau_max` is always included.
pub fn default_tau_grid(tau_min: usize, tau_max: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    if tau_min == 0 || tau_max < tau_min {
        return grid;
    }
    let ratio = 2f64.powf(0.25);
    let mut k = 0i32;
    loop {
        let tau = (tau_min as f64 * ratio.powi(k)).round() as usize;
        if tau > tau_max {
            break;
        }
        if grid.last() != Some(&tau) {
            grid.push(tau);
        }
        k += 1;
    }
    if grid.last() != Some(&tau_max) {
        grid.push(tau_max);
    }
    grid
}

/// The `N` most recent values ending at `end_session`.
#[derive(Debug, Clone, Copy)]
pub struct ObservationWindow<'a> {
    pub values: &'a [f64],
    pub end_session: usize,
}

impl<'a> ObservationWindow<'a> {
    pub fn new(values: &'a [f64], end_session: usize) -> Self {
        Self { values, end_session }
    }

    /// Window `<end - N + 1, end>` of a full series.
    pub fn ending_at(series: &'a [f64], end_session: usize, len: usize) -> Result<Self> {
        if len == 0 || end_session >= series.len() || end_session + 1 < len {
            return Err(HlocError::InsufficientData {
                needed: len,
                available: (end_session + 1).min(series.len()),
            });
        }
        Ok(Self {
            values: &series[end_session + 1 - len..=end_session],
            end_session,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationCurve {
    /// `(tau, F²(tau))` in grid order.
    pub points: Vec<(usize, f64)>,
}

impl FluctuationCurve {
    /// `(ln tau, ln F²)` pairs; vanishing variances map to negative infinity.
    pub fn log_points(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|&(t, f2)| ((t as f64).ln(), f2.ln()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurstEstimate {
    pub h_loc: f64,
    pub r_squared: f64,
    /// Standard error of the log-log slope (twice the error on `h_loc`).
    pub stderr_slope: f64,
    pub n_scales: usize,
    pub scaling_range: (usize, usize),
}

impl HurstEstimate {
    /// Local fractal dimension, `2 - h_loc`.
    pub fn d_loc(&self) -> f64 {
        fractal_dimension(self.h_loc)
    }
}

pub fn fractal_dimension(h_loc: f64) -> f64 {
    2.0 - h_loc
}

/// Boxes of exactly `tau` offsets laid from the end of a window of length
/// `len` backwards. Under [`Coverage::WithOverlapTail`] a final box covers
/// `[0, tau)` whenever `tau` does not divide `len`.
pub fn partition_boxes(len: usize, tau: usize, coverage: Coverage) -> Result<Vec<Range<usize>>> {
    if tau < 2 || tau > len {
        return Err(HlocError::InvalidScale { tau, len });
    }
    let full = len / tau;
    let mut boxes: Vec<Range<usize>> = (0..full)
        .map(|k| len - (k + 1) * tau..len - k * tau)
        .collect();
    if !len.is_multiple_of(tau) && coverage == Coverage::WithOverlapTail {
        boxes.push(0..tau);
    }
    Ok(boxes)
}

/// Mean squared residual of `segment` after removing its least-squares
/// polynomial trend of the given order against offsets `0..len`.
pub fn detrended_variance(segment: &[f64], order: usize) -> Result<f64> {
    if segment.len() < order + 2 {
        return Err(HlocError::InvalidScale {
            tau: segment.len(),
            len: segment.len(),
        });
    }
    if segment.iter().any(|v| !v.is_finite()) {
        return Err(HlocError::InvalidData("non-finite value in segment".into()));
    }
    polyfit_mean_sq_residual(segment, order)
}

/// Builds the detrending profile for a window: raw values, or cumulative sums
/// of mean-subtracted values when integration is enabled.
pub fn profile(values: &[f64], integrate: bool) -> Vec<f64> {
    if !integrate {
        return values.to_vec();
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values
        .iter()
        .scan(0.0, |acc, &v| {
            *acc += v - mean;
            Some(*acc)
        })
        .collect()
}

/// Averaged detrended variance `F²(tau)` for every box size in the grid.
pub fn fluctuation_function(window: &ObservationWindow<'_>, config: &DfaConfig) -> Result<FluctuationCurve> {
    config.validate()?;
    if window.len() != config.window_len {
        return Err(HlocError::InvalidConfig(format!(
            "window holds {} values, configuration expects {}",
            window.len(),
            config.window_len
        )));
    }
    fluctuation_at_scales(
        window.values,
        &config.tau_grid,
        config.detrend_order,
        config.coverage,
        config.integrate_profile,
    )
}

/// `F²(tau)` for arbitrary box sizes, without the configuration-level
/// constraints on grid shape. Each `tau` only has to satisfy
/// `order + 2 <= tau <= values.len()`.
pub fn fluctuation_at_scales(
    values: &[f64],
    taus: &[usize],
    order: usize,
    coverage: Coverage,
    integrate: bool,
) -> Result<FluctuationCurve> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(HlocError::InvalidData("non-finite value in window".into()));
    }
    let first = values.first().copied().ok_or(HlocError::EmptyInput)?;
    if values.iter().all(|&v| v == first) {
        return Err(HlocError::DegenerateWindow);
    }

    let profile = profile(values, integrate);
    let floor = noise_floor(&profile);

    let mut points = Vec::with_capacity(taus.len());
    for &tau in taus {
        let boxes = partition_boxes(profile.len(), tau, coverage)?;
        let mut total = 0.0;
        for b in &boxes {
            total += detrended_variance(&profile[b.clone()], order)?;
        }
        let mut f2 = total / boxes.len() as f64;
        // residuals at rounding level are a trend that was fitted exactly
        if f2 <= floor {
            f2 = 0.0;
        }
        points.push((tau, f2));
    }
    Ok(FluctuationCurve { points })
}

fn noise_floor(profile: &[f64]) -> f64 {
    let peak = profile.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let r = 64.0 * f64::EPSILON * peak;
    r * r
}

/// Fits `ln F²` against `ln tau` over the inclusive scaling range.
pub fn estimate_hurst(curve: &FluctuationCurve, scaling_range: (usize, usize)) -> Result<HurstEstimate> {
    let (lo, hi) = scaling_range;
    let selected: Vec<(usize, f64)> = curve
        .points
        .iter()
        .copied()
        .filter(|&(t, _)| t >= lo && t <= hi)
        .collect();
    if selected.len() < MIN_SCALES {
        return Err(HlocError::InsufficientScales {
            found: selected.len(),
            required: MIN_SCALES,
        });
    }
    if selected.iter().any(|&(_, f2)| !(f2 > 0.0)) {
        return Err(HlocError::DegenerateWindow);
    }
    let x: Vec<f64> = selected.iter().map(|&(t, _)| (t as f64).ln()).collect();
    let y: Vec<f64> = selected.iter().map(|&(_, f2)| f2.ln()).collect();
    let fit = linear_fit(&x, &y)?;
    Ok(HurstEstimate {
        h_loc: fit.slope / 2.0,
        r_squared: fit.r_squared,
        stderr_slope: fit.stderr_slope,
        n_scales: selected.len(),
        scaling_range,
    })
}

/// Fluctuation function and Hurst estimate for one window.
pub fn estimate_window(window: &ObservationWindow<'_>, config: &DfaConfig) -> Result<(FluctuationCurve, HurstEstimate)> {
    let curve = fluctuation_function(window, config)?;
    let est = estimate_hurst(&curve, config.scaling_range)?;
    Ok((curve, est))
}

/// Global DFA estimate over a whole series; `config.window_len` must equal
/// the series length.
pub fn global_hurst(values: &[f64], config: &DfaConfig) -> Result<HurstEstimate> {
    let window = ObservationWindow::new(values, values.len().saturating_sub(1));
    estimate_window(&window, config).map(|(_, e)| e)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Per-box OLS line by explicit 2x2 normal equations (Cramer's rule).
    fn normal_equations_msr(y: &[f64]) -> f64 {
        let n = y.len() as f64;
        let (mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for (i, &v) in y.iter().enumerate() {
            let x = i as f64;
            sx += x;
            sxx += x * x;
            sy += v;
            sxy += x * v;
        }
        let det = n * sxx - sx * sx;
        let b = (n * sxy - sx * sy) / det;
        let a = (sy * sxx - sx * sxy) / det;
        y.iter()
            .enumerate()
            .map(|(i, &v)| (v - a - b * i as f64).powi(2))
            .sum::<f64>()
            / n
    }

    #[test]
    fn exact_division_has_no_tail_box() {
        let boxes = partition_boxes(10, 5, Coverage::WithOverlapTail).unwrap();
        assert_eq!(boxes, vec![5..10, 0..5]);
    }

    #[test]
    fn overlap_tail_for_default_window() {
        let boxes = partition_boxes(215, 50, Coverage::WithOverlapTail).unwrap();
        assert_eq!(boxes, vec![165..215, 115..165, 65..115, 15..65, 0..50]);
    }

    #[test]
    fn truncate_tail_leaves_oldest_offsets_uncovered() {
        let boxes = partition_boxes(7, 3, Coverage::TruncateTail).unwrap();
        assert_eq!(boxes, vec![4..7, 1..4]);
    }

    #[test]
    fn invalid_scales_are_rejected() {
        assert!(matches!(
            partition_boxes(10, 11, Coverage::WithOverlapTail),
            Err(HlocError::InvalidScale { tau: 11, len: 10 })
        ));
        assert!(matches!(
            partition_boxes(10, 1, Coverage::TruncateTail),
            Err(HlocError::InvalidScale { .. })
        ));
    }

    #[test]
    fn box_count_rule() {
        for len in 2..60 {
            for tau in 2..=len {
                for cov in [Coverage::WithOverlapTail, Coverage::TruncateTail] {
                    let n = partition_boxes(len, tau, cov).unwrap().len();
                    let extra = usize::from(len % tau != 0 && cov == Coverage::WithOverlapTail);
                    assert_eq!(n, len / tau + extra);
                }
            }
        }
    }

    #[test]
    fn overlap_tail_covers_the_window() {
        for len in 4..40 {
            for tau in 2..=len {
                let mut covered = vec![false; len];
                for b in partition_boxes(len, tau, Coverage::WithOverlapTail).unwrap() {
                    assert_eq!(b.len(), tau);
                    covered[b].iter_mut().for_each(|c| *c = true);
                }
                assert!(covered.iter().all(|&c| c));
            }
        }
    }

    #[test]
    fn linear_and_constant_segments_have_zero_variance() {
        assert!(detrended_variance(&[1.0, 3.0, 5.0, 7.0], 1).unwrap() < 1e-28);
        assert_eq!(detrended_variance(&[4.2; 6], 1).unwrap(), 0.0);
    }

    #[test]
    fn zigzag_segment_matches_normal_equations() {
        let seg = [0.0, 1.0, 0.0, 1.0];
        let oracle = normal_equations_msr(&seg);
        // residuals -0.2, 0.6, -0.6, 0.2
        assert!((oracle - 0.2).abs() < 1e-15);
        let got = detrended_variance(&seg, 1).unwrap();
        assert!((got - oracle).abs() < 1e-15);
    }

    #[test]
    fn non_finite_segment_is_invalid_data() {
        assert!(matches!(
            detrended_variance(&[1.0, f64::NAN, 2.0], 1),
            Err(HlocError::InvalidData(_))
        ));
    }

    #[test]
    fn default_grid_is_ascending_and_bounded() {
        let g = default_tau_grid(4, 53);
        assert_eq!(g.first(), Some(&4));
        assert_eq!(g.last(), Some(&53));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(g, vec![4, 5, 6, 7, 8, 10, 11, 13, 16, 19, 23, 27, 32, 38, 45, 53]);
        DfaConfig::new(215).validate().unwrap();
    }

    #[test]
    fn config_invariants() {
        let cfg = DfaConfig::new(215).with_tau_grid(vec![2, 4, 8, 16]);
        assert!(cfg.validate().is_err(), "tau_min below order + 2");
        let cfg = DfaConfig::new(100).with_tau_grid(vec![4, 8, 16, 26]);
        assert!(cfg.validate().is_err(), "tau_max above N/4");
        let cfg = DfaConfig::new(215).with_scaling_range(40, 53);
        assert!(cfg.validate().is_err(), "too few fit scales");
        let cfg = DfaConfig::new(215).with_detrend_order(2).with_tau_bounds(4, 53);
        cfg.validate().unwrap();
    }

    #[test]
    fn ramp_gives_vanishing_curve_and_degenerate_estimate() {
        let cfg = DfaConfig::new(64);
        let ramp: Vec<f64> = (0..64).map(|i| 1000.0 + 2.5 * i as f64).collect();
        let curve = fluctuation_function(&ObservationWindow::new(&ramp, 63), &cfg).unwrap();
        assert!(curve.points.iter().all(|&(_, f2)| f2 == 0.0));
        assert!(matches!(
            estimate_hurst(&curve, cfg.scaling_range),
            Err(HlocError::DegenerateWindow)
        ));
    }

    #[test]
    fn constant_window_is_degenerate() {
        let cfg = DfaConfig::new(64);
        let flat = vec![7.0; 64];
        assert!(matches!(
            fluctuation_function(&ObservationWindow::new(&flat, 63), &cfg),
            Err(HlocError::DegenerateWindow)
        ));
    }

    #[test]
    fn exact_power_laws() {
        let c = 3.7;
        let grid = default_tau_grid(4, 64);
        let curve = FluctuationCurve {
            points: grid.iter().map(|&t| (t, c * (t as f64).powf(1.4))).collect(),
        };
        let est = estimate_hurst(&curve, (4, 64)).unwrap();
        assert!((est.h_loc - 0.7).abs() < 1e-12);
        assert!((est.r_squared - 1.0).abs() < 1e-12);

        let curve = FluctuationCurve {
            points: grid.iter().map(|&t| (t, c * t as f64)).collect(),
        };
        let est = estimate_hurst(&curve, (4, 64)).unwrap();
        assert!((est.h_loc - 0.5).abs() < 1e-12);
        assert!((est.d_loc() - 1.5).abs() < 1e-12);
        assert_eq!(est.d_loc(), 2.0 - est.h_loc);
    }

    #[test]
    fn too_few_scales() {
        let curve = FluctuationCurve {
            points: vec![(4, 1.0), (8, 2.0), (16, 4.0)],
        };
        assert!(matches!(
            estimate_hurst(&curve, (4, 16)),
            Err(HlocError::InsufficientScales { found: 3, required: 4 })
        ));
    }

    #[test]
    fn window_length_mismatch_is_rejected() {
        let cfg = DfaConfig::new(64);
        let v: Vec<f64> = (0..63).map(|i| (i as f64).sin()).collect();
        assert!(fluctuation_function(&ObservationWindow::new(&v, 62), &cfg).is_err());
    }

    #[test]
    fn ending_at_slices_the_right_sessions() {
        let s: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let w = ObservationWindow::ending_at(&s, 6, 4).unwrap();
        assert_eq!(w.values, &[3.0, 4.0, 5.0, 6.0]);
        assert!(ObservationWindow::ending_at(&s, 2, 4).is_err());
    }
}
