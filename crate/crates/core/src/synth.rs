//! Synthetic series with known properties: exact-covariance fractional
//! Brownian motion and crash-shaped price fixtures.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{HlocError, Result};
use crate::series::PriceSeries;

/// Name of the pseudo-random source, recorded in fixture metadata.
pub const RNG_NAME: &str = "chacha20 (rand_chacha 0.9, seed_from_u64) + StandardNormal (rand_distr 0.5)";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbmSpec {
    pub hurst: f64,
    /// Number of points in the generated path (also the number of increments).
    pub length: usize,
    pub seed: u64,
    /// Standard deviation of a single increment.
    pub scale: f64,
}

impl FbmSpec {
    pub fn new(hurst: f64, length: usize, seed: u64) -> Self {
        Self {
            hurst,
            length,
            seed,
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(HlocError::InvalidParameter(format!(
                "hurst must lie in (0, 1), got {}",
                self.hurst
            )));
        }
        if self.length < 16 {
            return Err(HlocError::InvalidParameter(format!(
                "length must be at least 16, got {}",
                self.length
            )));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(HlocError::InvalidParameter(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FgnMethod {
    /// Circulant embedding (Davies-Harte), O(n log n).
    DaviesHarte,
    /// Recursive conditioning via Durbin-Levinson, O(n²).
    Hosking,
}

impl FgnMethod {
    pub fn name(&self) -> &'static str {
        match self {
            FgnMethod::DaviesHarte => "davies-harte",
            FgnMethod::Hosking => "hosking",
        }
    }
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let k = k as f64;
    let h2 = 2.0 * hurst;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Fractional Gaussian noise by circulant embedding, falling back to
/// recursive conditioning if the embedding is not non-negative definite.
/// Returns the noise and the method that produced it.
pub fn generate_fgn(spec: &FbmSpec) -> Result<(Vec<f64>, FgnMethod)> {
    spec.validate()?;
    match generate_fgn_with(spec, FgnMethod::DaviesHarte) {
        Ok(x) => Ok((x, FgnMethod::DaviesHarte)),
        Err(HlocError::Generation(_)) => {
            generate_fgn_with(spec, FgnMethod::Hosking).map(|x| (x, FgnMethod::Hosking))
        }
        Err(e) => Err(e),
    }
}

pub fn generate_fgn_with(spec: &FbmSpec, method: FgnMethod) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut x = match method {
        FgnMethod::DaviesHarte => davies_harte(spec.hurst, spec.length, &mut rng)?,
        FgnMethod::Hosking => hosking(spec.hurst, spec.length, &mut rng)?,
    };
    if spec.scale != 1.0 {
        x.iter_mut().for_each(|v| *v *= spec.scale);
    }
    Ok(x)
}

/// Fractional Brownian motion path: the running sum of fractional Gaussian
/// noise, `length` points long.
pub fn generate_fbm(spec: &FbmSpec) -> Result<Vec<f64>> {
    let (noise, _) = generate_fgn(spec)?;
    Ok(cumulate(&noise))
}

fn cumulate(x: &[f64]) -> Vec<f64> {
    x.iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// fBm shifted so its lowest point sits at `floor`, usable as a price series.
pub fn fbm_price_series(spec: &FbmSpec, floor: f64) -> Result<PriceSeries> {
    if !(floor.is_finite() && floor > 0.0) {
        return Err(HlocError::InvalidParameter(format!(
            "price floor must be positive, got {floor}"
        )));
    }
    let path = generate_fbm(spec)?;
    let lowest = path.iter().copied().fold(f64::INFINITY, f64::min);
    PriceSeries::new(path.iter().map(|v| v - lowest + floor).collect())
}

fn draw(rng: &mut ChaCha20Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn davies_harte(hurst: f64, n: usize, rng: &mut ChaCha20Rng) -> Result<Vec<f64>> {
    let m = 2 * n;
    // first row of the circulant: gamma(0..=n) followed by gamma(n-1..=1)
    let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
    for k in 0..=n {
        row.push(Complex::new(fgn_autocovariance(hurst, k), 0.0));
    }
    for k in (1..n).rev() {
        row.push(Complex::new(fgn_autocovariance(hurst, k), 0.0));
    }

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);

    let peak = row.iter().fold(0.0f64, |a, c| a.max(c.re.abs()));
    let mut eig = Vec::with_capacity(m);
    for c in &row {
        if c.re < -1e-10 * peak {
            return Err(HlocError::Generation(format!(
                "circulant embedding has a negative eigenvalue {} (H={hurst}, n={n})",
                c.re
            )));
        }
        eig.push(c.re.max(0.0));
    }

    let mf = m as f64;
    let mut w = vec![Complex::new(0.0, 0.0); m];
    w[0] = Complex::new((eig[0] / mf).sqrt() * draw(rng), 0.0);
    for k in 1..n {
        let s = (eig[k] / (2.0 * mf)).sqrt();
        let (u, v) = (draw(rng), draw(rng));
        w[k] = Complex::new(s * u, s * v);
        w[m - k] = w[k].conj();
    }
    w[n] = Complex::new((eig[n] / mf).sqrt() * draw(rng), 0.0);

    fft.process(&mut w);
    Ok(w[..n].iter().map(|c| c.re).collect())
}

fn hosking(hurst: f64, n: usize, rng: &mut ChaCha20Rng) -> Result<Vec<f64>> {
    let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(hurst, k)).collect();
    let mut x = Vec::with_capacity(n);
    let mut phi: Vec<f64> = Vec::with_capacity(n);
    let mut prev: Vec<f64> = Vec::with_capacity(n);
    let mut v = gamma[0];
    x.push(v.sqrt() * draw(rng));
    for t in 1..n {
        let mut num = gamma[t];
        for j in 1..t {
            num -= phi[j - 1] * gamma[t - j];
        }
        let reflection = num / v;
        prev.clear();
        prev.extend_from_slice(&phi);
        for j in 1..t {
            phi[j - 1] = prev[j - 1] - reflection * prev[t - j - 1];
        }
        phi.push(reflection);
        v *= 1.0 - reflection * reflection;
        if !(v > 0.0) {
            return Err(HlocError::Generation(format!(
                "conditional variance collapsed at step {t} (H={hurst})"
            )));
        }
        let mean: f64 = (1..=t).map(|j| phi[j - 1] * x[t - j]).sum();
        x.push(mean + v.sqrt() * draw(rng));
    }
    Ok(x)
}

/// Cumulative relative drops, one per session after the rupture, measured
/// against the rupture close. Values may shrink again to model a rebound.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DropSchedule {
    pub drops: Vec<f64>,
}

impl DropSchedule {
    pub fn new(drops: Vec<f64>) -> Self {
        Self { drops }
    }

    /// Drop shaped like a crash catalog row: the first three sessions fall
    /// linearly to `initial_drop`, the decline continues linearly to
    /// `total_drop` at session `duration`, then the price rebounds halfway
    /// over `rebound` sessions.
    pub fn crash(initial_drop: f64, total_drop: f64, duration: usize, rebound: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&initial_drop) || !(total_drop > 0.0 && total_drop < 1.0) {
            return Err(HlocError::InvalidProfile(format!(
                "drops must lie in [0, 1): initial {initial_drop}, total {total_drop}"
            )));
        }
        if initial_drop > total_drop {
            return Err(HlocError::InvalidProfile(format!(
                "initial drop {initial_drop} exceeds total drop {total_drop}"
            )));
        }
        if duration < 3 || (duration == 3 && initial_drop != total_drop) {
            return Err(HlocError::InvalidProfile(format!(
                "duration {duration} cannot hold the initial three-session drop"
            )));
        }
        let mut drops = Vec::with_capacity(duration + rebound);
        for k in 1..=2 {
            drops.push(initial_drop * k as f64 / 3.0);
        }
        drops.push(initial_drop);
        let span = (duration - 3) as f64;
        for k in 4..duration {
            drops.push(initial_drop + (total_drop - initial_drop) * (k - 3) as f64 / span);
        }
        if duration > 3 {
            drops.push(total_drop);
        }
        for k in 1..=rebound {
            drops.push(total_drop - 0.5 * total_drop * k as f64 / rebound as f64);
        }
        Ok(Self { drops })
    }
}

/// A rising base path of `pre_len` sessions ending at `base` (the rupture,
/// session `pre_len - 1`) followed by the drop schedule.
pub fn generate_crash_series(pre_len: usize, schedule: &DropSchedule, base: f64) -> Result<PriceSeries> {
    crash_segment(pre_len, schedule, base, 0.6 * base)
}

fn crash_segment(pre_len: usize, schedule: &DropSchedule, base: f64, start: f64) -> Result<PriceSeries> {
    if pre_len == 0 {
        return Err(HlocError::InvalidProfile("pre-crash path needs at least one session".into()));
    }
    if !(base.is_finite() && base > 0.0) {
        return Err(HlocError::InvalidProfile(format!("base must be positive, got {base}")));
    }
    if let Some(d) = schedule.drops.iter().find(|d| !(d.is_finite() && **d < 1.0)) {
        return Err(HlocError::InvalidProfile(format!(
            "drop {d} would make the price non-positive"
        )));
    }

    let mut closes = Vec::with_capacity(pre_len + schedule.drops.len());
    let denom = pre_len.saturating_sub(1).max(1) as f64;
    for k in 0..pre_len - 1 {
        closes.push(start + (base - start) * k as f64 / denom);
    }
    closes.push(base);
    closes.extend(schedule.drops.iter().map(|d| base - base * d));
    PriceSeries::new(closes).map_err(|e| HlocError::InvalidProfile(e.to_string()))
}

/// Several crash fixtures laid end to end. Each base path rises from the
/// previous segment's last close, so no later price undercuts an earlier
/// post-crash minimum. Returns the series and the rupture session of every
/// segment.
pub fn generate_crash_catalog(
    pre_len: usize,
    schedules: &[DropSchedule],
    base: f64,
) -> Result<(PriceSeries, Vec<usize>)> {
    let mut closes = Vec::new();
    let mut ruptures = Vec::with_capacity(schedules.len());
    for schedule in schedules {
        let start = closes.last().copied().unwrap_or(0.6 * base);
        let segment = crash_segment(pre_len, schedule, base, start)?;
        ruptures.push(closes.len() + pre_len - 1);
        closes.extend_from_slice(segment.closes());
    }
    if closes.is_empty() {
        return Err(HlocError::InvalidProfile("no crash schedules given".into()));
    }
    Ok((PriceSeries::new(closes)?, ruptures))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn autocovariance_at_half_is_white() {
        assert_eq!(fgn_autocovariance(0.5, 0), 1.0);
        for k in 1..10 {
            assert!(fgn_autocovariance(0.5, k).abs() < 1e-15);
        }
        assert!(fgn_autocovariance(0.7, 1) > 0.0);
        assert!(fgn_autocovariance(0.3, 1) < 0.0);
    }

    #[test]
    fn seeded_determinism() {
        let spec = FbmSpec::new(0.7, 512, 9);
        assert_eq!(generate_fbm(&spec).unwrap(), generate_fbm(&spec).unwrap());
        let other = FbmSpec::new(0.7, 512, 10);
        assert_ne!(generate_fbm(&spec).unwrap(), generate_fbm(&other).unwrap());
    }

    #[test]
    fn spec_bounds() {
        assert!(FbmSpec::new(1.2, 100, 1).validate().is_err());
        assert!(FbmSpec::new(0.0, 100, 1).validate().is_err());
        assert!(FbmSpec::new(0.5, 15, 1).validate().is_err());
        assert!(FbmSpec::new(0.5, 16, 1).validate().is_ok());
    }

    #[test]
    fn embedding_is_used_across_the_hurst_range() {
        for h in [0.05, 0.3, 0.5, 0.7, 0.95] {
            let (_, method) = generate_fgn(&FbmSpec::new(h, 64, 1)).unwrap();
            assert_eq!(method, FgnMethod::DaviesHarte, "H={h}");
        }
    }

    #[test]
    fn half_hurst_has_no_lag_one_correlation() {
        let n = 8192;
        let (x, _) = generate_fgn(&FbmSpec::new(0.5, n, 3)).unwrap();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        let lag1: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        assert!((lag1 / var).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn crash_schedule_anchors_are_exact() {
        let s = DropSchedule::crash(0.11, 0.65, 41, 10).unwrap();
        assert_eq!(s.drops.len(), 51);
        assert_eq!(s.drops[2], 0.11);
        assert_eq!(s.drops[40], 0.65);
        let min = s.drops.iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(min, 0.65);
    }

    #[test]
    fn crash_schedule_validation() {
        assert!(DropSchedule::crash(0.2, 0.1, 30, 0).is_err());
        assert!(DropSchedule::crash(0.1, 1.0, 30, 0).is_err());
        assert!(DropSchedule::crash(0.1, 0.3, 2, 0).is_err());
        assert!(generate_crash_series(10, &DropSchedule::new(vec![0.5, 1.2]), 100.0).is_err());
        assert!(generate_crash_series(0, &DropSchedule::default(), 100.0).is_err());
    }

    #[test]
    fn crash_series_layout() {
        let s = DropSchedule::crash(0.04, 0.39, 30, 5).unwrap();
        let series = generate_crash_series(20, &s, 100.0).unwrap();
        assert_eq!(series.len(), 20 + 35);
        assert_eq!(series.closes()[19], 100.0);
        assert!(series.closes()[..20].windows(2).all(|w| w[0] < w[1]));
        assert_eq!(series.closes()[22], 96.0);
        assert_eq!(series.closes()[49], 61.0);
    }
}
