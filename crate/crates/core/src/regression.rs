//! Ordinary least squares helpers shared by the estimators.

use crate::error::{HlocError, Result};

/// Result of a straight-line OLS fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope; zero for an exact fit, NaN with two points.
    pub stderr_slope: f64,
    pub n: usize,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Fits a line through `(x, y)` pairs using centered sums.
///
/// Fails when fewer than two points are given or all abscissae coincide.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(HlocError::Internal(format!(
            "abscissa/ordinate length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(HlocError::InsufficientData { needed: 2, available: n });
    }
    let nf = n as f64;
    let x_mean = x.iter().sum::<f64>() / nf;
    let y_mean = y.iter().sum::<f64>() / nf;

    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - x_mean;
        let dy = yi - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return Err(HlocError::DegenerateRegression(
            "all abscissae are identical".into(),
        ));
    }

    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;

    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - (intercept + slope * xi);
            r * r
        })
        .sum();

    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        // flat ordinates are fitted exactly by a zero slope
        1.0
    };
    let stderr_slope = if n > 2 {
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };

    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        stderr_slope,
        n,
    })
}

/// Mean squared residual of an OLS polynomial fit of `degree` against
/// offsets `0..y.len()`.
///
/// Degree 1 uses the closed form; higher degrees project out an orthonormal
/// polynomial basis built by modified Gram-Schmidt on centered abscissae.
pub fn polyfit_mean_sq_residual(y: &[f64], degree: usize) -> Result<f64> {
    let n = y.len();
    if n < degree + 2 {
        return Err(HlocError::InvalidScale { tau: n, len: n });
    }
    match degree {
        0 => {
            let mean = y.iter().sum::<f64>() / n as f64;
            Ok(y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64)
        }
        1 => Ok(linear_mean_sq_residual(y)),
        _ => Ok(orthogonal_mean_sq_residual(y, degree)),
    }
}

fn linear_mean_sq_residual(y: &[f64]) -> f64 {
    let n = y.len();
    let nf = n as f64;
    let x_mean = (nf - 1.0) / 2.0;
    let y_mean = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (i, &v) in y.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxx += dx * dx;
        sxy += dx * (v - y_mean);
    }
    let slope = sxy / sxx;
    let mut sse = 0.0;
    for (i, &v) in y.iter().enumerate() {
        let r = (v - y_mean) - slope * (i as f64 - x_mean);
        sse += r * r;
    }
    sse / nf
}

fn orthogonal_mean_sq_residual(y: &[f64], degree: usize) -> f64 {
    let n = y.len();
    let half = (n as f64 - 1.0) / 2.0;
    // scale abscissae into [-1, 1] to keep powers well conditioned
    let scale = if half > 0.0 { half } else { 1.0 };
    let t: Vec<f64> = (0..n).map(|i| (i as f64 - half) / scale).collect();

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(degree + 1);
    for d in 0..=degree {
        let mut v: Vec<f64> = t.iter().map(|&ti| ti.powi(d as i32)).collect();
        for q in &basis {
            let proj: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= proj * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }

    let mut resid = y.to_vec();
    for q in &basis {
        let proj: f64 = resid.iter().zip(q).map(|(a, b)| a * b).sum();
        resid.iter_mut().zip(q).for_each(|(a, b)| *a -= proj * b);
    }
    resid.iter().map(|r| r * r).sum::<f64>() / n as f64
}
