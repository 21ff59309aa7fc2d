//! Log-log scaling fits of extracted timescales.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {need} usable points for a fit, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("axis `{0}` has fewer than two distinct values")]
    DegenerateAxis(&'static str),
    #[error("non-positive or non-finite value in log fit")]
    NonPositive,
}

/// Ordinary least-squares line `y = a + s·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Standard error of the slope; zero for an exact two-point fit.
    pub slope_stderr: f64,
    pub points: usize,
}

/// Straight-line least squares; at least two distinct x values.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit, FitError> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return Err(FitError::TooFewPoints { need: 2, got: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(FitError::DegenerateAxis("x"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit { intercept, slope, slope_stderr, points: n })
}

/// One observation of a timescale on the `(ε, N)` grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimescalePoint {
    pub epsilon: f64,
    pub n: f64,
    pub time: f64,
}

/// Exponents of `t ∝ ε^{s_ε} N^{s_N}` from a joint fit
/// `log t = a + s_ε log ε + s_N log N`, plus independent per-axis fits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimescaleFit {
    pub epsilon_grid: Vec<f64>,
    pub n_grid: Vec<f64>,
    pub points: Vec<TimescalePoint>,
    pub intercept: f64,
    pub slope_epsilon: f64,
    pub slope_epsilon_stderr: f64,
    pub slope_n: f64,
    pub slope_n_stderr: f64,
    /// Whether each axis carries at least four distinct values, the
    /// minimum for a slope worth quoting.
    pub sufficient: bool,
}

pub const MIN_POINTS_PER_AXIS: usize = 4;

fn distinct(v: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut d: Vec<f64> = v.into_iter().collect();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d.dedup();
    d
}

/// Fits every finite, positive point. Points with a missing time (e.g. a
/// threshold never reached) should be dropped by the caller.
pub fn fit_timescales(points: &[TimescalePoint]) -> Result<TimescaleFit, FitError> {
    if points.iter().any(|p| !(p.epsilon > 0.0 && p.n > 0.0 && p.time > 0.0 && p.time.is_finite())) {
        return Err(FitError::NonPositive);
    }
    if points.len() < 4 {
        return Err(FitError::TooFewPoints { need: 4, got: points.len() });
    }
    let eps_grid = distinct(points.iter().map(|p| p.epsilon));
    let n_grid = distinct(points.iter().map(|p| p.n));
    if eps_grid.len() < 2 {
        return Err(FitError::DegenerateAxis("epsilon"));
    }
    if n_grid.len() < 2 {
        return Err(FitError::DegenerateAxis("N"));
    }

    // Normal equations for three parameters on centred regressors.
    let k = points.len() as f64;
    let xs: Vec<[f64; 2]> = points.iter().map(|p| [p.epsilon.ln(), p.n.ln()]).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.time.ln()).collect();
    let mean = |f: &dyn Fn(usize) -> f64| (0..points.len()).map(f).sum::<f64>() / k;
    let m0 = mean(&|i| xs[i][0]);
    let m1 = mean(&|i| xs[i][1]);
    let my = mean(&|i| ys[i]);
    let (mut s00, mut s01, mut s11, mut s0y, mut s1y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let (a, b, c) = (x[0] - m0, x[1] - m1, y - my);
        s00 += a * a;
        s01 += a * b;
        s11 += b * b;
        s0y += a * c;
        s1y += b * c;
    }
    let det = s00 * s11 - s01 * s01;
    if !(det.abs() > 1e-14 * (s00 * s11).max(1e-300)) {
        return Err(FitError::DegenerateAxis("epsilon·N collinear"));
    }
    let se = (s11 * s0y - s01 * s1y) / det;
    let sn = (s00 * s1y - s01 * s0y) / det;
    let intercept = my - se * m0 - sn * m1;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - se * x[0] - sn * x[1]).powi(2))
        .sum();
    let dof = points.len().saturating_sub(3);
    let sigma2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
    Ok(TimescaleFit {
        sufficient: eps_grid.len() >= MIN_POINTS_PER_AXIS && n_grid.len() >= MIN_POINTS_PER_AXIS,
        epsilon_grid: eps_grid,
        n_grid,
        points: points.to_vec(),
        intercept,
        slope_epsilon: se,
        slope_epsilon_stderr: (sigma2 * s11 / det).sqrt(),
        slope_n: sn,
        slope_n_stderr: (sigma2 * s00 / det).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power_law() {
        let mut pts = Vec::new();
        for e in [1e-3, 1e-2, 3e-2, 1e-1] {
            for n in [50.0, 100.0, 200.0, 400.0] {
                pts.push(TimescalePoint { epsilon: e, n, time: 0.58 / (e * n) });
            }
        }
        let f = fit_timescales(&pts).unwrap();
        assert!((f.slope_epsilon + 1.0).abs() < 1e-12);
        assert!((f.slope_n + 1.0).abs() < 1e-12);
        assert!((f.intercept - 0.58f64.ln()).abs() < 1e-10);
        assert!(f.sufficient);
        assert!(f.slope_n_stderr < 1e-10);
    }

    #[test]
    fn two_by_two_fits_but_flags_insufficient() {
        let pts: Vec<_> = [(1e-3, 50.0), (1e-3, 100.0), (1e-2, 50.0), (1e-2, 100.0)]
            .iter()
            .map(|&(e, n)| TimescalePoint { epsilon: e, n, time: 1.0 / (e * n) })
            .collect();
        let f = fit_timescales(&pts).unwrap();
        assert!((f.slope_epsilon + 1.0).abs() < 1e-12);
        assert!(!f.sufficient);
    }

    #[test]
    fn rejects_degenerate() {
        let pts: Vec<_> = (0..4).map(|i| TimescalePoint { epsilon: 1e-2, n: 10.0 * (i + 1) as f64, time: 1.0 }).collect();
        assert!(matches!(fit_timescales(&pts), Err(FitError::DegenerateAxis("epsilon"))));
        assert!(matches!(fit_timescales(&pts[..2]), Err(FitError::TooFewPoints { .. })));
    }

    #[test]
    fn line_stderr() {
        let f = fit_line(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.1, 1.9, 3.0]).unwrap();
        assert!((f.slope - 0.98).abs() < 1e-12);
        assert!(f.slope_stderr > 0.0);
    }
}
