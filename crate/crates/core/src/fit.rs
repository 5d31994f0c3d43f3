//! Least-squares exponent fitting and plateau diagnostics. Every fitted
//! exponent carries its window and a 95% confidence interval.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    /// 95% confidence half-width of the slope.
    pub ci95: f64,
    /// RMS residual of the fit in log space.
    pub residual: f64,
    /// Fit window in the abscissa variable (not its log).
    pub window: (f64, f64),
    pub points: usize,
}

/// Two-sided 97.5% Student-t quantile for `df` degrees of freedom.
fn t_quantile(df: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179,
        2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
        2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    if df == 0 {
        f64::INFINITY
    } else if df <= 30 {
        TABLE[df - 1]
    } else {
        1.96 + 2.5 / df as f64
    }
}

/// Straight-line least squares y = slope·x + intercept.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    let n = xs.len();
    if n != ys.len() || n < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("degenerate abscissa".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let sigma2 = ss_res / (nf - 2.0).max(1.0);
    let stderr = (sigma2 / sxx).sqrt();
    let ci95 = t_quantile(n.saturating_sub(2)) * stderr;
    Ok(FitResult {
        slope,
        intercept,
        stderr,
        ci95,
        residual: (ss_res / nf).sqrt(),
        window: (
            xs.iter().cloned().fold(f64::INFINITY, f64::min),
            xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ),
        points: n,
    })
}

/// Fits |y| ≈ K x^p on positive data; returns the exponent fit with the
/// window recorded in x (not log x).
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    let mut lx = Vec::with_capacity(xs.len());
    let mut ly = Vec::with_capacity(xs.len());
    for (&x, &y) in xs.iter().zip(ys) {
        if x > 0.0 && y.abs() > 0.0 && y.is_finite() {
            lx.push(x.ln());
            ly.push(y.abs().ln());
        }
    }
    if lx.len() < 3 {
        return Err(Error::Fit(format!(
            "only {} usable points for log-log fit",
            lx.len()
        )));
    }
    let mut fit = linear_fit(&lx, &ly)?;
    fit.window = (
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(fit)
}

/// Fitted exponent of a profile's singular behavior at the cone: the
/// least-squares slope of log|Q(a) − limit| against log|1 − a| over the
/// given window of offsets z = |1 − a| (z ascending or not).
///
/// `side_sign` is +1 left of the cone (a = 1 − z) and −1 right (a = 1 + z).
pub fn fit_singular_exponent<F: Fn(f64) -> f64>(
    profile: F,
    limit: f64,
    side_sign: f64,
    window: (f64, f64),
    points: usize,
) -> Result<FitResult> {
    if points < 10 {
        return Err(Error::Fit(format!(
            "window too small for a stable fit: {points} points"
        )));
    }
    let zs = crate::quad::logspace(window.0, window.1, points);
    let ys: Vec<f64> = zs
        .iter()
        .map(|&z| (profile(1.0 - side_sign * z) - limit).abs())
        .collect();
    loglog_fit(&zs, &ys)
}

/// Relative flatness of data over a window: max |v − mean| / |mean|.
pub fn plateau_deviation(vals: &[f64]) -> f64 {
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    if mean == 0.0 {
        return f64::INFINITY;
    }
    vals.iter()
        .map(|v| (v - mean).abs())
        .fold(0.0f64, f64::max)
        / mean.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::logspace;

    #[test]
    fn recovers_exact_power_law() {
        let xs = logspace(1e-5, 1e-1, 30);
        let ys: Vec<f64> = xs.iter().map(|x| 3.7 * x.powf(-4.0 / 3.0)).collect();
        let fit = loglog_fit(&xs, &ys).unwrap();
        assert!((fit.slope + 4.0 / 3.0).abs() < 1e-12);
        assert!(fit.ci95 < 1e-10);
    }

    #[test]
    fn singular_exponent_synthetic_two_thirds() {
        // q1 (1-a)^{2/3} + q2 with the limit subtracted -> exponent 2/3
        let q1 = 0.03;
        let q2 = 0.01;
        let f = |a: f64| q1 * (1.0 - a).powf(2.0 / 3.0) + q2;
        let fit = fit_singular_exponent(f, q2, 1.0, (1e-6, 1e-2), 40).unwrap();
        assert!((fit.slope - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn singular_exponent_discriminates_one_half() {
        // the energy-critical control: (1-a)^{1/2}
        let f = |a: f64| 0.2 * (1.0 - a).powf(0.5) + 0.4;
        let fit = fit_singular_exponent(f, 0.4, 1.0, (1e-6, 1e-2), 40).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-10);
        assert!((fit.slope - 2.0 / 3.0).abs() > 0.1);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let f = |a: f64| 1.0 - a;
        assert!(fit_singular_exponent(f, 0.0, 1.0, (1e-4, 1e-2), 5).is_err());
    }

    #[test]
    fn plateau_flags_flat_data() {
        assert!(plateau_deviation(&[2.0, 2.001, 1.999]) < 1e-3);
        assert!(plateau_deviation(&[1.0, 2.0]) > 0.3);
    }
}
