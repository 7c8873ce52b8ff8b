//! Ordinary least-squares slope fits for convergence and rate diagnostics.

use crate::error::{Error, Result};

/// Slope of the OLS line through the pairs with both coordinates finite.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Fit(pts.len()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit(1));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Slope of log(value) against log(n).
pub fn loglog_slope(ns: &[f64], values: &[f64]) -> Result<f64> {
    let lx: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    ols_slope(&lx, &ly)
}

/// Slope of log(errors[t]) against t over the inclusive window `[start, end]`.
/// Points past the end of the series or non-positive are skipped.
pub fn semilog_slope(errors: &[f64], window: [usize; 2]) -> Result<f64> {
    let end = window[1].min(errors.len().saturating_sub(1));
    let (ts, ls): (Vec<f64>, Vec<f64>) = (window[0]..=end)
        .filter(|&t| t < errors.len() && errors[t] > 0.0)
        .map(|t| (t as f64, errors[t].ln()))
        .unzip();
    ols_slope(&ts, &ls)
}
