//! Least-squares fits on log-log data.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Errors at or below this level are treated as round-off.
pub const ROUNDOFF_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

/// Fits `log err = slope log eps + intercept`.
pub fn fit_rate(eps: &[f64], err: &[f64]) -> Result<RateFit> {
    if eps.len() != err.len() || eps.len() < 3 {
        return Err(Error::DegenerateFit);
    }
    if err.iter().any(|e| !(*e > ROUNDOFF_FLOOR) || !e.is_finite()) || eps.iter().any(|e| *e <= 0.0) {
        return Err(Error::DegenerateFit);
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / k;
    let ym = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - slope * x - intercept;
            r * r
        })
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(RateFit { slope, intercept, residual })
}
