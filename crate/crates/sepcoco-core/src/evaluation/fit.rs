use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Whether means were shifted by +1 before taking logs.
    pub shifted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Regret,
    Ccv,
    SoCalls,
}

/// Least-squares fit of `ln(value)` against `ln(horizon)`.
pub fn fit_log_log(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points".into()));
    }
    if let Some(&(t, v)) = points.iter().find(|(t, v)| !(*t > 0.0 && *v > 0.0)) {
        return Err(Error::DegenerateFit(format!(
            "nonpositive point ({t}, {v})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| libm::log(p.0)).collect();
    let ys: Vec<f64> = points.iter().map(|p| libm::log(p.1)).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all horizons are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        shifted: false,
    })
}

/// Fits the seed-mean of a metric against the horizon.
///
/// `samples` holds `(T, per-seed values)`. At least three distinct horizons
/// and five seeds per horizon are required. CCV means are shifted by +1 when
/// any of them is nonpositive; other metrics must have positive means.
pub fn fit_scaling(samples: &[(usize, Vec<f64>)], metric: Metric) -> Result<ScalingFit> {
    let mut horizons: Vec<usize> = samples.iter().map(|s| s.0).collect();
    horizons.sort_unstable();
    horizons.dedup();
    if horizons.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need 3 distinct horizons, got {}",
            horizons.len()
        )));
    }
    if let Some((t, vals)) = samples.iter().find(|s| s.1.len() < 5) {
        return Err(Error::DegenerateFit(format!(
            "horizon {t} has only {} seeds",
            vals.len()
        )));
    }
    let mut points: Vec<(f64, f64)> = samples
        .iter()
        .map(|(t, vals)| (*t as f64, vals.iter().sum::<f64>() / vals.len() as f64))
        .collect();
    let shift = metric == Metric::Ccv && points.iter().any(|p| p.1 <= 0.0);
    if shift {
        points.iter_mut().for_each(|p| p.1 += 1.0);
    }
    let mut fit = fit_log_log(&points)?;
    fit.shifted = shift;
    Ok(fit)
}
