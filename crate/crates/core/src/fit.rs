//! Log-linear regression for exponential decay rates.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} samples in the fit window, found {found}")]
    InsufficientSamples { needed: usize, found: usize },
    #[error("sample at t = {t} has nonpositive magnitude {magnitude}")]
    NonPositiveMagnitude { t: f64, magnitude: f64 },
    #[error("fit window [{0}, {1}] is empty or degenerate")]
    DegenerateWindow(f64, f64),
}

pub const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    /// Amplitude rate `γ` with `|A|² ~ exp(−2γt)`.
    pub rate: f64,
    /// Root-mean-square residual of the `ln|A|²` regression.
    pub residual_rms: f64,
    pub samples: usize,
}

/// Least-squares fit of `ln(|A|²) = c − 2γ t` over samples with `t` in `window`.
///
/// `samples` are `(t, |A|)` pairs. Returns the amplitude rate `γ`.
pub fn fit_decay_rate(samples: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit, FitError> {
    let (t0, t1) = window;
    if !(t1 > t0) {
        return Err(FitError::DegenerateWindow(t0, t1));
    }
    let selected: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|(t, _)| *t >= t0 && *t <= t1)
        .collect();
    if selected.len() < MIN_FIT_SAMPLES {
        return Err(FitError::InsufficientSamples { needed: MIN_FIT_SAMPLES, found: selected.len() });
    }
    let mut points = Vec::with_capacity(selected.len());
    for (t, magnitude) in selected {
        if !(magnitude > 0.0) {
            return Err(FitError::NonPositiveMagnitude { t, magnitude });
        }
        points.push((t, 2.0 * magnitude.ln()));
    }

    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxx, sxy) = points.iter().fold((0.0, 0.0), |(sxx, sxy), &(t, y)| {
        let dt = t - mean_t;
        (sxx + dt * dt, sxy + dt * (y - mean_y))
    });
    if sxx == 0.0 {
        return Err(FitError::DegenerateWindow(t0, t1));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_t;
    let ss: f64 = points
        .iter()
        .map(|&(t, y)| {
            let r = y - (intercept + slope * t);
            r * r
        })
        .sum();
    Ok(RateFit { rate: -0.5 * slope, residual_rms: (ss / n).sqrt(), samples: points.len() })
}

/// Fit of `ln y = −γ t` (unit value at `t = 0`), returning `γ`.
///
/// Used for envelopes that are normalized to one at the origin, where the
/// intercept is known exactly.
pub fn fit_rate_through_origin(samples: &[(f64, f64)]) -> Result<f64, FitError> {
    let mut stt = 0.0;
    let mut sty = 0.0;
    let mut used = 0;
    for &(t, y) in samples {
        if !(y > 0.0) {
            return Err(FitError::NonPositiveMagnitude { t, magnitude: y });
        }
        stt += t * t;
        sty += t * y.ln();
        used += 1;
    }
    if used < MIN_FIT_SAMPLES {
        return Err(FitError::InsufficientSamples { needed: MIN_FIT_SAMPLES, found: used });
    }
    if stt == 0.0 {
        return Err(FitError::DegenerateWindow(0.0, 0.0));
    }
    Ok(-sty / stt)
}
