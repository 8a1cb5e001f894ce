//! Least-squares convergence rates on log-log data.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlopeError {
    #[error("a slope fit needs at least 3 rows, got {0}")]
    TooFew(usize),
    #[error("slope fits need positive finite data, got h = {h}, value = {value}")]
    NonPositive { h: f64, value: f64 },
    #[error("all rows share the same h")]
    Degenerate,
}

/// Slope of the least-squares line through `(log h, log value)`.
pub fn fit_slope(rows: &[(f64, f64)]) -> Result<f64, SlopeError> {
    if rows.len() < 3 {
        return Err(SlopeError::TooFew(rows.len()));
    }
    let mut pts = Vec::with_capacity(rows.len());
    for &(h, value) in rows {
        if !(h > 0.0 && value > 0.0 && h.is_finite() && value.is_finite()) {
            return Err(SlopeError::NonPositive { h, value });
        }
        pts.push((h.ln(), value.ln()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= f64::EPSILON * k {
        return Err(SlopeError::Degenerate);
    }
    Ok(sxy / sxx)
}
