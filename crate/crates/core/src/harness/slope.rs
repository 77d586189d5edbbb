//! Least-squares slopes on log-log axes and the verdicts derived from them.

use serde::Serialize;

use crate::error::{Error, Result};

/// Slopes within this distance of zero count as bounded.
pub const FLAT_TOLERANCE: f64 = 0.02;

/// Ordinary least-squares slope of `ln value` against `ln n`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: points.len(),
        });
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, v) in points {
        if !(n > 0.0 && v > 0.0 && n.is_finite() && v.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "log-log fit needs positive finite points, got ({n}, {v})"
            )));
        }
        xs.push(n.ln());
        ys.push(v.ln());
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::OutOfRange("log-log fit needs distinct n".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Limit behaviour read off a fitted slope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Diverging,
    Vanishing,
    Bounded,
}

impl Trend {
    pub fn from_slope(slope: f64) -> Self {
        if slope > FLAT_TOLERANCE {
            Trend::Diverging
        } else if slope < -FLAT_TOLERANCE {
            Trend::Vanishing
        } else {
            Trend::Bounded
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-0.25))).collect();
        assert!((loglog_slope(&pts).unwrap() + 0.25).abs() < 1e-12);
        assert_eq!(Trend::from_slope(-0.25), Trend::Vanishing);
        assert_eq!(Trend::from_slope(0.01), Trend::Bounded);
        assert_eq!(Trend::from_slope(1.5), Trend::Diverging);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(loglog_slope(&[(10.0, 1.0)]).is_err());
        assert!(loglog_slope(&[(10.0, 1.0), (10.0, 2.0)]).is_err());
        assert!(loglog_slope(&[(10.0, 0.0), (20.0, 2.0)]).is_err());
    }
}
