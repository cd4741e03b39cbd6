use serde::{Deserialize, Serialize};

use super::SimError;
use crate::latency::linear_fit;

/// `(validation loss, accuracy %)` for the sixteen on-track models.
pub const TRACK_PERF_LOSS_ACCURACY: [(f64, f64); 16] = [
    (0.031, 84.9),
    (0.031, 85.0),
    (0.032, 85.2),
    (0.042, 82.1),
    (0.060, 75.3),
    (0.033, 83.8),
    (0.032, 85.1),
    (0.073, 67.7),
    (0.050, 78.2),
    (0.052, 76.5),
    (0.084, 65.6),
    (0.057, 75.0),
    (0.044, 80.4),
    (0.072, 69.8),
    (0.066, 72.8),
    (0.083, 62.7),
];

/// Affine link `accuracy % = intercept + slope · loss`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMapping {
    pub intercept: f64,
    pub slope: f64,
}

impl ErrorMapping {
    pub fn accuracy(&self, loss: f64) -> f64 {
        self.intercept + self.slope * loss
    }

    pub fn p_err(&self, loss: f64) -> f64 {
        (1.0 - self.accuracy(loss) / 100.0).clamp(0.0, 1.0)
    }

    /// Loss whose unclamped error probability is `p_err`.
    pub fn loss_for(&self, p_err: f64) -> f64 {
        ((1.0 - p_err) * 100.0 - self.intercept) / self.slope
    }
}

pub fn fit_error_mapping(pairs: &[(f64, f64)]) -> Result<ErrorMapping, SimError> {
    let (losses, accs): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let fit = linear_fit(&losses, &accs)?;
    Ok(ErrorMapping {
        intercept: fit.intercept,
        slope: fit.slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_point_line() {
        let m = fit_error_mapping(&[(0.031, 84.9), (0.084, 65.6)]).unwrap();
        assert_abs_diff_eq!(m.accuracy(0.031), 84.9, epsilon = 1e-9);
        assert_abs_diff_eq!(m.accuracy(0.084), 65.6, epsilon = 1e-9);
        assert_abs_diff_eq!(m.p_err(0.031), 0.151, epsilon = 1e-9);
        assert_abs_diff_eq!(m.loss_for(m.p_err(0.05)), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_and_clamped() {
        assert!(fit_error_mapping(&[(0.03, 80.0), (0.03, 81.0)]).is_err());
        assert!(fit_error_mapping(&[(0.03, 80.0)]).is_err());
        let m = fit_error_mapping(&TRACK_PERF_LOSS_ACCURACY).unwrap();
        assert!(m.slope < 0.0);
        assert_eq!(m.p_err(-10.0), 0.0);
        assert_eq!(m.p_err(10.0), 1.0);
    }
}
