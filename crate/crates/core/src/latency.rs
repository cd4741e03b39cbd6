//! Linear MACs → latency model, its least-squares fit, and budget inversion.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Name of the built-in depthwise-separable model for the RP2040 board.
pub const PICO_DS_V1: &str = "pico-ds-v1";

#[derive(Debug, thiserror::Error)]
pub enum LatencyError {
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate fit: all x values are equal")]
    DegenerateFit,
    #[error("deadline {deadline} ms is not above the fixed overhead {intercept} ms")]
    InfeasibleDeadline { deadline: f64, intercept: f64 },
    #[error("model slope {0} is not positive")]
    NonPositiveSlope(f64),
    #[error("invalid profile point on row {row}: {reason}")]
    InvalidPoint { row: usize, reason: String },
    #[error("profile csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
}

/// Ordinary least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit<T = f64> {
    pub slope: T,
    pub intercept: T,
    pub r2: T,
}

impl<T: Scalar> LinearFit<T> {
    pub fn eval(&self, x: T) -> T {
        self.slope * x + self.intercept
    }
}

pub fn linear_fit<T: Scalar>(xs: &[T], ys: &[T]) -> Result<LinearFit<T>, LatencyError> {
    assert_eq!(xs.len(), ys.len(), "x and y must have equal length");
    let n = xs.len();
    if n < 2 {
        return Err(LatencyError::TooFewPoints(n));
    }
    let nf = T::of_usize(n);
    let mean_x = xs.iter().copied().fold(T::zero(), |a, b| a + b) / nf;
    let mean_y = ys.iter().copied().fold(T::zero(), |a, b| a + b) / nf;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() {
        return Err(LatencyError::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .fold(T::zero(), |a, b| a + b);
    let r2 = if syy == T::zero() {
        T::one()
    } else {
        (T::one() - ss_res / syy).max(T::zero()).min(T::one())
    };
    Ok(LinearFit { slope, intercept, r2 })
}

/// One profiled model: its MAC count and measured latency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint<T = f64> {
    pub macs: u64,
    pub latency_ms: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel<T = f64> {
    pub name: String,
    /// Milliseconds per MAC.
    pub slope: T,
    /// Fixed per-inference overhead in milliseconds.
    pub intercept: T,
    pub r2: T,
}

impl<T: Scalar> LatencyModel<T> {
    /// Coefficients profiled on the RP2040 for depthwise-separable networks.
    pub fn pico_ds_v1() -> Self {
        Self {
            name: PICO_DS_V1.into(),
            slope: T::of_f64(0.000236),
            intercept: T::of_f64(22.189388),
            r2: T::of_f64(0.9996),
        }
    }

    pub fn fit(name: impl Into<String>, points: &[ProfilePoint<T>]) -> Result<Self, LatencyError> {
        let xs: Vec<T> = points.iter().map(|p| T::of_f64(p.macs as f64)).collect();
        let ys: Vec<T> = points.iter().map(|p| p.latency_ms).collect();
        let f = linear_fit(&xs, &ys)?;
        Ok(Self {
            name: name.into(),
            slope: f.slope,
            intercept: f.intercept,
            r2: f.r2,
        })
    }

    pub fn predict(&self, macs: u64) -> T {
        self.slope * T::of_f64(macs as f64) + self.intercept
    }

    /// Largest MAC count whose predicted latency does not exceed `deadline_ms`.
    pub fn mac_budget(&self, deadline_ms: T) -> Result<u64, LatencyError> {
        if self.slope <= T::zero() {
            return Err(LatencyError::NonPositiveSlope(self.slope.as_f64()));
        }
        if !(deadline_ms > self.intercept) {
            return Err(LatencyError::InfeasibleDeadline {
                deadline: deadline_ms.as_f64(),
                intercept: self.intercept.as_f64(),
            });
        }
        let raw = ((deadline_ms - self.intercept) / self.slope).floor().as_f64();
        let mut budget = if raw >= u64::MAX as f64 { u64::MAX } else { raw as u64 };
        // Division and multiplication round independently; settle on the exact boundary.
        while budget > 0 && self.predict(budget) > deadline_ms {
            budget -= 1;
        }
        while budget < u64::MAX && self.predict(budget + 1) <= deadline_ms {
            budget += 1;
        }
        Ok(budget)
    }
}

impl LatencyModel<f64> {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, LatencyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| LatencyError::Io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("latency model serializes")
    }
}

/// Read a `macs,latency_ms` profile.
pub fn read_profile_csv<R: std::io::Read>(reader: R) -> Result<Vec<ProfilePoint>, LatencyError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["macs", "latency_ms"] {
        return Err(LatencyError::InvalidPoint {
            row: 0,
            reason: format!("expected header `macs,latency_ms`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut points = Vec::new();
    for (i, rec) in rdr.deserialize::<ProfilePoint>().enumerate() {
        let p = rec?;
        if !(p.latency_ms > 0.0) || !p.latency_ms.is_finite() {
            return Err(LatencyError::InvalidPoint {
                row: i + 1,
                reason: format!("latency_ms must be positive, got {}", p.latency_ms),
            });
        }
        points.push(p);
    }
    Ok(points)
}

pub fn load_profile_csv(path: impl AsRef<Path>) -> Result<Vec<ProfilePoint>, LatencyError> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| LatencyError::Io(path.display().to_string(), e))?;
    read_profile_csv(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pico() -> LatencyModel {
        LatencyModel::pico_ds_v1()
    }

    #[test]
    fn exact_two_point_line() {
        let pts = [
            ProfilePoint { macs: 0, latency_ms: 22.189388 },
            ProfilePoint { macs: 1_000_000, latency_ms: 258.189388 },
        ];
        let m: LatencyModel = LatencyModel::fit("t", &pts).unwrap();
        assert!((m.slope - 0.000236).abs() < 1e-15);
        assert!((m.intercept - 22.189388).abs() < 1e-9);
        assert_eq!(m.r2, 1.0);
    }

    #[test]
    fn noisy_synthetic_line() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 5.0 + rng.gen_range(-0.1..=0.1)).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 0.1);
        assert!(f.r2 > 0.99 && f.r2 <= 1.0);
    }

    #[test]
    fn degenerate_and_short_inputs() {
        let p = ProfilePoint { macs: 5, latency_ms: 1.0 };
        assert!(matches!(LatencyModel::fit("t", &[p]), Err(LatencyError::TooFewPoints(1))));
        assert!(matches!(LatencyModel::fit("t", &[p, p, p]), Err(LatencyError::DegenerateFit)));
    }

    #[test]
    fn predictions() {
        let m = pico();
        assert!((m.predict(470_000) - 133.109388).abs() < 1e-9);
        assert_eq!(m.predict(0), 22.189388);
        assert!((m.predict(2_114_024) - 521.099).abs() < 1e-3);
    }

    #[test]
    fn budget_inversion() {
        let m = pico();
        assert_eq!(m.mac_budget(133.0).unwrap(), 469_536);
        assert!(matches!(m.mac_budget(22.189388), Err(LatencyError::InfeasibleDeadline { .. })));
        assert!(matches!(m.mac_budget(1.0), Err(LatencyError::InfeasibleDeadline { .. })));
    }

    #[test]
    fn f32_model_agrees() {
        let m = LatencyModel::<f32>::pico_ds_v1();
        assert!((m.predict(470_000) - 133.109).abs() < 1e-2);
        assert_eq!(m.mac_budget(133.0).unwrap() / 100, 4695);
    }

    #[test]
    fn csv_profile() {
        let pts = read_profile_csv("macs,latency_ms\n100,1.5\n200, 2.5\n".as_bytes()).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(read_profile_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_profile_csv("macs,latency_ms\n1,-2\n".as_bytes()).is_err());
        let empty = read_profile_csv("macs,latency_ms\n".as_bytes()).unwrap();
        assert!(matches!(LatencyModel::fit("t", &empty), Err(LatencyError::TooFewPoints(0))));
    }

    #[test]
    fn model_json_round_trip() {
        let m = pico();
        let back: LatencyModel = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    proptest! {
        #[test]
        fn budget_brackets_deadline(d in 22.2f64..2_000.0) {
            let m = pico();
            let b = m.mac_budget(d).unwrap();
            prop_assert!(m.predict(b) <= d);
            prop_assert!(m.predict(b + 1) > d);
        }

        #[test]
        fn budget_monotone(d1 in 22.2f64..1_000.0, delta in 0.0f64..100.0) {
            let m = pico();
            prop_assert!(m.mac_budget(d1).unwrap() <= m.mac_budget(d1 + delta).unwrap());
        }

        #[test]
        fn exact_lines_recovered(slope in 1e-6f64..10.0, icpt in 0.0f64..100.0, n in 2usize..40) {
            let pts: Vec<ProfilePoint> = (0..n)
                .map(|i| ProfilePoint { macs: (i as u64) * 1_000 + 17, latency_ms: slope * ((i as u64 * 1_000 + 17) as f64) + icpt })
                .collect();
            let m = LatencyModel::fit("p", &pts).unwrap();
            prop_assert!(((m.slope - slope) / slope).abs() < 1e-9);
            prop_assert!((m.intercept - icpt).abs() <= 1e-9 * icpt.max(1.0));
            prop_assert!(m.r2 > 1.0 - 1e-9);
        }
    }
}
