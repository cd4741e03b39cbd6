use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::InferenceError;

/// Discrete steering command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Steering {
    Left,
    Center,
    Right,
}

impl Steering {
    pub const ALL: [Steering; 3] = [Steering::Left, Steering::Center, Steering::Right];

    /// Yaw-rate sign: +1 left, 0 center, −1 right.
    pub fn sign(self) -> f64 {
        match self {
            Steering::Left => 1.0,
            Steering::Center => 0.0,
            Steering::Right => -1.0,
        }
    }

    /// The two commands other than `self`, in `ALL` order.
    pub fn others(self) -> [Steering; 2] {
        match self {
            Steering::Left => [Steering::Center, Steering::Right],
            Steering::Center => [Steering::Left, Steering::Right],
            Steering::Right => [Steering::Left, Steering::Center],
        }
    }
}

impl fmt::Display for Steering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Steering::Left => "left",
            Steering::Center => "center",
            Steering::Right => "right",
        })
    }
}

impl FromStr for Steering {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Steering::Left),
            "center" | "c" | "straight" => Ok(Steering::Center),
            "right" | "r" => Ok(Steering::Right),
            _ => Err(format!("unknown steering class `{s}`")),
        }
    }
}

/// Map a regression output in `[-1, 1]` to a class with a symmetric deadband.
pub fn categorize(y: f64, deadband: f64) -> Result<Steering, InferenceError> {
    if !(deadband > 0.0 && deadband < 1.0) {
        return Err(InferenceError::DeadbandOutOfRange(deadband));
    }
    Ok(if y < -deadband {
        Steering::Left
    } else if y > deadband {
        Steering::Right
    } else {
        Steering::Center
    })
}

/// Fraction of predictions equal to the ground truth.
pub fn measure_accuracy(predictions: &[Steering], truth: &[Steering]) -> Result<f64, InferenceError> {
    if predictions.len() != truth.len() || predictions.is_empty() {
        return Err(InferenceError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    let hits = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / predictions.len() as f64)
}
