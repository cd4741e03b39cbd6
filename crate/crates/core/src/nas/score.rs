use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::NasError;
use crate::Scalar;

/// Min/max used to map loss and latency onto [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBounds<T = f64> {
    pub loss_min: T,
    pub loss_max: T,
    pub lat_min: T,
    pub lat_max: T,
}

fn clamp01<T: Scalar>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

impl<T: Scalar> NormBounds<T> {
    pub fn new(loss_min: T, loss_max: T, lat_min: T, lat_max: T) -> Result<Self, NasError> {
        let b = Self {
            loss_min,
            loss_max,
            lat_min,
            lat_max,
        };
        if !(loss_min < loss_max) || !(lat_min < lat_max) {
            return Err(NasError::DegenerateBounds(format!(
                "loss [{loss_min}, {loss_max}], latency [{lat_min}, {lat_max}]"
            )));
        }
        Ok(b)
    }

    /// Min/max over the finite `(loss, latency)` pairs.
    pub fn from_population(points: impl IntoIterator<Item = (T, T)>) -> Result<Self, NasError> {
        let inf = T::infinity();
        let (mut l0, mut l1, mut t0, mut t1) = (inf, -inf, inf, -inf);
        for (loss, lat) in points {
            if loss.is_finite() {
                l0 = l0.min(loss);
                l1 = l1.max(loss);
            }
            if lat.is_finite() {
                t0 = t0.min(lat);
                t1 = t1.max(lat);
            }
        }
        Self::new(l0, l1, t0, t1)
    }

    pub fn norm_loss(&self, loss: T) -> T {
        clamp01((loss - self.loss_min) / (self.loss_max - self.loss_min))
    }

    pub fn norm_latency(&self, lat: T) -> T {
        clamp01((lat - self.lat_min) / (self.lat_max - self.lat_min))
    }

    /// Lower is better, in [0, 2].
    pub fn score(&self, loss: T, lat: T) -> T {
        self.norm_loss(loss) + self.norm_latency(lat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate<T = f64> {
    pub id: u32,
    pub latency_ms: T,
    pub val_loss: T,
    pub score: T,
}

pub fn score_all<T: Scalar>(items: &[(u32, T, T)], bounds: &NormBounds<T>) -> Vec<ScoredCandidate<T>> {
    items
        .iter()
        .map(|&(id, val_loss, latency_ms)| ScoredCandidate {
            id,
            latency_ms,
            val_loss,
            score: bounds.score(val_loss, latency_ms),
        })
        .collect()
}

fn cmp<T: Scalar>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}

/// Ascending score, then lower latency, then lower id.
pub fn rank<T: Scalar>(mut scored: Vec<ScoredCandidate<T>>) -> Vec<ScoredCandidate<T>> {
    scored.sort_by(|a, b| {
        cmp(a.score, b.score)
            .then_with(|| cmp(a.latency_ms, b.latency_ms))
            .then(a.id.cmp(&b.id))
    });
    scored
}
