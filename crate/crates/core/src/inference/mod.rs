//! Float reference execution, post-training int8 quantization, and quantized
//! execution inside a statically planned arena.

mod arena;
mod engine;
mod eval;
mod float;
mod quant;
mod tensor;
mod weights;

pub use arena::{plan_arena, ArenaPlan, LayerRegion};
pub use engine::{forward_quant, forward_quant_with, requantize, ArenaAudit, ArenaProbe, NoProbe};
pub use eval::{categorize, measure_accuracy, Steering};
pub use float::{forward_float, forward_float_observed, Tap};
pub use quant::{calibrate, quantize_bias_value, quantize_model, Calibration, LayerCalibration, QLayer, QModel, QuantParams, QMAX, QMIN};
pub use tensor::Tensor;
pub use weights::{LayerWeights, Weights};

use crate::archspec::{ShapeError, TensorShape};

#[derive(Debug, thiserror::Error)]
pub enum InferenceError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("layer {layer}: weight mismatch: {reason}")]
    WeightMismatch { layer: usize, reason: String },
    #[error("input has {got} values, model expects {expected}")]
    InputMismatch { expected: TensorShape, got: usize },
    #[error("layer {layer}: needs {needed} arena bytes, arena has {arena}")]
    ArenaOverflow { layer: usize, needed: usize, arena: usize },
    #[error("layer {layer}: arena regions overlap or do not chain")]
    ArenaOverlap { layer: usize },
    #[error("arena plan does not match the model")]
    PlanMismatch,
    #[error("calibration needs at least one input")]
    EmptyCalibration,
    #[error("deadband {0} outside (0, 1)")]
    DeadbandOutOfRange(f64),
    #[error("{predictions} predictions vs {truth} ground-truth labels")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
}
