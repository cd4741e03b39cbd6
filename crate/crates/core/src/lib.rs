//! Tooling for steering CNNs on microcontrollers: analytical cost models,
//! latency regression, constrained architecture search, an int8 inference
//! engine with a static arena, and a closed-loop driving simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod archspec;
pub mod cli;
pub mod inference;
pub mod latency;
pub mod nas;
pub mod simloop;
mod scalar;

pub use scalar::Scalar;

pub type LatencyModelF32 = latency::LatencyModel<f32>;
pub type LatencyModelF64 = latency::LatencyModel<f64>;
pub type TensorF32 = inference::Tensor<f32>;
pub type TensorF64 = inference::Tensor<f64>;
pub type WeightsF32 = inference::Weights<f32>;
pub type WeightsF64 = inference::Weights<f64>;
pub type NormBoundsF32 = nas::NormBounds<f32>;
pub type NormBoundsF64 = nas::NormBounds<f64>;
