use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::InferenceError;
use crate::archspec::{infer_shapes, LayerSpec, ModelSpec, ShapeError};
use crate::Scalar;

/// Real-valued parameters of one non-input layer.
///
/// Layouts: conv `[K_h][K_w][C_in][C_out]`, depthwise `[K_h][K_w][C]`,
/// pointwise `[C][C_out]`, dense `[in][out]`, all row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerWeights<T = f64> {
    Conv2d {
        kernel: Vec<T>,
        bias: Vec<T>,
    },
    DsConv {
        depthwise_kernel: Vec<T>,
        depthwise_bias: Vec<T>,
        pointwise_kernel: Vec<T>,
        pointwise_bias: Vec<T>,
    },
    Flatten {},
    Dense {
        kernel: Vec<T>,
        bias: Vec<T>,
    },
}

/// One entry per layer after the input layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights<T = f64> {
    pub layers: Vec<LayerWeights<T>>,
}

fn expect_len(layer: usize, what: &str, got: usize, want: usize) -> Result<(), InferenceError> {
    if got == want {
        Ok(())
    } else {
        Err(InferenceError::WeightMismatch {
            layer,
            reason: format!("{what} has {got} values, expected {want}"),
        })
    }
}

impl<T: Scalar> Weights<T> {
    /// Checks layer kinds and array lengths against `model`.
    pub fn check(&self, model: &ModelSpec) -> Result<(), InferenceError> {
        let shapes = infer_shapes(model)?;
        if self.layers.len() + 1 != model.layers.len() {
            return Err(InferenceError::WeightMismatch {
                layer: 0,
                reason: format!(
                    "{} weight entries for {} non-input layers",
                    self.layers.len(),
                    model.layers.len() - 1
                ),
            });
        }
        for (i, weights) in self.layers.iter().enumerate() {
            let idx = i + 1;
            let (input, output) = shapes[idx];
            let c = input.channels;
            match (&model.layers[idx], weights) {
                (LayerSpec::Conv2d(spec), LayerWeights::Conv2d { kernel, bias }) => {
                    expect_len(idx, "kernel", kernel.len(), spec.kernel_area() * c * spec.filters)?;
                    expect_len(idx, "bias", bias.len(), spec.filters)?;
                }
                (
                    LayerSpec::DsConv(spec),
                    LayerWeights::DsConv {
                        depthwise_kernel,
                        depthwise_bias,
                        pointwise_kernel,
                        pointwise_bias,
                    },
                ) => {
                    expect_len(idx, "depthwise_kernel", depthwise_kernel.len(), spec.kernel_area() * c)?;
                    expect_len(idx, "depthwise_bias", depthwise_bias.len(), c)?;
                    expect_len(idx, "pointwise_kernel", pointwise_kernel.len(), c * spec.filters)?;
                    expect_len(idx, "pointwise_bias", pointwise_bias.len(), spec.filters)?;
                }
                (LayerSpec::Flatten, LayerWeights::Flatten {}) => {}
                (LayerSpec::Dense(d), LayerWeights::Dense { kernel, bias }) => {
                    expect_len(idx, "kernel", kernel.len(), input.len() * d.units)?;
                    expect_len(idx, "bias", bias.len(), d.units)?;
                    debug_assert_eq!(output.channels, d.units);
                }
                (l, _) => {
                    return Err(InferenceError::WeightMismatch {
                        layer: idx,
                        reason: format!("weights do not match a {} layer", l.kind()),
                    })
                }
            }
        }
        Ok(())
    }

    /// Weights drawn uniformly from `[-bound, bound]`.
    pub fn random<R: Rng + ?Sized>(model: &ModelSpec, bound: f64, rng: &mut R) -> Result<Self, InferenceError> {
        Self::build(model, &mut |_, n| (0..n).map(|_| T::of_f64(rng.gen_range(-bound..=bound))).collect())
    }

    /// Every kernel element set to `kernel`, every bias to `bias`.
    pub fn constant(model: &ModelSpec, kernel: T, bias: T) -> Result<Self, InferenceError> {
        Self::build(model, &mut |part, n| match part {
            Part::Kernel => vec![kernel; n],
            Part::Bias => vec![bias; n],
        })
    }

    fn build(model: &ModelSpec, draw: &mut dyn FnMut(Part, usize) -> Vec<T>) -> Result<Self, InferenceError> {
        let shapes = infer_shapes(model)?;
        let mut out = Vec::with_capacity(model.layers.len().saturating_sub(1));
        for (idx, layer) in model.layers.iter().enumerate().skip(1) {
            let input = shapes[idx].0;
            let c = input.channels;
            out.push(match layer {
                LayerSpec::Conv2d(s) => LayerWeights::Conv2d {
                    kernel: draw(Part::Kernel, s.kernel_area() * c * s.filters),
                    bias: draw(Part::Bias, s.filters),
                },
                LayerSpec::DsConv(s) => LayerWeights::DsConv {
                    depthwise_kernel: draw(Part::Kernel, s.kernel_area() * c),
                    depthwise_bias: draw(Part::Bias, c),
                    pointwise_kernel: draw(Part::Kernel, c * s.filters),
                    pointwise_bias: draw(Part::Bias, s.filters),
                },
                LayerSpec::Dense(d) => LayerWeights::Dense {
                    kernel: draw(Part::Kernel, input.len() * d.units),
                    bias: draw(Part::Bias, d.units),
                },
                LayerSpec::Flatten => LayerWeights::Flatten {},
                LayerSpec::Input(_) => return Err(ShapeError::MisplacedInput { layer: idx }.into()),
            });
        }
        Ok(Self { layers: out })
    }
}

#[derive(Clone, Copy)]
enum Part {
    Kernel,
    Bias,
}

impl Weights<f64> {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, InferenceError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| InferenceError::Io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
