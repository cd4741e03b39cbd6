//! Affine int8 quantization: range calibration and model conversion.

use serde::{Deserialize, Serialize};

use super::float::{forward_float_observed, Tap};
use super::tensor::Tensor;
use super::weights::{LayerWeights, Weights};
use super::InferenceError;
use crate::archspec::{infer_shapes, Activation, ConvSpec, LayerSpec, ModelSpec, TensorShape};

pub const QMIN: i32 = -128;
pub const QMAX: i32 = 127;

/// `real = scale · (q − zero_point)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantParams {
    pub scale: f64,
    pub zero_point: i32,
}

impl QuantParams {
    /// Fallback for a constant (all-zero) tensor.
    pub const UNIT: QuantParams = QuantParams {
        scale: 1.0,
        zero_point: 0,
    };

    /// Asymmetric parameters covering `[min, max]` widened to include zero.
    /// Returns `None` when the widened range is empty.
    pub fn from_range(min: f64, max: f64) -> Option<Self> {
        let (min, max) = (min.min(0.0), max.max(0.0));
        if !(max > min) {
            return None;
        }
        let scale = (max - min) / 255.0;
        let zero_point = ((QMIN as f64) - min / scale).round().clamp(QMIN as f64, QMAX as f64) as i32;
        Some(Self { scale, zero_point })
    }

    /// Symmetric weight parameters: `max|w| / 127`, zero point 0.
    pub fn symmetric(max_abs: f64) -> Option<Self> {
        (max_abs > 0.0).then(|| Self {
            scale: max_abs / 127.0,
            zero_point: 0,
        })
    }

    pub fn quantize(&self, r: f64) -> i8 {
        ((r / self.scale).round() + self.zero_point as f64).clamp(QMIN as f64, QMAX as f64) as i8
    }

    pub fn dequantize(&self, q: i8) -> f64 {
        self.scale * (q as i32 - self.zero_point) as f64
    }
}

/// Calibrated parameters for one non-input layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCalibration {
    pub output: QuantParams,
    /// Weight tensors in layer order (depthwise then pointwise for separable layers).
    pub weights: Vec<QuantParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub input: QuantParams,
    pub layers: Vec<LayerCalibration>,
    /// Tensors whose observed range was degenerate and fell back to scale 1.
    pub degenerate: Vec<String>,
}

#[derive(Clone, Copy)]
struct Range {
    min: f64,
    max: f64,
}

impl Range {
    const EMPTY: Range = Range {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };

    fn absorb(&mut self, values: &[f64]) {
        for &v in values {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Min/max calibration over `inputs`. Flatten layers inherit their input's parameters.
pub fn calibrate(model: &ModelSpec, weights: &Weights, inputs: &[Tensor]) -> Result<Calibration, InferenceError> {
    if inputs.is_empty() {
        return Err(InferenceError::EmptyCalibration);
    }
    let n = model.layers.len();
    let mut input_range = Range::EMPTY;
    let mut outputs = vec![Range::EMPTY; n];
    for x in inputs {
        forward_float_observed(model, weights, x, &mut |tap, values| match tap {
            Tap::Input => input_range.absorb(values),
            Tap::Depthwise(_) => {}
            Tap::Output(i) => outputs[i].absorb(values),
        })?;
    }
    let mut degenerate = Vec::new();
    let act = |degenerate: &mut Vec<String>, name: String, r: Range| {
        QuantParams::from_range(r.min, r.max).unwrap_or_else(|| {
            degenerate.push(name);
            QuantParams::UNIT
        })
    };
    let input = act(&mut degenerate, "input".into(), input_range);
    let mut layers = Vec::with_capacity(n - 1);
    let mut prev = input;
    for (i, w) in weights.layers.iter().enumerate() {
        let idx = i + 1;
        let output = match &model.layers[idx] {
            LayerSpec::Flatten => prev,
            _ => act(&mut degenerate, format!("layer{idx}.output"), outputs[idx]),
        };
        let kernels: Vec<(&str, &[f64])> = match w {
            LayerWeights::Conv2d { kernel, .. } | LayerWeights::Dense { kernel, .. } => vec![("kernel", kernel)],
            LayerWeights::DsConv {
                depthwise_kernel,
                pointwise_kernel,
                ..
            } => vec![("depthwise_kernel", depthwise_kernel), ("pointwise_kernel", pointwise_kernel)],
            LayerWeights::Flatten {} => vec![],
        };
        let weight_params = kernels
            .into_iter()
            .map(|(name, k)| {
                QuantParams::symmetric(max_abs(k)).unwrap_or_else(|| {
                    degenerate.push(format!("layer{idx}.{name}"));
                    QuantParams::UNIT
                })
            })
            .collect();
        layers.push(LayerCalibration {
            output,
            weights: weight_params,
        });
        prev = output;
    }
    Ok(Calibration {
        input,
        layers,
        degenerate,
    })
}

/// Quantized layer with int8 kernels and int32 biases at scale `S_in·S_w`.
///
/// A separable layer keeps its depthwise result as an integer accumulator at
/// scale `S_in·S_dw`; the pointwise bias is stored at `S_in·S_dw·S_pw`, which
/// needs 64 bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QLayer {
    Conv2d {
        spec: ConvSpec,
        in_shape: TensorShape,
        out_shape: TensorShape,
        input: QuantParams,
        weight: QuantParams,
        output: QuantParams,
        kernel: Vec<i8>,
        bias: Vec<i32>,
    },
    DsConv {
        spec: ConvSpec,
        in_shape: TensorShape,
        out_shape: TensorShape,
        input: QuantParams,
        depthwise_weight: QuantParams,
        pointwise_weight: QuantParams,
        output: QuantParams,
        depthwise_kernel: Vec<i8>,
        depthwise_bias: Vec<i32>,
        pointwise_kernel: Vec<i8>,
        pointwise_bias: Vec<i64>,
    },
    Flatten {
        len: usize,
    },
    Dense {
        in_len: usize,
        activation: Activation,
        input: QuantParams,
        weight: QuantParams,
        output: QuantParams,
        kernel: Vec<i8>,
        bias: Vec<i32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QModel {
    pub spec: ModelSpec,
    pub input: QuantParams,
    pub output: QuantParams,
    /// One entry per non-input layer.
    pub layers: Vec<QLayer>,
}

fn quantize_all(values: &[f64], p: QuantParams) -> Vec<i8> {
    values.iter().map(|&v| p.quantize(v)).collect()
}

fn quantize_bias(values: &[f64], scale: f64) -> Vec<i32> {
    values.iter().map(|&b| quantize_bias_value(b, scale)).collect()
}

/// Saturating `round(b / scale)` into int32.
pub fn quantize_bias_value(b: f64, scale: f64) -> i32 {
    (b / scale).round().clamp(i32::MIN as f64, i32::MAX as f64) as i32
}

pub fn quantize_model(model: &ModelSpec, weights: &Weights, calib: &Calibration) -> Result<QModel, InferenceError> {
    let shapes = infer_shapes(model)?;
    weights.check(model)?;
    if calib.layers.len() + 1 != model.layers.len() {
        return Err(InferenceError::WeightMismatch {
            layer: 0,
            reason: "calibration does not match the model".into(),
        });
    }
    let mut layers = Vec::with_capacity(calib.layers.len());
    let mut input = calib.input;
    for (i, (cal, w)) in calib.layers.iter().zip(&weights.layers).enumerate() {
        let idx = i + 1;
        let (in_shape, out_shape) = shapes[idx];
        let q = match (&model.layers[idx], w) {
            (LayerSpec::Conv2d(spec), LayerWeights::Conv2d { kernel, bias }) => {
                let weight = cal.weights[0];
                QLayer::Conv2d {
                    spec: *spec,
                    in_shape,
                    out_shape,
                    input,
                    weight,
                    output: cal.output,
                    kernel: quantize_all(kernel, weight),
                    bias: quantize_bias(bias, input.scale * weight.scale),
                }
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
                let (dw, pw) = (cal.weights[0], cal.weights[1]);
                QLayer::DsConv {
                    spec: *spec,
                    in_shape,
                    out_shape,
                    input,
                    depthwise_weight: dw,
                    pointwise_weight: pw,
                    output: cal.output,
                    depthwise_kernel: quantize_all(depthwise_kernel, dw),
                    depthwise_bias: quantize_bias(depthwise_bias, input.scale * dw.scale),
                    pointwise_kernel: quantize_all(pointwise_kernel, pw),
                    pointwise_bias: pointwise_bias
                        .iter()
                        .map(|&b| (b / (input.scale * dw.scale * pw.scale)).round() as i64)
                        .collect(),
                }
            }
            (LayerSpec::Flatten, _) => QLayer::Flatten { len: in_shape.len() },
            (LayerSpec::Dense(d), LayerWeights::Dense { kernel, bias }) => {
                let weight = cal.weights[0];
                QLayer::Dense {
                    in_len: in_shape.len(),
                    activation: d.activation,
                    input,
                    weight,
                    output: cal.output,
                    kernel: quantize_all(kernel, weight),
                    bias: quantize_bias(bias, input.scale * weight.scale),
                }
            }
            _ => unreachable!("weights checked against the model"),
        };
        layers.push(q);
        input = cal.output;
    }
    Ok(QModel {
        spec: model.clone(),
        input: calib.input,
        output: input,
        layers,
    })
}
