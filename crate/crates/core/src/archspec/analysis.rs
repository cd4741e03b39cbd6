use serde::{Deserialize, Serialize};

use super::layer::{LayerSpec, ModelSpec, TensorShape};
use super::shape::infer_shapes;
use super::ShapeError;

/// Stand-in for interpreter and graph metadata in the flash estimate.
pub const DEFAULT_FLASH_OVERHEAD_BYTES: u64 = 49_152;

/// Bytes per stored bias (int32).
pub const BIAS_BYTES: u64 = 4;

/// Static cost of a single layer. Activations are int8, one byte per element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LayerAnalysis {
    pub param_count: u64,
    pub weight_params: u64,
    pub bias_params: u64,
    pub macs: u64,
    pub in_bytes: u64,
    pub out_bytes: u64,
}

impl LayerAnalysis {
    pub fn activation_bytes(&self) -> u64 {
        self.in_bytes + self.out_bytes
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelAnalysis {
    pub layers: Vec<LayerAnalysis>,
    pub total_params: u64,
    pub total_weight_params: u64,
    pub total_bias_params: u64,
    pub total_macs: u64,
    pub arena_bytes: u64,
    pub flash_bytes: u64,
}

impl ModelAnalysis {
    /// Index of the layer with the largest `in_bytes + out_bytes` (first on ties).
    pub fn peak_layer(&self) -> Option<usize> {
        self.layers
            .iter()
            .enumerate()
            .skip(1)
            .fold(None, |best: Option<(usize, u64)>, (i, l)| match best {
                Some((_, b)) if b >= l.activation_bytes() => best,
                _ => Some((i, l.activation_bytes())),
            })
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisConfig {
    pub flash_overhead_bytes: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            flash_overhead_bytes: DEFAULT_FLASH_OVERHEAD_BYTES,
        }
    }
}

/// Weights, biases and MACs of one layer. Bias additions are not MACs.
pub fn analyze_layer(layer: &LayerSpec, input: TensorShape, output: TensorShape) -> LayerAnalysis {
    let c = input.channels as u64;
    let (oh, ow, od) = (output.height as u64, output.width as u64, output.channels as u64);
    let (weight_params, bias_params, macs) = match layer {
        LayerSpec::Conv2d(conv) => {
            let k = conv.kernel_area() as u64;
            (k * c * od, od, c * oh * ow * od * k)
        }
        LayerSpec::DsConv(conv) => {
            let k = conv.kernel_area() as u64;
            (k * c + c * od, c + od, c * oh * ow * k + c * oh * ow * od)
        }
        LayerSpec::Dense(_) => {
            let n_in = input.len() as u64;
            (n_in * od, od, n_in * od)
        }
        LayerSpec::Input(_) | LayerSpec::Flatten => (0, 0, 0),
    };
    LayerAnalysis {
        param_count: weight_params + bias_params,
        weight_params,
        bias_params,
        macs,
        in_bytes: input.len() as u64,
        out_bytes: output.len() as u64,
    }
}

pub fn analyze_model(model: &ModelSpec) -> Result<ModelAnalysis, ShapeError> {
    analyze_model_with(model, &AnalysisConfig::default())
}

pub fn analyze_model_with(model: &ModelSpec, cfg: &AnalysisConfig) -> Result<ModelAnalysis, ShapeError> {
    let shapes = infer_shapes(model)?;
    let layers: Vec<LayerAnalysis> = model
        .layers
        .iter()
        .zip(&shapes)
        .map(|(l, &(i, o))| analyze_layer(l, i, o))
        .collect();
    let total_weight_params = layers.iter().map(|l| l.weight_params).sum();
    let total_bias_params = layers.iter().map(|l| l.bias_params).sum();
    Ok(ModelAnalysis {
        total_params: layers.iter().map(|l| l.param_count).sum(),
        total_macs: layers.iter().map(|l| l.macs).sum(),
        arena_bytes: layers.iter().skip(1).map(LayerAnalysis::activation_bytes).max().unwrap_or(0),
        flash_bytes: total_weight_params + BIAS_BYTES * total_bias_params + cfg.flash_overhead_bytes,
        total_weight_params,
        total_bias_params,
        layers,
    })
}
