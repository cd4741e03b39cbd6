//! Declarative CNN descriptions, shape inference and analytical cost models.

mod analysis;
pub mod builtin;
mod io;
mod layer;
mod report;
mod shape;
mod transform;
mod validate;

pub use analysis::{
    analyze_layer, analyze_model, analyze_model_with, AnalysisConfig, LayerAnalysis, ModelAnalysis,
    BIAS_BYTES, DEFAULT_FLASH_OVERHEAD_BYTES,
};
pub use layer::{Activation, ConvSpec, DenseSpec, LayerKind, LayerSpec, ModelSpec, Padding, TensorShape};
pub use report::{compact_count, Report, ReportRow};
pub use shape::{infer_shapes, layer_output_shape};
pub use transform::{apply_width, scale_count, to_depthwise};
pub use validate::{validate, ValidateOptions, Violation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShapeError {
    #[error("model does not start with an input layer")]
    MissingInput,
    #[error("layer {layer}: input layer is only allowed first")]
    MisplacedInput { layer: usize },
    #[error("layer {layer}: kernel {kernel} exceeds input {axis} {input}")]
    KernelExceedsInput {
        layer: usize,
        axis: &'static str,
        input: usize,
        kernel: usize,
    },
    #[error("layer {layer}: zero-sized parameter or dimension")]
    ZeroParameter { layer: usize },
    #[error("layer {layer}: dense layer before flatten")]
    DenseBeforeFlatten { layer: usize },
    #[error("layer {layer}: convolution after flatten")]
    ConvAfterFlatten { layer: usize },
}

#[derive(Debug, thiserror::Error)]
pub enum ArchError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("width multiplier {0} outside (0, 1]")]
    WidthOutOfRange(f64),
    #[error("model file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
}
