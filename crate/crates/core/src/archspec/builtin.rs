//! Reference architectures shipped with the toolkit.

use super::layer::{Activation, LayerSpec, ModelSpec, TensorShape};
use super::transform::to_depthwise;

fn pilotnet_body(input: TensorShape) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Input(input),
        LayerSpec::conv2d(24, 5, 2),
        LayerSpec::conv2d(36, 5, 2),
        LayerSpec::conv2d(48, 5, 2),
        LayerSpec::conv2d(64, 3, 1),
        LayerSpec::conv2d(64, 3, 1),
        LayerSpec::Flatten,
        LayerSpec::dense(100, Activation::Relu),
        LayerSpec::dense(50, Activation::Relu),
        LayerSpec::dense(10, Activation::Relu),
        LayerSpec::dense(1, Activation::Linear),
    ]
}

/// PilotNet at 66×200×3 with standard convolutions.
pub fn pilotnet() -> ModelSpec {
    ModelSpec::new("pilotnet", pilotnet_body(TensorShape::new(66, 200, 3)))
}

/// Depthwise-separable PilotNet at 68×68×1, the default search backbone.
pub fn pilotnet_ds_68() -> ModelSpec {
    let mut m = to_depthwise(&ModelSpec::new("pilotnet", pilotnet_body(TensorShape::new(68, 68, 1))));
    m.name = "pilotnet_ds_68".into();
    m
}
