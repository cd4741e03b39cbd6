use std::fmt;

use super::layer::{LayerSpec, ModelSpec};
use super::shape::infer_shapes;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidateOptions {
    /// Require input height and width to be multiples of four (camera capture rule).
    pub camera_constraint: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingInput,
    ExtraInput { layer: usize },
    ZeroParameter { layer: usize },
    NoOutputDense,
    OutputNotLast,
    FlattenCount(usize),
    FlattenMisplaced,
    DenseBeforeFlatten { layer: usize },
    Shape(String),
    CameraMultiple { height: usize, width: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingInput => write!(f, "first layer must be the input layer"),
            Violation::ExtraInput { layer } => write!(f, "layer {layer}: input layer only allowed first"),
            Violation::ZeroParameter { layer } => write!(f, "layer {layer}: filters, units, kernel and stride must be >= 1"),
            Violation::NoOutputDense => write!(f, "model has no dense output layer"),
            Violation::OutputNotLast => write!(f, "last layer must be dense"),
            Violation::FlattenCount(n) => write!(f, "expected exactly one flatten layer, found {n}"),
            Violation::FlattenMisplaced => write!(f, "flatten must sit between the last conv and the first dense layer"),
            Violation::DenseBeforeFlatten { layer } => write!(f, "layer {layer}: dense layer before flatten"),
            Violation::Shape(e) => write!(f, "shape inference failed: {e}"),
            Violation::CameraMultiple { height, width } => {
                write!(f, "input {height}x{width} is not a multiple of four in both dimensions")
            }
        }
    }
}

/// Structural checks. Violations are collected, not thrown.
pub fn validate(model: &ModelSpec, opts: ValidateOptions) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let layers = &model.layers;
    match layers.first() {
        Some(LayerSpec::Input(s)) => {
            if s.is_empty() {
                out.push(Violation::ZeroParameter { layer: 0 });
            }
            if opts.camera_constraint && (s.height % 4 != 0 || s.width % 4 != 0) {
                out.push(Violation::CameraMultiple {
                    height: s.height,
                    width: s.width,
                });
            }
        }
        _ => out.push(Violation::MissingInput),
    }
    for (i, l) in layers.iter().enumerate().skip(1) {
        match l {
            LayerSpec::Input(_) => out.push(Violation::ExtraInput { layer: i }),
            LayerSpec::Conv2d(c) | LayerSpec::DsConv(c)
                if c.filters == 0 || c.kernel.contains(&0) || c.stride.contains(&0) =>
            {
                out.push(Violation::ZeroParameter { layer: i })
            }
            LayerSpec::Dense(d) if d.units == 0 => out.push(Violation::ZeroParameter { layer: i }),
            _ => {}
        }
    }
    if !layers.iter().any(|l| matches!(l, LayerSpec::Dense(_))) {
        out.push(Violation::NoOutputDense);
    } else if !matches!(layers.last(), Some(LayerSpec::Dense(_))) {
        out.push(Violation::OutputNotLast);
    }
    let flattens: Vec<usize> = layers
        .iter()
        .enumerate()
        .filter(|(_, l)| matches!(l, LayerSpec::Flatten))
        .map(|(i, _)| i)
        .collect();
    if flattens.len() != 1 {
        out.push(Violation::FlattenCount(flattens.len()));
    }
    if let Some(&f) = flattens.first() {
        let last_conv = layers.iter().rposition(LayerSpec::is_conv);
        let first_dense = layers.iter().position(|l| matches!(l, LayerSpec::Dense(_)));
        if last_conv.is_some_and(|c| c > f) || first_dense.is_some_and(|d| d < f) {
            out.push(Violation::FlattenMisplaced);
        }
    }
    let flatten_at = flattens.first().copied().unwrap_or(usize::MAX);
    if let Some(i) = layers.iter().position(|l| matches!(l, LayerSpec::Dense(_))) {
        if i < flatten_at {
            out.push(Violation::DenseBeforeFlatten { layer: i });
        }
    }
    if out.is_empty() {
        if let Err(e) = infer_shapes(model) {
            out.push(Violation::Shape(e.to_string()));
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
