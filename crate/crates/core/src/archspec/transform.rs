use super::layer::{LayerSpec, ModelSpec};
use super::ArchError;

/// Replace every standard convolution by a depthwise-separable one with the
/// same filters, kernel, stride and activation.
pub fn to_depthwise(model: &ModelSpec) -> ModelSpec {
    let layers = model
        .layers
        .iter()
        .map(|l| match *l {
            LayerSpec::Conv2d(c) => LayerSpec::DsConv(c),
            other => other,
        })
        .collect();
    let name = if model.has_conv2d() {
        format!("{}-ds", model.name)
    } else {
        model.name.clone()
    };
    ModelSpec::new(name, layers)
}

/// `max(1, round_half_away_from_zero(w·n))`
pub fn scale_count(n: usize, w: f64) -> usize {
    ((w * n as f64).round() as usize).max(1)
}

/// Scale conv filters and hidden dense units by `w ∈ (0, 1]`. The input layer
/// and the final dense layer are left untouched.
pub fn apply_width(model: &ModelSpec, w: f64) -> Result<ModelSpec, ArchError> {
    if !(w > 0.0 && w <= 1.0) {
        return Err(ArchError::WidthOutOfRange(w));
    }
    if w == 1.0 {
        return Ok(model.clone());
    }
    let output = model.layers.iter().rposition(|l| matches!(l, LayerSpec::Dense(_)));
    let layers = model
        .layers
        .iter()
        .enumerate()
        .map(|(i, l)| match *l {
            LayerSpec::Conv2d(mut c) => {
                c.filters = scale_count(c.filters, w);
                LayerSpec::Conv2d(c)
            }
            LayerSpec::DsConv(mut c) => {
                c.filters = scale_count(c.filters, w);
                LayerSpec::DsConv(c)
            }
            LayerSpec::Dense(mut d) if Some(i) != output => {
                d.units = scale_count(d.units, w);
                LayerSpec::Dense(d)
            }
            other => other,
        })
        .collect();
    Ok(ModelSpec::new(format!("{}@w{w}", model.name), layers))
}
