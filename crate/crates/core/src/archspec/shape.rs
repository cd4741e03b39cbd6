use super::layer::{LayerSpec, ModelSpec, TensorShape};
use super::ShapeError;

/// Output extent of a valid-padding window along one axis.
fn valid_extent(layer: usize, axis: &'static str, input: usize, kernel: usize, stride: usize) -> Result<usize, ShapeError> {
    if input < kernel {
        return Err(ShapeError::KernelExceedsInput {
            layer,
            axis,
            input,
            kernel,
        });
    }
    Ok((input - kernel) / stride + 1)
}

/// Output shape of `layer` when fed `input`. `index` is only used in errors.
pub fn layer_output_shape(index: usize, layer: &LayerSpec, input: TensorShape) -> Result<TensorShape, ShapeError> {
    match layer {
        LayerSpec::Input(s) => Ok(*s),
        LayerSpec::Conv2d(c) | LayerSpec::DsConv(c) => {
            if c.filters == 0 || c.kernel.contains(&0) || c.stride.contains(&0) {
                return Err(ShapeError::ZeroParameter { layer: index });
            }
            let h = valid_extent(index, "height", input.height, c.kernel[0], c.stride[0])?;
            let w = valid_extent(index, "width", input.width, c.kernel[1], c.stride[1])?;
            Ok(TensorShape::new(h, w, c.filters))
        }
        LayerSpec::Flatten => Ok(TensorShape::vector(input.len())),
        LayerSpec::Dense(d) => {
            if d.units == 0 {
                return Err(ShapeError::ZeroParameter { layer: index });
            }
            Ok(TensorShape::vector(d.units))
        }
    }
}

/// Per-layer `(input, output)` shapes, including the input layer itself.
pub fn infer_shapes(model: &ModelSpec) -> Result<Vec<(TensorShape, TensorShape)>, ShapeError> {
    let Some(input) = model.input_shape() else {
        return Err(ShapeError::MissingInput);
    };
    if input.is_empty() {
        return Err(ShapeError::ZeroParameter { layer: 0 });
    }
    let mut shapes = Vec::with_capacity(model.layers.len());
    shapes.push((input, input));
    let mut current = input;
    let mut flattened = false;
    for (i, layer) in model.layers.iter().enumerate().skip(1) {
        match layer {
            LayerSpec::Input(_) => return Err(ShapeError::MisplacedInput { layer: i }),
            LayerSpec::Conv2d(_) | LayerSpec::DsConv(_) if flattened => {
                return Err(ShapeError::ConvAfterFlatten { layer: i })
            }
            LayerSpec::Dense(_) if !flattened => return Err(ShapeError::DenseBeforeFlatten { layer: i }),
            LayerSpec::Flatten => flattened = true,
            _ => {}
        }
        let out = layer_output_shape(i, layer, current)?;
        shapes.push((current, out));
        current = out;
    }
    Ok(shapes)
}
