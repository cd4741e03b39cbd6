//! Float reference forward pass.

use super::tensor::Tensor;
use super::weights::{LayerWeights, Weights};
use super::InferenceError;
use crate::archspec::{infer_shapes, Activation, ConvSpec, LayerSpec, ModelSpec, TensorShape};
use crate::Scalar;

/// Which activation tensor an observer is being shown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tap {
    Input,
    /// Depthwise-stage output of the separable layer at this index.
    Depthwise(usize),
    /// Final output of the layer at this index.
    Output(usize),
}

fn activate<T: Scalar>(v: T, act: Activation) -> T {
    match act {
        Activation::Relu => v.max(T::zero()),
        Activation::Linear => v,
    }
}

fn conv2d<T: Scalar>(
    input: &[T],
    ishape: TensorShape,
    spec: &ConvSpec,
    kernel: &[T],
    bias: &[T],
    oshape: TensorShape,
) -> Vec<T> {
    let (cin, cout) = (ishape.channels, oshape.channels);
    let [kh, kw] = spec.kernel;
    let [sh, sw] = spec.stride;
    let mut out = Vec::with_capacity(oshape.len());
    let mut acc = vec![T::zero(); cout];
    for oy in 0..oshape.height {
        for ox in 0..oshape.width {
            acc.copy_from_slice(bias);
            for ky in 0..kh {
                for kx in 0..kw {
                    let px = ((oy * sh + ky) * ishape.width + ox * sw + kx) * cin;
                    let taps = &kernel[(ky * kw + kx) * cin * cout..][..cin * cout];
                    for (&v, row) in input[px..px + cin].iter().zip(taps.chunks_exact(cout)) {
                        for (a, &k) in acc.iter_mut().zip(row) {
                            *a = *a + v * k;
                        }
                    }
                }
            }
            out.extend(acc.iter().map(|&a| activate(a, spec.activation)));
        }
    }
    out
}

fn depthwise<T: Scalar>(
    input: &[T],
    ishape: TensorShape,
    spec: &ConvSpec,
    kernel: &[T],
    bias: &[T],
    oshape: TensorShape,
) -> Vec<T> {
    let c = ishape.channels;
    let [kh, kw] = spec.kernel;
    let [sh, sw] = spec.stride;
    let mut out = Vec::with_capacity(oshape.height * oshape.width * c);
    let mut acc = vec![T::zero(); c];
    for oy in 0..oshape.height {
        for ox in 0..oshape.width {
            acc.copy_from_slice(bias);
            for ky in 0..kh {
                for kx in 0..kw {
                    let px = ((oy * sh + ky) * ishape.width + ox * sw + kx) * c;
                    let taps = &kernel[(ky * kw + kx) * c..][..c];
                    for ((a, &v), &k) in acc.iter_mut().zip(&input[px..px + c]).zip(taps) {
                        *a = *a + v * k;
                    }
                }
            }
            out.extend_from_slice(&acc);
        }
    }
    out
}

/// Matrix-vector product applied to every row of `input` (`rows × n_in`).
fn dense_rows<T: Scalar>(input: &[T], n_in: usize, kernel: &[T], bias: &[T], act: Activation) -> Vec<T> {
    let n_out = bias.len();
    let mut out = Vec::with_capacity(input.len() / n_in.max(1) * n_out);
    let mut acc = vec![T::zero(); n_out];
    for row in input.chunks_exact(n_in) {
        acc.copy_from_slice(bias);
        for (&v, krow) in row.iter().zip(kernel.chunks_exact(n_out)) {
            for (a, &k) in acc.iter_mut().zip(krow) {
                *a = *a + v * k;
            }
        }
        out.extend(acc.iter().map(|&a| activate(a, act)));
    }
    out
}

/// Runs the float network, showing every intermediate tensor to `observe`.
pub fn forward_float_observed<T: Scalar>(
    model: &ModelSpec,
    weights: &Weights<T>,
    input: &Tensor<T>,
    observe: &mut dyn FnMut(Tap, &[T]),
) -> Result<Vec<T>, InferenceError> {
    let shapes = infer_shapes(model)?;
    weights.check(model)?;
    if input.shape != shapes[0].0 || input.data.len() != input.shape.len() {
        return Err(InferenceError::InputMismatch {
            expected: shapes[0].0,
            got: input.data.len(),
        });
    }
    observe(Tap::Input, &input.data);
    let mut current = input.data.clone();
    for (idx, (layer, w)) in model.layers.iter().skip(1).zip(&weights.layers).enumerate() {
        let idx = idx + 1;
        let (ishape, oshape) = shapes[idx];
        current = match (layer, w) {
            (LayerSpec::Conv2d(spec), LayerWeights::Conv2d { kernel, bias }) => {
                conv2d(&current, ishape, spec, kernel, bias, oshape)
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
                let mid = depthwise(&current, ishape, spec, depthwise_kernel, depthwise_bias, oshape);
                observe(Tap::Depthwise(idx), &mid);
                dense_rows(&mid, ishape.channels, pointwise_kernel, pointwise_bias, spec.activation)
            }
            (LayerSpec::Flatten, _) => current,
            (LayerSpec::Dense(d), LayerWeights::Dense { kernel, bias }) => {
                dense_rows(&current, ishape.len(), kernel, bias, d.activation)
            }
            _ => unreachable!("weights checked against the model"),
        };
        debug_assert_eq!(current.len(), oshape.len());
        observe(Tap::Output(idx), &current);
    }
    Ok(current)
}

pub fn forward_float<T: Scalar>(model: &ModelSpec, weights: &Weights<T>, input: &Tensor<T>) -> Result<Vec<T>, InferenceError> {
    forward_float_observed(model, weights, input, &mut |_, _| {})
}
