#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tinypilot::archspec::{Activation, ConvSpec, LayerSpec, ModelSpec, TensorShape};
use tinypilot::inference::{LayerWeights, Tensor, Weights};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random valid network: at most four weighted layers, every dimension ≤ 16.
pub fn random_model<R: Rng>(rng: &mut R) -> ModelSpec {
    let convs = rng.gen_range(0..=2usize);
    let denses = rng.gen_range(1..=(4 - convs).min(2));
    let mut h = rng.gen_range(3..=16usize);
    let mut w = rng.gen_range(3..=16usize);
    let c = rng.gen_range(1..=4usize);
    let mut layers = vec![LayerSpec::Input(TensorShape::new(h, w, c))];
    for _ in 0..convs {
        let k = rng.gen_range(1..=3usize.min(h).min(w));
        let s = rng.gen_range(1..=2usize);
        let act = if rng.gen_bool(0.7) { Activation::Relu } else { Activation::Linear };
        let spec = ConvSpec::new(rng.gen_range(1..=16), [k, k], [s, s], act);
        layers.push(if rng.gen_bool(0.5) { LayerSpec::Conv2d(spec) } else { LayerSpec::DsConv(spec) });
        h = (h - k) / s + 1;
        w = (w - k) / s + 1;
    }
    layers.push(LayerSpec::Flatten);
    for i in 0..denses {
        let last = i + 1 == denses;
        let act = if last { Activation::Linear } else { Activation::Relu };
        layers.push(LayerSpec::dense(rng.gen_range(1..=16), act));
    }
    ModelSpec::new("random", layers)
}

pub fn random_input<R: Rng>(shape: TensorShape, rng: &mut R) -> Tensor {
    Tensor::new(shape, (0..shape.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect()).unwrap()
}

fn act(v: f64, a: Activation) -> f64 {
    match a {
        Activation::Relu => if v > 0.0 { v } else { 0.0 },
        Activation::Linear => v,
    }
}

/// Straightforward nested-loop evaluation with explicit index arithmetic.
pub fn naive_forward(model: &ModelSpec, weights: &Weights, input: &Tensor) -> Vec<f64> {
    let mut shape = input.shape;
    let mut x: Vec<f64> = input.data.clone();
    let idx = |s: TensorShape, y: usize, xx: usize, c: usize| y * s.width * s.channels + xx * s.channels + c;
    for (layer, w) in model.layers[1..].iter().zip(&weights.layers) {
        match (layer, w) {
            (LayerSpec::Conv2d(spec), LayerWeights::Conv2d { kernel, bias }) => {
                let oh = (shape.height - spec.kernel[0]) / spec.stride[0] + 1;
                let ow = (shape.width - spec.kernel[1]) / spec.stride[1] + 1;
                let os = TensorShape::new(oh, ow, spec.filters);
                let mut y = vec![0.0; os.len()];
                for oy in 0..oh {
                    for ox in 0..ow {
                        for f in 0..spec.filters {
                            let mut s = bias[f];
                            for ky in 0..spec.kernel[0] {
                                for kx in 0..spec.kernel[1] {
                                    for ci in 0..shape.channels {
                                        let k = kernel[((ky * spec.kernel[1] + kx) * shape.channels + ci) * spec.filters + f];
                                        s += k * x[idx(shape, oy * spec.stride[0] + ky, ox * spec.stride[1] + kx, ci)];
                                    }
                                }
                            }
                            y[idx(os, oy, ox, f)] = act(s, spec.activation);
                        }
                    }
                }
                x = y;
                shape = os;
            }
            (
                LayerSpec::DsConv(spec),
                LayerWeights::DsConv { depthwise_kernel, depthwise_bias, pointwise_kernel, pointwise_bias },
            ) => {
                let oh = (shape.height - spec.kernel[0]) / spec.stride[0] + 1;
                let ow = (shape.width - spec.kernel[1]) / spec.stride[1] + 1;
                let ms = TensorShape::new(oh, ow, shape.channels);
                let mut mid = vec![0.0; ms.len()];
                for oy in 0..oh {
                    for ox in 0..ow {
                        for ci in 0..shape.channels {
                            let mut s = depthwise_bias[ci];
                            for ky in 0..spec.kernel[0] {
                                for kx in 0..spec.kernel[1] {
                                    let k = depthwise_kernel[(ky * spec.kernel[1] + kx) * shape.channels + ci];
                                    s += k * x[idx(shape, oy * spec.stride[0] + ky, ox * spec.stride[1] + kx, ci)];
                                }
                            }
                            mid[idx(ms, oy, ox, ci)] = s;
                        }
                    }
                }
                let os = TensorShape::new(oh, ow, spec.filters);
                let mut y = vec![0.0; os.len()];
                for oy in 0..oh {
                    for ox in 0..ow {
                        for f in 0..spec.filters {
                            let mut s = pointwise_bias[f];
                            for ci in 0..shape.channels {
                                s += pointwise_kernel[ci * spec.filters + f] * mid[idx(ms, oy, ox, ci)];
                            }
                            y[idx(os, oy, ox, f)] = act(s, spec.activation);
                        }
                    }
                }
                x = y;
                shape = os;
            }
            (LayerSpec::Flatten, _) => shape = TensorShape::vector(shape.len()),
            (LayerSpec::Dense(d), LayerWeights::Dense { kernel, bias }) => {
                let n = shape.len();
                let y: Vec<f64> = (0..d.units)
                    .map(|o| act(bias[o] + (0..n).map(|i| x[i] * kernel[i * d.units + o]).sum::<f64>(), d.activation))
                    .collect();
                x = y;
                shape = TensorShape::vector(d.units);
            }
            other => panic!("unexpected layer/weights pair {other:?}"),
        }
    }
    x
}

/// Elementwise relative closeness with an absolute floor for values near zero.
pub fn close(a: &[f64], b: &[f64], rel: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= rel * x.abs().max(y.abs()).max(1.0))
}
