//! Integer execution of a [`QModel`] inside a planned arena.
//!
//! Every activation tensor lives in the arena. Separable layers are fused:
//! for each output pixel the `C` depthwise sums stay as wide integer
//! accumulators (scale `S_in·S_dw`) and feed the pointwise stage directly.

use super::arena::{ArenaPlan, LayerRegion};
use super::quant::{QLayer, QModel, QuantParams, QMAX, QMIN};
use super::tensor::Tensor;
use super::InferenceError;
use crate::archspec::{Activation, ConvSpec, TensorShape};

/// Observer of arena traffic, used to audit the planner.
pub trait ArenaProbe {
    /// `None` while the input is being quantized into the arena.
    fn enter_layer(&mut self, _layer: Option<usize>) {}
    fn read(&mut self, _offset: usize) {}
    fn write(&mut self, _offset: usize) {}
}

pub struct NoProbe;

impl ArenaProbe for NoProbe {}

/// Records every access and flags those outside the active layer's regions,
/// as well as reads of bytes not yet written during this pass.
#[derive(Debug, Clone)]
pub struct ArenaAudit {
    regions: Vec<LayerRegion>,
    active: Option<Option<usize>>,
    written: Vec<bool>,
    touched: Vec<bool>,
    pub out_of_region: usize,
    pub uninitialized_reads: usize,
    pub reads: usize,
    pub writes: usize,
}

impl ArenaAudit {
    pub fn new(plan: &ArenaPlan) -> Self {
        Self {
            regions: plan.layers.clone(),
            active: None,
            written: vec![false; plan.arena_size],
            touched: vec![false; plan.arena_size],
            out_of_region: 0,
            uninitialized_reads: 0,
            reads: 0,
            writes: 0,
        }
    }

    /// Distinct arena bytes accessed during the pass.
    pub fn bytes_touched(&self) -> usize {
        self.touched.iter().filter(|&&t| t).count()
    }

    fn allowed(&self, offset: usize, write: bool) -> bool {
        match self.active {
            None => false,
            Some(None) => write && self.regions.first().is_some_and(|r| r.input().contains(&offset)),
            Some(Some(i)) => {
                let r = &self.regions[i - 1];
                if write {
                    r.output().contains(&offset)
                } else {
                    r.input().contains(&offset)
                }
            }
        }
    }

    fn mark(&mut self, offset: usize) {
        if let Some(t) = self.touched.get_mut(offset) {
            *t = true;
        }
    }
}

impl ArenaProbe for ArenaAudit {
    fn enter_layer(&mut self, layer: Option<usize>) {
        self.active = Some(layer);
    }

    fn read(&mut self, offset: usize) {
        self.reads += 1;
        if !self.allowed(offset, false) {
            self.out_of_region += 1;
        }
        if !self.written.get(offset).copied().unwrap_or(false) {
            self.uninitialized_reads += 1;
        }
        self.mark(offset);
    }

    fn write(&mut self, offset: usize) {
        self.writes += 1;
        if !self.allowed(offset, true) {
            self.out_of_region += 1;
        }
        if let Some(w) = self.written.get_mut(offset) {
            *w = true;
        }
        self.mark(offset);
    }
}

struct Arena<'a, P: ArenaProbe> {
    buf: &'a mut [i8],
    probe: &'a mut P,
}

impl<P: ArenaProbe> Arena<'_, P> {
    #[inline]
    fn read(&mut self, offset: usize) -> i32 {
        self.probe.read(offset);
        self.buf[offset] as i32
    }

    #[inline]
    fn write(&mut self, offset: usize, v: i8) {
        self.probe.write(offset);
        self.buf[offset] = v;
    }
}

/// `clamp(round(acc·M) + Z_out)`, then relu as `max(q, Z_out)`.
#[inline]
pub fn requantize(acc: i64, multiplier: f64, zero_point: i32, act: Activation) -> i8 {
    let q = ((acc as f64 * multiplier).round() as i64 + zero_point as i64).clamp(QMIN as i64, QMAX as i64);
    let q = match act {
        Activation::Relu => q.max(zero_point as i64),
        Activation::Linear => q,
    };
    q as i8
}

fn multiplier(input: QuantParams, weight: QuantParams, output: QuantParams) -> f64 {
    input.scale * weight.scale / output.scale
}

#[allow(clippy::too_many_arguments)]
fn conv2d<P: ArenaProbe>(
    arena: &mut Arena<'_, P>,
    region: &LayerRegion,
    spec: &ConvSpec,
    in_shape: TensorShape,
    out_shape: TensorShape,
    params: (QuantParams, QuantParams, QuantParams),
    kernel: &[i8],
    bias: &[i32],
) {
    let (input, weight, output) = params;
    let m = multiplier(input, weight, output);
    let (cin, cout) = (in_shape.channels, out_shape.channels);
    let [kh, kw] = spec.kernel;
    let [sh, sw] = spec.stride;
    let mut acc = vec![0i64; cout];
    for oy in 0..out_shape.height {
        for ox in 0..out_shape.width {
            for (a, &b) in acc.iter_mut().zip(bias) {
                *a = b as i64;
            }
            for ky in 0..kh {
                for kx in 0..kw {
                    let px = ((oy * sh + ky) * in_shape.width + ox * sw + kx) * cin;
                    for ci in 0..cin {
                        let v = (arena.read(region.input_offset + px + ci) - input.zero_point) as i64;
                        let row = &kernel[((ky * kw + kx) * cin + ci) * cout..][..cout];
                        for (a, &k) in acc.iter_mut().zip(row) {
                            *a += v * k as i64;
                        }
                    }
                }
            }
            let base = region.output_offset + (oy * out_shape.width + ox) * cout;
            for (co, &a) in acc.iter().enumerate() {
                arena.write(base + co, requantize(a, m, output.zero_point, spec.activation));
            }
        }
    }
}

fn ds_conv<P: ArenaProbe>(arena: &mut Arena<'_, P>, region: &LayerRegion, layer: &QLayer) {
    let QLayer::DsConv {
        spec,
        in_shape,
        out_shape,
        input,
        depthwise_weight,
        pointwise_weight,
        output,
        depthwise_kernel,
        depthwise_bias,
        pointwise_kernel,
        pointwise_bias,
    } = layer
    else {
        unreachable!()
    };
    let m = input.scale * depthwise_weight.scale * pointwise_weight.scale / output.scale;
    let (c, cout) = (in_shape.channels, out_shape.channels);
    let [kh, kw] = spec.kernel;
    let [sh, sw] = spec.stride;
    let mut mid = vec![0i64; c];
    let mut acc = vec![0i64; cout];
    for oy in 0..out_shape.height {
        for ox in 0..out_shape.width {
            for (a, &b) in mid.iter_mut().zip(depthwise_bias) {
                *a = b as i64;
            }
            for ky in 0..kh {
                for kx in 0..kw {
                    let px = ((oy * sh + ky) * in_shape.width + ox * sw + kx) * c;
                    let taps = &depthwise_kernel[(ky * kw + kx) * c..][..c];
                    for (ch, (a, &k)) in mid.iter_mut().zip(taps).enumerate() {
                        let v = (arena.read(region.input_offset + px + ch) - input.zero_point) as i64;
                        *a += v * k as i64;
                    }
                }
            }
            acc.copy_from_slice(pointwise_bias);
            for (&d, row) in mid.iter().zip(pointwise_kernel.chunks_exact(cout)) {
                for (a, &k) in acc.iter_mut().zip(row) {
                    *a += d * k as i64;
                }
            }
            let base = region.output_offset + (oy * out_shape.width + ox) * cout;
            for (co, &a) in acc.iter().enumerate() {
                arena.write(base + co, requantize(a, m, output.zero_point, spec.activation));
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn dense<P: ArenaProbe>(
    arena: &mut Arena<'_, P>,
    region: &LayerRegion,
    in_len: usize,
    act: Activation,
    params: (QuantParams, QuantParams, QuantParams),
    kernel: &[i8],
    bias: &[i32],
) {
    let (input, weight, output) = params;
    let m = multiplier(input, weight, output);
    let units = bias.len();
    let mut acc: Vec<i64> = bias.iter().map(|&b| b as i64).collect();
    for i in 0..in_len {
        let v = (arena.read(region.input_offset + i) - input.zero_point) as i64;
        for (a, &k) in acc.iter_mut().zip(&kernel[i * units..][..units]) {
            *a += v * k as i64;
        }
    }
    for (o, &a) in acc.iter().enumerate() {
        arena.write(region.output_offset + o, requantize(a, m, output.zero_point, act));
    }
}

/// Runs the quantized network in `arena`, returning the raw int8 output codes.
pub fn forward_quant_with<P: ArenaProbe>(
    model: &QModel,
    plan: &ArenaPlan,
    input: &Tensor,
    arena: &mut [i8],
    probe: &mut P,
) -> Result<Vec<i8>, InferenceError> {
    let expected = model.spec.input_shape().ok_or(crate::archspec::ShapeError::MissingInput)?;
    if input.shape != expected || input.data.len() != expected.len() {
        return Err(InferenceError::InputMismatch {
            expected,
            got: input.data.len(),
        });
    }
    if plan.layers.len() != model.layers.len() {
        return Err(InferenceError::PlanMismatch);
    }
    plan.verify()?;
    if arena.len() < plan.arena_size {
        return Err(InferenceError::ArenaOverflow {
            layer: 0,
            needed: plan.arena_size,
            arena: arena.len(),
        });
    }
    let mut mem = Arena { buf: arena, probe };
    let first = plan.layers.first().ok_or(InferenceError::PlanMismatch)?;
    if first.in_bytes != expected.len() {
        return Err(InferenceError::PlanMismatch);
    }
    mem.probe.enter_layer(None);
    for (i, &r) in input.data.iter().enumerate() {
        mem.write(first.input_offset + i, model.input.quantize(r));
    }
    for (i, (layer, region)) in model.layers.iter().zip(&plan.layers).enumerate() {
        mem.probe.enter_layer(Some(i + 1));
        match layer {
            QLayer::Conv2d {
                spec,
                in_shape,
                out_shape,
                input,
                weight,
                output,
                kernel,
                bias,
            } => {
                if region.in_bytes != in_shape.len() || region.out_bytes != out_shape.len() {
                    return Err(InferenceError::PlanMismatch);
                }
                conv2d(&mut mem, region, spec, *in_shape, *out_shape, (*input, *weight, *output), kernel, bias)
            }
            QLayer::DsConv { in_shape, out_shape, .. } => {
                if region.in_bytes != in_shape.len() || region.out_bytes != out_shape.len() {
                    return Err(InferenceError::PlanMismatch);
                }
                ds_conv(&mut mem, region, layer)
            }
            QLayer::Flatten { len } => {
                if region.in_bytes != *len || region.out_bytes != *len {
                    return Err(InferenceError::PlanMismatch);
                }
                for j in 0..*len {
                    let v = mem.read(region.input_offset + j) as i8;
                    mem.write(region.output_offset + j, v);
                }
            }
            QLayer::Dense {
                in_len,
                activation,
                input,
                weight,
                output,
                kernel,
                bias,
            } => {
                if region.in_bytes != *in_len || region.out_bytes != bias.len() {
                    return Err(InferenceError::PlanMismatch);
                }
                dense(&mut mem, region, *in_len, *activation, (*input, *weight, *output), kernel, bias)
            }
        }
    }
    let last = plan.layers.last().expect("non-empty plan");
    Ok(mem.buf[last.output()].to_vec())
}

/// Quantize `input`, run in a private arena, and dequantize the output.
pub fn forward_quant(model: &QModel, plan: &ArenaPlan, input: &Tensor) -> Result<Vec<f64>, InferenceError> {
    let mut arena = vec![0i8; plan.arena_size];
    let raw = forward_quant_with(model, plan, input, &mut arena, &mut NoProbe)?;
    Ok(raw.into_iter().map(|q| model.output.dequantize(q)).collect())
}
