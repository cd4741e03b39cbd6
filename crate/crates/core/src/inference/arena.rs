//! Static ping-pong placement of activations inside a single arena.

use serde::{Deserialize, Serialize};

use super::InferenceError;
use crate::archspec::{analyze_model, ModelSpec, ShapeError};

/// Byte regions one layer reads from and writes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerRegion {
    pub input_offset: usize,
    pub in_bytes: usize,
    pub output_offset: usize,
    pub out_bytes: usize,
}

impl LayerRegion {
    pub fn input(&self) -> std::ops::Range<usize> {
        self.input_offset..self.input_offset + self.in_bytes
    }

    pub fn output(&self) -> std::ops::Range<usize> {
        self.output_offset..self.output_offset + self.out_bytes
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArenaPlan {
    pub arena_size: usize,
    /// One entry per non-input layer.
    pub layers: Vec<LayerRegion>,
}

impl ArenaPlan {
    /// Every region fits, input and output never overlap, and each layer reads
    /// where its predecessor wrote.
    pub fn verify(&self) -> Result<(), InferenceError> {
        for (i, r) in self.layers.iter().enumerate() {
            let (inp, out) = (r.input(), r.output());
            if inp.end > self.arena_size || out.end > self.arena_size {
                return Err(InferenceError::ArenaOverflow {
                    layer: i + 1,
                    needed: inp.end.max(out.end),
                    arena: self.arena_size,
                });
            }
            if inp.start < out.end && out.start < inp.end {
                return Err(InferenceError::ArenaOverlap { layer: i + 1 });
            }
            if let Some(prev) = i.checked_sub(1).map(|p| self.layers[p]) {
                if prev.output() != inp {
                    return Err(InferenceError::ArenaOverlap { layer: i + 1 });
                }
            }
        }
        Ok(())
    }
}

/// Even layers read at the front and write at the back; odd layers mirror.
pub fn plan_arena(model: &ModelSpec) -> Result<ArenaPlan, ShapeError> {
    let analysis = analyze_model(model)?;
    let arena_size = analysis.arena_bytes as usize;
    let layers = analysis
        .layers
        .iter()
        .skip(1)
        .enumerate()
        .map(|(i, a)| {
            let (in_bytes, out_bytes) = (a.in_bytes as usize, a.out_bytes as usize);
            if i % 2 == 0 {
                LayerRegion {
                    input_offset: 0,
                    in_bytes,
                    output_offset: arena_size - out_bytes,
                    out_bytes,
                }
            } else {
                LayerRegion {
                    input_offset: arena_size - in_bytes,
                    in_bytes,
                    output_offset: 0,
                    out_bytes,
                }
            }
        })
        .collect();
    Ok(ArenaPlan { arena_size, layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archspec::{builtin, Activation, LayerSpec, TensorShape};

    #[test]
    fn pilotnet_plan() {
        let plan = plan_arena(&builtin::pilotnet()).unwrap();
        assert_eq!(plan.arena_size, 112_512);
        assert_eq!(plan.layers[0].input_offset, 0);
        assert_eq!(plan.layers[0].output_offset, 112_512 - 72_912);
        plan.verify().unwrap();
    }

    #[test]
    fn single_layer() {
        let m = ModelSpec::new("one", vec![LayerSpec::Input(TensorShape::new(2, 3, 1)), LayerSpec::Flatten]);
        let plan = plan_arena(&m).unwrap();
        assert_eq!(plan.arena_size, 12);
        assert_eq!(
            plan.layers,
            vec![LayerRegion { input_offset: 0, in_bytes: 6, output_offset: 6, out_bytes: 6 }]
        );
        let two = ModelSpec::new(
            "two",
            vec![LayerSpec::Input(TensorShape::vector(6)), LayerSpec::Flatten, LayerSpec::dense(2, Activation::Linear)],
        );
        let plan = plan_arena(&two).unwrap();
        assert_eq!(plan.layers[1], LayerRegion { input_offset: 6, in_bytes: 6, output_offset: 0, out_bytes: 2 });
        plan.verify().unwrap();
    }

    #[test]
    fn verify_catches_broken_plans() {
        let mut plan = plan_arena(&builtin::pilotnet()).unwrap();
        plan.arena_size -= 1;
        assert!(matches!(plan.verify(), Err(InferenceError::ArenaOverflow { .. })));
        let mut plan = plan_arena(&builtin::pilotnet()).unwrap();
        plan.layers[0].output_offset = 10;
        assert!(plan.verify().is_err());
    }
}
