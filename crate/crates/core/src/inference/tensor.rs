use std::path::Path;

use serde::{Deserialize, Serialize};

use super::InferenceError;
use crate::archspec::TensorShape;

/// Dense HWC tensor, row-major (`(y·W + x)·C + c`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<T = f64> {
    #[serde(with = "shape_array")]
    pub shape: TensorShape,
    pub data: Vec<T>,
}

mod shape_array {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::archspec::TensorShape;

    pub fn serialize<S: Serializer>(s: &TensorShape, ser: S) -> Result<S::Ok, S::Error> {
        s.to_array().serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<TensorShape, D::Error> {
        let dims = Vec::<usize>::deserialize(de)?;
        match dims[..] {
            [n] => Ok(TensorShape::vector(n)),
            [h, w, c] => Ok(TensorShape::new(h, w, c)),
            _ => Err(serde::de::Error::custom(format!(
                "shape must have 1 or 3 dims, got {}",
                dims.len()
            ))),
        }
    }
}

impl<T: Copy> Tensor<T> {
    pub fn new(shape: TensorShape, data: Vec<T>) -> Result<Self, InferenceError> {
        if shape.len() != data.len() {
            return Err(InferenceError::InputMismatch {
                expected: shape,
                got: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn filled(shape: TensorShape, v: T) -> Self {
        Self {
            shape,
            data: vec![v; shape.len()],
        }
    }

    pub fn at(&self, y: usize, x: usize, c: usize) -> T {
        self.data[(y * self.shape.width + x) * self.shape.channels + c]
    }
}

impl Tensor<f64> {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, InferenceError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| InferenceError::Io(path.display().to_string(), e))?;
        let t: Tensor<f64> = serde_json::from_str(&text)?;
        Tensor::new(t.shape, t.data)
    }
}
