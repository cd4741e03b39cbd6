//! JSON model file format.
//!
//! ```json
//! {"name": "pilotnet", "input": [66, 200, 3],
//!  "layers": [{"type": "conv2d", "filters": 24, "kernel": [5, 5], "stride": [2, 2], "activation": "relu"},
//!             {"type": "flatten"},
//!             {"type": "dense", "units": 1, "activation": "linear"}]}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layer::{Activation, ConvSpec, DenseSpec, LayerSpec, ModelSpec, Padding, TensorShape};
use super::ArchError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    name: String,
    input: [usize; 3],
    layers: Vec<LayerFile>,
}

fn one() -> [usize; 2] {
    [1, 1]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum LayerFile {
    Input {
        shape: [usize; 3],
    },
    Conv2d {
        filters: usize,
        kernel: [usize; 2],
        #[serde(default = "one")]
        stride: [usize; 2],
        #[serde(default)]
        padding: Padding,
        #[serde(default)]
        activation: Activation,
    },
    DsConv {
        filters: usize,
        kernel: [usize; 2],
        #[serde(default = "one")]
        stride: [usize; 2],
        #[serde(default)]
        padding: Padding,
        #[serde(default)]
        activation: Activation,
    },
    Flatten {},
    Dense {
        units: usize,
        #[serde(default)]
        activation: Activation,
    },
}

impl From<&LayerSpec> for LayerFile {
    fn from(l: &LayerSpec) -> Self {
        match *l {
            LayerSpec::Input(s) => LayerFile::Input { shape: s.to_array() },
            LayerSpec::Conv2d(c) => LayerFile::Conv2d {
                filters: c.filters,
                kernel: c.kernel,
                stride: c.stride,
                padding: c.padding,
                activation: c.activation,
            },
            LayerSpec::DsConv(c) => LayerFile::DsConv {
                filters: c.filters,
                kernel: c.kernel,
                stride: c.stride,
                padding: c.padding,
                activation: c.activation,
            },
            LayerSpec::Flatten => LayerFile::Flatten {},
            LayerSpec::Dense(d) => LayerFile::Dense {
                units: d.units,
                activation: d.activation,
            },
        }
    }
}

impl From<LayerFile> for LayerSpec {
    fn from(l: LayerFile) -> Self {
        match l {
            LayerFile::Input { shape } => LayerSpec::Input(shape.into()),
            LayerFile::Conv2d {
                filters,
                kernel,
                stride,
                padding,
                activation,
            } => LayerSpec::Conv2d(ConvSpec {
                filters,
                kernel,
                stride,
                padding,
                activation,
            }),
            LayerFile::DsConv {
                filters,
                kernel,
                stride,
                padding,
                activation,
            } => LayerSpec::DsConv(ConvSpec {
                filters,
                kernel,
                stride,
                padding,
                activation,
            }),
            LayerFile::Flatten {} => LayerSpec::Flatten,
            LayerFile::Dense { units, activation } => LayerSpec::Dense(DenseSpec { units, activation }),
        }
    }
}

impl From<ModelFile> for ModelSpec {
    fn from(f: ModelFile) -> Self {
        let mut layers = Vec::with_capacity(f.layers.len() + 1);
        layers.push(LayerSpec::Input(TensorShape::from(f.input)));
        layers.extend(f.layers.into_iter().map(LayerSpec::from));
        ModelSpec::new(f.name, layers)
    }
}

impl From<&ModelSpec> for ModelFile {
    fn from(m: &ModelSpec) -> Self {
        let (input, rest) = match m.layers.split_first() {
            Some((LayerSpec::Input(s), rest)) => (s.to_array(), rest),
            _ => ([0, 0, 0], &m.layers[..]),
        };
        ModelFile {
            name: m.name.clone(),
            input,
            layers: rest.iter().map(LayerFile::from).collect(),
        }
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ModelFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        ModelFile::deserialize(d).map(ModelSpec::from)
    }
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self, ArchError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ArchError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ArchError::Io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }
}
