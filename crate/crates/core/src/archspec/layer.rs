use std::fmt;

use serde::{Deserialize, Serialize};

/// Elementwise nonlinearity applied after a layer's bias add.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Linear,
}

/// Only valid (no) padding is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    #[default]
    Valid,
}

/// Height × width × channels of an activation tensor.
///
/// Flatten and dense outputs are `1×1×n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl TensorShape {
    pub const fn new(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
        }
    }

    pub const fn vector(len: usize) -> Self {
        Self::new(1, 1, len)
    }

    /// Number of elements (and int8 bytes).
    pub const fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn is_vector(&self) -> bool {
        self.height == 1 && self.width == 1
    }

    pub fn to_array(self) -> [usize; 3] {
        [self.height, self.width, self.channels]
    }
}

impl From<[usize; 3]> for TensorShape {
    fn from(d: [usize; 3]) -> Self {
        Self::new(d[0], d[1], d[2])
    }
}

impl fmt::Display for TensorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_vector() {
            write!(f, "{}", self.channels)
        } else {
            write!(f, "{}x{}x{}", self.height, self.width, self.channels)
        }
    }
}

/// Parameters shared by standard and depthwise-separable convolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConvSpec {
    pub filters: usize,
    /// `[K_h, K_w]`
    pub kernel: [usize; 2],
    /// `[s_h, s_w]`
    pub stride: [usize; 2],
    pub padding: Padding,
    pub activation: Activation,
}

impl ConvSpec {
    pub fn new(filters: usize, kernel: [usize; 2], stride: [usize; 2], activation: Activation) -> Self {
        Self {
            filters,
            kernel,
            stride,
            padding: Padding::Valid,
            activation,
        }
    }

    pub fn kernel_area(&self) -> usize {
        self.kernel[0] * self.kernel[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DenseSpec {
    pub units: usize,
    pub activation: Activation,
}

/// One layer of a declarative CNN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerSpec {
    Input(TensorShape),
    Conv2d(ConvSpec),
    /// Depthwise (channel multiplier 1) followed by a 1×1 pointwise convolution.
    DsConv(ConvSpec),
    Flatten,
    Dense(DenseSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Input,
    Conv2d,
    DsConv,
    Flatten,
    Dense,
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayerKind::Input => "input",
            LayerKind::Conv2d => "conv2d",
            LayerKind::DsConv => "ds_conv",
            LayerKind::Flatten => "flatten",
            LayerKind::Dense => "dense",
        })
    }
}

impl LayerSpec {
    pub fn conv2d(filters: usize, kernel: usize, stride: usize) -> Self {
        LayerSpec::Conv2d(ConvSpec::new(
            filters,
            [kernel, kernel],
            [stride, stride],
            Activation::Relu,
        ))
    }

    pub fn ds_conv(filters: usize, kernel: usize, stride: usize) -> Self {
        LayerSpec::DsConv(ConvSpec::new(
            filters,
            [kernel, kernel],
            [stride, stride],
            Activation::Relu,
        ))
    }

    pub fn dense(units: usize, activation: Activation) -> Self {
        LayerSpec::Dense(DenseSpec { units, activation })
    }

    pub fn kind(&self) -> LayerKind {
        match self {
            LayerSpec::Input(_) => LayerKind::Input,
            LayerSpec::Conv2d(_) => LayerKind::Conv2d,
            LayerSpec::DsConv(_) => LayerKind::DsConv,
            LayerSpec::Flatten => LayerKind::Flatten,
            LayerSpec::Dense(_) => LayerKind::Dense,
        }
    }

    pub fn is_conv(&self) -> bool {
        matches!(self, LayerSpec::Conv2d(_) | LayerSpec::DsConv(_))
    }

    pub fn conv(&self) -> Option<&ConvSpec> {
        match self {
            LayerSpec::Conv2d(c) | LayerSpec::DsConv(c) => Some(c),
            _ => None,
        }
    }

    pub fn activation(&self) -> Activation {
        match self {
            LayerSpec::Conv2d(c) | LayerSpec::DsConv(c) => c.activation,
            LayerSpec::Dense(d) => d.activation,
            LayerSpec::Input(_) | LayerSpec::Flatten => Activation::Linear,
        }
    }
}

/// A named, ordered list of layers beginning with the input layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub name: String,
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>, layers: Vec<LayerSpec>) -> Self {
        Self {
            name: name.into(),
            layers,
        }
    }

    pub fn input_shape(&self) -> Option<TensorShape> {
        match self.layers.first() {
            Some(LayerSpec::Input(s)) => Some(*s),
            _ => None,
        }
    }

    /// Display labels in the style `Conv1..ConvN`, `FC1..FCN`.
    pub fn layer_labels(&self) -> Vec<String> {
        let (mut conv, mut fc) = (0, 0);
        self.layers
            .iter()
            .map(|l| match l {
                LayerSpec::Input(_) => "Input".to_string(),
                LayerSpec::Conv2d(_) | LayerSpec::DsConv(_) => {
                    conv += 1;
                    format!("Conv{conv}")
                }
                LayerSpec::Flatten => "Flatten".to_string(),
                LayerSpec::Dense(_) => {
                    fc += 1;
                    format!("FC{fc}")
                }
            })
            .collect()
    }

    pub fn conv_count(&self) -> usize {
        self.layers.iter().filter(|l| l.is_conv()).count()
    }

    pub fn has_conv2d(&self) -> bool {
        self.layers.iter().any(|l| matches!(l, LayerSpec::Conv2d(_)))
    }

    pub fn has_ds_conv(&self) -> bool {
        self.layers.iter().any(|l| matches!(l, LayerSpec::DsConv(_)))
    }
}
