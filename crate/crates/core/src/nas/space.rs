use serde::{Deserialize, Serialize};

use super::NasError;
use crate::archspec::{analyze_model_with, apply_width, builtin, validate, AnalysisConfig, LayerSpec, ModelAnalysis, ModelSpec, ValidateOptions};
use crate::latency::LatencyModel;

pub const DEFAULT_WIDTHS: [f64; 6] = [0.2, 0.4, 0.7, 0.8, 0.9, 1.0];

/// Widest supported middle section (layout masks are `u32`).
const MAX_MIDDLE: usize = 24;

/// Width × depth search space over a backbone.
///
/// The first weighted layer (input convolution) and the last dense layer are
/// always kept; every weighted layer in between is optional.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    backbone: ModelSpec,
    widths: Vec<f64>,
    head: usize,
    middle: Vec<usize>,
    output: usize,
}

/// Subset of the middle layers; bit `j` keeps the `j`-th middle layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Layout(pub u32);

impl Layout {
    pub fn keeps(self, j: usize) -> bool {
        self.0 >> j & 1 == 1
    }

    pub fn kept(self) -> u32 {
        self.0.count_ones()
    }
}

impl SearchSpace {
    pub fn new(backbone: ModelSpec, widths: Vec<f64>) -> Result<Self, NasError> {
        if widths.is_empty() {
            return Err(NasError::Config("width list is empty".into()));
        }
        if let Some(w) = widths.iter().find(|&&w| !(w > 0.0 && w <= 1.0)) {
            return Err(NasError::Config(format!("width {w} outside (0, 1]")));
        }
        validate(&backbone, ValidateOptions::default()).map_err(|v| {
            NasError::Config(format!(
                "invalid backbone: {}",
                v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
            ))
        })?;
        let weighted: Vec<usize> = backbone
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_conv() || matches!(l, LayerSpec::Dense(_)))
            .map(|(i, _)| i)
            .collect();
        let (head, output) = (weighted[0], *weighted.last().unwrap());
        if !backbone.layers[head].is_conv() {
            return Err(NasError::Config("backbone must start with a convolution".into()));
        }
        let middle: Vec<usize> = weighted[1..weighted.len() - 1].to_vec();
        if middle.len() > MAX_MIDDLE {
            return Err(NasError::Config(format!("{} middle layers exceed {MAX_MIDDLE}", middle.len())));
        }
        if !middle.iter().any(|&i| backbone.layers[i].is_conv()) {
            return Err(NasError::Config("backbone has no optional convolution".into()));
        }
        Ok(Self {
            backbone,
            widths,
            head,
            middle,
            output,
        })
    }

    /// Depthwise-separable PilotNet at 68×68×1 with the default widths.
    pub fn default_space() -> Self {
        Self::new(builtin::pilotnet_ds_68(), DEFAULT_WIDTHS.to_vec()).expect("built-in space is valid")
    }

    pub fn backbone(&self) -> &ModelSpec {
        &self.backbone
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn middle_len(&self) -> usize {
        self.middle.len()
    }

    fn middle_conv_mask(&self) -> u32 {
        self.middle
            .iter()
            .enumerate()
            .filter(|(_, &i)| self.backbone.layers[i].is_conv())
            .fold(0, |m, (j, _)| m | 1 << j)
    }

    /// Every subset of the middle layers keeping at least one convolution, in
    /// ascending mask order.
    pub fn enumerate_layouts(&self) -> Vec<Layout> {
        let convs = self.middle_conv_mask();
        (0..1u32 << self.middle.len())
            .filter(|m| m & convs != 0)
            .map(Layout)
            .collect()
    }

    /// Full-width model for `layout`; flatten sits between the last conv and first dense.
    pub fn layout_model(&self, layout: Layout) -> ModelSpec {
        let kept = |j: usize| layout.keeps(j);
        let mut layers = vec![self.backbone.layers[0], self.backbone.layers[self.head]];
        let middle = self.middle.iter().enumerate().filter(|&(j, _)| kept(j)).map(|(_, &i)| self.backbone.layers[i]);
        let (convs, denses): (Vec<LayerSpec>, Vec<LayerSpec>) = middle.partition(LayerSpec::is_conv);
        layers.extend(convs);
        layers.push(LayerSpec::Flatten);
        layers.extend(denses);
        layers.push(self.backbone.layers[self.output]);
        let bits = self.middle.len();
        ModelSpec::new(format!("{}-L{:0bits$b}", self.backbone.name, layout.0), layers)
    }

    /// Layouts × widths, analyzed and latency-predicted, in `(layout, width)` order.
    pub fn enumerate_candidates(&self, latency: &LatencyModel, analysis: &AnalysisConfig) -> Result<Vec<Candidate>, NasError> {
        let n_widths = self.widths.len() as u32;
        let mut out = Vec::new();
        for layout in self.enumerate_layouts() {
            let base = self.layout_model(layout);
            for (wi, &width) in self.widths.iter().enumerate() {
                let mut model = apply_width(&base, width)?;
                model.name = format!("{}-w{width}", base.name);
                let analysis = analyze_model_with(&model, analysis)?;
                out.push(Candidate {
                    id: layout.0 * n_widths + wi as u32,
                    layout,
                    layers: 2 + layout.kept() as usize,
                    width,
                    predicted_latency_ms: latency.predict(analysis.total_macs),
                    model,
                    analysis,
                });
            }
        }
        Ok(out)
    }
}

/// One point of the search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: u32,
    pub layout: Layout,
    /// Weighted layers (convolutions and dense), kept ends included.
    pub layers: usize,
    pub width: f64,
    pub model: ModelSpec,
    pub analysis: ModelAnalysis,
    pub predicted_latency_ms: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archspec::{infer_shapes, Activation, TensorShape};

    #[test]
    fn default_space_counts() {
        let s = SearchSpace::default_space();
        assert_eq!(s.middle_len(), 7);
        assert_eq!(s.enumerate_layouts().len(), (1 << 7) - (1 << 3));
    }

    #[test]
    fn single_middle_conv() {
        let m = ModelSpec::new(
            "small",
            vec![
                LayerSpec::Input(TensorShape::new(16, 16, 1)),
                LayerSpec::ds_conv(4, 3, 1),
                LayerSpec::ds_conv(4, 3, 1),
                LayerSpec::Flatten,
                LayerSpec::dense(1, Activation::Linear),
            ],
        );
        let s = SearchSpace::new(m, vec![1.0]).unwrap();
        assert_eq!(s.enumerate_layouts(), vec![Layout(1)]);
    }

    #[test]
    fn layouts_keep_ends_and_place_flatten() {
        let s = SearchSpace::default_space();
        for layout in s.enumerate_layouts() {
            let m = s.layout_model(layout);
            assert_eq!(m.layers[1], s.backbone().layers[1]);
            assert_eq!(m.layers.last(), s.backbone().layers.last());
            assert_eq!(m.layers.len(), 4 + layout.kept() as usize);
            validate(&m, ValidateOptions::default()).unwrap();
            infer_shapes(&m).unwrap();
        }
    }

    #[test]
    fn rejects_bad_widths() {
        let b = builtin::pilotnet_ds_68();
        assert!(SearchSpace::new(b.clone(), vec![]).is_err());
        assert!(SearchSpace::new(b.clone(), vec![0.0]).is_err());
        assert!(SearchSpace::new(b, vec![1.5]).is_err());
    }

    #[test]
    fn candidate_ids_unique_and_stable() {
        let s = SearchSpace::default_space();
        let a = s.enumerate_candidates(&LatencyModel::pico_ds_v1(), &AnalysisConfig::default()).unwrap();
        let b = s.enumerate_candidates(&LatencyModel::pico_ds_v1(), &AnalysisConfig::default()).unwrap();
        assert_eq!(a.len(), 720);
        assert_eq!(a, b);
        let mut ids: Vec<u32> = a.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 720);
    }
}
