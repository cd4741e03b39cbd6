use std::path::PathBuf;

use clap::Args;

use super::{invalid, CliError, Ctx, Format};
use crate::archspec::{
    analyze_model_with, apply_width, infer_shapes, to_depthwise, validate, AnalysisConfig, ModelSpec, Report, ValidateOptions,
    DEFAULT_FLASH_OVERHEAD_BYTES,
};
use crate::latency::LatencyModel;

pub const DEFAULT_SRAM_BYTES: u64 = 270_336;
pub const DEFAULT_FLASH_BYTES: u64 = 2_097_152;

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Model JSON file.
    pub model: PathBuf,
    /// Replace every conv2d with a depthwise-separable convolution.
    #[arg(long)]
    pub depthwise: bool,
    /// Width multiplier in (0, 1] applied to all hidden layers.
    #[arg(long)]
    pub width: Option<f64>,
    /// Require input height and width to be multiples of four.
    #[arg(long)]
    pub camera: bool,
    /// Add the predicted latency.
    #[arg(long)]
    pub latency: bool,
    /// Latency model JSON (default pico-ds-v1).
    #[arg(long, value_name = "FILE")]
    pub latency_model: Option<PathBuf>,
    /// Exit 3 when arena or flash exceed the budgets.
    #[arg(long)]
    pub assert_fits: bool,
    #[arg(long, default_value_t = DEFAULT_SRAM_BYTES)]
    pub sram_bytes: u64,
    #[arg(long, default_value_t = DEFAULT_FLASH_BYTES)]
    pub flash_bytes: u64,
    /// Fixed flash cost of the runtime and application code.
    #[arg(long, default_value_t = DEFAULT_FLASH_OVERHEAD_BYTES)]
    pub flash_overhead: u64,
}

pub(crate) fn load_latency_model(path: Option<&PathBuf>) -> Result<LatencyModel, CliError> {
    match path {
        Some(p) => LatencyModel::load(p).map_err(invalid),
        None => Ok(LatencyModel::pico_ds_v1()),
    }
}

pub(crate) fn load_model(path: &PathBuf) -> Result<ModelSpec, CliError> {
    ModelSpec::load(path).map_err(invalid)
}

pub fn run(ctx: &mut Ctx, a: AnalyzeArgs) -> Result<(), CliError> {
    let mut model = load_model(&a.model)?;
    if a.depthwise {
        model = to_depthwise(&model);
    }
    if let Some(w) = a.width {
        model = apply_width(&model, w).map_err(invalid)?;
    }
    validate(&model, ValidateOptions { camera_constraint: a.camera }).map_err(|v| {
        CliError::Invalid(format!(
            "invalid model: {}",
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
        ))
    })?;
    let shapes = infer_shapes(&model).map_err(invalid)?;
    let cfg = AnalysisConfig {
        flash_overhead_bytes: a.flash_overhead,
    };
    let analysis = analyze_model_with(&model, &cfg).map_err(invalid)?;
    let mut report = Report::new(&model, &shapes, &analysis);
    if a.latency || a.latency_model.is_some() {
        report.predicted_latency_ms = Some(load_latency_model(a.latency_model.as_ref())?.predict(analysis.total_macs));
    }
    match ctx.format {
        Format::Text => ctx.print(&report.to_text())?,
        Format::Json => ctx.json(&report)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let err = |e: csv::Error| invalid(e);
            w.write_record(["layer", "kind", "input", "output", "weights", "macs", "in_bytes", "out_bytes"])
                .map_err(err)?;
            for r in &report.rows {
                let a = &r.analysis;
                w.write_record([
                    r.layer.clone(),
                    r.kind.clone(),
                    r.input.clone(),
                    r.output.clone(),
                    a.param_count.to_string(),
                    a.macs.to_string(),
                    a.in_bytes.to_string(),
                    a.out_bytes.to_string(),
                ])
                .map_err(err)?;
            }
            let bytes = w.into_inner().map_err(|e| invalid(e.to_string()))?;
            ctx.out.write_all(&bytes).map_err(invalid)?;
        }
    }
    if a.assert_fits {
        let mut over = Vec::new();
        if analysis.arena_bytes > a.sram_bytes {
            over.push(format!("arena {} > {} bytes", analysis.arena_bytes, a.sram_bytes));
        }
        if analysis.flash_bytes > a.flash_bytes {
            over.push(format!("flash {} > {} bytes", analysis.flash_bytes, a.flash_bytes));
        }
        if !over.is_empty() {
            return Err(CliError::Constraint(format!("{} does not fit: {}", model.name, over.join(", "))));
        }
    }
    Ok(())
}
