use std::path::PathBuf;

use clap::{Args, Subcommand};
use serde_json::json;

use super::analyze::{load_latency_model, load_model};
use super::{emit, invalid, CliError, Ctx, Format};
use crate::archspec::{analyze_model, validate, ValidateOptions};
use crate::latency::{load_profile_csv, LatencyModel};

#[derive(Debug, Subcommand)]
pub enum LatencyCmd {
    /// Least-squares fit of a `macs,latency_ms` profile CSV.
    Fit {
        csv: PathBuf,
        #[arg(long, default_value = "fitted")]
        name: String,
        /// Write the model JSON here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Predicted latency for a MAC count or a model file.
    Predict(PredictArgs),
    /// Largest MAC count whose predicted latency meets the deadline.
    Budget {
        #[arg(long, default_value_t = 133.0)]
        deadline_ms: f64,
        #[arg(long, value_name = "FILE")]
        latency_model: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pub macs: Option<u64>,
    /// Model JSON whose MACs are predicted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub latency_model: Option<PathBuf>,
    /// Predict for models with regular convolutions, outside the fitted regime.
    #[arg(long)]
    pub force: bool,
}

pub fn run(ctx: &mut Ctx, cmd: LatencyCmd) -> Result<(), CliError> {
    match cmd {
        LatencyCmd::Fit { csv, name, output } => {
            let points = load_profile_csv(&csv).map_err(invalid)?;
            let model = LatencyModel::fit(name, &points).map_err(invalid)?;
            let text = model.to_json() + "\n";
            if output.is_some() || ctx.format == Format::Json {
                emit(ctx, output.as_ref(), text.as_bytes())?;
            }
            if output.is_some() || ctx.format != Format::Json {
                ctx.no_csv("latency fit")?;
                ctx.print(&format!(
                    "latency_ms = {} * macs + {}\nr2: {:.6}\npoints: {}",
                    model.slope,
                    model.intercept,
                    model.r2,
                    points.len()
                ))?;
            }
            Ok(())
        }
        LatencyCmd::Predict(p) => {
            let lm = load_latency_model(p.latency_model.as_ref())?;
            let macs = match (&p.model, p.macs) {
                (Some(path), _) => {
                    let m = load_model(path)?;
                    validate(&m, ValidateOptions::default()).map_err(|v| invalid(format!("invalid model: {}", v[0])))?;
                    if m.has_conv2d() && !p.force {
                        return Err(CliError::Invalid(format!(
                            "{} has conv2d layers; the latency model covers depthwise-separable networks (use --force)",
                            m.name
                        )));
                    }
                    analyze_model(&m).map_err(invalid)?.total_macs
                }
                (None, Some(m)) => m,
                (None, None) => return Err(CliError::Usage("give --macs or --model".into())),
            };
            let ms = lm.predict(macs);
            match ctx.format {
                Format::Json => ctx.json(&json!({"model": lm.name, "macs": macs, "latency_ms": ms})),
                Format::Text => ctx.print(&format!("{ms:.6}")),
                Format::Csv => ctx.print(&format!("macs,latency_ms\n{macs},{ms:.6}")),
            }
        }
        LatencyCmd::Budget {
            deadline_ms,
            latency_model,
        } => {
            let lm = load_latency_model(latency_model.as_ref())?;
            let budget = lm.mac_budget(deadline_ms).map_err(invalid)?;
            match ctx.format {
                Format::Json => ctx.json(&json!({"model": lm.name, "deadline_ms": deadline_ms, "max_macs": budget})),
                Format::Text => ctx.print(&budget.to_string()),
                Format::Csv => ctx.print(&format!("deadline_ms,max_macs\n{deadline_ms},{budget}")),
            }
        }
    }
}
