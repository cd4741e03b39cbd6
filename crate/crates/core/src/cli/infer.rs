use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use super::analyze::load_model;
use super::{invalid, CliError, Ctx, Format};
use crate::inference::{calibrate, categorize, forward_float, forward_quant, plan_arena, quantize_model, Tensor, Weights};

#[derive(Debug, Args)]
pub struct InferArgs {
    pub model: PathBuf,
    pub weights: PathBuf,
    pub input: PathBuf,
    /// Also run the int8 engine.
    #[arg(long, requires = "calib")]
    pub quantize: bool,
    /// Directory of calibration input tensors (`*.json`).
    #[arg(long, value_name = "DIR")]
    pub calib: Option<PathBuf>,
    /// Half width of the center class.
    #[arg(long, default_value_t = 0.33)]
    pub deadband: f64,
}

fn load_calibration(dir: &PathBuf) -> Result<Vec<Tensor>, CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| invalid(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| Tensor::load(p).map_err(invalid)).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ")
}

pub fn run(ctx: &mut Ctx, a: InferArgs) -> Result<(), CliError> {
    ctx.no_csv("infer")?;
    let model = load_model(&a.model)?;
    let weights = Weights::load(&a.weights).map_err(invalid)?;
    let input = Tensor::load(&a.input).map_err(invalid)?;
    let out = forward_float(&model, &weights, &input).map_err(invalid)?;
    let y = *out.first().ok_or_else(|| invalid("model has an empty output"))?;
    let class = categorize(y, a.deadband).map_err(invalid)?;
    let mut report = json!({"model": model.name, "output": out, "class": class});
    let mut text = format!("output: [{}]\nclass: {class}", join(&out));
    if a.quantize {
        let calib_dir = a.calib.as_ref().expect("clap enforces --calib");
        let calib_inputs = load_calibration(calib_dir)?;
        let calib = calibrate(&model, &weights, &calib_inputs).map_err(invalid)?;
        for d in &calib.degenerate {
            ctx.note(&format!("warning: degenerate calibration range at {d}"));
        }
        let qmodel = quantize_model(&model, &weights, &calib).map_err(invalid)?;
        let plan = plan_arena(&model).map_err(invalid)?;
        let q = forward_quant(&qmodel, &plan, &input).map_err(invalid)?;
        let delta: Vec<f64> = q.iter().zip(&out).map(|(a, b)| (a - b).abs()).collect();
        let qclass = categorize(q[0], a.deadband).map_err(invalid)?;
        let s_out = qmodel.output.scale;
        text += &format!(
            "\nquantized: [{}]\nabs_delta: [{}]\noutput_scale: {s_out:.6}\nquantized_class: {qclass}\narena_bytes: {}",
            join(&q),
            join(&delta),
            plan.arena_size
        );
        report["quantized"] = json!({"output": q, "abs_delta": delta, "output_scale": s_out, "class": qclass, "arena_bytes": plan.arena_size});
    }
    match ctx.format {
        Format::Json => ctx.json(&report),
        _ => ctx.print(&text),
    }
}
