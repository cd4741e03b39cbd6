use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use serde_json::json;

use super::{emit, invalid, write_file, CliError, Ctx, Format};
use crate::simloop::{
    episode_rng, fit_error_mapping, run_episode_traced, run_grid, spearman, EpisodeResult, SimConfig, TRACK_PERF_LOSS_ACCURACY,
};

#[derive(Debug, Subcommand)]
pub enum SimCmd {
    /// One episode.
    Run {
        #[command(flatten)]
        common: SimArgs,
        #[arg(long)]
        p_err: Option<f64>,
        #[arg(long)]
        latency_ms: Option<u32>,
        /// Per-event JSONL log of state and commands.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
    },
    /// Mean time to crash over latency × error-rate cells.
    Grid {
        #[command(flatten)]
        common: SimArgs,
        /// Comma-separated latencies in ms.
        #[arg(long, value_delimiter = ',')]
        latencies: Option<Vec<u32>>,
        /// Comma-separated error rates, or a level count N for 0, 0.1, …, (N−1)/10.
        #[arg(long)]
        errors: Option<String>,
        /// Episodes per cell.
        #[arg(long)]
        runs: Option<u32>,
        /// Grid CSV destination (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Simulator config JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// m/s
    #[arg(long)]
    pub speed: Option<f64>,
    /// Episode length cap in seconds.
    #[arg(long)]
    pub cap: Option<f64>,
}

impl SimArgs {
    fn config(&self) -> Result<SimConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => SimConfig::load(p).map_err(invalid)?,
            None => SimConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.grid.seed = s;
        }
        if let Some(v) = self.speed {
            cfg.pilot.speed = v;
        }
        if let Some(c) = self.cap {
            cfg.grid.cap_seconds = c;
        }
        Ok(cfg)
    }
}

pub(crate) fn parse_errors(s: &str) -> Result<Vec<f64>, CliError> {
    let s = s.trim();
    if !s.contains([',', '.']) {
        let n: usize = s.parse().map_err(|_| CliError::Usage(format!("--errors: bad level count {s:?}")))?;
        if n == 0 || n > 11 {
            return Err(CliError::Usage("--errors: level count must be 1..=11".into()));
        }
        return Ok((0..n).map(|k| k as f64 / 10.0).collect());
    }
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("--errors: bad rate {v:?}"))))
        .collect()
}

fn episode_text(r: &EpisodeResult) -> String {
    format!(
        "ttc_seconds: {:.3}\ncrashed: {}\nlaps: {}\ndistance_m: {:.3}",
        r.ttc_seconds, r.crashed, r.laps_completed, r.distance
    )
}

pub fn run(ctx: &mut Ctx, cmd: SimCmd) -> Result<(), CliError> {
    match cmd {
        SimCmd::Run {
            common,
            p_err,
            latency_ms,
            trace,
        } => {
            let mut cfg = common.config()?;
            if let Some(p) = p_err {
                cfg.pilot.error_rate = p;
            }
            if let Some(l) = latency_ms {
                cfg.pilot.inference_latency_ms = l;
            }
            let track = cfg.build_track().map_err(invalid)?;
            let mut log = Vec::new();
            let mut sink = |e: &crate::simloop::TraceEvent| {
                if trace.is_some() {
                    let _ = serde_json::to_writer(&mut log, e);
                    let _ = log.write_all(b"\n");
                }
            };
            let mut rng = episode_rng(cfg.grid.seed, 0);
            let r = run_episode_traced(&track, &cfg.pilot, cfg.grid.cap_seconds, &mut rng, &mut sink).map_err(invalid)?;
            if let Some(p) = &trace {
                write_file(p, &log)?;
            }
            match ctx.format {
                Format::Json => ctx.json(&r),
                Format::Text => ctx.print(&episode_text(&r)),
                Format::Csv => ctx.print(&format!(
                    "ttc_seconds,crashed,laps,distance_m\n{:.3},{},{},{:.3}",
                    r.ttc_seconds, r.crashed, r.laps_completed, r.distance
                )),
            }
        }
        SimCmd::Grid {
            common,
            latencies,
            errors,
            runs,
            output,
        } => {
            let mut cfg = common.config()?;
            if let Some(l) = latencies {
                cfg.grid.latencies_ms = l;
            }
            if let Some(e) = errors {
                cfg.grid.error_rates = parse_errors(&e)?;
            }
            if let Some(r) = runs {
                cfg.grid.runs_per_cell = r;
            }
            let track = cfg.build_track().map_err(invalid)?;
            let grid = run_grid(&track, &cfg.pilot, &cfg.grid, ctx.jobs).map_err(invalid)?;
            let mut buf = Vec::new();
            grid.write_csv(&mut buf).map_err(invalid)?;
            let mapping = fit_error_mapping(&TRACK_PERF_LOSS_ACCURACY).map_err(invalid)?;
            let ttc: Vec<f64> = grid.cells().map(|c| c.2).collect();
            let rho = grid.heuristic_scores(&mapping).ok().and_then(|s| spearman(&s, &ttc));
            if output.is_none() && ctx.format == Format::Json {
                return ctx.json(&json!({"grid": grid, "spearman_score_vs_ttc": rho}));
            }
            emit(ctx, output.as_ref(), &buf)?;
            let summary = format!(
                "{} cells × {} runs, spearman(score, ttc) = {}",
                ttc.len(),
                cfg.grid.runs_per_cell,
                rho.map_or("undefined".to_string(), |r| format!("{r:.3}"))
            );
            if output.is_none() {
                ctx.note(&summary);
                return Ok(());
            }
            match ctx.format {
                Format::Json => ctx.json(&json!({"cells": ttc.len(), "runs_per_cell": cfg.grid.runs_per_cell, "spearman_score_vs_ttc": rho})),
                _ => ctx.print(&summary),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_levels() {
        assert_eq!(parse_errors("5").unwrap(), vec![0.0, 0.1, 0.2, 0.3, 0.4]);
        assert_eq!(parse_errors("0,0.25").unwrap(), vec![0.0, 0.25]);
        assert_eq!(parse_errors("0.3").unwrap(), vec![0.3]);
        assert!(parse_errors("0").is_err());
        assert!(parse_errors("a,b").is_err());
    }
}
