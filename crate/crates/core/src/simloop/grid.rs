use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::{episode_rng, run_episode_traced, EpisodeResult};
use super::pilot::PilotConfig;
use super::track::Track;
use super::SimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub latencies_ms: Vec<u32>,
    pub error_rates: Vec<f64>,
    pub runs_per_cell: u32,
    pub cap_seconds: f64,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            latencies_ms: vec![0, 20, 40, 60, 80, 100],
            error_rates: vec![0.0, 0.1, 0.2, 0.3],
            runs_per_cell: 5,
            cap_seconds: 300.0,
            seed: 0,
        }
    }
}

/// Mean time to crash, one row per latency and one column per error rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtcGrid {
    pub latencies_ms: Vec<u32>,
    pub error_rates: Vec<f64>,
    pub mean_ttc: Vec<Vec<f64>>,
}

impl TtcGrid {
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.mean_ttc[i].clone()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.mean_ttc.iter().map(|r| r[j]).collect()
    }

    /// `(latency, error rate, mean ttc)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (u32, f64, f64)> + '_ {
        self.latencies_ms.iter().zip(&self.mean_ttc).flat_map(move |(&lat, row)| {
            self.error_rates.iter().zip(row).map(move |(&p, &ttc)| (lat, p, ttc))
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["latency_ms".to_string()];
        header.extend(self.error_rates.iter().map(|p| format!("p_err={p}")));
        w.write_record(&header)?;
        for (lat, row) in self.latencies_ms.iter().zip(&self.mean_ttc) {
            let mut rec = vec![lat.to_string()];
            rec.extend(row.iter().map(|v| format!("{v:.3}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| SimError::Io("csv".into(), e))?;
        Ok(())
    }
}

/// Stream id of run `run`. Every cell replays the same streams, so cells
/// differ only by latency and error rate (common random numbers).
pub fn stream_id(run: u32) -> u64 {
    u64::from(run)
}

pub fn run_grid(track: &Track, base: &PilotConfig, spec: &GridSpec, jobs: usize) -> Result<TtcGrid, SimError> {
    if spec.latencies_ms.is_empty() || spec.error_rates.is_empty() {
        return Err(SimError::Config("grid axes must be non-empty".into()));
    }
    if spec.runs_per_cell == 0 {
        return Err(SimError::Config("runs per cell must be at least 1".into()));
    }
    let cols = spec.error_rates.len();
    let cells = spec.latencies_ms.len() * cols;
    let cfg_of = |cell: usize| PilotConfig {
        inference_latency_ms: spec.latencies_ms[cell / cols],
        error_rate: spec.error_rates[cell % cols],
        ..*base
    };
    for cell in 0..cells {
        cfg_of(cell).check()?;
    }
    // without errors the random draws never matter, so one run stands for all
    let runs_of = |cell: usize| if cfg_of(cell).error_rate == 0.0 { 1 } else { spec.runs_per_cell };
    let jobs_list: Vec<(usize, u32)> = (0..cells).flat_map(|c| (0..runs_of(c)).map(move |r| (c, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SimError::Config(e.to_string()))?;
    let results: Vec<EpisodeResult> = pool.install(|| {
        jobs_list
            .par_iter()
            .map(|&(cell, run)| {
                let mut rng = episode_rng(spec.seed, stream_id(run));
                run_episode_traced(track, &cfg_of(cell), spec.cap_seconds, &mut rng, &mut |_| {})
            })
            .collect::<Result<_, _>>()
    })?;
    let mut rest = results.as_slice();
    let means: Vec<f64> = (0..cells)
        .map(|cell| {
            let (runs, tail) = rest.split_at(runs_of(cell) as usize);
            rest = tail;
            runs.iter().map(|r| r.ttc_seconds).sum::<f64>() / runs.len() as f64
        })
        .collect();
    Ok(TtcGrid {
        latencies_ms: spec.latencies_ms.clone(),
        error_rates: spec.error_rates.clone(),
        mean_ttc: means.chunks(cols).map(<[f64]>::to_vec).collect(),
    })
}

/// Non-increasing, except for at most one adjacent rise of at most `tolerance` relative.
pub fn is_nonincreasing_within(values: &[f64], tolerance: f64) -> bool {
    let rises: Vec<f64> = values
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
        .collect();
    match rises.as_slice() {
        [] => true,
        [r] => *r <= tolerance,
        _ => false,
    }
}

impl TtcGrid {
    /// Heuristic score per cell, row-major: each error rate is mapped back to a
    /// loss and both axes are normalized over the grid.
    pub fn heuristic_scores(&self, mapping: &super::ErrorMapping) -> Result<Vec<f64>, SimError> {
        let points: Vec<(f64, f64)> = self.cells().map(|(lat, p, _)| (mapping.loss_for(p), f64::from(lat))).collect();
        let bounds = crate::nas::NormBounds::from_population(points.iter().copied())
            .map_err(|e| SimError::Config(e.to_string()))?;
        Ok(points.iter().map(|&(l, t)| bounds.score(l, t)).collect())
    }
}
