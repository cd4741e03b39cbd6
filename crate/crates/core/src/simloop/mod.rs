//! Closed-loop driving simulator: a unicycle car on a closed track, steered by
//! a three-class pilot whose commands arrive late and are sometimes wrong.

mod config;
mod episode;
mod grid;
mod mapping;
mod pilot;
mod stats;
mod track;

pub use config::SimConfig;
pub use episode::{episode_rng, run_episode, run_episode_traced, EpisodeResult, TraceEvent, TraceKind, DEFAULT_CAP_SECONDS, DT_MS};
pub use grid::{is_nonincreasing_within, run_grid, stream_id, GridSpec, TtcGrid};
pub use mapping::{fit_error_mapping, ErrorMapping, TRACK_PERF_LOSS_ACCURACY};
pub use pilot::{expert_command, step, CarState, PilotConfig};
pub use stats::{average_ranks, spearman};
pub use track::{wrap_angle, Projection, Track, TrackFile};

use crate::latency::LatencyError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("bad track geometry: {0}")]
    BadGeometry(String),
    #[error("simulator config: {0}")]
    Config(String),
    #[error(transparent)]
    Fit(#[from] LatencyError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
}
