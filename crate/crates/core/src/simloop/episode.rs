use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pilot::{expert_command, step, CarState, PilotConfig};
use super::track::Track;
use super::SimError;
use crate::inference::Steering;

/// Physics step.
pub const DT_MS: u64 = 1;
pub const DEFAULT_CAP_SECONDS: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub ttc_seconds: f64,
    pub laps_completed: u64,
    pub crashed: bool,
    /// Path length driven, meters.
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    /// A command was computed from the current state.
    Control,
    /// A pending command became the active one.
    Activate,
    Crash,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t_ms: u64,
    pub kind: TraceKind,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub arc_progress: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub issued: Option<Steering>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupted: Option<bool>,
    pub active: Steering,
}

/// RNG for one episode: ChaCha seeded by `seed` on stream `stream`.
pub fn episode_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn run_episode(track: &Track, cfg: &PilotConfig, cap_seconds: f64, seed: u64) -> Result<EpisodeResult, SimError> {
    run_episode_traced(track, cfg, cap_seconds, &mut episode_rng(seed, 0), &mut |_| {})
}

/// Senses at every control instant and actuates `inference_latency_ms` later.
pub fn run_episode_traced(
    track: &Track,
    cfg: &PilotConfig,
    cap_seconds: f64,
    rng: &mut ChaCha8Rng,
    trace: &mut dyn FnMut(&TraceEvent),
) -> Result<EpisodeResult, SimError> {
    cfg.check()?;
    if !(cap_seconds >= 0.0 && cap_seconds.is_finite()) {
        return Err(SimError::Config(format!("cap {cap_seconds} s must be non-negative")));
    }
    let dt = DT_MS as f64 / 1000.0;
    let cap_ticks = (cap_seconds * 1000.0).round() as u64 / DT_MS;
    let period = u64::from(cfg.control_period_ms);
    let latency = u64::from(cfg.inference_latency_ms);
    let mut state = CarState::on_track(track, 0.0, cfg.speed);
    let mut active = Steering::Center;
    let mut pending: VecDeque<(u64, Steering)> = VecDeque::new();
    let event = |t: u64, kind, s: &CarState, issued, corrupted, active| TraceEvent {
        t_ms: t * DT_MS,
        kind,
        x: s.x,
        y: s.y,
        heading: s.heading,
        arc_progress: s.arc_progress,
        issued,
        corrupted,
        active,
    };

    for tick in 0..cap_ticks {
        let t_ms = tick * DT_MS;
        if t_ms.is_multiple_of(period) {
            let mut cmd = expert_command(&state, track, cfg);
            // both draws every step keep streams aligned across error rates
            let (u, pick) = (rng.gen::<f64>(), rng.gen_range(0..2));
            let corrupt = u < cfg.error_rate;
            if corrupt {
                cmd = cmd.others()[pick];
            }
            pending.push_back((t_ms + latency, cmd));
            trace(&event(tick, TraceKind::Control, &state, Some(cmd), Some(corrupt), active));
        }
        while pending.front().is_some_and(|&(at, _)| at <= t_ms) {
            active = pending.pop_front().unwrap().1;
            trace(&event(tick, TraceKind::Activate, &state, None, None, active));
        }
        state = step(&state, active, cfg.steer_rate, dt, track);
        if track.project([state.x, state.y]).distance > track.half_width() {
            trace(&event(tick + 1, TraceKind::Crash, &state, None, None, active));
            return Ok(finish(track, &state, tick + 1, true, dt));
        }
    }
    Ok(finish(track, &state, cap_ticks, false, dt))
}

fn finish(track: &Track, state: &CarState, ticks: u64, crashed: bool, dt: f64) -> EpisodeResult {
    EpisodeResult {
        ttc_seconds: ticks as f64 * dt,
        laps_completed: (state.arc_progress.max(0.0) / track.total_length()).floor() as u64,
        crashed,
        distance: state.speed * ticks as f64 * dt,
    }
}
