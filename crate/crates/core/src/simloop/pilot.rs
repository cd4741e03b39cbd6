use serde::{Deserialize, Serialize};

use super::track::{wrap_angle, Track};
use super::SimError;
use crate::inference::Steering;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    /// Signed distance travelled along the centerline.
    pub arc_progress: f64,
    /// Centerline arc length last projected onto, used to accumulate progress.
    #[serde(skip)]
    pub last_s: f64,
}

impl CarState {
    /// On the centerline at arc length `s`, facing along it.
    pub fn on_track(track: &Track, s: f64, speed: f64) -> Self {
        let [x, y] = track.point_at(s);
        Self {
            x,
            y,
            heading: track.heading_at(s),
            speed,
            arc_progress: 0.0,
            last_s: s.rem_euclid(track.total_length()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PilotConfig {
    pub control_period_ms: u32,
    pub inference_latency_ms: u32,
    pub error_rate: f64,
    pub speed: f64,
    /// Yaw rate while steering left or right, rad/s.
    pub steer_rate: f64,
    pub deadband: f64,
    pub lookahead: f64,
}

impl Default for PilotConfig {
    fn default() -> Self {
        Self {
            control_period_ms: 133,
            inference_latency_ms: 0,
            error_rate: 0.0,
            speed: 0.5,
            steer_rate: 1.5,
            deadband: 0.1,
            lookahead: 0.08,
        }
    }
}

impl PilotConfig {
    pub fn check(&self) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::Config(what.to_string()));
        if self.control_period_ms == 0 {
            return bad("control period must be positive");
        }
        if !(0.0..=1.0).contains(&self.error_rate) {
            return bad("error rate outside [0, 1]");
        }
        if !(self.speed >= 0.0 && self.speed.is_finite()) {
            return bad("speed must be non-negative");
        }
        if !(self.steer_rate >= 0.0 && self.steer_rate.is_finite()) {
            return bad("steer rate must be non-negative");
        }
        if !(self.deadband >= 0.0) || !(self.lookahead >= 0.0 && self.lookahead.is_finite()) {
            return bad("deadband and lookahead must be non-negative");
        }
        Ok(())
    }
}

/// Steers towards the centerline point `lookahead` meters past the nearest one.
pub fn expert_command(state: &CarState, track: &Track, cfg: &PilotConfig) -> Steering {
    let s = track.project([state.x, state.y]).s;
    let [tx, ty] = track.point_at(s + cfg.lookahead);
    let alpha = wrap_angle((ty - state.y).atan2(tx - state.x) - state.heading);
    if alpha > cfg.deadband {
        Steering::Left
    } else if alpha < -cfg.deadband {
        Steering::Right
    } else {
        Steering::Center
    }
}

/// Unicycle update; heading turns first, then the car moves along it.
pub fn step(state: &CarState, cmd: Steering, steer_rate: f64, dt: f64, track: &Track) -> CarState {
    let turn = match cmd {
        Steering::Left => steer_rate,
        Steering::Center => 0.0,
        Steering::Right => -steer_rate,
    };
    let heading = wrap_angle(state.heading + turn * dt);
    let x = state.x + state.speed * heading.cos() * dt;
    let y = state.y + state.speed * heading.sin() * dt;
    let s = track.project([x, y]).s;
    let len = track.total_length();
    let mut ds = (s - state.last_s).rem_euclid(len);
    if ds > len / 2.0 {
        ds -= len;
    }
    CarState {
        x,
        y,
        heading,
        speed: state.speed,
        arc_progress: state.arc_progress + ds,
        last_s: s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn start() -> (Track, CarState) {
        let t = Track::default_track();
        let c = CarState::on_track(&t, 5.0 + 2.0 * PI, 1.0);
        (t, c)
    }

    #[test]
    fn straight_is_center() {
        let (t, c) = start();
        assert_eq!(expert_command(&c, &t, &PilotConfig::default()), Steering::Center);
    }

    #[test]
    fn rotated_left_corrects_right() {
        let (t, mut c) = start();
        c.heading += 0.5;
        assert_eq!(expert_command(&c, &t, &PilotConfig::default()), Steering::Right);
        c.heading -= 1.0;
        assert_eq!(expert_command(&c, &t, &PilotConfig::default()), Steering::Left);
    }

    #[test]
    fn full_deadband_always_center() {
        let (t, mut c) = start();
        let cfg = PilotConfig {
            deadband: PI,
            ..Default::default()
        };
        for k in 0..64 {
            c.heading = wrap_angle(k as f64 * 0.1);
            assert_eq!(expert_command(&c, &t, &cfg), Steering::Center);
        }
    }

    #[test]
    fn kinematics() {
        let (t, c) = start();
        let n = step(&c, Steering::Center, 1.0, 0.001, &t);
        assert!((n.x - c.x - 0.001).abs() < 1e-15 && n.y == c.y);
        assert!((n.arc_progress - 0.001).abs() < 1e-12);
        let l = step(&c, Steering::Left, 1.0, 0.001, &t);
        assert!((l.heading - 0.001).abs() < 1e-15);
        let r = step(&c, Steering::Right, 1.0, 0.001, &t);
        assert!((r.heading + 0.001).abs() < 1e-15);
        let still = CarState { speed: 0.0, ..c };
        for cmd in Steering::ALL {
            let s = step(&still, cmd, 1.0, 0.001, &t);
            assert_eq!((s.x, s.y), (still.x, still.y));
        }
    }

    #[test]
    fn progress_wraps_past_start() {
        let t = Track::default_track();
        let mut c = CarState::on_track(&t, t.total_length() - 0.0005, 1.0);
        c = step(&c, Steering::Center, 1.0, 0.001, &t);
        assert!((c.arc_progress - 0.001).abs() < 1e-9);
    }

    #[test]
    fn config_checks() {
        assert!(PilotConfig::default().check().is_ok());
        assert!(PilotConfig { control_period_ms: 0, ..Default::default() }.check().is_err());
        assert!(PilotConfig { error_rate: 1.5, ..Default::default() }.check().is_err());
        assert!(PilotConfig { speed: -1.0, ..Default::default() }.check().is_err());
    }
}
