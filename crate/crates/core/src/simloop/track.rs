use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;

type P2 = [f64; 2];

/// Angle wrapped to (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Segment {
    Line { start: P2, dir: P2, len: f64 },
    /// Counter-clockwise when `sweep > 0`.
    Arc { center: P2, radius: f64, start: f64, sweep: f64 },
}

impl Segment {
    fn len(&self) -> f64 {
        match *self {
            Segment::Line { len, .. } => len,
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    fn point(&self, s: f64) -> P2 {
        match *self {
            Segment::Line { start, dir, .. } => [start[0] + dir[0] * s, start[1] + dir[1] * s],
            Segment::Arc { center, radius, start, sweep } => {
                let a = start + sweep.signum() * s / radius;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            }
        }
    }

    /// Local arc length of the nearest point and the squared distance to it.
    fn project(&self, p: P2) -> (f64, f64) {
        let s = match *self {
            Segment::Line { start, dir, len } => ((p[0] - start[0]) * dir[0] + (p[1] - start[1]) * dir[1]).clamp(0.0, len),
            Segment::Arc { center, radius, start, sweep } => {
                let a = (p[1] - center[1]).atan2(p[0] - center[0]);
                let rel = (sweep.signum() * (a - start)).rem_euclid(TAU);
                let span = sweep.abs();
                let t = if rel <= span {
                    rel
                } else if rel - span < TAU - rel {
                    span
                } else {
                    0.0
                };
                t * radius
            }
        };
        let q = self.point(s);
        (s, (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2))
    }
}

/// Closed centerline with a drivable half width.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    segments: Vec<Segment>,
    offsets: Vec<f64>,
    half_width: f64,
    total_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the nearest centerline point, in [0, total_length).
    pub s: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackFile {
    pub waypoints: Vec<P2>,
    pub half_width: f64,
    #[serde(default = "closed_default")]
    pub closed: bool,
}

fn closed_default() -> bool {
    true
}

fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn segments_intersect(a: P2, b: P2, c: P2, d: P2) -> bool {
    let (d1, d2) = (cross(sub(b, a), sub(c, a)), cross(sub(b, a), sub(d, a)));
    let (d3, d4) = (cross(sub(d, c), sub(a, c)), cross(sub(d, c), sub(b, c)));
    let on = |p: P2, q: P2, r: P2| {
        cross(sub(q, p), sub(r, p)).abs() < 1e-12
            && r[0] >= p[0].min(q[0]) - 1e-12
            && r[0] <= p[0].max(q[0]) + 1e-12
            && r[1] >= p[1].min(q[1]) - 1e-12
            && r[1] <= p[1].max(q[1]) + 1e-12
    };
    (d1 * d2 < 0.0 && d3 * d4 < 0.0) || on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b)
}

impl Track {
    fn from_segments(segments: Vec<Segment>, half_width: f64) -> Result<Self, SimError> {
        if !(half_width > 0.0) {
            return Err(SimError::BadGeometry(format!("half width {half_width} must be positive")));
        }
        let mut offsets = Vec::with_capacity(segments.len());
        let mut total = 0.0;
        for seg in &segments {
            if !(seg.len() > 0.0) {
                return Err(SimError::BadGeometry("zero-length segment".into()));
            }
            offsets.push(total);
            total += seg.len();
        }
        Ok(Self {
            segments,
            offsets,
            half_width,
            total_length: total,
        })
    }

    /// Two straights of `straight` meters joined by semicircles of `radius`,
    /// driven counter-clockwise from the entry of the right-hand turn.
    pub fn rounded_rectangle(straight: f64, radius: f64, half_width: f64) -> Result<Self, SimError> {
        if !(straight > 0.0 && radius > 0.0) {
            return Err(SimError::BadGeometry(format!("straight {straight} and radius {radius} must be positive")));
        }
        let segments = vec![
            Segment::Arc {
                center: [straight, 0.0],
                radius,
                start: -PI / 2.0,
                sweep: PI,
            },
            Segment::Line {
                start: [straight, radius],
                dir: [-1.0, 0.0],
                len: straight,
            },
            Segment::Arc {
                center: [0.0, 0.0],
                radius,
                start: PI / 2.0,
                sweep: PI,
            },
            Segment::Line {
                start: [0.0, -radius],
                dir: [1.0, 0.0],
                len: straight,
            },
        ];
        Self::from_segments(segments, half_width)
    }

    /// 4 m straights, 1 m radius, 0.3 m half width.
    pub fn default_track() -> Self {
        Self::rounded_rectangle(4.0, 1.0, 0.3).expect("default track is valid")
    }

    /// Closed polygon through `waypoints`. A repeated first point at the end is dropped.
    pub fn from_waypoints(waypoints: &[P2], half_width: f64) -> Result<Self, SimError> {
        let mut pts = waypoints.to_vec();
        if pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        if pts.len() < 3 {
            return Err(SimError::BadGeometry(format!("{} waypoints, need at least 3", pts.len())));
        }
        if pts.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(SimError::BadGeometry("non-finite waypoint".into()));
        }
        let n = pts.len();
        let edge = |i: usize| (pts[i], pts[(i + 1) % n]);
        let area2: f64 = (0..n).map(|i| cross(pts[i], pts[(i + 1) % n])).sum();
        if area2.abs() < 1e-12 {
            return Err(SimError::BadGeometry("waypoints are collinear".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let ((a, b), (c, d)) = (edge(i), edge(j));
                if adjacent {
                    // neighbours share exactly one endpoint; overlap means folding back
                    let shared = if j == i + 1 { b } else { a };
                    let (u, v) = (sub(if j == i + 1 { a } else { b }, shared), sub(if j == i + 1 { d } else { c }, shared));
                    if cross(u, v).abs() < 1e-12 && u[0] * v[0] + u[1] * v[1] > 0.0 {
                        return Err(SimError::BadGeometry(format!("edges {i} and {j} overlap")));
                    }
                } else if segments_intersect(a, b, c, d) {
                    return Err(SimError::BadGeometry(format!("edges {i} and {j} intersect")));
                }
            }
        }
        let segments = (0..n)
            .map(|i| {
                let (a, b) = edge(i);
                let d = sub(b, a);
                let len = d[0].hypot(d[1]);
                Segment::Line {
                    start: a,
                    dir: [d[0] / len, d[1] / len],
                    len,
                }
            })
            .collect();
        Self::from_segments(segments, half_width)
    }

    pub fn from_file(file: &TrackFile) -> Result<Self, SimError> {
        if !file.closed {
            return Err(SimError::BadGeometry("open polyline".into()));
        }
        Self::from_waypoints(&file.waypoints, file.half_width)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(path.display().to_string(), e))?;
        Self::from_file(&serde_json::from_str(&text)?)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let s = s.rem_euclid(self.total_length);
        let i = self.offsets.partition_point(|&o| o <= s).saturating_sub(1);
        (i, (s - self.offsets[i]).min(self.segments[i].len()))
    }

    /// Centerline point at arc length `s` (wrapped).
    pub fn point_at(&self, s: f64) -> P2 {
        let (i, local) = self.locate(s);
        self.segments[i].point(local)
    }

    /// Direction of travel at arc length `s`, in radians.
    pub fn heading_at(&self, s: f64) -> f64 {
        let (i, local) = self.locate(s);
        match self.segments[i] {
            Segment::Line { dir, .. } => dir[1].atan2(dir[0]),
            Segment::Arc { radius, start, sweep, .. } => {
                let a = start + sweep.signum() * local / radius;
                wrap_angle(a + sweep.signum() * PI / 2.0)
            }
        }
    }

    pub fn project(&self, p: P2) -> Projection {
        let (mut best_s, mut best_d2) = (0.0, f64::INFINITY);
        for (seg, off) in self.segments.iter().zip(&self.offsets) {
            let (s, d2) = seg.project(p);
            if d2 < best_d2 {
                best_s = off + s;
                best_d2 = d2;
            }
        }
        Projection {
            s: best_s.rem_euclid(self.total_length),
            distance: best_d2.sqrt(),
        }
    }
}
