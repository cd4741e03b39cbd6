use std::io::Write;
use std::process::{Command, Stdio};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Candidate, NasError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvaluatorFailure {
    #[error("evaluator could not start: {0}")]
    Spawn(String),
    #[error("evaluator exited with {0}")]
    ExitStatus(String),
    #[error("evaluator output is not a loss: {0:?}")]
    Unparsable(String),
}

/// Trains one candidate once and reports its validation loss.
pub trait Evaluator: Sync {
    /// `attempt` counts from 1.
    fn evaluate(&self, cand: &Candidate, attempt: u32) -> Result<f64, EvaluatorFailure>;
}

impl<F> Evaluator for F
where
    F: Fn(&Candidate, u32) -> Result<f64, EvaluatorFailure> + Sync,
{
    fn evaluate(&self, cand: &Candidate, attempt: u32) -> Result<f64, EvaluatorFailure> {
        self(cand, attempt)
    }
}

/// Runs `sh -c COMMAND` per attempt with the model JSON on stdin.
#[derive(Debug, Clone)]
pub struct CommandEvaluator {
    pub command: String,
}

impl Evaluator for CommandEvaluator {
    fn evaluate(&self, cand: &Candidate, attempt: u32) -> Result<f64, EvaluatorFailure> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .env("TINYPILOT_CANDIDATE_ID", cand.id.to_string())
            .env("TINYPILOT_ATTEMPT", attempt.to_string())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| EvaluatorFailure::Spawn(e.to_string()))?;
        if let Some(mut stdin) = child.stdin.take() {
            // a command that ignores stdin may close it early
            let _ = stdin.write_all(cand.model.to_json().as_bytes());
        }
        let out = child.wait_with_output().map_err(|e| EvaluatorFailure::Spawn(e.to_string()))?;
        if !out.status.success() {
            return Err(EvaluatorFailure::ExitStatus(out.status.to_string()));
        }
        let text = String::from_utf8_lossy(&out.stdout);
        let trimmed = text.trim();
        match trimmed.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
            _ => Err(EvaluatorFailure::Unparsable(trimmed.chars().take(80).collect())),
        }
    }
}

/// Deterministic stand-in for training: loss falls with MACs and kept dense
/// layers, plus seeded per-attempt noise.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticEvaluator {
    pub seed: u64,
    pub noise: f64,
}

impl SyntheticEvaluator {
    pub fn new(seed: u64) -> Self {
        Self { seed, noise: 0.004 }
    }

    pub fn base_loss(cand: &Candidate) -> f64 {
        let macs = cand.analysis.total_macs as f64;
        let dense = cand.model.layers.iter().filter(|l| l.kind() == crate::archspec::LayerKind::Dense).count();
        0.030 + 0.06 * (-macs / 110_000.0).exp() - 0.0008 * dense.saturating_sub(1) as f64
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform in [-1, 1) from a hashed key.
pub(crate) fn hashed_unit(parts: &[u64]) -> f64 {
    let h = parts.iter().fold(0u64, |acc, &p| splitmix64(acc ^ p));
    (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

impl Evaluator for SyntheticEvaluator {
    fn evaluate(&self, cand: &Candidate, attempt: u32) -> Result<f64, EvaluatorFailure> {
        let u = hashed_unit(&[self.seed, u64::from(cand.id), u64::from(cand.layout.0), u64::from(attempt)]);
        Ok((Self::base_loss(cand) + self.noise * u).max(0.0))
    }
}

/// Parses `builtin:SEED` into a synthetic evaluator, anything else into a shell command.
pub fn evaluator_from_spec(spec: &str) -> Result<Box<dyn Evaluator>, NasError> {
    match spec.strip_prefix("builtin:") {
        Some(seed) => {
            let seed = seed
                .trim()
                .parse()
                .map_err(|_| NasError::Config(format!("bad builtin evaluator seed {seed:?}")))?;
            Ok(Box::new(SyntheticEvaluator::new(seed)))
        }
        None if spec.trim().is_empty() => Err(NasError::Config("empty evaluator command".into())),
        None => Ok(Box::new(CommandEvaluator {
            command: spec.to_string(),
        })),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub target: f64,
    pub fail: f64,
    pub max_attempts: u32,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            target: 0.0350,
            fail: 0.0450,
            max_attempts: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    HitTarget,
    HitFail,
    Exhausted,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::HitTarget => "hit_target",
            Verdict::HitFail => "hit_fail",
            Verdict::Exhausted => "exhausted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub id: u32,
    /// Minimum loss over attempts; infinite when every attempt failed.
    pub val_loss: f64,
    pub attempts: u32,
    pub failures: u32,
    pub verdict: Verdict,
}

pub fn train_candidate(cand: &Candidate, evaluator: &dyn Evaluator, cfg: &TrainingConfig) -> TrainOutcome {
    let mut best = f64::INFINITY;
    let mut failures = 0;
    for attempt in 1..=cfg.max_attempts {
        let loss = match evaluator.evaluate(cand, attempt) {
            Ok(v) if !v.is_nan() => v,
            _ => {
                failures += 1;
                continue;
            }
        };
        best = best.min(loss);
        let verdict = if loss < cfg.target {
            Some(Verdict::HitTarget)
        } else if loss > cfg.fail {
            Some(Verdict::HitFail)
        } else {
            None
        };
        if let Some(verdict) = verdict {
            return TrainOutcome {
                id: cand.id,
                val_loss: best,
                attempts: attempt,
                failures,
                verdict,
            };
        }
    }
    TrainOutcome {
        id: cand.id,
        val_loss: best,
        attempts: cfg.max_attempts,
        failures,
        verdict: if failures == cfg.max_attempts {
            Verdict::HitFail
        } else {
            Verdict::Exhausted
        },
    }
}

/// Trains every candidate, `jobs` at a time (0 = one per core). Output follows input order.
pub fn run_training_loop(
    cands: &[Candidate],
    evaluator: &dyn Evaluator,
    cfg: &TrainingConfig,
    jobs: usize,
) -> Result<Vec<TrainOutcome>, NasError> {
    if !(cfg.target < cfg.fail) {
        return Err(NasError::Config(format!("target {} must be below fail {}", cfg.target, cfg.fail)));
    }
    if cfg.max_attempts == 0 {
        return Err(NasError::Config("max_attempts must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| NasError::Config(e.to_string()))?;
    Ok(pool.install(|| cands.par_iter().map(|c| train_candidate(c, evaluator, cfg)).collect()))
}
