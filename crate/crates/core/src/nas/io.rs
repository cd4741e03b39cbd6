use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Budgets, Candidate, NasError, TrainingConfig};

/// One line of the outcomes / scores CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub id: u32,
    pub layers: usize,
    pub width: f64,
    pub weights: u64,
    pub macs: u64,
    pub latency_ms: f64,
    #[serde(with = "loss_field")]
    pub val_loss: f64,
    pub score: Option<f64>,
}

/// Writes an infinite loss as `inf` and reads it back.
mod loss_field {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        s.trim().parse().map_err(serde::de::Error::custom)
    }
}

impl CandidateRow {
    pub fn new(c: &Candidate, val_loss: f64, score: Option<f64>) -> Self {
        Self {
            id: c.id,
            layers: c.layers,
            width: c.width,
            weights: c.analysis.total_params,
            macs: c.analysis.total_macs,
            latency_ms: c.predicted_latency_ms,
            val_loss,
            score,
        }
    }
}

pub const ROW_HEADER: &str = "id,layers,width,weights,macs,latency_ms,val_loss,score";

pub fn write_rows<W: Write>(out: W, rows: &[CandidateRow]) -> Result<(), NasError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(ROW_HEADER.split(','))?;
    }
    w.flush().map_err(|e| NasError::Io("csv".into(), e))?;
    Ok(())
}

pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<CandidateRow>, NasError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != ROW_HEADER {
        return Err(NasError::Format(format!("expected header {ROW_HEADER:?}, got {:?}", header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(NasError::from)).collect()
}

pub fn write_candidates_jsonl<W: Write>(mut out: W, cands: &[Candidate]) -> Result<(), NasError> {
    for c in cands {
        serde_json::to_writer(&mut out, c)?;
        out.write_all(b"\n").map_err(|e| NasError::Io("jsonl".into(), e))?;
    }
    Ok(())
}

pub fn read_candidates_jsonl<R: BufRead>(input: R) -> Result<Vec<Candidate>, NasError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| NasError::Io("jsonl".into(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| NasError::Format(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

/// Search configuration file. Relative paths resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    /// Backbone model file; the built-in 68×68×1 ds-PilotNet when absent.
    #[serde(default)]
    pub backbone: Option<PathBuf>,
    #[serde(default = "default_widths")]
    pub widths: Vec<f64>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub training: TrainingConfig,
    /// `builtin:SEED` or a shell command.
    #[serde(default)]
    pub evaluator: Option<String>,
    /// Latency model file; `pico-ds-v1` when absent.
    #[serde(default)]
    pub latency_model: Option<PathBuf>,
}

fn default_widths() -> Vec<f64> {
    super::DEFAULT_WIDTHS.to_vec()
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self {
            backbone: None,
            widths: default_widths(),
            budgets: Budgets::default(),
            training: TrainingConfig::default(),
            evaluator: None,
            latency_model: None,
        }
    }
}

impl SpaceConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, NasError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| NasError::Io(path.display().to_string(), e))?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.backbone, &mut cfg.latency_model].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archspec::AnalysisConfig;
    use crate::latency::LatencyModel;
    use crate::nas::SearchSpace;

    #[test]
    fn rows_round_trip() {
        let rows = vec![
            CandidateRow {
                id: 3,
                layers: 4,
                width: 0.7,
                weights: 1234,
                macs: 99_000,
                latency_ms: 45.5,
                val_loss: 0.0312,
                score: None,
            },
            CandidateRow {
                id: 4,
                layers: 9,
                width: 1.0,
                weights: 1,
                macs: 2,
                latency_ms: 3.0,
                val_loss: f64::INFINITY,
                score: Some(1.25),
            },
        ];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(ROW_HEADER));
        assert!(text.contains(",inf,1.25"));
        assert_eq!(read_rows(buf.as_slice()).unwrap(), rows);
        assert!(read_rows("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let cands = SearchSpace::default_space()
            .enumerate_candidates(&LatencyModel::pico_ds_v1(), &AnalysisConfig::default())
            .unwrap();
        let mut buf = Vec::new();
        write_candidates_jsonl(&mut buf, &cands[..10]).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 10);
        assert_eq!(read_candidates_jsonl(buf.as_slice()).unwrap(), cands[..10]);
    }

    #[test]
    fn config_defaults() {
        let cfg: SpaceConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, SpaceConfig::default());
        assert!(serde_json::from_str::<SpaceConfig>(r#"{"widthz":[1]}"#).is_err());
    }
}
