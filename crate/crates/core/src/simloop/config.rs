use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GridSpec, PilotConfig, SimError, Track};

/// Simulator configuration file. A relative track path resolves against the file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Waypoint track file; the default rounded rectangle when absent.
    #[serde(default)]
    pub track: Option<PathBuf>,
    #[serde(default)]
    pub pilot: PilotConfig,
    #[serde(default)]
    pub grid: GridSpec,
}

impl SimConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(path.display().to_string(), e))?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        if let Some(t) = cfg.track.as_mut().filter(|t| t.is_relative()) {
            *t = path.parent().unwrap_or(Path::new(".")).join(&*t);
        }
        Ok(cfg)
    }

    pub fn build_track(&self) -> Result<Track, SimError> {
        match &self.track {
            Some(p) => Track::load(p),
            None => Ok(Track::default_track()),
        }
    }
}
