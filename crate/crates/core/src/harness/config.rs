use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gallery::GallerySpec;
use crate::mechanism::MechanismKind;
use crate::metric::FiniteBimetricSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceSource {
    Gallery(GallerySpec),
    Path(PathBuf),
}

impl SpaceSource {
    pub fn load(&self) -> Result<FiniteBimetricSpace> {
        match self {
            SpaceSource::Gallery(spec) => spec.build(),
            SpaceSource::Path(p) => FiniteBimetricSpace::read_json(p),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SpaceSource::Gallery(spec) => spec.name(),
            SpaceSource::Path(p) => p.display().to_string(),
        }
    }
}

/// Either an explicit list or `start * factor^i` up to `stop`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaGrid {
    List(Vec<f64>),
    Geometric { start: f64, stop: f64, factor: f64 },
}

impl AlphaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            AlphaGrid::List(v) => v.clone(),
            &AlphaGrid::Geometric { start, stop, factor } => {
                if !(start > 0.0 && stop >= start && factor > 1.0) {
                    return Err(Error::Domain(format!(
                        "geometric grid needs 0 < start <= stop and factor > 1, got {start}, {stop}, {factor}"
                    )));
                }
                let mut out = Vec::new();
                let mut i = 0;
                loop {
                    let a = start * factor.powi(i);
                    if a > stop * (1.0 + 1e-12) {
                        break;
                    }
                    out.push(a);
                    i += 1;
                }
                out
            }
        };
        if v.is_empty() {
            return Err(Error::Domain("alpha grid is empty".into()));
        }
        if let Some(bad) = v.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::Domain(format!("alpha must be positive and finite, got {bad}")));
        }
        Ok(v)
    }
}

fn default_mechanisms() -> Vec<MechanismKind> {
    vec![MechanismKind::Exponential, MechanismKind::UltrametricRelaxed]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub space: SpaceSource,
    pub alphas: AlphaGrid,
    /// Mechanisms to run; the relaxed one is skipped on spaces without an
    /// ultrametric `rho2`.
    #[serde(default = "default_mechanisms")]
    pub mechanisms: Vec<MechanismKind>,
    /// Monte-Carlo trials per input; 0 runs exact evaluation only.
    #[serde(default)]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.alphas.values()?;
        if let Some(k) = cfg
            .mechanisms
            .iter()
            .find(|k| !matches!(k, MechanismKind::Exponential | MechanismKind::UltrametricRelaxed))
        {
            return Err(Error::Domain(format!("sweeps support exponential and ultrametric_relaxed, got {k:?}")));
        }
        Ok(cfg)
    }

    /// Reads a config; relative space and output paths resolve against the
    /// config file's directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let SpaceSource::Path(p) = &mut cfg.space {
            rebase(p);
        }
        cfg.csv.as_mut().map(rebase);
        cfg.json.as_mut().map(rebase);
        Ok(cfg)
    }
}
