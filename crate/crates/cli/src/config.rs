//! Scenario configuration: a TOML file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use revflow_core::profile::DEFAULT_HALF_WIDTH;
use revflow_core::{StepController, StepperConfig, SurfaceSpec, Topology};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_NODES: usize = 16;
pub const DEFAULT_NODES: usize = 801;
pub const DEFAULT_N_THETA: usize = 64;
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid surface: {0}")]
    Surface(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Evolve,
    Crease,
    Regress,
    ExportMesh,
}

/// Config as read from disk or flags; every field optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub surface: Option<String>,
    #[serde(default)]
    pub grid: PartialGrid,
    #[serde(default)]
    pub stepper: PartialStepper,
    #[serde(default)]
    pub outputs: PartialOutputs,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialGrid {
    pub n: Option<usize>,
    pub l: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialStepper {
    pub dt0: Option<f64>,
    pub dt_min: Option<f64>,
    pub dt_max: Option<f64>,
    pub newton_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialOutputs {
    pub t_end: Option<f64>,
    pub frames: Option<Vec<f64>>,
    pub n_theta: Option<usize>,
    pub dir: Option<PathBuf>,
    pub z0: Option<f64>,
}

impl PartialConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: PartialConfig) -> Self {
        fn set<T>(slot: &mut Option<T>, v: Option<T>) {
            if v.is_some() {
                *slot = v;
            }
        }
        set(&mut self.surface, other.surface);
        set(&mut self.grid.n, other.grid.n);
        set(&mut self.grid.l, other.grid.l);
        set(&mut self.stepper.dt0, other.stepper.dt0);
        set(&mut self.stepper.dt_min, other.stepper.dt_min);
        set(&mut self.stepper.dt_max, other.stepper.dt_max);
        set(&mut self.stepper.newton_tol, other.stepper.newton_tol);
        set(&mut self.outputs.t_end, other.outputs.t_end);
        set(&mut self.outputs.frames, other.outputs.frames);
        set(&mut self.outputs.n_theta, other.outputs.n_theta);
        set(&mut self.outputs.dir, other.outputs.dir);
        set(&mut self.outputs.z0, other.outputs.z0);
        self
    }

    /// Fill defaults and validate. The topology of the surface picks the
    /// default end time: 0.4 for sphere-like surfaces, 10 otherwise.
    pub fn resolve(
        self,
        mode: Mode,
        topology_of: impl FnOnce(&SurfaceSpec) -> Option<Topology>,
    ) -> Result<ScenarioConfig, ConfigError> {
        let surface_text = self.surface.unwrap_or_else(|| "sphere".into());
        let surface: SurfaceSpec = surface_text.parse().map_err(|e| ConfigError::Surface(format!("{e}")))?;
        let defaults = StepController::default();
        let n = self.grid.n.unwrap_or(DEFAULT_NODES);
        let l = self.grid.l.unwrap_or(DEFAULT_HALF_WIDTH);
        let stepper = StepperSection {
            dt0: self.stepper.dt0.unwrap_or(defaults.dt0),
            dt_min: self.stepper.dt_min.unwrap_or(defaults.dt_min),
            dt_max: self.stepper.dt_max.unwrap_or(defaults.dt_max),
            newton_tol: self.stepper.newton_tol.unwrap_or(StepperConfig::default().newton_tol),
        };
        let default_end = match topology_of(&surface) {
            Some(Topology::SphereLike) => 0.4,
            _ => 10.0,
        };
        let t_end = match (self.outputs.t_end, &self.outputs.frames) {
            (Some(t), _) => t,
            (None, Some(frames)) if !frames.is_empty() => frames[frames.len() - 1],
            _ => default_end,
        };
        let frames = self
            .outputs
            .frames
            .unwrap_or_else(|| (0..=8).map(|k| t_end * k as f64 / 8.0).collect());
        let cfg = ScenarioConfig {
            surface: surface.to_string(),
            mode,
            grid: GridSection { n, l },
            stepper,
            outputs: OutputSection {
                t_end,
                frames,
                n_theta: self.outputs.n_theta.unwrap_or(DEFAULT_N_THETA),
                dir: self.outputs.dir.unwrap_or_else(|| PathBuf::from("out")),
                z0: self.outputs.z0,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Fully resolved scenario; this is what gets echoed next to the outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub surface: String,
    pub mode: Mode,
    pub grid: GridSection,
    pub stepper: StepperSection,
    pub outputs: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSection {
    pub n: usize,
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepperSection {
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub newton_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSection {
    pub t_end: f64,
    pub frames: Vec<f64>,
    pub n_theta: usize,
    pub dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z0: Option<f64>,
}

impl ScenarioConfig {
    pub fn surface_spec(&self) -> SurfaceSpec {
        self.surface.parse().expect("validated on resolve")
    }

    pub fn controller(&self) -> StepController {
        StepController {
            dt0: self.stepper.dt0,
            dt_min: self.stepper.dt_min,
            dt_max: self.stepper.dt_max,
            ..StepController::default()
        }
    }

    pub fn stepper_config(&self) -> StepperConfig {
        StepperConfig {
            newton_tol: self.stepper.newton_tol,
            ..StepperConfig::default()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.grid.n < MIN_NODES {
            return bad(format!("N must be at least {MIN_NODES}, got {}", self.grid.n));
        }
        if !(self.grid.l.is_finite() && self.grid.l > 0.0) {
            return bad(format!("L must be positive, got {}", self.grid.l));
        }
        let s = &self.stepper;
        if !(s.dt_min > 0.0 && s.dt_min <= s.dt0 && s.dt0 <= s.dt_max && s.dt_max.is_finite()) {
            return bad(format!(
                "need 0 < dt_min <= dt0 <= dt_max, got {} / {} / {}",
                s.dt_min, s.dt0, s.dt_max
            ));
        }
        if !(s.newton_tol > 0.0 && s.newton_tol.is_finite()) {
            return bad(format!("newton_tol must be positive, got {}", s.newton_tol));
        }
        let o = &self.outputs;
        if !(o.t_end.is_finite() && o.t_end >= 0.0) {
            return bad(format!("t_end must be finite and non-negative, got {}", o.t_end));
        }
        if o.frames.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("frame times must be finite and >= 0".into());
        }
        if o.frames.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("frame times must be strictly increasing".into());
        }
        if o.frames.last().is_some_and(|&t| t > o.t_end) {
            return bad(format!(
                "frame time {} lies beyond t_end = {}",
                o.frames[o.frames.len() - 1],
                o.t_end
            ));
        }
        if o.n_theta < 3 {
            return bad(format!("n_theta must be at least 3, got {}", o.n_theta));
        }
        if o.z0.is_some_and(|z| !z.is_finite()) {
            return bad("z0 must be finite".into());
        }
        Ok(())
    }
}

/// Parse `0,0.5,1` into frame times.
pub fn parse_frames(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad frame time '{}': {e}", s.trim()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_like(_: &SurfaceSpec) -> Option<Topology> {
        Some(Topology::SphereLike)
    }

    #[test]
    fn defaults_fill_every_field() {
        let cfg = PartialConfig::default().resolve(Mode::Evolve, sphere_like).unwrap();
        assert_eq!(cfg.surface, "sphere");
        assert_eq!(cfg.grid.n, 801);
        assert_eq!(cfg.outputs.t_end, 0.4);
        assert_eq!(cfg.outputs.frames.len(), 9);
        assert_eq!(cfg.stepper.dt0, 1e-4);
    }

    #[test]
    fn flags_override_file() {
        let file: PartialConfig = toml::from_str("surface = \"torus:a=2,b=1\"\n[grid]\nn = 401\nl = 6.0\n").unwrap();
        let flags = PartialConfig {
            grid: PartialGrid { n: Some(201), l: None },
            ..Default::default()
        };
        let cfg = file
            .overlay(flags)
            .resolve(Mode::Evolve, |_| Some(Topology::Toroidal))
            .unwrap();
        assert_eq!(cfg.grid.n, 201);
        assert_eq!(cfg.grid.l, 6.0);
        assert_eq!(cfg.outputs.t_end, 10.0);
    }

    #[test]
    fn frames_imply_end_time() {
        let p = PartialConfig {
            outputs: PartialOutputs {
                frames: Some(vec![0.0, 0.1, 0.3]),
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(p.resolve(Mode::Evolve, sphere_like).unwrap().outputs.t_end, 0.3);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let with = |f: fn(&mut PartialConfig)| {
            let mut p = PartialConfig::default();
            f(&mut p);
            p.resolve(Mode::Evolve, sphere_like)
        };
        assert!(matches!(with(|p| p.grid.n = Some(8)), Err(ConfigError::Invalid(_))));
        assert!(matches!(
            with(|p| p.outputs.frames = Some(vec![0.0, 0.2, 0.1])),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            with(|p| p.outputs.frames = Some(vec![-0.1, 0.2])),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            with(|p| {
                p.outputs.frames = Some(vec![0.0, 0.5]);
                p.outputs.t_end = Some(0.4)
            }),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            with(|p| p.stepper.dt0 = Some(1.0)),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            with(|p| p.surface = Some("cube".into())),
            Err(ConfigError::Surface(_))
        ));
    }

    #[test]
    fn unknown_keys_fail_to_parse() {
        assert!(toml::from_str::<PartialConfig>("[grid]\nnodes = 3\n").is_err());
    }

    #[test]
    fn resolved_config_round_trips_through_toml() {
        let cfg = PartialConfig::default().resolve(Mode::Crease, sphere_like).unwrap();
        let text = cfg.to_toml();
        let back: PartialConfig = toml::from_str(&text.replace("mode = \"crease\"\n", "")).unwrap();
        assert_eq!(back.resolve(Mode::Crease, sphere_like).unwrap(), cfg);
    }

    #[test]
    fn frame_list_parsing() {
        assert_eq!(parse_frames("0, 1,10").unwrap(), vec![0.0, 1.0, 10.0]);
        assert!(parse_frames("0,x").is_err());
    }
}
