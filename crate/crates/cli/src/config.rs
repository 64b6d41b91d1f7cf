//! Run configuration: defaults, JSON config file, flag overrides (in that
//! precedence order), and the content hash stamped into every artifact.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use octorbit::search::SearchConfig;
use octorbit::IntegratorConfig;

/// Everything a run needs; serializes to the JSON config format.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Fixed energy level of the flow.
    pub energy: f64,
    /// Integrator step in rescaled time.
    pub step: f64,
    /// Event-location bisection width.
    pub tol_event: f64,
    /// Shooting-root bisection width.
    pub tol_root: f64,
    /// Warn threshold for the period-closure error.
    pub tol_closure: f64,
    /// Default integration span before a point is declared inconclusive.
    pub max_span: f64,
    /// α grid as start, stop, step.
    pub alpha_range: [f64; 3],
    /// β grid as start, stop, step.
    pub beta_range: [f64; 3],
    /// Worker threads for grid commands; 0 takes the pool default.
    pub workers: usize,
    /// Trajectory CSVs keep every k-th integration step.
    pub sample_stride: usize,
    /// Grid artifacts tolerate this fraction of per-point failures.
    pub max_error_fraction: f64,
    /// Artifact directory.
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            energy: -1.0,
            step: 1e-5,
            tol_event: 1e-8,
            tol_root: 1e-10,
            tol_closure: 1e-5,
            max_span: 10.0,
            alpha_range: [0.5, 3.3, 0.1],
            beta_range: [0.0, 3.0, 0.1],
            workers: 0,
            sample_stride: 200,
            max_error_fraction: 0.25,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Flag-level overrides; `None` keeps the config-file or default value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub energy: Option<f64>,
    pub step: Option<f64>,
    pub tol_event: Option<f64>,
    pub tol_root: Option<f64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub alpha_range: Option<[f64; 3]>,
    pub beta_range: Option<[f64; 3]>,
}

impl RunConfig {
    /// Defaults, then the JSON file, then flags.
    pub fn load(config_path: Option<&Path>, ov: &Overrides) -> Result<RunConfig> {
        let mut cfg = match config_path {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = ov.energy {
            cfg.energy = v;
        }
        if let Some(v) = ov.step {
            cfg.step = v;
        }
        if let Some(v) = ov.tol_event {
            cfg.tol_event = v;
        }
        if let Some(v) = ov.tol_root {
            cfg.tol_root = v;
        }
        if let Some(ref v) = ov.out {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = ov.workers {
            cfg.workers = v;
        }
        if let Some(v) = ov.alpha_range {
            cfg.alpha_range = v;
        }
        if let Some(v) = ov.beta_range {
            cfg.beta_range = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.energy.is_nan() || self.energy >= 0.0 {
            bail!("energy must be negative, got {}", self.energy);
        }
        for (name, v) in [
            ("step", self.step),
            ("tol_event", self.tol_event),
            ("tol_root", self.tol_root),
            ("tol_closure", self.tol_closure),
            ("max_span", self.max_span),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{name} must be positive and finite, got {v}");
            }
        }
        for (name, r) in [
            ("alpha_range", self.alpha_range),
            ("beta_range", self.beta_range),
        ] {
            if !(r[2] > 0.0 && r[1] >= r[0] && r.iter().all(|v| v.is_finite())) {
                bail!("{name} must be start,stop,step with step > 0 and stop >= start");
            }
        }
        if !(0.0..=1.0).contains(&self.max_error_fraction) {
            bail!(
                "max_error_fraction must lie in [0, 1], got {}",
                self.max_error_fraction
            );
        }
        Ok(())
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            energy: self.energy,
            tol_root: self.tol_root,
            integrator: IntegratorConfig {
                step: self.step,
                max_span: self.max_span,
                event_tol: self.tol_event,
                quad_floor: 1e-12,
                sample_stride: self.sample_stride,
            },
        }
    }

    /// First 16 hex digits of the SHA-256 of the effective config; identical
    /// configs stamp identical artifacts.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        let mut out = String::with_capacity(16);
        for byte in &digest[..8] {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    pub fn alpha_grid(&self) -> Vec<f64> {
        octorbit::sweep::grid(
            self.alpha_range[0],
            self.alpha_range[1],
            self.alpha_range[2],
        )
    }

    pub fn beta_grid(&self) -> Vec<f64> {
        octorbit::sweep::grid(self.beta_range[0], self.beta_range[1], self.beta_range[2])
    }
}
