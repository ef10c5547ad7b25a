//! TOML experiment configuration.
//!
//! A full reference file with every key lives in `configs/schema.toml`; the
//! `validate` subcommand checks a file without running anything.

use anyhow::{bail, Context};
use cdlab_core::atomic::ModelSpec;
use cdlab_core::geometry::DiscGrid;
use cdlab_core::C64;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuEntry {
    pub i: usize,
    pub j: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub lambda0: f64,
    pub valency: f64,
    pub rank: usize,
    #[serde(default = "default_trunc")]
    pub trunc: usize,
    #[serde(default)]
    pub mu: Vec<MuEntry>,
}

fn default_trunc() -> usize {
    512
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_angles")]
    pub angles: usize,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_radii() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
}

fn default_angles() -> usize {
    16
}

fn default_step() -> f64 {
    1e-4
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            radii: default_radii(),
            angles: default_angles(),
            step: default_step(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SylvesterConfig {
    #[serde(default = "default_box_lambda0")]
    pub lambda0: Vec<f64>,
    #[serde(default = "default_box_valency")]
    pub valency: Vec<f64>,
    #[serde(default = "default_box_shift")]
    pub shift: Vec<usize>,
    #[serde(default = "default_sylvester_trunc")]
    pub trunc: usize,
    #[serde(default = "default_exponent_trunc")]
    pub exponent_trunc: usize,
}

fn default_box_lambda0() -> Vec<f64> {
    vec![1.0, 1.5, 2.0]
}

fn default_box_valency() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}

fn default_box_shift() -> Vec<usize> {
    vec![0, 1, 2]
}

fn default_sylvester_trunc() -> usize {
    1024
}

fn default_exponent_trunc() -> usize {
    4096
}

impl Default for SylvesterConfig {
    fn default() -> Self {
        SylvesterConfig {
            lambda0: default_box_lambda0(),
            valency: default_box_valency(),
            shift: default_box_shift(),
            trunc: default_sylvester_trunc(),
            exponent_trunc: default_exponent_trunc(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerboundConfig {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_power_trunc")]
    pub trunc: usize,
}

fn default_n_max() -> usize {
    200
}

fn default_power_trunc() -> usize {
    4096
}

impl Default for PowerboundConfig {
    fn default() -> Self {
        PowerboundConfig {
            n_max: default_n_max(),
            trunc: default_power_trunc(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutantConfig {
    #[serde(default = "default_degrees")]
    pub degrees: Vec<usize>,
}

fn default_degrees() -> Vec<usize> {
    vec![0, 1, 2, 4, 8]
}

impl Default for CommutantConfig {
    fn default() -> Self {
        CommutantConfig {
            degrees: default_degrees(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub sylvester: Option<SylvesterConfig>,
    #[serde(default)]
    pub powerbound: Option<PowerboundConfig>,
    #[serde(default)]
    pub commutant: Option<CommutantConfig>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Optional residual tolerance override used by checks that gate output.
    #[serde(default)]
    pub tol: Option<f64>,
}

fn default_seed() -> u64 {
    42
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let m = &self.model;
        if !(m.lambda0 > 0.0) {
            bail!("model.lambda0 must be positive, got {}", m.lambda0);
        }
        if !(m.valency >= 0.0) {
            bail!("model.valency must be nonnegative, got {}", m.valency);
        }
        if m.rank == 0 {
            bail!("model.rank must be at least 1");
        }
        if m.trunc < 2 {
            bail!("model.trunc must be at least 2");
        }
        for e in &m.mu {
            if e.i >= e.j || e.j >= m.rank {
                bail!("model.mu entry ({}, {}) must satisfy i < j < rank", e.i, e.j);
            }
        }
        if let Some(g) = &self.grid {
            if g.radii.is_empty() || g.angles == 0 {
                bail!("grid needs radii and angles");
            }
            for &r in &g.radii {
                if !(r >= 0.0) || r + 2.0 * g.step >= 1.0 {
                    bail!("grid.radii entry {r} too close to the unit circle");
                }
            }
        }
        if let Some(s) = &self.sylvester {
            if s.lambda0.is_empty() || s.valency.is_empty() || s.shift.is_empty() {
                bail!("sylvester box must be nonempty in every direction");
            }
            if s.trunc < 16 || s.exponent_trunc < 128 {
                bail!("sylvester truncations too small");
            }
        }
        if let Some(p) = &self.powerbound {
            if p.n_max < 2 {
                bail!("powerbound.n_max must be at least 2");
            }
        }
        if let Some(c) = &self.commutant {
            for &d in &c.degrees {
                if d > 32 {
                    bail!("commutant degree {d} exceeds the supported 32");
                }
            }
        }
        Ok(())
    }

    /// The configured model with optional truncation override.
    pub fn model_spec(&self, trunc_override: Option<usize>) -> anyhow::Result<ModelSpec> {
        let m = &self.model;
        let entries: Vec<(usize, usize, C64)> = m
            .mu
            .iter()
            .map(|e| (e.i, e.j, C64::new(e.re, e.im)))
            .collect();
        let trunc = trunc_override.unwrap_or(m.trunc);
        ModelSpec::new(m.lambda0, m.valency, m.rank, &entries, trunc)
            .map_err(|e| anyhow::anyhow!("model: {e}"))
    }

    pub fn disc_grid(&self) -> anyhow::Result<DiscGrid> {
        let g = self.grid.clone().unwrap_or_default();
        DiscGrid::polar(&g.radii, g.angles, g.step).map_err(|e| anyhow::anyhow!("grid: {e}"))
    }
}
