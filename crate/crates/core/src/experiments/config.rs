//! Experiment configuration: one TOML file with `grid`, `constants`,
//! `potential`, `packet` and `run` sections. Unknown keys are rejected.

use std::f64::consts::FRAC_PI_8;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::action::{BarrierWindow, LagrangianSpec};
use crate::error::{Error, Result};
use crate::lattice::{GaussianPacket, PhysicalConstants, SpaceTimeGrid, WaveFunctionField};
use crate::propagators::{Method, PropagateOptions};

/// Smallest accepted double-slit wall height, in natural units.
pub const MIN_WALL: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub n_t: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Free,
    Harmonic {
        omega: f64,
    },
    /// A wall with gaps, present for `window_start ≤ t < window_end`.
    /// A half-width of zero closes that slit.
    DoubleSlit {
        window_start: f64,
        window_end: f64,
        wall: f64,
        slit_centers: Vec<f64>,
        slit_half_widths: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointMode {
    /// End cells drawn from `|ψ|²` of the path-sum result.
    Target,
    Free,
}

fn default_seed() -> u64 {
    1
}
fn default_n_paths() -> usize {
    10_000
}
fn default_shots() -> usize {
    100_000
}
fn default_epsilon() -> f64 {
    FRAC_PI_8
}
fn default_l2_tolerance() -> f64 {
    1e-2
}
fn default_reconstruction_tolerance() -> f64 {
    0.10
}
fn default_min_count() -> usize {
    20
}
fn default_substeps() -> usize {
    1
}
fn default_amplitude_floor() -> f64 {
    1e-3
}
fn default_prune_eps_phase() -> f64 {
    0.1
}
fn default_prune_eps_mag() -> f64 {
    0.1
}
fn default_relax_steps() -> usize {
    500
}
fn default_significance() -> f64 {
    0.01
}
fn default_endpoints() -> EndpointMode {
    EndpointMode::Target
}
fn default_method() -> Method {
    Method::CrankNicolson
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default = "default_shots")]
    pub shots: usize,
    /// Coherence tolerance for selection and the coherence predicate.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Largest accepted pairwise relative L2 between propagators.
    #[serde(default = "default_l2_tolerance")]
    pub l2_tolerance: f64,
    #[serde(default = "default_reconstruction_tolerance")]
    pub reconstruction_tolerance: f64,
    #[serde(default = "default_min_count")]
    pub min_count: usize,
    #[serde(default)]
    pub max_hop: Option<usize>,
    #[serde(default = "default_substeps")]
    pub cn_substeps: usize,
    #[serde(default = "default_amplitude_floor")]
    pub amplitude_floor: f64,
    #[serde(default = "default_endpoints")]
    pub endpoints: EndpointMode,
    #[serde(default = "default_prune_eps_phase")]
    pub prune_eps_phase: f64,
    #[serde(default = "default_prune_eps_mag")]
    pub prune_eps_mag: f64,
    #[serde(default = "default_relax_steps")]
    pub relax_max_steps: usize,
    /// Significance level of the histogram goodness-of-fit test.
    #[serde(default = "default_significance")]
    pub significance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("every run key has a default")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub constants: PhysicalConstants,
    pub potential: PotentialConfig,
    pub packet: GaussianPacket,
    #[serde(default)]
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical JSON form of the parsed configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn space_time_grid(&self) -> Result<SpaceTimeGrid> {
        let g = &self.grid;
        SpaceTimeGrid::new(g.x_min, g.x_max, g.n_x, g.t_start, g.t_end, g.n_t)
    }

    pub fn lagrangian(&self) -> Result<LagrangianSpec> {
        let grid = self.space_time_grid()?;
        match &self.potential {
            PotentialConfig::Free => Ok(LagrangianSpec::free(self.constants)),
            PotentialConfig::Harmonic { omega } => LagrangianSpec::harmonic(self.constants, *omega),
            PotentialConfig::DoubleSlit {
                window_start,
                window_end,
                wall,
                slit_centers,
                slit_half_widths,
            } => {
                let values = grid
                    .centers()
                    .into_iter()
                    .map(|x| {
                        let open = slit_centers
                            .iter()
                            .zip(slit_half_widths)
                            .any(|(c, w)| *w > 0.0 && (x - c).abs() <= w * (1.0 + 1e-12));
                        if open {
                            0.0
                        } else {
                            *wall
                        }
                    })
                    .collect();
                LagrangianSpec::barrier(
                    self.constants,
                    vec![BarrierWindow {
                        t_from: *window_start,
                        t_to: *window_end,
                        values,
                    }],
                    &grid,
                )
            }
        }
    }

    pub fn initial_field(&self) -> Result<WaveFunctionField> {
        WaveFunctionField::gaussian(self.space_time_grid()?, &self.packet, &self.constants)
    }

    pub fn propagate_options(&self) -> PropagateOptions {
        PropagateOptions {
            cn_substeps: self.run.cn_substeps,
            max_hop: self.run.max_hop,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.run.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.space_time_grid()?;
        self.constants.validate()?;
        self.packet.validate()?;
        let r = &self.run;
        let positive = [
            ("epsilon", r.epsilon),
            ("l2_tolerance", r.l2_tolerance),
            ("reconstruction_tolerance", r.reconstruction_tolerance),
            ("prune_eps_phase", r.prune_eps_phase),
            ("significance", r.significance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("run.{name} must be positive, got {v}")));
            }
        }
        if !(r.prune_eps_mag.is_finite() && r.prune_eps_mag >= 0.0) {
            return Err(Error::validation("run.prune_eps_mag must be non-negative"));
        }
        if !(r.amplitude_floor.is_finite() && r.amplitude_floor >= 0.0) {
            return Err(Error::validation("run.amplitude_floor must be non-negative"));
        }
        if r.cn_substeps == 0 {
            return Err(Error::validation("run.cn_substeps must be at least 1"));
        }
        if r.max_hop == Some(0) {
            return Err(Error::validation("run.max_hop must be at least 1"));
        }
        if r.n_paths == 0 {
            return Err(Error::validation("run.n_paths must be at least 1"));
        }
        if r.shots == 0 {
            return Err(Error::validation("run.shots must be at least 1"));
        }
        if let PotentialConfig::DoubleSlit {
            window_start,
            window_end,
            wall,
            slit_centers,
            slit_half_widths,
        } = &self.potential
        {
            if !(*wall >= MIN_WALL) {
                return Err(Error::validation(format!(
                    "potential.wall must be at least {MIN_WALL} (or inf), got {wall}"
                )));
            }
            if !(window_end > window_start) {
                return Err(Error::validation("potential.window_end must exceed window_start"));
            }
            if slit_centers.is_empty() || slit_centers.len() != slit_half_widths.len() {
                return Err(Error::validation(
                    "potential.slit_centers and slit_half_widths must be non-empty and of equal length",
                ));
            }
            let mut slits: Vec<(f64, f64)> = Vec::new();
            for (&c, &w) in slit_centers.iter().zip(slit_half_widths) {
                if !(c.is_finite() && w.is_finite() && w >= 0.0) {
                    return Err(Error::validation(format!("slit at {c} with half-width {w} is invalid")));
                }
                if c - w < grid.x_min() || c + w > grid.x_max() {
                    return Err(Error::validation(format!(
                        "slit [{}, {}] leaves the grid",
                        c - w,
                        c + w
                    )));
                }
                slits.push((c - w, c + w));
            }
            slits.sort_by(|a, b| a.0.total_cmp(&b.0));
            if slits.windows(2).any(|p| p[1].0 <= p[0].1) {
                return Err(Error::validation("slit intervals overlap"));
            }
        }
        self.lagrangian()?.validate(Some(&grid))?;
        Ok(())
    }
}
