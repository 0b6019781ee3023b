//! JSON experiment configuration.
//!
//! Every physical quantity is in SI units and its key carries the unit
//! (`temperature_K`, `storage_time_s`, ...). Every field has a default, so
//! `{}` is a valid configuration describing the reference ⁸⁷Rb setup.

use std::path::{Path, PathBuf};

use clustermem_core::constants::{RB87_MASS, RB_D1_WAVELENGTH};
use clustermem_core::decoherence::SplittingUnit;
use clustermem_core::dynamics::{OptimizeOptions, RetrievalDirection};
use clustermem_core::{ChannelConfig, Complex64, GeometryCase, MediumParams, MotionParams, SolverSettings};
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    #[default]
    Orthogonal,
    Collinear,
}

impl From<Geometry> for GeometryCase {
    fn from(g: Geometry) -> Self {
        match g {
            Geometry::Orthogonal => GeometryCase::Orthogonal,
            Geometry::Collinear => GeometryCase::Collinear,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    #[default]
    Angular,
    Ordinary,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Backward,
    Forward,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub g_sqrt_n_rad_per_s: f64,
    pub omega_rad_per_s: f64,
    /// |β|²; absent or null means complete retrieval.
    pub retrieval_beta_sq: Option<f64>,
    pub retrieval_beta_phase_rad: f64,
    pub gamma_s_per_s: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            g_sqrt_n_rad_per_s: 1.0e8,
            omega_rad_per_s: 1.0e8,
            retrieval_beta_sq: None,
            retrieval_beta_phase_rad: 0.0,
            gamma_s_per_s: 0.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MediumSection {
    pub optical_depth: f64,
    pub gamma_per_s: f64,
    pub gamma_s_per_s: f64,
    pub length_m: f64,
}

impl Default for MediumSection {
    fn default() -> Self {
        MediumSection {
            optical_depth: 10.0,
            gamma_per_s: 1.8e7,
            gamma_s_per_s: 0.0,
            length_m: 0.01,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MotionSection {
    #[serde(rename = "temperature_K")]
    pub temperature_k: f64,
    pub mass_kg: f64,
    pub probe_wavelength_m: f64,
    /// Probe–control splitting; its unit follows `splitting_unit`
    /// (rad/s when angular, Hz when ordinary).
    pub splitting: f64,
    pub splitting_unit: Splitting,
    pub beam_diameter_m: f64,
}

impl Default for MotionSection {
    fn default() -> Self {
        MotionSection {
            temperature_k: 70e-6,
            mass_kg: RB87_MASS,
            probe_wavelength_m: RB_D1_WAVELENGTH,
            splitting: 6.8e9,
            splitting_unit: Splitting::Angular,
            beam_diameter_m: 100e-6,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub optical_depths: Vec<f64>,
    pub gamma_s_tau: Vec<f64>,
    /// Dark times for `sweep-time`; empty means a grid suited to the geometry.
    pub storage_times_s: Vec<f64>,
    pub mc_atoms: usize,
    pub eta_target: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            optical_depths: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
            gamma_s_tau: vec![0.0, 0.5, 1.0],
            storage_times_s: Vec::new(),
            mc_atoms: 100_000,
            eta_target: 0.9,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub z_points: usize,
    /// Largest time step in units of 1/γ.
    pub dt_gamma: f64,
    pub min_pulse_steps: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub retrieval: Direction,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverSettings::default();
        let o = OptimizeOptions::default();
        SolverSection {
            z_points: s.nz,
            dt_gamma: s.dt,
            min_pulse_steps: s.min_pulse_steps,
            max_iterations: o.max_iterations,
            tolerance: o.tolerance,
            retrieval: Direction::Backward,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub geometry: Geometry,
    pub storage_time_s: f64,
    pub channels: [ChannelSection; 4],
    pub medium: MediumSection,
    pub motion: MotionSection,
    pub sweep: SweepSection,
    pub solver: SolverSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            output_dir: PathBuf::from("."),
            geometry: Geometry::default(),
            storage_time_s: 0.0,
            channels: Default::default(),
            medium: MediumSection::default(),
            motion: MotionSection::default(),
            sweep: SweepSection::default(),
            solver: SolverSection::default(),
        }
    }
}

fn invalid(field: impl Into<String>, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {message}", field.into()))
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be non-negative and finite, got {v}")))
    }
}

impl ExperimentConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        non_negative("storage_time_s", self.storage_time_s)?;
        for (k, ch) in self.channels.iter().enumerate() {
            positive(&format!("channels[{k}].g_sqrt_n_rad_per_s"), ch.g_sqrt_n_rad_per_s)?;
            non_negative(&format!("channels[{k}].omega_rad_per_s"), ch.omega_rad_per_s)?;
            non_negative(&format!("channels[{k}].gamma_s_per_s"), ch.gamma_s_per_s)?;
            if let Some(b2) = ch.retrieval_beta_sq {
                non_negative(&format!("channels[{k}].retrieval_beta_sq"), b2)?;
            }
            if !ch.retrieval_beta_phase_rad.is_finite() {
                return Err(invalid(
                    format!("channels[{k}].retrieval_beta_phase_rad"),
                    "must be finite",
                ));
            }
        }
        positive("medium.optical_depth", self.medium.optical_depth)?;
        positive("medium.gamma_per_s", self.medium.gamma_per_s)?;
        non_negative("medium.gamma_s_per_s", self.medium.gamma_s_per_s)?;
        positive("medium.length_m", self.medium.length_m)?;

        positive("motion.temperature_K", self.motion.temperature_k)?;
        positive("motion.mass_kg", self.motion.mass_kg)?;
        positive("motion.probe_wavelength_m", self.motion.probe_wavelength_m)?;
        positive("motion.splitting", self.motion.splitting)?;
        positive("motion.beam_diameter_m", self.motion.beam_diameter_m)?;

        if self.sweep.optical_depths.is_empty() {
            return Err(invalid("sweep.optical_depths", "must not be empty"));
        }
        for (k, &d) in self.sweep.optical_depths.iter().enumerate() {
            positive(&format!("sweep.optical_depths[{k}]"), d)?;
        }
        if self.sweep.gamma_s_tau.is_empty() {
            return Err(invalid("sweep.gamma_s_tau", "must not be empty"));
        }
        for (k, &x) in self.sweep.gamma_s_tau.iter().enumerate() {
            non_negative(&format!("sweep.gamma_s_tau[{k}]"), x)?;
        }
        for (k, &t) in self.sweep.storage_times_s.iter().enumerate() {
            non_negative(&format!("sweep.storage_times_s[{k}]"), t)?;
        }
        if self.sweep.mc_atoms < 1000 {
            return Err(invalid(
                "sweep.mc_atoms",
                format!("must be at least 1000, got {}", self.sweep.mc_atoms),
            ));
        }
        if !(self.sweep.eta_target > 0.0 && self.sweep.eta_target < 1.0) {
            return Err(invalid(
                "sweep.eta_target",
                format!("must lie in (0, 1), got {}", self.sweep.eta_target),
            ));
        }

        if self.solver.z_points < 3 {
            return Err(invalid(
                "solver.z_points",
                format!("must be at least 3, got {}", self.solver.z_points),
            ));
        }
        positive("solver.dt_gamma", self.solver.dt_gamma)?;
        if self.solver.min_pulse_steps == 0 {
            return Err(invalid("solver.min_pulse_steps", "must be positive"));
        }
        if self.solver.max_iterations == 0 {
            return Err(invalid("solver.max_iterations", "must be positive"));
        }
        positive("solver.tolerance", self.solver.tolerance)?;
        Ok(())
    }

    pub fn channel_configs(&self) -> [ChannelConfig; 4] {
        self.channels.clone().map(|ch| ChannelConfig {
            g_sqrt_n: ch.g_sqrt_n_rad_per_s,
            omega: ch.omega_rad_per_s,
            beta: ch
                .retrieval_beta_sq
                .map(|b2| Complex64::from_polar(b2.sqrt(), ch.retrieval_beta_phase_rad)),
            gamma_s: ch.gamma_s_per_s,
        })
    }

    pub fn medium_params(&self) -> MediumParams {
        MediumParams {
            optical_depth: self.medium.optical_depth,
            gamma: self.medium.gamma_per_s,
            gamma_s: self.medium.gamma_s_per_s,
            length: self.medium.length_m,
        }
    }

    pub fn motion_params(&self, geometry: GeometryCase) -> MotionParams {
        MotionParams {
            temperature: self.motion.temperature_k,
            mass: self.motion.mass_kg,
            lambda_probe: self.motion.probe_wavelength_m,
            geometry,
            delta_omega: self.motion.splitting,
            splitting_unit: match self.motion.splitting_unit {
                Splitting::Angular => SplittingUnit::Angular,
                Splitting::Ordinary => SplittingUnit::Ordinary,
            },
            waist: self.motion.beam_diameter_m,
        }
    }

    pub fn optimize_options(&self) -> OptimizeOptions {
        OptimizeOptions {
            solver: SolverSettings {
                nz: self.solver.z_points,
                dt: self.solver.dt_gamma,
                min_pulse_steps: self.solver.min_pulse_steps,
            },
            direction: match self.solver.retrieval {
                Direction::Backward => RetrievalDirection::Backward,
                Direction::Forward => RetrievalDirection::Forward,
            },
            max_iterations: self.solver.max_iterations,
            tolerance: self.solver.tolerance,
            ..OptimizeOptions::default()
        }
    }
}
