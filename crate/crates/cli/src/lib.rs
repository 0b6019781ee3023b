//! Configuration-driven runner for the four-channel cluster-state memory.
//!
//! Each subcommand turns an [`ExperimentConfig`] into a set of text
//! artifacts (key-value reports and CSV tables). Everything is computed
//! before anything is written, and files are written through a temporary
//! name and renamed into place, so a failing run leaves no partial output.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clustermem_core::decoherence::{
    coherence_time, delta_k, lifetime_summary, mean_speed, retrieval_overlap, retrieval_overlap_mc, LifetimeSummary,
};
use clustermem_core::dynamics::{efficiency_vs_depth, spin_decay_factor};
use clustermem_core::polariton::{mixing_angle, store_retrieve_cluster};
use clustermem_core::GeometryCase;
use thiserror::Error;

pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] clustermem_core::Error),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    /// 1 for configuration and output problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

/// A named text file produced by a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: &'static str,
    pub contents: String,
}

pub const MEMORY_REPORT: &str = "memory_report.txt";
pub const STATE_OUT: &str = "state_out.txt";
pub const SWEEP_DEPTH_CSV: &str = "sweep_depth.csv";
pub const SWEEP_TIME_CSV: &str = "sweep_time.csv";
pub const LIFETIME_REPORT: &str = "lifetime_report.txt";

/// Memory report and retrieved density matrix for the cluster state.
pub fn store_retrieve_artifacts(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let cfgs = cfg.channel_configs();
    let report = store_retrieve_cluster(&cfgs, cfg.storage_time_s)?;
    let mut text = report.to_key_value();
    for (label, c) in ['A', 'B', 'C', 'D'].iter().zip(&cfgs) {
        writeln!(text, "theta_{label}_rad = {}", mixing_angle(c)?).ok();
    }
    Ok(vec![
        Artifact {
            name: MEMORY_REPORT,
            contents: text,
        },
        Artifact {
            name: STATE_OUT,
            contents: report.state_out.to_text(),
        },
    ])
}

/// η_opt(d)·exp(−2γsτ) table.
pub fn sweep_depth_artifacts(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let sweep = efficiency_vs_depth(
        &cfg.sweep.optical_depths,
        &cfg.sweep.gamma_s_tau,
        &cfg.optimize_options(),
    )?;
    let mut csv = String::from("d,gamma_s_tau,eta,iterations,converged\n");
    for r in &sweep.rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            r.d, r.gamma_s_tau, r.eta, r.iterations, r.converged
        )
        .ok();
    }
    Ok(vec![Artifact {
        name: SWEEP_DEPTH_CSV,
        contents: csv,
    }])
}

/// Default dark-time grid: 0–3 μs for the orthogonal geometry, 0–300 μs for
/// the collinear one, 31 points each.
fn default_storage_times(geometry: GeometryCase) -> Vec<f64> {
    let per_second = match geometry {
        GeometryCase::Orthogonal => 1e7,
        GeometryCase::Collinear => 1e5,
    };
    (0..=30).map(|k| k as f64 / per_second).collect()
}

/// Analytic and Monte Carlo retrievable fraction versus dark time.
pub fn sweep_time_artifacts(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let geometry = cfg.geometry.into();
    let m = cfg.motion_params(geometry);
    let dk = delta_k(&m)?;
    let tau_s = coherence_time(dk, mean_speed(m.temperature, m.mass)?)?;
    let mut taus = if cfg.sweep.storage_times_s.is_empty() {
        default_storage_times(geometry)
    } else {
        cfg.sweep.storage_times_s.clone()
    };
    taus.sort_by(f64::total_cmp);
    taus.dedup();

    let mut csv = String::from("tau,R_analytic,R_mc,stderr,combined\n");
    for &tau in &taus {
        let exact = retrieval_overlap(tau, tau_s)?;
        let mc = retrieval_overlap_mc(tau, dk, m.temperature, m.mass, cfg.sweep.mc_atoms, cfg.seed)?;
        let combined = exact * spin_decay_factor(cfg.medium.gamma_s_per_s, tau);
        writeln!(csv, "{:e},{},{},{:e},{}", tau, exact, mc.value, mc.stderr, combined).ok();
    }
    Ok(vec![Artifact {
        name: SWEEP_TIME_CSV,
        contents: csv,
    }])
}

fn lifetime_block(out: &mut String, name: &str, s: &LifetimeSummary) {
    writeln!(out, "[{name}]").ok();
    writeln!(out, "mean_speed_m_per_s = {}", s.mean_speed).ok();
    writeln!(out, "delta_k_per_m = {}", s.delta_k).ok();
    writeln!(out, "coherence_time_s = {:e}", s.coherence_time).ok();
    writeln!(out, "grating_wavelength_m = {:e}", s.grating_wavelength).ok();
    writeln!(out, "transit_lifetime_s = {:e}", s.transit_lifetime).ok();
    writeln!(out, "lifetime_s = {:e}", s.lifetime).ok();
    writeln!(out, "tau_max_s = {:e}", s.budget.tau_max).ok();
    writeln!(out, "limiting_mechanism = {}", s.budget.limiting.as_str()).ok();
}

/// Lifetime figures for both geometries.
pub fn lifetime_artifacts(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let gamma_s = cfg.medium.gamma_s_per_s;
    let eta = cfg.sweep.eta_target;
    let mut text = String::new();
    writeln!(text, "eta_target = {eta}").ok();
    writeln!(text, "gamma_s_per_s = {gamma_s}").ok();
    let mut transit = 0.0;
    for (name, geometry) in [
        ("orthogonal", GeometryCase::Orthogonal),
        ("collinear", GeometryCase::Collinear),
    ] {
        let s = lifetime_summary(&cfg.motion_params(geometry), gamma_s, eta)?;
        transit = s.transit_lifetime;
        lifetime_block(&mut text, name, &s);
    }
    let d = cfg.motion.beam_diameter_m;
    writeln!(text, "[note]").ok();
    writeln!(
        text,
        "transit = D/(2v) = {:.0} us at the computed mean speed and {:.0} us at v = 8 cm/s; \
         a ~300 us figure corresponds to D/(4v), i.e. the radius D/2 used in place of D",
        transit * 1e6,
        d / (2.0 * 0.08) * 1e6
    )
    .ok();
    Ok(vec![Artifact {
        name: LIFETIME_REPORT,
        contents: text,
    }])
}

/// Writes every artifact into `dir`, all or nothing as far as the file system
/// allows: all temporary files are written before any is renamed.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    let out = |e: std::io::Error, p: &Path| CliError::Output(format!("{}: {e}", p.display()));
    fs::create_dir_all(dir).map_err(|e| out(e, dir))?;
    let mut staged = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let tmp = dir.join(format!(".{}.partial", a.name));
        if let Err(e) = fs::write(&tmp, &a.contents) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(out(e, &tmp));
        }
        staged.push((tmp, dir.join(a.name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, dest) in staged {
        fs::rename(&tmp, &dest).map_err(|e| out(e, &dest))?;
        written.push(dest);
    }
    Ok(written)
}

pub fn run_store_retrieve(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    write_artifacts(dir, &store_retrieve_artifacts(cfg)?)
}

pub fn run_sweep_depth(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    write_artifacts(dir, &sweep_depth_artifacts(cfg)?)
}

pub fn run_sweep_time(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    write_artifacts(dir, &sweep_time_artifacts(cfg)?)
}

pub fn run_lifetime(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    write_artifacts(dir, &lifetime_artifacts(cfg)?)
}

/// Parses a `key = value` report into pairs, skipping section headers.
pub fn parse_report(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}
