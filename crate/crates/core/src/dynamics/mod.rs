//! One-dimensional light storage in a Λ-type ensemble.
//!
//! The probe envelope E, optical polarization P and spin coherence S obey the
//! slowly varying envelope equations in the co-moving frame. With time in
//! units of 1/γ, the polarization decay rate, and position scaled to
//! z ∈ [0, 1]:
//!
//! ```text
//! ∂t P = −P + i√d E + iΩ S
//! ∂t S = iΩ P − γs S
//! ∂z E = i√d P
//! ```
//!
//! Field amplitudes are normalized so that ∫|ε|²dt counts photons and spin
//! waves so that ∫|S|²dz does. Losses are tracked separately: 2∫∫|P|² is
//! scattered out of the mode, 2γs∫∫|S|² decays from the spin wave.
//!
//! Public types carry SI units; the integrator works in the scaled units.

mod integrator;
mod optimize;

use num_complex::Complex64;

use crate::{Error, Result};
use integrator::{t_weights, weighted_norm_sqr, z_weights, Fields, Model, Propagator};

pub use optimize::{
    default_input, efficiency_vs_depth, optimal_spin_mode, optimize_control, DepthRow, DepthSweep, OptimizeOptions,
    OptimizedControl, SpinMode,
};

/// Amplitude survival of a spin wave over `tau`, squared: exp(−2γsτ).
pub fn spin_decay_factor(gamma_s: f64, tau: f64) -> f64 {
    (-2.0 * gamma_s * tau).exp()
}

/// Ensemble parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MediumParams {
    /// Resonant optical depth d.
    pub optical_depth: f64,
    /// Polarization decay rate γ [1/s].
    pub gamma: f64,
    /// Spin-wave decay rate γs [1/s].
    pub gamma_s: f64,
    /// Medium length [m]; only used to label positions.
    pub length: f64,
}

impl MediumParams {
    pub fn new(optical_depth: f64, gamma: f64, gamma_s: f64, length: f64) -> Result<Self> {
        let m = MediumParams {
            optical_depth,
            gamma,
            gamma_s,
            length,
        };
        m.validate()?;
        Ok(m)
    }

    /// Medium in natural units: γ = 1, L = 1, no spin decay.
    pub fn scaled(optical_depth: f64) -> Self {
        MediumParams {
            optical_depth,
            gamma: 1.0,
            gamma_s: 0.0,
            length: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.optical_depth >= 0.0 && self.optical_depth.is_finite()) {
            return Err(Error::OutOfRange {
                name: "optical depth",
                value: self.optical_depth,
            });
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::OutOfRange {
                name: "gamma",
                value: self.gamma,
            });
        }
        if !(self.gamma_s >= 0.0 && self.gamma_s.is_finite()) {
            return Err(Error::OutOfRange {
                name: "gamma_s",
                value: self.gamma_s,
            });
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::OutOfRange {
                name: "length",
                value: self.length,
            });
        }
        Ok(())
    }

    fn model(&self) -> Model {
        Model {
            d: self.optical_depth,
            gamma_s: self.gamma_s / self.gamma,
        }
    }
}

fn check_grid(times: &[f64], len: usize, what: &str) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InvalidParameter(format!("{what} needs at least two samples")));
    }
    if times.len() != len {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: len,
        });
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!(
            "{what} time grid must be finite and strictly increasing"
        )));
    }
    Ok(())
}

fn interpolate<T>(times: &[f64], values: &[T], t: f64, outside: T) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let n = times.len();
    if t < times[0] || t > times[n - 1] {
        return outside;
    }
    let k = times.partition_point(|&x| x <= t);
    if k == 0 {
        return values[0];
    }
    if k >= n {
        return values[n - 1];
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let a = (t - t0) / (t1 - t0);
    values[k - 1] * (1.0 - a) + values[k] * a
}

/// Control Rabi frequency Ω(t) on a time grid, linearly interpolated between
/// samples and zero outside the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSchedule {
    times: Vec<f64>,
    omega: Vec<f64>,
}

impl ControlSchedule {
    pub fn new(times: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        check_grid(&times, omega.len(), "control")?;
        if let Some(&bad) = omega.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::OutOfRange {
                name: "control Rabi frequency",
                value: bad,
            });
        }
        Ok(ControlSchedule { times, omega })
    }

    /// Constant Ω on [t0, t1] with `samples` grid points.
    pub fn constant(omega: f64, t0: f64, t1: f64, samples: usize) -> Result<Self> {
        let times = uniform(t0, t1, samples)?;
        Self::new(times, vec![omega; samples])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn value_at(&self, t: f64) -> f64 {
        interpolate(&self.times, &self.omega, t, 0.0)
    }

    /// Same schedule shifted by `dt` in time.
    pub fn shifted(&self, dt: f64) -> Self {
        ControlSchedule {
            times: self.times.iter().map(|t| t + dt).collect(),
            omega: self.omega.clone(),
        }
    }
}

fn uniform(t0: f64, t1: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 || !(t1 > t0) {
        return Err(Error::InvalidParameter(format!(
            "uniform grid needs t1 > t0 and two or more samples (got [{t0}, {t1}], {samples})"
        )));
    }
    let step = (t1 - t0) / (samples - 1) as f64;
    Ok((0..samples).map(|k| t0 + k as f64 * step).collect())
}

/// Complex probe envelope ε(t) at a medium boundary, with ∫|ε|²dt in photons.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldEnvelope {
    times: Vec<f64>,
    amps: Vec<Complex64>,
}

impl FieldEnvelope {
    pub fn new(times: Vec<f64>, amps: Vec<Complex64>) -> Result<Self> {
        check_grid(&times, amps.len(), "envelope")?;
        if amps.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::InvalidParameter("envelope amplitudes must be finite".into()));
        }
        Ok(FieldEnvelope { times, amps })
    }

    /// Gaussian single-photon pulse on [0, duration], centred at duration/2
    /// with amplitude width duration/6, normalized to unit energy.
    pub fn gaussian(duration: f64, samples: usize) -> Result<Self> {
        let times = uniform(0.0, duration, samples)?;
        let sigma = duration / 6.0;
        let centre = duration / 2.0;
        let amps: Vec<Complex64> = times
            .iter()
            .map(|t| Complex64::new((-(t - centre).powi(2) / (2.0 * sigma * sigma)).exp(), 0.0))
            .collect();
        let env = FieldEnvelope { times, amps };
        let scale = env.energy().sqrt().recip();
        Ok(env.scaled(Complex64::new(scale, 0.0)))
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.end() - self.start()
    }

    /// ∫|ε|²dt by the trapezoid rule.
    pub fn energy(&self) -> f64 {
        self.times
            .windows(2)
            .zip(self.amps.windows(2))
            .map(|(t, a)| 0.5 * (t[1] - t[0]) * (a[0].norm_sqr() + a[1].norm_sqr()))
            .sum()
    }

    pub fn value_at(&self, t: f64) -> Complex64 {
        interpolate(&self.times, &self.amps, t, Complex64::new(0.0, 0.0))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        FieldEnvelope {
            times: self.times.clone(),
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn shifted(&self, dt: f64) -> Self {
        FieldEnvelope {
            times: self.times.iter().map(|t| t + dt).collect(),
            amps: self.amps.clone(),
        }
    }
}

/// Spin coherence S(z) along the medium, z ∈ [0, 1] in units of L.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinWaveProfile {
    z: Vec<f64>,
    amps: Vec<Complex64>,
}

impl SpinWaveProfile {
    pub fn new(z: Vec<f64>, amps: Vec<Complex64>) -> Result<Self> {
        check_grid(&z, amps.len(), "spin wave")?;
        if (z[0]).abs() > 1e-12 || (z[z.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("spin-wave grid must span [0, 1]".into()));
        }
        if amps.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::InvalidParameter("spin-wave amplitudes must be finite".into()));
        }
        Ok(SpinWaveProfile { z, amps })
    }

    fn from_nodes(amps: Vec<Complex64>) -> Self {
        let n = amps.len();
        let z = (0..n).map(|j| j as f64 / (n - 1) as f64).collect();
        SpinWaveProfile { z, amps }
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    /// ∫|S|²dz: stored excitation number.
    pub fn norm_sqr(&self) -> f64 {
        self.z
            .windows(2)
            .zip(self.amps.windows(2))
            .map(|(z, a)| 0.5 * (z[1] - z[0]) * (a[0].norm_sqr() + a[1].norm_sqr()))
            .sum()
    }

    /// Profile resampled on `nz` uniform nodes.
    fn resample(&self, nz: usize) -> Vec<Complex64> {
        (0..nz)
            .map(|j| {
                interpolate(
                    &self.z,
                    &self.amps,
                    j as f64 / (nz - 1) as f64,
                    Complex64::new(0.0, 0.0),
                )
            })
            .collect()
    }

    /// S(1 − z): the profile seen from the other end of the medium.
    pub fn reversed(&self) -> Self {
        SpinWaveProfile {
            z: self.z.iter().rev().map(|z| 1.0 - z).collect(),
            amps: self.amps.iter().rev().copied().collect(),
        }
    }
}

/// Discretization of the integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    /// Number of z nodes.
    pub nz: usize,
    /// Largest time step, in units of 1/γ.
    pub dt: f64,
    /// Minimum number of steps across the input pulse; the step shrinks below
    /// `dt` when the pulse is short.
    pub min_pulse_steps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            nz: 200,
            dt: 0.01,
            min_pulse_steps: 400,
        }
    }
}

impl SolverSettings {
    /// Twice the resolution in both z and t.
    pub fn refined(&self) -> Self {
        SolverSettings {
            nz: 2 * self.nz - 1,
            dt: self.dt / 2.0,
            min_pulse_steps: 2 * self.min_pulse_steps,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nz < 3 {
            return Err(Error::InvalidParameter(format!(
                "need at least 3 z nodes, got {}",
                self.nz
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::OutOfRange {
                name: "dt",
                value: self.dt,
            });
        }
        if self.min_pulse_steps == 0 {
            return Err(Error::InvalidParameter("min_pulse_steps must be positive".into()));
        }
        Ok(())
    }

    /// Scaled step for a pulse of scaled duration `pulse`.
    fn step_for(&self, pulse: f64) -> f64 {
        self.dt.min(pulse / self.min_pulse_steps as f64)
    }
}

/// Which end of the medium the retrieved pulse leaves from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RetrievalDirection {
    /// Control reversed: the pulse leaves through the input face.
    #[default]
    Backward,
    /// Control unchanged: the pulse leaves through the far face.
    Forward,
}

/// Excitation bookkeeping of one propagation run, in photons.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBudget {
    pub initial: f64,
    pub input: f64,
    pub output: f64,
    /// ∫|S|²dz at the end of the run.
    pub stored: f64,
    /// ∫|P|²dz at the end of the run.
    pub polarization: f64,
    pub scattered: f64,
    pub spin_decayed: f64,
}

impl EnergyBudget {
    /// (initial + input − everything accounted for) / (initial + input).
    pub fn relative_residual(&self) -> f64 {
        let total = self.initial + self.input;
        let accounted = self.output + self.stored + self.polarization + self.scattered + self.spin_decayed;
        if total == 0.0 {
            return accounted;
        }
        (total - accounted) / total
    }
}

/// Result of [`evolve`].
#[derive(Clone, Debug)]
pub struct Evolution {
    pub e_out: FieldEnvelope,
    pub spin: SpinWaveProfile,
    pub budget: EnergyBudget,
}

/// Scaled simulation grid shared by the storage and retrieval stages.
struct SimGrid {
    prop: Propagator,
    t0: f64,
    steps: usize,
}

impl SimGrid {
    fn new(m: &MediumParams, settings: &SolverSettings, t0: f64, t1: f64, pulse: f64) -> Result<Self> {
        let span = m.gamma * (t1 - t0);
        let dt_max = settings.step_for(m.gamma * pulse);
        Self::with_step(m, settings, t0, span, dt_max)
    }

    fn with_step(m: &MediumParams, settings: &SolverSettings, t0: f64, span: f64, dt_max: f64) -> Result<Self> {
        settings.validate()?;
        let steps = (span / dt_max).ceil().max(2.0) as usize;
        let dt = span / steps as f64;
        let h = 1.0 / (settings.nz - 1) as f64;
        if m.optical_depth * h > 1.0 {
            return Err(Error::UnresolvedGrid(format!(
                "absorption length unresolved: d·Δz = {:.3} > 1 (use more z nodes)",
                m.optical_depth * h
            )));
        }
        Ok(SimGrid {
            prop: Propagator::new(m.model(), settings.nz, dt),
            t0,
            steps,
        })
    }

    fn dt(&self) -> f64 {
        self.prop.dt
    }

    /// Physical sample times for a medium with linewidth `gamma`.
    fn times(&self, gamma: f64) -> Vec<f64> {
        (0..=self.steps)
            .map(|n| self.t0 + n as f64 * self.dt() / gamma)
            .collect()
    }

    fn sample_control(&self, c: &ControlSchedule, gamma: f64) -> Result<Vec<f64>> {
        let omega: Vec<f64> = self.times(gamma).iter().map(|&t| c.value_at(t) / gamma).collect();
        let peak = omega.iter().fold(0.0f64, |a, &b| a.max(b));
        if peak * self.dt() > 1.0 {
            return Err(Error::UnresolvedGrid(format!(
                "control unresolved: Ω·Δt = {:.3} > 1 (reduce dt)",
                peak * self.dt()
            )));
        }
        Ok(omega)
    }

    fn sample_input(&self, e: Option<&FieldEnvelope>, gamma: f64) -> Vec<Complex64> {
        let scale = gamma.sqrt().recip();
        self.times(gamma)
            .iter()
            .map(|&t| e.map_or(Complex64::new(0.0, 0.0), |e| e.value_at(t) * scale))
            .collect()
    }

    fn energy(&self, samples: &[Complex64]) -> f64 {
        weighted_norm_sqr(samples, &t_weights(samples.len(), self.dt()))
    }
}

/// Integrates the envelope equations over the grid of `c`, starting from an
/// empty medium.
pub fn evolve(
    m: &MediumParams,
    c: &ControlSchedule,
    e_in: &FieldEnvelope,
    settings: &SolverSettings,
) -> Result<Evolution> {
    evolve_from(m, c, Some(e_in), None, settings)
}

/// Like [`evolve`], with an optional initial spin wave and optional input.
pub fn evolve_from(
    m: &MediumParams,
    c: &ControlSchedule,
    e_in: Option<&FieldEnvelope>,
    initial: Option<&SpinWaveProfile>,
    settings: &SolverSettings,
) -> Result<Evolution> {
    m.validate()?;
    let pulse = e_in.map_or(c.end() - c.start(), |e| e.duration().min(c.end() - c.start()));
    let grid = SimGrid::new(m, settings, c.start(), c.end(), pulse)?;
    let omega = grid.sample_control(c, m.gamma)?;
    let input = grid.sample_input(e_in, m.gamma);
    let mut init = Fields::zeros(settings.nz);
    if let Some(s) = initial {
        init.s = s.resample(settings.nz);
    }
    let zw = z_weights(settings.nz);
    let initial_energy = weighted_norm_sqr(&init.s, &zw);

    let run = grid.prop.forward(&omega, &input, init, false);
    let budget = EnergyBudget {
        initial: initial_energy,
        input: grid.energy(&input),
        output: grid.energy(&run.output),
        stored: weighted_norm_sqr(&run.last.s, &zw),
        polarization: weighted_norm_sqr(&run.last.p, &zw),
        scattered: run.scattered,
        spin_decayed: run.spin_decayed,
    };
    let root = m.gamma.sqrt();
    let e_out = FieldEnvelope {
        times: grid.times(m.gamma),
        amps: run.output.iter().map(|e| e * root).collect(),
    };
    Ok(Evolution {
        e_out,
        spin: SpinWaveProfile::from_nodes(run.last.s),
        budget,
    })
}

/// Storage followed by a dark period τ and retrieval.
///
/// `c_store` runs on its own (absolute) grid; `c_retrieve` is timed from the
/// moment the control is switched back on, i.e. its t = 0 is T + τ. The
/// returned η is retrieved photons over incident photons, including the
/// spin-wave survival exp(−2γsτ) over the dark period.
pub fn storage_retrieval_efficiency(
    m: &MediumParams,
    c_store: &ControlSchedule,
    c_retrieve: &ControlSchedule,
    e_in: &FieldEnvelope,
    tau: f64,
    direction: RetrievalDirection,
    settings: &SolverSettings,
) -> Result<f64> {
    m.validate()?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::OutOfRange {
            name: "storage time",
            value: tau,
        });
    }
    if c_retrieve.start() < 0.0 {
        return Err(Error::InvalidParameter(
            "retrieval control is timed from the end of the dark period and must start at t >= 0".into(),
        ));
    }
    let pulse = e_in.duration().min(c_store.end() - c_store.start());
    let store_grid = SimGrid::new(m, settings, c_store.start(), c_store.end(), pulse)?;
    let dt = store_grid.dt();
    let input = store_grid.sample_input(Some(e_in), m.gamma);
    let energy_in = store_grid.energy(&input);
    if energy_in <= 0.0 {
        return Err(Error::ZeroInputEnergy);
    }
    let omega = store_grid.sample_control(c_store, m.gamma)?;
    let stored = store_grid
        .prop
        .forward(&omega, &input, Fields::zeros(settings.nz), false)
        .last;

    let survival = (-m.gamma_s * tau).exp();
    let mut init = Fields::zeros(settings.nz);
    init.s = stored.s.iter().map(|s| s * survival).collect();
    if direction == RetrievalDirection::Backward {
        init.s.reverse();
    }

    let span = m.gamma * c_retrieve.end();
    let retrieve_grid = SimGrid::with_step(m, settings, 0.0, span, dt)?;
    let omega_r = retrieve_grid.sample_control(c_retrieve, m.gamma)?;
    let silence = vec![Complex64::new(0.0, 0.0); omega_r.len()];
    let run = retrieve_grid.prop.forward(&omega_r, &silence, init, false);
    let out = retrieve_grid.energy(&run.output);
    Ok((out / energy_in).clamp(0.0, 1.0))
}

/// Outcome of the adiabaticity check g²N·T ≫ γ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adiabaticity {
    pub ratio: f64,
    pub pass: bool,
}

/// Default pass threshold for [`check_adiabaticity`].
pub const ADIABATIC_THRESHOLD: f64 = 10.0;

/// ratio = g²N·T/γ; passes at or above `threshold`.
pub fn check_adiabaticity(g2n: f64, gamma: f64, t_pulse: f64, threshold: f64) -> Result<Adiabaticity> {
    for (name, value) in [("g2N", g2n), ("gamma", gamma), ("pulse duration", t_pulse)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::OutOfRange { name, value });
        }
    }
    let ratio = g2n * t_pulse / gamma;
    Ok(Adiabaticity {
        ratio,
        pass: ratio >= threshold,
    })
}
