//! Optimal storage control.
//!
//! Retrieval with a fixed control is a linear map from the stored spin wave
//! to the output field, so its efficiency is a quadratic form S†KS. The
//! kernel K is assembled once per medium; its top eigenvector is the optimal
//! spin-wave mode and its top eigenvalue λ bounds retrieval. Storage is the
//! time reverse of retrieval and obeys the same bound, so λ² caps the whole
//! storage-plus-retrieval sequence.
//!
//! The storage control is then improved by gradient ascent on η(Ω). Each
//! gradient is one storage run followed by the adjoint run, which propagates
//! the target spin wave backwards in time through the same discretization,
//! so the gradient is exact for the discrete problem.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::integrator::{t_weights, z_weights, Fields, Propagator};
use super::{
    ControlSchedule, FieldEnvelope, MediumParams, RetrievalDirection, SimGrid, SolverSettings, SpinWaveProfile,
};
use crate::{Error, Result};

/// Options for [`optimize_control`] and [`efficiency_vs_depth`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizeOptions {
    pub solver: SolverSettings,
    pub direction: RetrievalDirection,
    /// Cap on optimizer iterations; each iteration is up to ten quasi-Newton steps.
    pub max_iterations: usize,
    /// Stop once an iteration improves η by less than this.
    pub tolerance: f64,
    /// Length of the retrieval window in input-pulse durations.
    pub retrieval_window: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            solver: SolverSettings::default(),
            direction: RetrievalDirection::Backward,
            max_iterations: 50,
            tolerance: 1e-4,
            retrieval_window: 8.0,
        }
    }
}

/// Result of [`optimize_control`].
#[derive(Clone, Debug)]
pub struct OptimizedControl {
    /// Storage control, on the input pulse's time span [rad/s].
    pub schedule: ControlSchedule,
    /// Retrieval control, timed from the start of retrieval [rad/s].
    pub retrieval: ControlSchedule,
    pub eta: f64,
    /// Best efficiency reachable with a constant storage control.
    pub baseline_eta: f64,
    /// Largest retrieval efficiency of any unit spin wave with this
    /// retrieval control (top eigenvalue λ of the retrieval kernel).
    pub retrieval_bound: f64,
    /// λ²: storage into any mode is also limited to λ by time reversal, so no
    /// storage control can exceed this.
    pub bound: f64,
    /// η after each accepted iteration, starting with the baseline.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Optimal spin wave for a retrieval control.
#[derive(Clone, Debug)]
pub struct SpinMode {
    /// Retrieval efficiency of the mode.
    pub eigenvalue: f64,
    /// Unit-norm profile at the start of retrieval.
    pub profile: SpinWaveProfile,
}

/// Retrieval efficiency as a quadratic form on the nodal spin wave.
struct Kernel {
    matrix: DMatrix<Complex64>,
}

impl Kernel {
    fn build(prop: &Propagator, omega: &[f64]) -> Kernel {
        let nz = prop.nz;
        let silence = vec![Complex64::new(0.0, 0.0); omega.len()];
        let tw: Vec<f64> = t_weights(omega.len(), prop.dt).iter().map(|w| w.sqrt()).collect();
        let columns: Vec<Vec<Complex64>> = (0..nz)
            .into_par_iter()
            .map(|k| {
                let mut init = Fields::zeros(nz);
                init.s[k] = Complex64::new(1.0, 0.0);
                let run = prop.forward(omega, &silence, init, false);
                run.output.iter().zip(&tw).map(|(e, w)| e * *w).collect()
            })
            .collect();
        let r = DMatrix::from_fn(omega.len(), nz, |m, k| columns[k][m]);
        let matrix = r.adjoint() * &r;
        Kernel { matrix }
    }

    fn apply(&self, s: &[Complex64]) -> Vec<Complex64> {
        let v = DVector::from_column_slice(s);
        (&self.matrix * v).iter().copied().collect()
    }

    fn value(&self, s: &[Complex64]) -> f64 {
        let ks = self.apply(s);
        s.iter().zip(&ks).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Largest η over unit-norm spin waves, and the maximizing nodal profile.
    fn top_mode(&self) -> (f64, Vec<Complex64>) {
        let nz = self.matrix.nrows();
        let w: Vec<f64> = z_weights(nz).iter().map(|w| w.sqrt()).collect();
        let b = DMatrix::from_fn(nz, nz, |i, j| self.matrix[(i, j)] / (w[i] * w[j]));
        let b = (&b + b.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = b.symmetric_eigen();
        let (k, &value) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty kernel");
        let v = eig.eigenvectors.column(k);
        // fix the global phase so the profile is reproducible
        let pivot = v
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        let profile = (0..nz).map(|j| v[j] * phase / w[j]).collect();
        (value, profile)
    }
}

/// Storage problem in scaled units.
struct Problem<'a> {
    prop: &'a Propagator,
    input: Vec<Complex64>,
    energy_in: f64,
    kernel: Kernel,
    backward: bool,
    omega_cap: f64,
}

impl Problem<'_> {
    fn retrieval_start(&self, stored: &[Complex64]) -> Vec<Complex64> {
        let mut s = stored.to_vec();
        if self.backward {
            s.reverse();
        }
        s
    }

    fn efficiency(&self, omega: &[f64]) -> f64 {
        let run = self
            .prop
            .forward(omega, &self.input, Fields::zeros(self.prop.nz), false);
        self.kernel.value(&self.retrieval_start(&run.last.s)) / self.energy_in
    }

    fn efficiency_and_gradient(&self, omega: &[f64]) -> (f64, Vec<f64>) {
        let run = self.prop.forward(omega, &self.input, Fields::zeros(self.prop.nz), true);
        let s0 = self.retrieval_start(&run.last.s);
        let eta = self.kernel.value(&s0) / self.energy_in;
        let mut target = self.kernel.apply(&s0);
        if self.backward {
            target.reverse();
        }
        let last = omega.len() - 1;
        let trajectory = run.trajectory.expect("trajectory requested");
        let (_, grad) = self.prop.adjoint(omega, &trajectory, |n, _| {
            (n == last).then(|| Fields {
                p: vec![Complex64::new(0.0, 0.0); target.len()],
                s: target.iter().map(|t| t / self.energy_in).collect(),
            })
        });
        (eta, grad)
    }

    fn clamp(&self, omega: &mut [f64]) {
        for w in omega {
            *w = w.clamp(0.0, self.omega_cap);
        }
    }

    /// Best constant control, by a scan in log Ω and golden-section refinement.
    fn best_constant(&self, centre: f64) -> (f64, f64) {
        let n = self.input.len();
        let eval = |log_w: f64| self.efficiency(&vec![log_w.exp().min(self.omega_cap); n]);
        let step = std::f64::consts::LN_2 / 4.0;
        let grid: Vec<f64> = (-12..=12).map(|k| centre.ln() + k as f64 * step).collect();
        let values: Vec<f64> = grid.iter().map(|&x| eval(x)).collect();
        let best = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (eval(c), eval(d));
        for _ in 0..20 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = eval(d);
            }
        }
        let candidates = [(values[best], grid[best]), (fc, c), (fd, d)];
        let (eta, x) = candidates
            .iter()
            .copied()
            .fold((f64::MIN, 0.0), |acc, v| if v.0 > acc.0 { v } else { acc });
        (x.exp().min(self.omega_cap), eta)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quasi-Newton ascent direction from the stored curvature pairs.
fn lbfgs_direction(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y) in memory.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push((a, rho));
    }
    if let Some((s, y)) = memory.back() {
        let scale = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= scale;
        }
    }
    for ((s, y), (a, rho)) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q
}

const MEMORY: usize = 10;

/// Quasi-Newton steps per optimizer iteration.
const STEPS_PER_ITERATION: usize = 10;

struct Point {
    omega: Vec<f64>,
    eta: f64,
    grad: Vec<f64>,
}

impl Point {
    fn at(problem: &Problem, omega: Vec<f64>) -> Point {
        let (eta, grad) = problem.efficiency_and_gradient(&omega);
        Point { omega, eta, grad }
    }
}

/// One projected quasi-Newton step that strictly improves η, falling back to
/// steepest ascent. `None` when neither direction improves.
fn ascent_step(
    problem: &Problem,
    at: &Point,
    memory: &mut VecDeque<(Vec<f64>, Vec<f64>)>,
    steepest_length: f64,
) -> Option<Point> {
    let gmax = at.grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    if gmax == 0.0 {
        return None;
    }
    let mut accepted = None;
    for quasi_newton in [true, false] {
        if quasi_newton && memory.is_empty() {
            continue;
        }
        let direction: Vec<f64> = if quasi_newton {
            lbfgs_direction(&at.grad, memory)
        } else {
            at.grad.iter().map(|g| g * steepest_length / gmax).collect()
        };
        let mut step = 1.0;
        for _ in 0..30 {
            let mut trial: Vec<f64> = at.omega.iter().zip(&direction).map(|(w, p)| w + step * p).collect();
            problem.clamp(&mut trial);
            if problem.efficiency(&trial) > at.eta {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }
        if accepted.is_some() {
            break;
        }
        memory.clear();
    }
    let next = Point::at(problem, accepted?);
    let s: Vec<f64> = next.omega.iter().zip(&at.omega).map(|(a, b)| a - b).collect();
    let y: Vec<f64> = at.grad.iter().zip(&next.grad).map(|(a, b)| a - b).collect();
    if dot(&s, &y) > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
        memory.push_back((s, y));
        if memory.len() > MEMORY {
            memory.pop_front();
        }
    }
    Some(next)
}

/// Optimizes the storage control for a fixed input pulse.
///
/// The storage window is the span of `e_in`; the control is switched off at
/// its end. Retrieval uses a constant bandwidth-matched control, Ω² = d/T in
/// units of γ, which makes the group delay equal to the pulse duration. The
/// iteration starts from the best constant storage control and only accepts
/// improving steps, so `history` never decreases and `eta ≥ baseline_eta`.
pub fn optimize_control(m: &MediumParams, e_in: &FieldEnvelope, options: &OptimizeOptions) -> Result<OptimizedControl> {
    m.validate()?;
    if m.optical_depth <= 0.0 {
        return Err(Error::OutOfRange {
            name: "optical depth",
            value: m.optical_depth,
        });
    }
    if !(options.retrieval_window > 0.0 && options.tolerance > 0.0) {
        return Err(Error::InvalidParameter(
            "retrieval window and tolerance must be positive".into(),
        ));
    }
    let grid = SimGrid::new(m, &options.solver, e_in.start(), e_in.end(), e_in.duration())?;
    let prop = &grid.prop;
    let input = grid.sample_input(Some(e_in), m.gamma);
    let energy_in = grid.energy(&input);
    if energy_in <= 0.0 {
        return Err(Error::ZeroInputEnergy);
    }

    let pulse = m.gamma * e_in.duration();
    let matched = (m.optical_depth / pulse).sqrt();
    let omega_cap = 1.0 / prop.dt;
    if matched > omega_cap {
        return Err(Error::UnresolvedGrid(format!(
            "matched control Ω·Δt = {:.3} > 1 (reduce dt)",
            matched * prop.dt
        )));
    }
    let retrieval_steps = (options.retrieval_window * pulse / prop.dt).ceil() as usize;
    let omega_r = vec![matched; retrieval_steps + 1];
    let kernel = Kernel::build(prop, &omega_r);
    let (retrieval_bound, _) = kernel.top_mode();

    let problem = Problem {
        prop,
        input,
        energy_in,
        kernel,
        backward: options.direction == RetrievalDirection::Backward,
        omega_cap,
    };
    let (start, baseline_eta) = problem.best_constant(matched);
    let mut point = Point::at(&problem, vec![start; grid.steps + 1]);
    let steepest_length = 0.25 * start.max(matched);
    let mut history = vec![point.eta];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        let before = point.eta;
        let mut stationary = false;
        for _ in 0..STEPS_PER_ITERATION {
            match ascent_step(&problem, &point, &mut memory, steepest_length) {
                Some(next) => point = next,
                None => {
                    stationary = true;
                    break;
                }
            }
        }
        iterations += 1;
        history.push(point.eta);
        if stationary || point.eta - before < options.tolerance {
            converged = true;
            break;
        }
    }
    let Point { omega, eta, .. } = point;

    let times = grid.times(m.gamma);
    let schedule = ControlSchedule::new(times, omega.iter().map(|w| w * m.gamma).collect())?;
    let retrieval = ControlSchedule::constant(
        matched * m.gamma,
        0.0,
        retrieval_steps as f64 * prop.dt / m.gamma,
        retrieval_steps + 1,
    )?;
    Ok(OptimizedControl {
        schedule,
        retrieval,
        eta,
        baseline_eta,
        retrieval_bound,
        bound: retrieval_bound * retrieval_bound,
        history,
        iterations,
        converged,
    })
}

/// Optimal spin wave for retrieval with `c_retrieve` (timed from the start of
/// retrieval).
pub fn optimal_spin_mode(
    m: &MediumParams,
    c_retrieve: &ControlSchedule,
    settings: &SolverSettings,
) -> Result<SpinMode> {
    m.validate()?;
    if c_retrieve.start() < 0.0 {
        return Err(Error::InvalidParameter("retrieval control must start at t >= 0".into()));
    }
    let grid = SimGrid::new(m, settings, 0.0, c_retrieve.end(), c_retrieve.end())?;
    let omega = grid.sample_control(c_retrieve, m.gamma)?;
    let kernel = Kernel::build(&grid.prop, &omega);
    let (eigenvalue, amps) = kernel.top_mode();
    Ok(SpinMode {
        eigenvalue,
        profile: SpinWaveProfile::from_nodes(amps),
    })
}

/// One row of an efficiency-versus-depth table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepthRow {
    pub d: f64,
    pub gamma_s_tau: f64,
    pub eta: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// η_opt(d)·exp(−2γsτ) over a grid, sorted by (d, γsτ).
#[derive(Clone, Debug, PartialEq)]
pub struct DepthSweep {
    pub rows: Vec<DepthRow>,
}

impl DepthSweep {
    /// Rows with the given γsτ, in increasing d.
    pub fn row_for(&self, gamma_s_tau: f64) -> Vec<DepthRow> {
        self.rows
            .iter()
            .filter(|r| r.gamma_s_tau == gamma_s_tau)
            .copied()
            .collect()
    }
}

/// Samples used for the default input pulse.
pub const DEFAULT_PULSE_SAMPLES: usize = 401;

/// Default input for depth `d`: a Gaussian of duration T with γT·d = 10.
pub fn default_input(d: f64) -> Result<FieldEnvelope> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::OutOfRange {
            name: "optical depth",
            value: d,
        });
    }
    FieldEnvelope::gaussian(10.0 / d, DEFAULT_PULSE_SAMPLES)
}

/// Optimal efficiency for each depth, scaled by each spin-decay factor.
///
/// Depths are optimized independently in parallel; the result does not
/// depend on scheduling.
pub fn efficiency_vs_depth(d_list: &[f64], gamma_s_tau_list: &[f64], options: &OptimizeOptions) -> Result<DepthSweep> {
    if d_list.is_empty() || gamma_s_tau_list.is_empty() {
        return Err(Error::InvalidParameter(
            "depth and decay lists must be non-empty".into(),
        ));
    }
    if let Some(&bad) = gamma_s_tau_list.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(Error::OutOfRange {
            name: "gamma_s_tau",
            value: bad,
        });
    }
    let mut depths = d_list.to_vec();
    depths.sort_by(f64::total_cmp);
    depths.dedup();
    let mut decays = gamma_s_tau_list.to_vec();
    decays.sort_by(f64::total_cmp);
    decays.dedup();

    let optima: Vec<OptimizedControl> = depths
        .par_iter()
        .map(|&d| optimize_control(&MediumParams::scaled(d), &default_input(d)?, options))
        .collect::<Result<_>>()?;

    let rows = depths
        .iter()
        .zip(&optima)
        .flat_map(|(&d, opt)| {
            decays.iter().map(move |&x| DepthRow {
                d,
                gamma_s_tau: x,
                eta: opt.eta * (-2.0 * x).exp(),
                iterations: opt.iterations,
                converged: opt.converged,
            })
        })
        .collect();
    Ok(DepthSweep { rows })
}
