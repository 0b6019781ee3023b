//! Method-of-lines integrator for the dimensionless envelope equations
//!
//! ```text
//! ∂t P = −P + i√d E + iΩ S
//! ∂t S = iΩ P − γs S
//! ∂z E = i√d P,        E(0, t) = ε(t)
//! ```
//!
//! with time in units of 1/γ and z ∈ [0, 1]. The field is eliminated by
//! trapezoidal quadrature in z, so the state is x = (P_j, S_j) on the nodes.
//! Writing the system as ẋ = A(Ω)x + b(ε), time stepping is the implicit
//! trapezoid rule
//!
//! ```text
//! (I − dt/2 A(Ω_{n+1})) x_{n+1} = (I + dt/2 A(Ω_n)) x_n + dt/2 (b_n + b_{n+1}).
//! ```
//!
//! The quadrature matrix is lower triangular, so each implicit solve is a
//! single sweep in z with a 2×2 solve per node. The exact discrete adjoint
//! of the scheme (an upper-triangular sweep, run backwards in time) gives
//! gradients of quadratic objectives with respect to every control sample.

use num_complex::Complex64;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Dimensionless medium: optical depth and spin decay in units of γ.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Model {
    pub d: f64,
    pub gamma_s: f64,
}

/// Polarization and spin coherence on the z nodes.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Fields {
    pub p: Vec<Complex64>,
    pub s: Vec<Complex64>,
}

impl Fields {
    pub fn zeros(nz: usize) -> Self {
        Fields {
            p: vec![ZERO; nz],
            s: vec![ZERO; nz],
        }
    }

    pub fn nz(&self) -> usize {
        self.s.len()
    }
}

/// Trapezoid weights on `nz` nodes of [0, 1].
pub(crate) fn z_weights(nz: usize) -> Vec<f64> {
    let h = 1.0 / (nz - 1) as f64;
    (0..nz)
        .map(|j| if j == 0 || j == nz - 1 { h / 2.0 } else { h })
        .collect()
}

/// Trapezoid weights on `n` time samples.
pub(crate) fn t_weights(n: usize, dt: f64) -> Vec<f64> {
    (0..n)
        .map(|m| if m == 0 || m == n - 1 { dt / 2.0 } else { dt })
        .collect()
}

pub(crate) fn weighted_norm_sqr(v: &[Complex64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, w)| a.norm_sqr() * w).sum()
}

/// Result of a forward run.
#[derive(Clone, Debug)]
pub(crate) struct Run {
    pub last: Fields,
    /// E(z = 1) at every time sample.
    pub output: Vec<Complex64>,
    /// Every state, when requested.
    pub trajectory: Option<Vec<Fields>>,
    /// ∫ 2∫|P|² dz dt.
    pub scattered: f64,
    /// ∫ 2γs ∫|S|² dz dt.
    pub spin_decayed: f64,
}

pub(crate) struct Propagator {
    pub model: Model,
    pub nz: usize,
    pub dt: f64,
    h: f64,
    sqrt_d: f64,
}

impl Propagator {
    pub fn new(model: Model, nz: usize, dt: f64) -> Self {
        assert!(nz >= 3, "need at least three z nodes");
        Propagator {
            model,
            nz,
            dt,
            h: 1.0 / (nz - 1) as f64,
            sqrt_d: model.d.sqrt(),
        }
    }

    #[inline]
    fn l_diag(j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            0.5
        }
    }

    /// (L P)_j: cumulative trapezoid of P from node 0 to node j.
    fn cumulative(&self, p: &[Complex64], out: &mut [Complex64]) {
        let mut c = ZERO;
        for j in 0..p.len() {
            out[j] = c + p[j] * Self::l_diag(j);
            c += if j == 0 { p[0] * 0.5 } else { p[j] };
        }
    }

    /// Field at z = 1 for a given state and boundary input.
    pub fn output_field(&self, x: &Fields, eps: Complex64) -> Complex64 {
        let n = x.p.len();
        let mut sum = (x.p[0] + x.p[n - 1]) * 0.5;
        for pj in &x.p[1..n - 1] {
            sum += pj;
        }
        eps + I * self.sqrt_d * self.h * sum
    }

    /// rhs = (I + dt/2 A(Ω)) x + dt/2 (b(ε_n) + b(ε_{n+1})).
    fn explicit_half(&self, x: &Fields, omega: f64, eps_sum: Complex64, lp: &mut [Complex64], rhs: &mut Fields) {
        let half = 0.5 * self.dt;
        let dh = self.model.d * self.h;
        self.cumulative(&x.p, lp);
        let src = I * self.sqrt_d * eps_sum;
        for j in 0..self.nz {
            let (p, s) = (x.p[j], x.s[j]);
            rhs.p[j] = p + half * (-p - dh * lp[j] + I * omega * s + src);
            rhs.s[j] = s + half * (I * omega * p - self.model.gamma_s * s);
        }
    }

    /// Solves (I − dt/2 A(Ω)) x = rhs by a forward sweep in z.
    fn implicit_solve(&self, omega: f64, rhs: &Fields, x: &mut Fields) {
        let half = 0.5 * self.dt;
        let dh = self.model.d * self.h;
        let b = -half * I * omega;
        let c = 1.0 + half * self.model.gamma_s;
        let mut cum = ZERO;
        for j in 0..self.nz {
            let a = 1.0 + half + half * dh * Self::l_diag(j);
            let u = rhs.p[j] - half * dh * cum;
            let det = a * c - b * b;
            let p = (u * c - b * rhs.s[j]) / det;
            let s = (a * rhs.s[j] - b * u) / det;
            x.p[j] = p;
            x.s[j] = s;
            cum += if j == 0 { p * 0.5 } else { p };
        }
    }

    /// Adjoint explicit part: (I + dt/2 A(Ω))† μ.
    fn explicit_half_adjoint(&self, mu: &Fields, omega: f64, out: &mut Fields) {
        let half = 0.5 * self.dt;
        let dh = self.model.d * self.h;
        let n = self.nz;
        // (Lᵀ y)_j: y_j/2 + Σ_{k>j} y_k for j ≥ 1, and Σ_{k≥1} y_k / 2 for j = 0
        let mut tail = ZERO;
        for j in (0..n).rev() {
            let lt = if j == 0 { tail * 0.5 } else { mu.p[j] * 0.5 + tail };
            if j >= 1 {
                tail += mu.p[j];
            }
            let (yp, ys) = (mu.p[j], mu.s[j]);
            out.p[j] = yp + half * (-yp - dh * lt - I * omega * ys);
            out.s[j] = ys + half * (-I * omega * yp - self.model.gamma_s * ys);
        }
    }

    /// Solves (I − dt/2 A(Ω))† μ = w by a backward sweep in z.
    fn implicit_solve_adjoint(&self, omega: f64, w: &Fields, mu: &mut Fields) {
        let half = 0.5 * self.dt;
        let dh = self.model.d * self.h;
        let b = half * I * omega;
        let c = 1.0 + half * self.model.gamma_s;
        let n = self.nz;
        let mut tail = ZERO; // Σ_{k>j} μP_k
        for j in (0..n).rev() {
            let a = 1.0 + half + half * dh * Self::l_diag(j);
            let off = if j == 0 { tail * 0.5 } else { tail };
            let u = w.p[j] - half * dh * off;
            let det = a * c - b * b;
            let p = (u * c - b * w.s[j]) / det;
            let s = (a * w.s[j] - b * u) / det;
            mu.p[j] = p;
            mu.s[j] = s;
            if j >= 1 {
                tail += p;
            }
        }
    }

    /// Integrates over `omega.len() − 1` steps. `input` is the boundary field
    /// at z = 0 on the same samples.
    pub fn forward(&self, omega: &[f64], input: &[Complex64], init: Fields, keep_trajectory: bool) -> Run {
        assert_eq!(omega.len(), input.len());
        assert_eq!(init.nz(), self.nz);
        let steps = omega.len() - 1;
        let zw = z_weights(self.nz);
        let mut lp = vec![ZERO; self.nz];
        let mut rhs = Fields::zeros(self.nz);
        let mut x = init;
        let mut next = Fields::zeros(self.nz);
        let mut output = Vec::with_capacity(steps + 1);
        let mut trajectory = keep_trajectory.then(|| Vec::with_capacity(steps + 1));

        let loss_rates = |x: &Fields| {
            (
                2.0 * weighted_norm_sqr(&x.p, &zw),
                2.0 * self.model.gamma_s * weighted_norm_sqr(&x.s, &zw),
            )
        };
        let (mut sc_prev, mut sd_prev) = loss_rates(&x);
        let (mut scattered, mut spin_decayed) = (0.0, 0.0);

        output.push(self.output_field(&x, input[0]));
        for n in 0..steps {
            if let Some(t) = trajectory.as_mut() {
                t.push(x.clone());
            }
            self.explicit_half(&x, omega[n], input[n] + input[n + 1], &mut lp, &mut rhs);
            self.implicit_solve(omega[n + 1], &rhs, &mut next);
            std::mem::swap(&mut x, &mut next);
            output.push(self.output_field(&x, input[n + 1]));
            let (sc, sd) = loss_rates(&x);
            scattered += 0.5 * self.dt * (sc + sc_prev);
            spin_decayed += 0.5 * self.dt * (sd + sd_prev);
            sc_prev = sc;
            sd_prev = sd;
        }
        if let Some(t) = trajectory.as_mut() {
            t.push(x.clone());
        }
        Run {
            last: x,
            output,
            trajectory,
            scattered,
            spin_decayed,
        }
    }

    /// Exact adjoint of [`forward`](Self::forward) for a real objective J with
    /// per-sample cotangents `q_n = ∂J/∂x̄_n` (`sources(n, x_n)`).
    ///
    /// Returns ∂J/∂x̄_0 and ∂J/∂Ω_n for every control sample.
    pub fn adjoint<F>(&self, omega: &[f64], trajectory: &[Fields], mut sources: F) -> (Fields, Vec<f64>)
    where
        F: FnMut(usize, &Fields) -> Option<Fields>,
    {
        let steps = omega.len() - 1;
        assert_eq!(trajectory.len(), steps + 1);
        let nz = self.nz;
        let mut grad = vec![0.0; steps + 1];

        let add = |acc: &mut Fields, q: Option<Fields>| {
            if let Some(q) = q {
                for j in 0..nz {
                    acc.p[j] += q.p[j];
                    acc.s[j] += q.s[j];
                }
            }
        };
        // μ^† G x with G x = (iS, iP)
        let gdot = |mu: &Fields, x: &Fields| -> f64 {
            let mut acc = ZERO;
            for j in 0..nz {
                acc += mu.p[j].conj() * I * x.s[j] + mu.s[j].conj() * I * x.p[j];
            }
            acc.re
        };

        let mut lambda = Fields::zeros(nz);
        add(&mut lambda, sources(steps, &trajectory[steps]));
        if steps == 0 {
            return (lambda, grad);
        }
        let mut mu_next = Fields::zeros(nz);
        self.implicit_solve_adjoint(omega[steps], &lambda, &mut mu_next);
        grad[steps] += self.dt * gdot(&mu_next, &trajectory[steps]);

        let mut mu = Fields::zeros(nz);
        for n in (0..steps).rev() {
            let x = &trajectory[n];
            self.explicit_half_adjoint(&mu_next, omega[n], &mut lambda);
            add(&mut lambda, sources(n, x));
            grad[n] += self.dt * gdot(&mu_next, x);
            if n >= 1 {
                self.implicit_solve_adjoint(omega[n], &lambda, &mut mu);
                grad[n] += self.dt * gdot(&mu, x);
                std::mem::swap(&mut mu, &mut mu_next);
            }
        }
        (lambda, grad)
    }

    /// Cotangent of J = w |E(1)|² with respect to x̄ (no dependence on ε).
    #[cfg(test)]
    pub fn output_cotangent(&self, e: Complex64, weight: f64) -> Fields {
        let n = self.nz;
        let scale = weight * e * (-I) * self.sqrt_d * self.h;
        let mut q = Fields::zeros(n);
        for j in 0..n {
            let l = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            q.p[j] = scale * l;
        }
        q
    }
}
