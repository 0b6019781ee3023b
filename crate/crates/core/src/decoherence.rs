//! Motional dephasing of the stored spin wave.
//!
//! Atoms released from the trap move ballistically with a one-dimensional
//! Maxwell-Boltzmann velocity distribution. A spin wave with wavevector Δk
//! accumulates the phase Δk·v·τ per atom, and the retrievable overlap decays as
//! R(τ) = exp(−τ²/τ_s²) with τ_s = 1/(Δk⟨v⟩). Atoms also leave the beam,
//! which bounds the memory time by D/(2v).

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::constants::{BOLTZMANN, RB87_MASS, RB_D1_WAVELENGTH, SPEED_OF_LIGHT};
use crate::{Error, Result};

/// Probe/control geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometryCase {
    /// Case 1: control orthogonal to the probe, Δk ≈ k_p.
    Orthogonal,
    /// Case 2: collinear control, Δk set by the probe–control beat Δω/c.
    Collinear,
}

/// How the probe–control splitting `delta_omega` is to be read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplittingUnit {
    /// Angular frequency [rad/s]: Δk = Δω/c.
    Angular,
    /// Ordinary frequency [Hz]: Δk = 2πΔf/c.
    Ordinary,
}

/// Parameters of the atomic motion and beam geometry (SI units).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionParams {
    pub temperature: f64,
    pub mass: f64,
    pub lambda_probe: f64,
    pub geometry: GeometryCase,
    pub delta_omega: f64,
    pub splitting_unit: SplittingUnit,
    /// Beam diameter D [m].
    pub waist: f64,
}

impl MotionParams {
    /// 70 μK ⁸⁷Rb, 795 nm probe, 6.8 × 10⁹ rad/s splitting, D = 100 μm.
    pub fn rubidium(geometry: GeometryCase) -> Self {
        MotionParams {
            temperature: 70e-6,
            mass: RB87_MASS,
            lambda_probe: RB_D1_WAVELENGTH,
            geometry,
            delta_omega: 6.8e9,
            splitting_unit: SplittingUnit::Angular,
            waist: 100e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64); 5] = [
            ("temperature", self.temperature),
            ("mass", self.mass),
            ("lambda_probe", self.lambda_probe),
            ("delta_omega", self.delta_omega),
            ("waist", self.waist),
        ];
        for (name, value) in checks {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::OutOfRange { name, value });
            }
        }
        Ok(())
    }
}

/// Wavevector of the stored spin wave [1/m].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinWaveVector {
    pub delta_k: f64,
}

impl SpinWaveVector {
    pub fn new(delta_k: f64) -> Result<Self> {
        if !(delta_k > 0.0 && delta_k.is_finite()) {
            return Err(Error::OutOfRange {
                name: "delta_k",
                value: delta_k,
            });
        }
        Ok(SpinWaveVector { delta_k })
    }
}

/// √(k_B T / M), the rms of the 1-D velocity distribution [m/s].
pub fn mean_speed(temperature: f64, mass: f64) -> Result<f64> {
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::OutOfRange {
            name: "temperature",
            value: temperature,
        });
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::OutOfRange {
            name: "mass",
            value: mass,
        });
    }
    Ok((BOLTZMANN * temperature / mass).sqrt())
}

pub fn delta_k(m: &MotionParams) -> Result<SpinWaveVector> {
    m.validate()?;
    let dk = match m.geometry {
        GeometryCase::Orthogonal => 2.0 * PI / m.lambda_probe,
        GeometryCase::Collinear => match m.splitting_unit {
            SplittingUnit::Angular => m.delta_omega / SPEED_OF_LIGHT,
            SplittingUnit::Ordinary => 2.0 * PI * m.delta_omega / SPEED_OF_LIGHT,
        },
    };
    SpinWaveVector::new(dk)
}

/// e⁻¹ coherence time 1/(Δk⟨v⟩).
pub fn coherence_time(dk: SpinWaveVector, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::OutOfRange {
            name: "speed",
            value: v,
        });
    }
    Ok(1.0 / (dk.delta_k * v))
}

/// Spatial period 2π/Δk of the spin-wave grating.
pub fn grating_wavelength(dk: SpinWaveVector) -> f64 {
    2.0 * PI / dk.delta_k
}

/// exp(−τ²/τ_s²).
pub fn retrieval_overlap(tau: f64, tau_s: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::OutOfRange {
            name: "tau",
            value: tau,
        });
    }
    if !(tau_s > 0.0) {
        return Err(Error::OutOfRange {
            name: "tau_s",
            value: tau_s,
        });
    }
    Ok((-(tau / tau_s).powi(2)).exp())
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
}

const MC_CHUNK: usize = 8192;
const MC_MIN_ATOMS: usize = 1000;

#[derive(Clone, Copy, Default)]
struct Moments {
    cos: f64,
    sin: f64,
    cos2: f64,
    sin2: f64,
    cross: f64,
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn chunk_moments(seed: u64, chunk: usize, count: usize, phase_per_speed: f64, sigma_v: f64) -> Moments {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    let normal = Normal::new(0.0, sigma_v).expect("finite positive sigma");
    let mut m = [CompensatedSum::default(); 5];
    for _ in 0..count {
        let v: f64 = normal.sample(&mut rng);
        let (s, c) = (phase_per_speed * v).sin_cos();
        m[0].add(c);
        m[1].add(s);
        m[2].add(c * c);
        m[3].add(s * s);
        m[4].add(c * s);
    }
    Moments {
        cos: m[0].value(),
        sin: m[1].value(),
        cos2: m[2].value(),
        sin2: m[3].value(),
        cross: m[4].value(),
    }
}

/// Direct evaluation of |N⁻¹ Σ exp(iΔk v_j τ)|² with Maxwell-Boltzmann
/// velocities. Samples are split into fixed chunks, each with its own
/// ChaCha stream of `seed`, so the result does not depend on thread count.
pub fn retrieval_overlap_mc(
    tau: f64,
    dk: SpinWaveVector,
    temperature: f64,
    mass: f64,
    n_atoms: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_atoms < MC_MIN_ATOMS {
        return Err(Error::InvalidParameter(format!(
            "n_atoms = {n_atoms} is below the minimum of {MC_MIN_ATOMS}"
        )));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::OutOfRange {
            name: "tau",
            value: tau,
        });
    }
    let sigma_v = mean_speed(temperature, mass)?;
    if sigma_v == 0.0 || tau == 0.0 {
        return Ok(McEstimate {
            value: 1.0,
            stderr: 0.0,
        });
    }
    let phase_per_speed = dk.delta_k * tau;
    let n_chunks = n_atoms.div_ceil(MC_CHUNK);
    let parts: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let count = MC_CHUNK.min(n_atoms - c * MC_CHUNK);
            chunk_moments(seed, c, count, phase_per_speed, sigma_v)
        })
        .collect();

    let mut tot = [CompensatedSum::default(); 5];
    for p in &parts {
        tot[0].add(p.cos);
        tot[1].add(p.sin);
        tot[2].add(p.cos2);
        tot[3].add(p.sin2);
        tot[4].add(p.cross);
    }
    let n = n_atoms as f64;
    let (mr, mi) = (tot[0].value() / n, tot[1].value() / n);
    let value = mr * mr + mi * mi;
    // delta method on |m|²: var ≈ 4 Var(Re(m̄ z)) / N
    let second = (mr * mr * tot[2].value() + 2.0 * mr * mi * tot[4].value() + mi * mi * tot[3].value()) / n;
    let var_proj = (second - value * value).max(0.0);
    let stderr = 2.0 * (var_proj / n).sqrt();
    Ok(McEstimate { value, stderr })
}

/// Time for atoms moving at `v` to cross half the beam diameter, D/(2v).
pub fn transit_lifetime(waist: f64, v: f64) -> Result<f64> {
    if !(waist > 0.0) {
        return Err(Error::OutOfRange {
            name: "waist",
            value: waist,
        });
    }
    if !(v > 0.0) {
        return Err(Error::OutOfRange {
            name: "speed",
            value: v,
        });
    }
    Ok(waist / (2.0 * v))
}

/// The mechanism that sets the maximum storage time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitingMechanism {
    MotionalDephasing,
    SpinDecay,
    Transit,
}

impl LimitingMechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            LimitingMechanism::MotionalDephasing => "motional_dephasing",
            LimitingMechanism::SpinDecay => "spin_decay",
            LimitingMechanism::Transit => "transit",
        }
    }
}

/// Result of [`memory_time_budget`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeBudget {
    pub tau_max: f64,
    pub limiting: LimitingMechanism,
}

/// Largest dark time τ with R(τ)·exp(−2γ_sτ) ≥ `eta_target`, capped by the
/// transit lifetime. The limiting mechanism is the larger of the two loss
/// exponents at τ_max, or transit when the cap binds.
pub fn memory_time_budget(m: &MotionParams, gamma_s: f64, eta_target: f64) -> Result<TimeBudget> {
    if !(eta_target > 0.0 && eta_target < 1.0) {
        return Err(Error::OutOfRange {
            name: "eta_target",
            value: eta_target,
        });
    }
    if !(gamma_s >= 0.0 && gamma_s.is_finite()) {
        return Err(Error::OutOfRange {
            name: "gamma_s",
            value: gamma_s,
        });
    }
    let v = mean_speed(m.temperature, m.mass)?;
    let tau_s = coherence_time(delta_k(m)?, v)?;
    let transit = transit_lifetime(m.waist, v)?;
    // τ²/τ_s² + 2γ_sτ = −ln η, positive root in cancellation-free form
    let loss = -eta_target.ln();
    let tau = loss / (gamma_s + (gamma_s * gamma_s + loss / (tau_s * tau_s)).sqrt());
    if transit < tau {
        return Ok(TimeBudget {
            tau_max: transit,
            limiting: LimitingMechanism::Transit,
        });
    }
    let dephasing = (tau / tau_s).powi(2);
    let decay = 2.0 * gamma_s * tau;
    let limiting = if dephasing >= decay {
        LimitingMechanism::MotionalDephasing
    } else {
        LimitingMechanism::SpinDecay
    };
    Ok(TimeBudget { tau_max: tau, limiting })
}

/// Derived lifetime quantities for one geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LifetimeSummary {
    pub mean_speed: f64,
    pub delta_k: f64,
    pub coherence_time: f64,
    pub grating_wavelength: f64,
    pub transit_lifetime: f64,
    /// min(τ_s, transit).
    pub lifetime: f64,
    pub budget: TimeBudget,
}

pub fn lifetime_summary(m: &MotionParams, gamma_s: f64, eta_target: f64) -> Result<LifetimeSummary> {
    let v = mean_speed(m.temperature, m.mass)?;
    let dk = delta_k(m)?;
    let tau_s = coherence_time(dk, v)?;
    let transit = transit_lifetime(m.waist, v)?;
    Ok(LifetimeSummary {
        mean_speed: v,
        delta_k: dk.delta_k,
        coherence_time: tau_s,
        grating_wavelength: grating_wavelength(dk),
        transit_lifetime: transit,
        lifetime: tau_s.min(transit),
        budget: memory_time_budget(m, gamma_s, eta_target)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn mean_speed_rubidium() {
        let v = mean_speed(70e-6, RB87_MASS).unwrap();
        assert_abs_diff_eq!(v, 0.0818, epsilon = 5e-4);
        assert_relative_eq!(mean_speed(280e-6, RB87_MASS).unwrap(), 2.0 * v, max_relative = 1e-12);
        assert_eq!(mean_speed(0.0, RB87_MASS).unwrap(), 0.0);
        assert!(mean_speed(1.0, 0.0).is_err());
    }

    #[test]
    fn delta_k_cases() {
        let mut m = MotionParams::rubidium(GeometryCase::Orthogonal);
        m.lambda_probe = 795e-9;
        let k1 = delta_k(&m).unwrap().delta_k;
        assert_relative_eq!(k1, 7.90e6, max_relative = 2e-3);
        let k2 = delta_k(&MotionParams::rubidium(GeometryCase::Collinear))
            .unwrap()
            .delta_k;
        assert_relative_eq!(k2, 22.7, max_relative = 2e-3);
        let ratio = k1 / k2;
        assert!(ratio > 1e5 && ratio < 1e6);

        let mut ord = MotionParams::rubidium(GeometryCase::Collinear);
        ord.splitting_unit = SplittingUnit::Ordinary;
        let lam = grating_wavelength(delta_k(&ord).unwrap());
        assert_relative_eq!(lam, 0.0441, max_relative = 1e-2);
    }

    #[test]
    fn coherence_times() {
        let dk = SpinWaveVector::new(7.90e6).unwrap();
        let t = coherence_time(dk, 0.0818).unwrap();
        assert_relative_eq!(t, 1.547e-6, max_relative = 1e-3);
        assert_relative_eq!(coherence_time(dk, 0.1636).unwrap(), t / 2.0, max_relative = 1e-12);

        let m = MotionParams::rubidium(GeometryCase::Collinear);
        let v = mean_speed(m.temperature, m.mass).unwrap();
        let t2 = coherence_time(delta_k(&m).unwrap(), v).unwrap();
        assert_relative_eq!(t2, 0.54, max_relative = 1e-2);
    }

    #[test]
    fn grating_wavelengths() {
        let k2 = delta_k(&MotionParams::rubidium(GeometryCase::Collinear)).unwrap();
        assert_relative_eq!(grating_wavelength(k2), 0.277, max_relative = 2e-3);
        let m1 = MotionParams::rubidium(GeometryCase::Orthogonal);
        let k1 = delta_k(&m1).unwrap();
        assert_relative_eq!(grating_wavelength(k1), m1.lambda_probe, max_relative = 1e-12);
        assert_relative_eq!(grating_wavelength(k1) * k1.delta_k, 2.0 * PI, max_relative = 1e-15);
    }

    #[test]
    fn overlap_formula() {
        assert_eq!(retrieval_overlap(0.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(
            retrieval_overlap(1.5, 1.5).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            retrieval_overlap(3.0, 1.5).unwrap(),
            (-4.0f64).exp(),
            max_relative = 1e-15
        );
        assert!(retrieval_overlap(-1.0, 1.0).is_err());
    }

    #[test]
    fn mc_basics() {
        let dk = SpinWaveVector::new(7.9e6).unwrap();
        let r0 = retrieval_overlap_mc(0.0, dk, 70e-6, RB87_MASS, 5000, 3).unwrap();
        assert_eq!(r0.value, 1.0);
        let a = retrieval_overlap_mc(1e-6, dk, 70e-6, RB87_MASS, 20_000, 11).unwrap();
        let b = retrieval_overlap_mc(1e-6, dk, 70e-6, RB87_MASS, 20_000, 11).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        assert!(a.stderr > 0.0);
        assert!(retrieval_overlap_mc(1e-6, dk, 70e-6, RB87_MASS, 999, 1).is_err());
    }

    #[test]
    fn transit() {
        assert_relative_eq!(transit_lifetime(100e-6, 0.08).unwrap(), 625e-6, max_relative = 1e-12);
        assert_relative_eq!(transit_lifetime(200e-6, 0.08).unwrap(), 1250e-6, max_relative = 1e-12);
        let s = lifetime_summary(&MotionParams::rubidium(GeometryCase::Collinear), 0.0, 0.9).unwrap();
        assert_eq!(s.lifetime, s.transit_lifetime);
        assert_eq!(s.budget.limiting, LimitingMechanism::Transit);
    }

    #[test]
    fn budgets() {
        let c1 = memory_time_budget(&MotionParams::rubidium(GeometryCase::Orthogonal), 0.0, 0.9).unwrap();
        assert!(c1.tau_max < 1e-6);
        assert_eq!(c1.limiting, LimitingMechanism::MotionalDephasing);
        let c2 = memory_time_budget(&MotionParams::rubidium(GeometryCase::Collinear), 0.0, 0.9).unwrap();
        assert!(c2.tau_max > 100.0 * c1.tau_max);

        let near_one = memory_time_budget(&MotionParams::rubidium(GeometryCase::Orthogonal), 0.0, 1.0 - 1e-12).unwrap();
        assert!(near_one.tau_max < 1e-11);

        let slow = memory_time_budget(&MotionParams::rubidium(GeometryCase::Orthogonal), 1e7, 0.9).unwrap();
        assert_eq!(slow.limiting, LimitingMechanism::SpinDecay);
        // check the root: R·decay = target
        let m = MotionParams::rubidium(GeometryCase::Orthogonal);
        let v = mean_speed(m.temperature, m.mass).unwrap();
        let ts = coherence_time(delta_k(&m).unwrap(), v).unwrap();
        let frac = retrieval_overlap(slow.tau_max, ts).unwrap() * (-2.0 * 1e7 * slow.tau_max).exp();
        assert_relative_eq!(frac, 0.9, max_relative = 1e-12);
        assert!(memory_time_budget(&m, 0.0, 1.0).is_err());
    }
}
