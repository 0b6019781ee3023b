//! Dark-state polaritons and the four-channel store/retrieve map.
//!
//! Each photon of the cluster state is stored in its own ensemble. A σ−
//! photon drives the class I Λ system and ends up in `c−`; a σ+ photon
//! drives class II and ends up in `c+`. Storage and retrieval in the
//! adiabatic limit are relabellings; imperfect retrieval and spin-wave decay
//! are amplitude-damping channels towards the empty ensemble / vacuum mode.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::spin_decay_factor;
use crate::state::{
    apply_kraus, cluster_state_4q, density_from_pure, fidelity, waveplate_map, BasisFamily, DensityMatrix, Direction,
    KrausChannel, PureState,
};
use crate::verification::{genuine_entanglement, witness_value};
use crate::{Error, Result};

/// Number of memory channels (ensembles A, B, C, D).
pub const CHANNELS: usize = 4;

/// Physical parameters of one memory channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelConfig {
    /// Collective coupling √(g²N) [rad/s].
    pub g_sqrt_n: f64,
    /// Control Rabi frequency Ω during propagation [rad/s].
    pub omega: f64,
    /// Retrieval amplitude β. `None` is complete retrieval (β → ∞).
    pub beta: Option<Complex64>,
    /// Spin-wave decay rate γ_s [1/s].
    pub gamma_s: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self::ideal()
    }
}

impl ChannelConfig {
    /// Complete retrieval, no spin decay, θ = π/4 during propagation.
    pub fn ideal() -> Self {
        ChannelConfig {
            g_sqrt_n: 1.0,
            omega: 1.0,
            beta: None,
            gamma_s: 0.0,
        }
    }

    pub fn with_beta(mut self, beta: Complex64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_gamma_s(mut self, gamma_s: f64) -> Self {
        self.gamma_s = gamma_s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_sqrt_n > 0.0 && self.g_sqrt_n.is_finite()) {
            return Err(Error::OutOfRange {
                name: "g_sqrt_n",
                value: self.g_sqrt_n,
            });
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::OutOfRange {
                name: "omega",
                value: self.omega,
            });
        }
        if !(self.gamma_s >= 0.0 && self.gamma_s.is_finite()) {
            return Err(Error::OutOfRange {
                name: "gamma_s",
                value: self.gamma_s,
            });
        }
        if let Some(b) = self.beta {
            if !(b.re.is_finite() && b.im.is_finite()) {
                return Err(Error::OutOfRange {
                    name: "beta",
                    value: b.norm(),
                });
            }
        }
        Ok(())
    }

    /// Probability that a stored excitation comes out as a photon:
    /// |β|²/(1+|β|²), or 1 for complete retrieval.
    pub fn retrieval_probability(&self) -> f64 {
        match self.beta {
            None => 1.0,
            Some(b) => {
                let b2 = b.norm_sqr();
                b2 / (1.0 + b2)
            }
        }
    }

    /// Phase of the retrieved branch (β/|β|, or 1).
    fn retrieval_phase(&self) -> Complex64 {
        match self.beta {
            Some(b) if b.norm() > 0.0 => b / b.norm(),
            _ => Complex64::new(1.0, 0.0),
        }
    }

    /// Overall per-channel efficiency after a dark time τ: retrieval probability
    /// times exp(−2γ_sτ).
    pub fn efficiency(&self, tau: f64) -> f64 {
        self.retrieval_probability() * spin_decay_factor(self.gamma_s, tau)
    }
}

/// β such that |β|²/(1+|β|²) equals a given efficiency η ∈ [0, 1).
pub fn beta_for_efficiency(eta: f64) -> Result<Complex64> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::OutOfRange {
            name: "eta",
            value: eta,
        });
    }
    Ok(Complex64::new((eta / (1.0 - eta)).sqrt(), 0.0))
}

/// Probe polarization entering an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarization {
    SigmaMinus,
    SigmaPlus,
}

/// Λ-system class: I for σ− (stores in `c−`), II for σ+ (stores in `c+`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolaritonClass {
    I,
    II,
}

impl Polarization {
    pub fn class(self) -> PolaritonClass {
        match self {
            Polarization::SigmaMinus => PolaritonClass::I,
            Polarization::SigmaPlus => PolaritonClass::II,
        }
    }

    /// Level of the ensemble qutrit `{c0, c−, c+}` holding the excitation.
    fn ensemble_level(self) -> usize {
        match self {
            Polarization::SigmaMinus => 1,
            Polarization::SigmaPlus => 2,
        }
    }
}

/// tan θ = √(g²N)/Ω, θ ∈ [0, π/2]. Ω = 0 gives exactly π/2.
pub fn mixing_angle(cfg: &ChannelConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(cfg.g_sqrt_n.atan2(cfg.omega))
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::OutOfRange {
            name: "theta",
            value: theta,
        });
    }
    Ok(())
}

/// (field, spin) coefficients (cos θ, −sin θ) of the polariton operator.
pub fn polariton_components(theta: f64) -> Result<(f64, f64)> {
    check_theta(theta)?;
    Ok((theta.cos(), -theta.sin()))
}

/// Single-excitation dark state cos θ |1⟩|c0⟩ − sin θ |0⟩|c∓⟩ over
/// `{photon number} ⊗ {c0, c−, c+}`.
pub fn dark_state(theta: f64, pol: Polarization) -> Result<PureState> {
    let (field, spin) = polariton_components(theta)?;
    let families = vec![BasisFamily::Number, BasisFamily::Ensemble];
    let mut amps = vec![Complex64::new(0.0, 0.0); 6];
    // index = photon * 3 + ensemble level
    amps[3] = Complex64::new(field, 0.0);
    amps[pol.ensemble_level()] = Complex64::new(spin, 0.0);
    PureState::new(families, amps)
}

/// A single-excitation polariton: coherent photon/spin amplitudes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolaritonState {
    pub theta: f64,
    pub photon_amp: Complex64,
    pub spin_amp: Complex64,
    pub class: PolaritonClass,
}

impl PolaritonState {
    /// Splits a unit-modulus input amplitude into field and spin parts.
    pub fn new(theta: f64, input_amp: Complex64, class: PolaritonClass) -> Result<Self> {
        let (field, spin) = polariton_components(theta)?;
        if (input_amp.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfRange {
                name: "input amplitude modulus",
                value: input_amp.norm(),
            });
        }
        Ok(PolaritonState {
            theta,
            photon_amp: input_amp * field,
            spin_amp: input_amp * spin,
            class,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.photon_amp.norm_sqr() + self.spin_amp.norm_sqr()
    }
}

fn validate_all(cfgs: &[ChannelConfig; CHANNELS]) -> Result<()> {
    cfgs.iter().try_for_each(ChannelConfig::validate)
}

/// Adiabatic storage (θ: 0 → π/2): σ− → c−, σ+ → c+ on every channel.
/// Amplitudes are untouched.
pub fn store(photonic: &PureState, cfgs: &[ChannelConfig; CHANNELS]) -> Result<PureState> {
    validate_all(cfgs)?;
    if photonic.families().len() != CHANNELS {
        return Err(Error::DimensionMismatch {
            expected: CHANNELS,
            found: photonic.families().len(),
        });
    }
    for (k, f) in photonic.families().iter().enumerate() {
        if *f != BasisFamily::Circular {
            return Err(Error::FamilyMismatch {
                subsystem: k,
                expected: BasisFamily::Circular.name(),
                found: f.name(),
            });
        }
    }
    photonic.relabel(vec![BasisFamily::Spin; CHANNELS])
}

/// Spin-wave decay over a dark time τ on every ensemble, as amplitude
/// damping with survival probability exp(−2γ_sτ).
pub fn apply_spin_decay(stored: &DensityMatrix, cfgs: &[ChannelConfig; CHANNELS], tau: f64) -> Result<DensityMatrix> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::OutOfRange {
            name: "tau",
            value: tau,
        });
    }
    let mut rho = to_ensemble(stored)?;
    for (k, cfg) in cfgs.iter().enumerate() {
        let survival = spin_decay_factor(cfg.gamma_s, tau);
        if survival < 1.0 {
            let ch = KrausChannel::amplitude_damping(BasisFamily::Ensemble, survival)?;
            rho = apply_kraus(&rho, &ch, k)?.0;
        }
    }
    Ok(rho)
}

fn to_ensemble(stored: &DensityMatrix) -> Result<DensityMatrix> {
    if stored.families().len() != CHANNELS {
        return Err(Error::DimensionMismatch {
            expected: CHANNELS,
            found: stored.families().len(),
        });
    }
    let mut rho = stored.clone();
    for (k, f) in stored.families().iter().enumerate() {
        match f {
            BasisFamily::Ensemble => {}
            BasisFamily::Spin => {
                rho = apply_kraus(&rho, &KrausChannel::vacuum_embedding(BasisFamily::Spin)?, k)?.0;
            }
            other => {
                return Err(Error::FamilyMismatch {
                    subsystem: k,
                    expected: BasisFamily::Ensemble.name(),
                    found: other.name(),
                })
            }
        }
    }
    Ok(rho)
}

/// The retrieval map of one channel as a Kraus channel from the ensemble
/// `{c0, c−, c+}` to the photonic mode `{0, σ−, σ+}`. An excitation is read out
/// with amplitude β/√(1+|β|²); otherwise it stays behind in the ensemble
/// (distinguishably for c− and c+) and the mode is empty.
pub fn retrieval_channel(cfg: &ChannelConfig) -> Result<KrausChannel> {
    cfg.validate()?;
    let p = cfg.retrieval_probability();
    let keep = cfg.retrieval_phase() * p.sqrt();
    let lose = Complex64::new((1.0 - p).sqrt(), 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let k0 = DMatrix::from_row_slice(3, 3, &[one, zero, zero, zero, keep, zero, zero, zero, keep]);
    let mut ops = vec![k0];
    if p < 1.0 {
        ops.push(DMatrix::from_row_slice(
            3,
            3,
            &[zero, lose, zero, zero, zero, zero, zero, zero, zero],
        ));
        ops.push(DMatrix::from_row_slice(
            3,
            3,
            &[zero, zero, lose, zero, zero, zero, zero, zero, zero],
        ));
    }
    KrausChannel::new(ops, BasisFamily::Ensemble, BasisFamily::CircularMode, false)
}

/// Output of [`retrieve`].
#[derive(Clone, Debug)]
pub struct Retrieval {
    /// Photonic state over four `{0, σ−, σ+}` modes.
    pub state: DensityMatrix,
    /// Probability that all four photons are read out.
    pub success_probability: f64,
}

/// Retrieves a stored state (spin or ensemble families) into four photonic
/// modes, applying each channel's retrieval amplitude β.
pub fn retrieve(stored: &DensityMatrix, cfgs: &[ChannelConfig; CHANNELS]) -> Result<Retrieval> {
    validate_all(cfgs)?;
    let mut rho = to_ensemble(stored)?;
    for (k, cfg) in cfgs.iter().enumerate() {
        rho = apply_kraus(&rho, &retrieval_channel(cfg)?, k)?.0;
    }
    let success_probability = rho.postselect_excited().map(|(_, p)| p).unwrap_or(0.0);
    Ok(Retrieval {
        state: rho,
        success_probability,
    })
}

/// Pure-state retrieval with the per-channel superposition
/// (|0⟩ + b|1⟩)/√(1+|b|²), where |b|²/(1+|b|²) is the channel's overall
/// efficiency after a dark time τ. The result is renormalized.
pub fn retrieve_coherent(stored: &PureState, cfgs: &[ChannelConfig; CHANNELS], tau: f64) -> Result<PureState> {
    validate_all(cfgs)?;
    if stored.families() != [BasisFamily::Spin; CHANNELS] {
        return Err(Error::FamilyMismatch {
            subsystem: 0,
            expected: BasisFamily::Spin.name(),
            found: stored.families().first().map(|f| f.name()).unwrap_or("none"),
        });
    }
    let branch: Vec<(Complex64, Complex64)> = cfgs
        .iter()
        .map(|c| {
            let eta = c.efficiency(tau);
            (
                Complex64::new((1.0 - eta).sqrt(), 0.0),
                c.retrieval_phase() * eta.sqrt(),
            )
        })
        .collect();
    let families = vec![BasisFamily::CircularMode; CHANNELS];
    let mut amps = vec![Complex64::new(0.0, 0.0); 81];
    for (i, a) in stored.amplitudes().iter().enumerate() {
        if a.norm() == 0.0 {
            continue;
        }
        let spins = [(i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1];
        // each channel either emits its photon (level spin+1) or stays empty (level 0)
        for mask in 0..(1usize << CHANNELS) {
            let mut amp = *a;
            let mut idx = 0;
            for k in 0..CHANNELS {
                let emitted = (mask >> (CHANNELS - 1 - k)) & 1 == 1;
                let (vac, ret) = branch[k];
                amp *= if emitted { ret } else { vac };
                idx = idx * 3 + if emitted { spins[k] + 1 } else { 0 };
            }
            amps[idx] += amp;
        }
    }
    PureState::new(families, amps)
}

/// Summary of one store → dark time → retrieve run on the cluster state.
#[derive(Clone, Debug)]
pub struct MemoryReport {
    /// Retrieved photonic state over four `{0, H, V}` modes.
    pub state_out: DensityMatrix,
    /// ⟨φ_in|ρ_out|φ_in⟩ (Uhlmann fidelity against the input).
    pub fidelity: f64,
    /// Fidelity of the pure-state superposition model.
    pub fidelity_coherent: f64,
    /// Fidelity conditioned on one photon per mode; `None` when that event
    /// has zero probability.
    pub fidelity_postselected: Option<f64>,
    /// Probability of one photon per mode.
    pub success_probability: f64,
    /// Tr(Wρ) with W = I/2 − |C⟩⟨C|.
    pub witness: f64,
    pub genuine_entanglement: bool,
    pub efficiency_per_channel: [f64; CHANNELS],
    pub tau: f64,
}

impl MemoryReport {
    /// Flat `key = value` block.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tau_s = {:e}", self.tau);
        let _ = writeln!(out, "fidelity = {:.15}", self.fidelity);
        let _ = writeln!(out, "fidelity_coherent = {:.15}", self.fidelity_coherent);
        match self.fidelity_postselected {
            Some(f) => writeln!(out, "fidelity_postselected = {f:.15}"),
            None => writeln!(out, "fidelity_postselected = nan"),
        }
        .ok();
        let _ = writeln!(out, "success_probability = {:.15}", self.success_probability);
        let _ = writeln!(out, "witness = {:.15}", self.witness);
        let _ = writeln!(out, "genuine_entanglement = {}", self.genuine_entanglement);
        for (k, eta) in self.efficiency_per_channel.iter().enumerate() {
            let _ = writeln!(out, "efficiency_{} = {:.15}", ['A', 'B', 'C', 'D'][k], eta);
        }
        out
    }
}

/// Full pipeline: cluster state → wave plates → storage → dark time τ with
/// spin decay → retrieval → wave plates, scored against the input.
pub fn store_retrieve_cluster(cfgs: &[ChannelConfig; CHANNELS], tau: f64) -> Result<MemoryReport> {
    store_retrieve(&cluster_state_4q(), cfgs, tau)
}

/// Same pipeline for any four-photon H/V input state.
pub fn store_retrieve(input: &PureState, cfgs: &[ChannelConfig; CHANNELS], tau: f64) -> Result<MemoryReport> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::OutOfRange {
            name: "tau",
            value: tau,
        });
    }
    let circular = waveplate_map(input, Direction::In)?;
    let stored = store(&circular, cfgs)?;
    let decayed = apply_spin_decay(&density_from_pure(&stored), cfgs, tau)?;
    let retrieved = retrieve(&decayed, cfgs)?;
    let state_out = retrieved.state.waveplate_map(Direction::Out)?;

    let reference = density_from_pure(&input.embed_vacuum()?);
    let fid = fidelity(&reference, &state_out)?;
    let witness = witness_value(&state_out)?;

    let fidelity_postselected = match state_out.postselect_excited() {
        Ok((post, _)) => Some(fidelity(&density_from_pure(input), &post)?),
        Err(Error::ZeroProbability) => None,
        Err(e) => return Err(e),
    };

    let coherent = waveplate_map(&retrieve_coherent(&stored, cfgs, tau)?, Direction::Out)?;
    let ov = input.embed_vacuum()?.inner(&coherent)?;

    let mut efficiency_per_channel = [0.0; CHANNELS];
    for (e, c) in efficiency_per_channel.iter_mut().zip(cfgs) {
        *e = c.efficiency(tau);
    }
    Ok(MemoryReport {
        fidelity: fid,
        fidelity_coherent: ov.norm_sqr(),
        fidelity_postselected,
        success_probability: retrieved.success_probability,
        witness,
        genuine_entanglement: genuine_entanglement(fid),
        efficiency_per_channel,
        state_out,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn ideal() -> [ChannelConfig; 4] {
        [ChannelConfig::ideal(); 4]
    }

    #[test]
    fn mixing_angle_limits() {
        let cfg = ChannelConfig {
            g_sqrt_n: 3.0,
            omega: 3.0,
            ..ChannelConfig::ideal()
        };
        assert_abs_diff_eq!(mixing_angle(&cfg).unwrap(), FRAC_PI_4, epsilon = 1e-15);
        let off = ChannelConfig { omega: 0.0, ..cfg };
        assert_eq!(mixing_angle(&off).unwrap(), FRAC_PI_2);
        let strong = ChannelConfig { omega: 1e9, ..cfg };
        assert!(mixing_angle(&strong).unwrap() < 1e-8);
        let bad = ChannelConfig { omega: -1.0, ..cfg };
        assert!(mixing_angle(&bad).is_err());
        let bad = ChannelConfig { g_sqrt_n: 0.0, ..cfg };
        assert!(mixing_angle(&bad).is_err());
    }

    #[test]
    fn dark_state_limits() {
        let photon = dark_state(0.0, Polarization::SigmaMinus).unwrap();
        assert_eq!(photon.amplitude_of("1,c0").unwrap(), Complex64::new(1.0, 0.0));
        let spin = dark_state(FRAC_PI_2, Polarization::SigmaPlus).unwrap();
        assert_abs_diff_eq!(spin.amplitude_of("0,c+").unwrap().re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spin.amplitude_of("1,c0").unwrap().re, 0.0, epsilon = 1e-15);
        let half = dark_state(FRAC_PI_4, Polarization::SigmaMinus).unwrap();
        assert_abs_diff_eq!(half.amplitude_of("1,c0").unwrap().re, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(half.amplitude_of("0,c-").unwrap().re, -(0.5f64.sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(half.norm(), 1.0, epsilon = 1e-12);
        assert!(dark_state(-0.1, Polarization::SigmaMinus).is_err());
        assert!(dark_state(2.0, Polarization::SigmaMinus).is_err());
    }

    #[test]
    fn components() {
        assert_eq!(polariton_components(0.0).unwrap(), (1.0, -0.0));
        let (f, s) = polariton_components(FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(f, 0.0, epsilon = 1e-15);
        assert_eq!(s, -1.0);
        let p = PolaritonState::new(0.3, Complex64::new(0.0, 1.0), PolaritonClass::II).unwrap();
        assert_abs_diff_eq!(p.norm_sqr(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.photon_amp.im, 0.3f64.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.spin_amp.im, -(0.3f64.sin()), epsilon = 1e-15);
    }

    #[test]
    fn store_maps_circular_to_spin() {
        let s = PureState::from_labels(&[(BasisFamily::Circular, "s-"); 4]).unwrap();
        let st = store(&s, &ideal()).unwrap();
        assert_eq!(st.families(), &[BasisFamily::Spin; 4]);
        assert_eq!(st.amplitude_of("c-,c-,c-,c-").unwrap(), Complex64::new(1.0, 0.0));

        let atom = store(&waveplate_map(&cluster_state_4q(), Direction::In).unwrap(), &ideal()).unwrap();
        assert_eq!(atom.amplitude_of("c-,c-,c-,c-").unwrap().re, 0.5);
        assert_eq!(atom.amplitude_of("c+,c+,c-,c-").unwrap().re, 0.5);
        assert_eq!(atom.amplitude_of("c-,c-,c+,c+").unwrap().re, 0.5);
        assert_eq!(atom.amplitude_of("c+,c+,c+,c+").unwrap().re, -0.5);
        assert!(store(&cluster_state_4q(), &ideal()).is_err());
    }

    #[test]
    fn ideal_pipeline() {
        let r = store_retrieve_cluster(&ideal(), 0.0).unwrap();
        assert!(1.0 - r.fidelity < 1e-10);
        assert_abs_diff_eq!(r.witness, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.success_probability, 1.0, epsilon = 1e-12);
        assert!(r.genuine_entanglement);
    }

    #[test]
    fn beta_twenty() {
        let mut cfgs = ideal();
        cfgs[0] = cfgs[0].with_beta(Complex64::new(20f64.sqrt(), 0.0));
        let r = store_retrieve_cluster(&cfgs, 0.0).unwrap();
        assert_abs_diff_eq!(r.fidelity, 20.0 / 21.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.fidelity_coherent, 20.0 / 21.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.success_probability, 20.0 / 21.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.fidelity_postselected.unwrap(), 1.0, epsilon = 1e-10);
        assert!(r.genuine_entanglement);
    }

    #[test]
    fn beta_zero_kills_fidelity() {
        let mut cfgs = ideal();
        cfgs[0] = cfgs[0].with_beta(Complex64::new(0.0, 0.0));
        let r = store_retrieve_cluster(&cfgs, 0.0).unwrap();
        assert_abs_diff_eq!(r.fidelity, 0.0, epsilon = 1e-10);
        assert!(!r.genuine_entanglement);
        assert!(r.witness > 0.0);
        assert_eq!(r.fidelity_postselected, None);
    }

    #[test]
    fn spin_decay_efficiency() {
        let cfgs = [ChannelConfig::ideal().with_gamma_s(0.5); 4];
        let r = store_retrieve_cluster(&cfgs, 1.0).unwrap();
        for e in r.efficiency_per_channel {
            assert_abs_diff_eq!(e, (-1.0f64).exp(), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(r.fidelity, (-4.0f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn beta_for_efficiency_round_trip() {
        let b = beta_for_efficiency(0.75).unwrap();
        let c = ChannelConfig::ideal().with_beta(b);
        assert_abs_diff_eq!(c.retrieval_probability(), 0.75, epsilon = 1e-15);
        assert!(beta_for_efficiency(1.0).is_err());
    }

    #[test]
    fn report_block() {
        let r = store_retrieve_cluster(&ideal(), 0.0).unwrap();
        let kv = r.to_key_value();
        assert!(kv.contains("genuine_entanglement = true"));
        assert!(kv.contains("efficiency_D = 1.000000000000000"));
    }
}
