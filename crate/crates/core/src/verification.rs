//! Entanglement verification of retrieved states.
//!
//! The witness is the projector witness W = I/2 − |C⟩⟨C| built on the
//! four-qubit cluster state, so Tr(Wρ) = 1/2 − ⟨C|ρ|C⟩ and a negative value is
//! the same statement as fidelity above 1/2. Note that the optimal value for
//! the ideal cluster state under this normalization is −1/2, not −1.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::state::{cluster_state_4q, BasisFamily, DensityMatrix, PureState};
use crate::{Error, Result};

/// W = I/2 − |C⟩⟨C| over four photonic subsystems.
#[derive(Clone, Debug)]
pub struct WitnessOperator {
    families: Vec<BasisFamily>,
    matrix: DMatrix<Complex64>,
}

impl WitnessOperator {
    /// Witness over four H/V qubits (16 × 16).
    pub fn projector() -> Self {
        Self::for_target(&cluster_state_4q())
    }

    /// Witness over four `{0, H, V}` modes; the identity term spans the whole
    /// space, including terms with missing photons.
    pub fn projector_with_vacuum() -> Self {
        Self::for_target(&cluster_state_4q().embed_vacuum().expect("linear families embed"))
    }

    fn for_target(target: &PureState) -> Self {
        let v = target.to_vector();
        let d = v.len();
        let matrix = DMatrix::identity(d, d) * Complex64::new(0.5, 0.0) - &v * v.adjoint();
        WitnessOperator {
            families: target.families().to_vec(),
            matrix,
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn families(&self) -> &[BasisFamily] {
        &self.families
    }

    pub fn expectation(&self, rho: &DensityMatrix) -> Result<f64> {
        if rho.families() != self.families.as_slice() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                found: rho.dim(),
            });
        }
        rho.expectation(&self.matrix)
    }
}

/// Tr(Wρ) for a state over four H/V qubits or four `{0, H, V}` modes.
pub fn witness_value(rho: &DensityMatrix) -> Result<f64> {
    let w = match rho.families() {
        [BasisFamily::Linear, BasisFamily::Linear, BasisFamily::Linear, BasisFamily::Linear] => {
            WitnessOperator::projector()
        }
        [BasisFamily::LinearMode, BasisFamily::LinearMode, BasisFamily::LinearMode, BasisFamily::LinearMode] => {
            WitnessOperator::projector_with_vacuum()
        }
        _ => {
            return Err(Error::DimensionMismatch {
                expected: 16,
                found: rho.dim(),
            })
        }
    };
    w.expectation(rho)
}

/// Fidelity when one channel is read out as (|0⟩ + β|1⟩)/√(1+|β|²):
/// |β|²/(1+|β|²).
pub fn partial_retrieval_fidelity(beta: Complex64) -> f64 {
    let b2 = beta.norm_sqr();
    if b2.is_infinite() {
        return 1.0;
    }
    b2 / (1.0 + b2)
}

/// Smallest |β|² whose partial-retrieval fidelity exceeds `target`
/// (strictly above the returned value): F/(1 − F).
pub fn beta_sq_threshold(target_fidelity: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&target_fidelity) {
        return Err(Error::OutOfRange {
            name: "target fidelity",
            value: target_fidelity,
        });
    }
    Ok(target_fidelity / (1.0 - target_fidelity))
}

/// Fidelity above 1/2 (strict) certifies genuine four-qubit entanglement.
pub fn genuine_entanglement(fidelity: f64) -> bool {
    fidelity > 0.5
}
