use clustermem_core::polariton::{store_retrieve, ChannelConfig};
use clustermem_core::state::{density_from_pure, fidelity, tensor, BasisFamily, DensityMatrix, PureState};
use clustermem_core::verification::witness_value;
use clustermem_core::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn amplitudes(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect::<Vec<_>>())
        .prop_filter("non-zero vector", |v| {
            v.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-3
        })
}

fn qubits(n: usize) -> impl Strategy<Value = PureState> {
    amplitudes(1 << n).prop_map(move |a| PureState::new(vec![BasisFamily::Linear; n], a).unwrap())
}

/// ρ = AA†/Tr(AA†) for a random square A.
fn mixed(n: usize) -> impl Strategy<Value = DensityMatrix> {
    let d = 1 << n;
    amplitudes(d * d).prop_map(move |a| {
        let a = DMatrix::from_vec(d, d, a);
        let m = &a * a.adjoint();
        let tr = m.trace();
        DensityMatrix::new(vec![BasisFamily::Linear; n], m / tr).unwrap()
    })
}

fn unitary(d: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    amplitudes(d * d).prop_map(move |a| DMatrix::from_vec(d, d, a).qr().q())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_is_associative_and_normalized(a in qubits(1), b in qubits(2), c in qubits(1)) {
        let left = tensor(&tensor(&a, &b), &c);
        let right = tensor(&a, &tensor(&b, &c));
        prop_assert_eq!(left.families(), right.families());
        for (x, y) in left.amplitudes().iter().zip(right.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-14);
        }
        prop_assert!((left.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_is_symmetric(r in mixed(2), s in mixed(2)) {
        let f1 = fidelity(&r, &s).unwrap();
        let f2 = fidelity(&s, &r).unwrap();
        prop_assert!((f1 - f2).abs() < 1e-10);
        prop_assert!((0.0..=1.0).contains(&f1));
        prop_assert!((fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fidelity_is_unitarily_invariant(r in mixed(2), s in mixed(2), u in unitary(4)) {
        let f = fidelity(&r, &s).unwrap();
        let g = fidelity(&r.conjugate_by(&u).unwrap(), &s.conjugate_by(&u).unwrap()).unwrap();
        prop_assert!((f - g).abs() < 1e-10);
    }

    #[test]
    fn pure_fidelity_is_overlap(a in qubits(2), b in qubits(2)) {
        let f = fidelity(&density_from_pure(&a), &density_from_pure(&b)).unwrap();
        prop_assert!((f - a.inner(&b).unwrap().norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn ideal_memory_is_identity(psi in qubits(4)) {
        let r = store_retrieve(&psi, &[ChannelConfig::ideal(); 4], 0.0).unwrap();
        prop_assert!(1.0 - r.fidelity < 1e-12);
    }

    #[test]
    fn witness_is_half_minus_cluster_fidelity(rho in mixed(4)) {
        let cluster = density_from_pure(&clustermem_core::state::cluster_state_4q());
        let f = fidelity(&cluster, &rho).unwrap();
        prop_assert!((witness_value(&rho).unwrap() - (0.5 - f)).abs() < 1e-10);
    }

    #[test]
    fn product_states_are_not_flagged(a in qubits(1), b in qubits(1), c in qubits(1), d in qubits(1)) {
        let p = tensor(&tensor(&tensor(&a, &b), &c), &d);
        prop_assert!(witness_value(&density_from_pure(&p)).unwrap() >= -1e-12);
    }

    #[test]
    fn pure_text_round_trip(psi in qubits(3)) {
        let back = PureState::from_text(&psi.to_text()).unwrap();
        prop_assert_eq!(back.families(), psi.families());
        for (x, y) in back.amplitudes().iter().zip(psi.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn density_text_round_trip(rho in mixed(2)) {
        let back = DensityMatrix::from_text(&rho.to_text()).unwrap();
        prop_assert!((back.matrix() - rho.matrix()).camax() < 1e-15);
    }
}
