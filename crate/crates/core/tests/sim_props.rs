use ecadapt::pauli::PauliString;
use ecadapt::sim::{apply_pauli_rotation, StateVector};
use proptest::prelude::*;

const N: usize = 4;

fn rotations(odd_y_only: bool) -> impl Strategy<Value = Vec<(PauliString, f64)>> {
    let dim = 1u64 << N;
    let op = (0..dim, 0..dim, -3.2f64..3.2)
        .prop_map(|(x, z, t)| (PauliString::from_masks(N, x, z).unwrap(), t))
        .prop_filter("odd Y", move |(p, _)| !odd_y_only || p.y_count() % 2 == 1);
    prop::collection::vec(op, 0..30)
}

fn real_state() -> impl Strategy<Value = StateVector> {
    prop::collection::vec(-1.0f64..1.0, 1 << N)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            StateVector::from_real(&v.iter().map(|x| x / norm).collect::<Vec<_>>()).unwrap()
        })
}

proptest! {
    #[test]
    fn rotations_preserve_norm(start in 0usize..16, ops in rotations(false)) {
        let mut psi = StateVector::basis(N, start).unwrap();
        for (p, t) in &ops {
            psi = apply_pauli_rotation(&psi, p, *t).unwrap();
        }
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn odd_y_rotations_stay_real(psi in real_state(), ops in rotations(true)) {
        let mut psi = psi;
        for (p, t) in &ops {
            psi = apply_pauli_rotation(&psi, p, *t).unwrap();
            prop_assert!(psi.max_imag() < 1e-12);
        }
    }
}
