use std::path::Path;

use ecadapt::adapt::ed::generalized_eigenvalues;
use ecadapt::ecbasis::{compute_integrals, GeometryConfig, QuadratureGrid, DEFAULT_LEVEL};
use ecadapt::io::read_kwb;
use proptest::prelude::*;

/// Lowest electronic + nuclear energy of H2 at any bond length is above this.
const BO_FLOOR: f64 = -1.1745;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn subsets_are_symmetric_and_above_the_floor(r in 1.0f64..2.5, keep in 1usize..=8) {
        let bs = read_kwb(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/h2_kw20.kwb")).unwrap();
        let bs = bs.truncated(keep).unwrap();
        let grid = QuadratureGrid::new(DEFAULT_LEVEL).unwrap();
        let ints = compute_integrals(&bs, &grid, GeometryConfig::new(r).unwrap()).unwrap();
        let h = ints.hamiltonian();
        prop_assert_eq!(h.asymmetry(), 0.0);
        prop_assert_eq!(ints.overlap.asymmetry(), 0.0);
        let e0 = generalized_eigenvalues(&h, &ints.overlap).unwrap()[0];
        prop_assert!(e0 >= BO_FLOOR, "R = {}: {}", r, e0);
    }
}
