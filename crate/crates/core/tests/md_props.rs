use std::sync::OnceLock;

use contnet::md::*;
use proptest::prelude::*;

fn ex2_system() -> &'static MdConstraintSystem {
    static SYS: OnceLock<MdConstraintSystem> = OnceLock::new();
    SYS.get_or_init(|| {
        let (src, tr) = md_ex2_source(0.6, &ExampleGrid { n: 2, sigmas: 6.0 }).unwrap();
        let m = MdModel::new(&src, 3, &["X"]).unwrap().structured(tr).unwrap();
        structured_constraints(&m, 1, 1).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn feasibility_is_monotone_in_rates(
        r in prop::array::uniform3(0.0f64..2.5),
        d in prop::array::uniform3(0.0f64..0.5),
    ) {
        let sys = ex2_system();
        let up: Vec<f64> = r.iter().zip(&d).map(|(a, b)| a + b).collect();
        if sys.rate_feasible(&r).unwrap() {
            prop_assert!(sys.rate_feasible(&up).unwrap());
        }
    }

    #[test]
    fn min_rate_is_tight(r2 in 0.7f64..2.0, r3 in 1.2f64..2.5) {
        let sys = ex2_system();
        if let Ok(r1) = sys.min_rate(1, &[(2, r2), (3, r3)]) {
            prop_assert!(sys.rate_feasible(&[r1 + 1e-6, r2, r3]).unwrap());
            prop_assert!(!sys.rate_feasible(&[r1 - 1e-4, r2, r3]).unwrap());
        }
    }
}
