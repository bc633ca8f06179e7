mod common;

use common::{best_slack, min_slack, random_system, BOX};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Checks projection membership against the oracle, skipping points whose
/// verdict is within rounding of the boundary.
fn check_projection(seed: u64, eliminate: &[usize]) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_system(&mut rng, 5, 12);
    let names: Vec<&str> = eliminate.iter().map(|&i| h.variables()[i].as_str()).collect();
    let p = h.fm_eliminate_all(&names).unwrap();
    let keep: Vec<usize> = (0..5).filter(|i| !eliminate.contains(i)).collect();
    for _ in 0..100 {
        let full: Vec<f64> = (0..5).map(|_| rng.random_range(-1.2 * BOX..1.2 * BOX) / 3.0).collect();
        let y: Vec<f64> = keep.iter().map(|&i| full[i]).collect();
        let oracle = best_slack(&h, eliminate, &full);
        let fm = min_slack(&p, &y);
        if oracle.abs() < 1e-7 || fm.abs() < 1e-7 {
            continue;
        }
        prop_assert_eq!(oracle > 0.0, fm > 0.0, "seed {} point {:?}: oracle {} fm {}", seed, y, oracle, fm);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_elimination_is_exact_projection(seed in any::<u64>(), k in 0usize..5) {
        check_projection(seed, &[k])?;
    }

    #[test]
    fn double_elimination_is_exact_projection(seed in any::<u64>()) {
        check_projection(seed, &[0, 3])?;
    }

    #[test]
    fn triple_elimination_is_exact_projection(seed in any::<u64>()) {
        check_projection(seed, &[1, 2, 4])?;
    }

    #[test]
    fn minimize_matches_vertex_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_system(&mut rng, 3, 5);
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let terms: Vec<(&str, f64)> = h.variables().iter().map(String::as_str).zip(c.iter().copied()).collect();
        match h.minimize(&terms) {
            Ok(v) => {
                // v is attained and nothing feasible is smaller
                let mut probe = h.clone();
                probe.push(c.clone(), contnet::regions::Sense::Le, v - 1e-6, None).unwrap();
                prop_assert!(best_slack(&probe, &[0, 1, 2], &[0.0; 3]) < 1e-9);
                let mut at = h.clone();
                at.push(c.clone(), contnet::regions::Sense::Le, v + 1e-6, None).unwrap();
                prop_assert!(best_slack(&at, &[0, 1, 2], &[0.0; 3]) > -1e-9);
            }
            Err(contnet::Error::Infeasible) => {
                prop_assert!(best_slack(&h, &[0, 1, 2], &[0.0; 3]) < 1e-9);
            }
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}
