use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::grid::LinearChannel;

fn gauss_mi(cov: &DMatrix<f64>, a: &[usize], b: &[usize]) -> f64 {
    let det = |idx: &[usize]| {
        let m = DMatrix::from_fn(idx.len(), idx.len(), |i, j| cov[(idx[i], idx[j])]);
        m.determinant()
    };
    let ab: Vec<usize> = a.iter().chain(b).copied().collect();
    0.5 * (det(a) * det(b) / det(&ab)).log2()
}

/// Covariance of `(X, Y, U, V, W)` with `U = X + N1`, `V = Y + N2`, unit noises.
fn sum_cov(rho: f64) -> DMatrix<f64> {
    // Linear map from (X, Y, N1, N2).
    let l = DMatrix::from_row_slice(
        5,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            1.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 0.0, 1.0, //
            1.0, 1.0, 1.0, 1.0,
        ],
    );
    let mut s = DMatrix::identity(4, 4);
    s[(0, 1)] = rho;
    s[(1, 0)] = rho;
    &l * s * l.transpose()
}

fn noisy(rho: f64) -> MarkovModel {
    MarkovModel {
        source: Density2D::bivariate_normal(rho).unwrap(),
        u: LinearChannel::additive(1.0, 1.0).unwrap(),
        v: LinearChannel::additive(1.0, 1.0).unwrap(),
    }
}

#[test]
fn schedule_rejects_bad_orderings() {
    let p = |n, l, eps| SchedulePoint { n, l, u: l, eps };
    assert!(Schedule::new(vec![]).is_err());
    assert!(Schedule::new(vec![p(3, 4.0, 0.0), p(2, 4.0, 0.0)]).is_err());
    assert!(Schedule::new(vec![p(2, 4.0, 0.0), p(3, 3.0, 0.0)]).is_err());
    assert!(Schedule::new(vec![p(2, 4.0, 0.1), p(3, 4.0, 0.2)]).is_err());
    assert!(Schedule::new(vec![p(2, -1.0, 0.0)]).is_err());
    let s = Schedule::new(vec![p(2, 4.0, 0.2), p(3, 5.0, 0.1)]).unwrap();
    let json = serde_json::to_string(&s).unwrap();
    assert_eq!(serde_json::from_str::<Schedule>(&json).unwrap(), s);
    assert!(serde_json::from_str::<Schedule>("[]").is_err());
}

#[test]
fn correlated_pair_trace_converges() {
    let m = MarkovModel {
        source: Density2D::bivariate_normal(0.5).unwrap(),
        u: LinearChannel::constant(0.0),
        v: LinearChannel::constant(0.0),
    };
    let oracle = -0.5 * (1.0 - 0.25f64).log2();
    let s = Schedule::refine(1, 5, 6.0, 6.0).unwrap();
    let t = mi_trace(&m, MiTag::XY, &s, oracle, 5e-3).unwrap();
    assert!(t.passes(), "{:?}", t.values);
    assert!(t.errors()[0] > t.final_error());
}

#[test]
fn independent_sources_trace_zero() {
    let m = noisy(0.0);
    let s = Schedule::refine(1, 4, 5.0, 5.0).unwrap();
    for tag in [MiTag::XY, MiTag::UV] {
        let t = mi_trace(&m, tag, &s, 0.0, 1e-10).unwrap();
        assert!(t.values.iter().all(|v| v.abs() <= 1e-10), "{tag:?} {:?}", t.values);
    }
}

#[test]
fn sum_tags_approach_gaussian_oracle() {
    let rho = 0.8;
    let cov = sum_cov(rho);
    let m = noisy(rho);
    let s = Schedule::refine(2, 5, 7.0, 7.0).unwrap();
    let cases = [
        (MiTag::SumU, gauss_mi(&cov, &[4], &[2])),
        (MiTag::SumV, gauss_mi(&cov, &[4], &[3])),
        (MiTag::XU, gauss_mi(&cov, &[0], &[2])),
        (MiTag::YV, gauss_mi(&cov, &[1], &[3])),
        (MiTag::UV, gauss_mi(&cov, &[2], &[3])),
        (MiTag::Cor10, gauss_mi(&cov, &[4, 1], &[2])),
    ];
    for (tag, oracle) in cases {
        let t = mi_trace(&m, tag, &s, oracle, 1e-2).unwrap();
        assert!(t.passes(), "{tag:?}: {:?} vs {oracle}", t.values);
    }
}

#[test]
fn corollary10_reduces_without_side_information() {
    // V = noise only, so Y is independent of (U, V).
    let m = MarkovModel {
        v: LinearChannel::additive(0.0, 1.0).unwrap(),
        ..noisy(0.0)
    };
    let s = Schedule::refine(3, 3, 5.0, 5.0).unwrap();
    let a = check_corollary10(&m, &s, 0.5, 1.0).unwrap();
    let b = mi_trace(&m, MiTag::SumU, &s, 0.5, 1.0).unwrap();
    assert!((a.final_value() - b.final_value()).abs() < 1e-12);

    let zero = MarkovModel {
        source: Density2D::bivariate_normal(0.3).unwrap(),
        u: LinearChannel::constant(0.0),
        v: LinearChannel::constant(0.0),
    };
    let t = check_corollary10(&zero, &s, 0.0, 1e-12).unwrap();
    assert!(t.final_value().abs() < 1e-12);
}

#[test]
fn smoothing_matches_trapezoid_entropy() {
    // h(U + N) - h(U) = ε / (2 ln 2) for U ~ U[-1, 1], N ~ U[-ε, ε].
    let d = Density1D::uniform(-1.0, 1.0).unwrap();
    let eps = [0.5, 0.25, 0.1];
    let t = check_smoothing(&d, &eps, 9, 0.05).unwrap();
    for (v, e) in t.values.iter().zip(eps) {
        let exact = e / (2.0 * std::f64::consts::LN_2);
        assert!(*v <= exact + 1e-9 && exact - v < 0.01, "eps {e}: {v} vs {exact}");
    }
    assert!(t.nonincreasing());
    // The ε = 0.1 value is 0.07, above the 0.05 bound.
    assert!(!t.passes());

    let tri = Density1D::triangular(-1.0, 0.0, 1.0).unwrap();
    let t = check_smoothing(&tri, &[0.5, 0.05], 7, 0.05).unwrap();
    assert!(t.values[1] <= t.values[0] + MONOTONE_SLACK);
    assert!(t.passes());
}

#[test]
fn smoothing_rejects_coarse_grid_and_unbounded_support() {
    let d = Density1D::uniform(-1.0, 1.0).unwrap();
    assert!(check_smoothing(&d, &[0.1], 3, 0.05).is_err());
    assert!(check_smoothing(&Density1D::standard_normal(), &[0.5], 6, 0.05).is_err());
}

#[test]
fn forced_chain_copies_give_equality() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = random_mc_instance(&mut rng, [1, 3, 2, 3, 1]).unwrap();
    // A = B and E = D: duplicate the B and D axes.
    let p = base
        .with_function(&["B"], "A2", |v| v[0])
        .unwrap()
        .with_function(&["D"], "E2", |v| v[0])
        .unwrap();
    let names = ["A2", "B", "C", "D", "E2"];
    let p = marginal(&p, &RandomVarGroup::new(&names).unwrap()).unwrap();
    let r = check_mc_forced1(&p, names).unwrap();
    assert!(r.lhs.abs() < 1e-12 && r.rhs < 1e-20 && r.holds, "{r:?}");
}

#[test]
fn forced_chain_holds_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut strict = 0;
    for k in 0..200 {
        let sizes = [2 + k % 2, 2, 2 + (k / 2) % 2, 2, 2 + (k / 4) % 2];
        let p = random_mc_instance(&mut rng, sizes).unwrap();
        let r = check_mc_forced1(&p, ["A", "B", "C", "D", "E"]).unwrap();
        assert!(r.holds, "{r:?}");
        if r.lhs > 0.0 {
            strict += 1;
        }
    }
    assert!(strict > 150);
}

#[test]
fn forced_chain_rejects_broken_factorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = random_mc_instance(&mut rng, [2, 2, 2, 2, 2]).unwrap();
    let mut probs = p.probs().to_vec();
    probs[0] += 0.05;
    let q = JointPmf::normalized(p.axes().to_vec(), probs).unwrap();
    assert!(matches!(
        check_mc_forced1(&q, ["A", "B", "C", "D", "E"]),
        Err(Error::MarkovViolation(_))
    ));
}

#[test]
fn clipped_tv_identity() {
    let d = Density2D::bivariate_normal(0.0).unwrap();
    let w = ClipSpec::symmetric(1.0, ClipMode::Saturate).unwrap();
    let r = check_clipped_tv(&d, &w, &w, 10).unwrap();
    let inside = 1.0 - 2.0 * crate::numeric::norm_cdf(-1.0);
    let expect = 2.0 * (1.0 - inside * inside);
    assert!((r.formula - expect).abs() < 1e-9);
    assert!((r.tv - expect).abs() < 2e-3, "{r:?}");
    assert!(r.identity_err < 2e-3);

    let wide = ClipSpec::symmetric(8.0, ClipMode::Saturate).unwrap();
    let r = check_clipped_tv(&d, &wide, &wide, 3).unwrap();
    assert!(r.tv < 1e-12 && r.formula < 1e-12);

    let tiny = ClipSpec::symmetric(1.0 / 64.0, ClipMode::Saturate).unwrap();
    let r = check_clipped_tv(&d, &tiny, &tiny, 8).unwrap();
    assert!(r.tv > 1.9 && r.formula > 1.9, "{r:?}");
}
