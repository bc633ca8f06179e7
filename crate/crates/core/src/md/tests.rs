use super::*;
use crate::gaussian::{ex1_model, ex1_r3_bound, ex2_model, Ex1Params, GaussianSpec};
use crate::prob::{Axis, JointPmf};

fn fam(s: &str) -> Family {
    s.parse().unwrap()
}

fn fams(list: &[&str]) -> Vec<Family> {
    let mut v: Vec<Family> = list.iter().map(|s| fam(s)).collect();
    v.sort();
    v
}

fn sorted(mut v: Vec<Family>) -> Vec<Family> {
    v.sort();
    v
}

fn lg(x: f64) -> f64 {
    x.log2()
}

#[test]
fn sperner_counts_and_antichains() {
    let counts: Vec<usize> = (1..=3).map(|l| enumerate_sperner(l).unwrap().len()).collect();
    // Antichains of nonempty subsets of [3] number 20 with the empty family
    // and {∅}, so 18 without them.
    assert_eq!(counts, vec![1, 4, 18]);
    for l in 1..=3 {
        for f in enumerate_sperner(l).unwrap() {
            let m = f.members();
            for (i, &a) in m.iter().enumerate() {
                for &b in &m[i + 1..] {
                    assert!(a & !b != 0 && b & !a != 0, "{f}");
                }
            }
        }
    }
    assert_eq!(enumerate_sperner(1).unwrap(), vec![fam("{1}")]);
    assert!(enumerate_sperner(0).is_err());
    assert!(enumerate_sperner(4).is_err());
}

#[test]
fn family_parse_and_print() {
    let f = fam("{2,3}, {1}");
    assert_eq!(f.to_string(), "{1},{2,3}");
    assert_eq!(f.span(), 0b111);
    assert!(f.decoded_by(0b001));
    assert!(!f.decoded_by(0b010));
    assert!(f.decoded_by(0b110));
    assert!("{1},{1,2}".parse::<Family>().is_err());
    assert!("{}".parse::<Family>().is_err());
    assert!("1,2".parse::<Family>().is_err());
    let json = serde_json::to_string(&f).unwrap();
    assert_eq!(json, "\"{1},{2,3}\"");
    assert_eq!(serde_json::from_str::<Family>(&json).unwrap(), f);
}

#[test]
fn decoder_lists_match_printed() {
    let (m1, _) = decoded_sets(0b001, 3).unwrap();
    assert_eq!(
        sorted(m1),
        fams(&["{1},{2},{3}", "{1},{2}", "{1},{3}", "{1},{2,3}", "{1}"])
    );
    let (m23, mt23) = decoded_sets(0b110, 3).unwrap();
    assert_eq!(
        sorted(m23),
        fams(&[
            "{1},{2},{3}",
            "{1,2},{1,3},{2,3}",
            "{1},{2}",
            "{1},{3}",
            "{2},{3}",
            "{1},{2,3}",
            "{2},{1,3}",
            "{3},{1,2}",
            "{1,2},{2,3}",
            "{1,3},{2,3}",
            "{2}",
            "{3}",
            "{2,3}",
        ])
    );
    assert_eq!(
        sorted(mt23),
        fams(&["{1},{2},{3}", "{1},{2}", "{1},{3}", "{2},{3}", "{2},{1,3}", "{3},{1,2}", "{2}", "{3}"])
    );
    assert_eq!(decoded_sets(0b1, 1).unwrap(), (vec![fam("{1}")], vec![]));
    assert!(decoded_sets(0, 3).is_err());
    assert!(decoded_sets(0b1000, 3).is_err());
}

#[test]
fn decoded_sets_are_monotone() {
    for n in subsets(3) {
        for n2 in subsets(3) {
            if n & !n2 == 0 {
                let (a, at) = decoded_sets(n, 3).unwrap();
                let (b, _) = decoded_sets(n2, 3).unwrap();
                assert!(a.iter().all(|f| b.contains(f)));
                assert!(at.iter().all(|f| a.contains(f)));
            }
        }
    }
}

fn coin(name: &str) -> JointPmf {
    JointPmf::new(vec![Axis::new(name, vec![0.0, 1.0]).unwrap()], vec![0.5, 0.5]).unwrap()
}

#[test]
fn ibar_examples() {
    let p = JointPmf::product(&[&coin("A"), &coin("B"), &coin("C")]).unwrap();
    assert!(ibar(&p, &[&["A"], &["B"], &["C"]]).unwrap().abs() < 1e-12);
    let q = coin("A").with_function(&["A"], "B", |v| v[0]).unwrap();
    assert!((ibar(&q, &[&["A"], &["B"]]).unwrap() - 1.0).abs() < 1e-12);
    let r = q.with_function(&["B"], "C", |v| v[0]).unwrap();
    assert!((ibar(&r, &[&["A"], &["B"], &["C"]]).unwrap() - 2.0).abs() < 1e-12);
    assert!((ibar(&r, &[&["C"], &["A"], &["B"]]).unwrap() - 2.0).abs() < 1e-12);
    assert!(ibar(&r, &[&["A"], &["A", "B"]]).is_err());
}

/// `X` uniform on 4 points, `U` a noisy copy through a symmetric channel.
fn ptp() -> (JointPmf, f64) {
    let x = JointPmf::new(vec![Axis::new("X", vec![0.0, 1.0, 2.0, 3.0]).unwrap()], vec![0.25; 4]).unwrap();
    let p = x
        .extend(&["X"], Axis::new("U", vec![0.0, 1.0, 2.0, 3.0]).unwrap(), |v| {
            (0..4).map(|k| if k as f64 == v[0] { 0.7 } else { 0.1 }).collect()
        })
        .unwrap();
    let i = crate::prob::InfoSource::mi(&p, &["U"], &["X"]).unwrap();
    (p, i)
}

#[test]
fn point_to_point_reduces_to_rate_distortion() {
    let (p, i) = ptp();
    let m = MdModel::new(&p, 1, &["X"]).unwrap().codebook(fam("{1}"), &["U"]).unwrap();
    let sys = unstructured_constraints(&m).unwrap();
    assert!((sys.min_rate(1, &[]).unwrap() - i).abs() < 1e-9);
    assert!(sys.rate_feasible(&[i]).unwrap());
    assert!(!sys.rate_feasible(&[i - 0.01]).unwrap());
    assert!(structured_constraints(&m, 1, 1).is_err());
}

#[test]
fn independent_descriptions_decouple() {
    let (a, ia) = ptp();
    let b = JointPmf::new(vec![Axis::new("Y", vec![0.0, 1.0]).unwrap()], vec![0.5, 0.5])
        .unwrap()
        .extend(&["Y"], Axis::new("V", vec![0.0, 1.0]).unwrap(), |v| {
            if v[0] == 0.0 { vec![0.9, 0.1] } else { vec![0.2, 0.8] }
        })
        .unwrap();
    let ib = crate::prob::InfoSource::mi(&b, &["V"], &["Y"]).unwrap();
    let p = JointPmf::product(&[&a, &b]).unwrap();
    let m = MdModel::new(&p, 2, &["X", "Y"])
        .unwrap()
        .codebook(fam("{1}"), &["U"])
        .unwrap()
        .codebook(fam("{2}"), &["V"])
        .unwrap();
    let sys = unstructured_constraints(&m).unwrap();
    assert!((sys.min_rate(1, &[]).unwrap() - ia).abs() < 1e-9);
    assert!((sys.min_rate(2, &[]).unwrap() - ib).abs() < 1e-9);
    assert!(sys.rate_feasible(&[ia, ib]).unwrap());
    assert!(!sys.rate_feasible(&[ia, ib - 0.01]).unwrap());
}

/// Gaussian structured layer of the first example, built from the basis
/// `(X, Z, N1, N2)` with noise variance `P/(1-P)`.
fn ex1_gaussian(p: f64) -> GaussianSpec {
    let q = p / (1.0 - p);
    GaussianSpec::from_linear(
        &[1.0, 1.0, q, q],
        &[
            ("X", vec![1.0, 0.0, 0.0, 0.0]),
            ("Z", vec![0.0, 1.0, 0.0, 0.0]),
            ("V1", vec![1.0, 0.0, 1.0, 0.0]),
            ("V2", vec![0.0, 1.0, 0.0, 1.0]),
            ("W", vec![1.0, 1.0, 1.0, 1.0]),
        ],
    )
    .unwrap()
}

#[test]
fn ex1_structured_triple_on_gaussian_model() {
    for p in [0.25, 0.3, 0.45] {
        let g = ex1_gaussian(p);
        let t = sum_triple("V1", "V2", "W");
        let m = MdModel::new(&g, 3, &["X", "Z"]).unwrap().structured(t).unwrap();
        let sys = structured_constraints(&m, 1, 1).unwrap();
        let want = crate::gaussian::md_ex1_structured(p).unwrap();
        let r1 = sys.min_rate(1, &[]).unwrap();
        let r3 = sys.min_rate(3, &[(1, want[0]), (2, want[1])]).unwrap();
        assert!((r1 - want[0]).abs() < 1e-9, "{p}: {r1}");
        assert!((r3 - want[2]).abs() < 1e-9, "{p}: {r3}");
        assert!(sys.rate_feasible(&want).unwrap());
        assert!(!sys.rate_feasible(&[want[0], want[1], want[2] - 0.01]).unwrap());
    }
}

#[test]
fn ex1_extra_covering_row_is_slack() {
    let g = ex1_gaussian(0.25);
    let m = MdModel::new(&g, 3, &["X", "Z"]).unwrap().structured(sum_triple("V1", "V2", "W")).unwrap();
    let sys = structured_constraints(&m, 1, 1).unwrap();
    // I(W; XZ) - I(W; V1) = 1 - 1/2, below the plain covering bound of 1.
    let row = sys.system().bound_of("cover2[; W(1,1)]").unwrap();
    assert!((row - 0.5).abs() < 1e-9, "{row}");
    assert!((sys.system().bound_of("cover[out]").unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn ex2_gaussian_rates() {
    let p = 0.6;
    let g = ex2_model(p).unwrap();
    let m = MdModel::new(&g, 3, &["X"]).unwrap().structured(sum_triple("U", "V", "W")).unwrap();
    let sys = structured_constraints(&m, 1, 1).unwrap().with_equal_rates(1, 2).unwrap();
    let r1 = sys.min_rate(1, &[]).unwrap();
    // max(I(UV;X)/2, I(U;X) + I(U;V|X) - I(U+V;V|X)) = max(¼log 5, ½log(1/(4P-2)))
    let want = (0.25 * lg(1.0 / (2.0 * p - 1.0))).max(0.5 * lg(1.0 / (4.0 * p - 2.0)));
    assert!((r1 - want).abs() < 1e-9, "{r1} vs {want}");
    let r3 = sys.min_rate(3, &[(1, r1)]).unwrap();
    assert!((r3 - r1 - 0.5).abs() < 1e-9, "{r3}");
    // Above 5/8 the first term takes over.
    let g = ex2_model(0.65).unwrap();
    let m = MdModel::new(&g, 3, &["X"]).unwrap().structured(m.triple().unwrap().clone()).unwrap();
    let sys = structured_constraints(&m, 1, 1).unwrap().with_equal_rates(1, 2).unwrap();
    let r1 = sys.min_rate(1, &[]).unwrap();
    assert!((r1 - 0.25 * lg(1.0 / 0.3)).abs() < 1e-9, "{r1}");
}

#[test]
fn ex1_unstructured_matches_bound() {
    let params = Ex1Params {
        alpha: [0.6, 0.5, -0.2, 0.1, 0.3, -0.25, 0.4],
        theta: [1.5, 2.5],
    };
    let p = 0.3;
    let g = ex1_model(&params, p).unwrap();
    let m = MdModel::new(&g, 3, &["X", "Z"])
        .unwrap()
        .codebook(fam("{1},{3}"), &["U13"])
        .unwrap()
        .codebook(fam("{2},{3}"), &["U23"])
        .unwrap()
        .codebook(fam("{1}"), &["U1"])
        .unwrap()
        .codebook(fam("{2}"), &["U2"])
        .unwrap()
        .codebook(fam("{3}"), &["U3"])
        .unwrap();
    let sys = unstructured_constraints(&m).unwrap();
    let r = 0.5 * lg(1.0 / p);
    let r3 = sys.min_rate(3, &[(1, r), (2, r)]).unwrap();
    let bound = ex1_r3_bound(&g).unwrap();
    assert!((r3 - bound).abs() < 1e-6, "{r3} vs {bound}");
}

#[test]
fn structured_with_constant_layer_matches_unstructured() {
    let (a, _) = ptp();
    let b = coin("Y").extend(&["Y"], Axis::new("V", vec![0.0, 1.0]).unwrap(), |v| {
        if v[0] == 0.0 { vec![0.8, 0.2] } else { vec![0.3, 0.7] }
    });
    let p = JointPmf::product(&[&a, &b.unwrap()]).unwrap();
    let base = |p| {
        MdModel::new(p, 3, &["X", "Y"])
            .unwrap()
            .codebook(fam("{1}"), &["U"])
            .unwrap()
            .codebook(fam("{2},{3}"), &["V"])
            .unwrap()
    };
    let plain = unstructured_constraints(&base(&p)).unwrap();
    let q = p
        .with_function(&[], "Z1", |_| 0.0)
        .unwrap()
        .with_function(&[], "Z2", |_| 0.0)
        .unwrap()
        .with_function(&[], "ZW", |_| 0.0)
        .unwrap();
    let t = StructuredTriple {
        a_in: fam("{1}"),
        a_out: fam("{2}"),
        a_sum: fam("{3}"),
        v_in: "Z1".into(),
        v_out: "Z2".into(),
        w_sum: "ZW".into(),
        w_cover: vec![],
    };
    let s = structured_constraints(&base(&q).structured(t).unwrap(), 1, 1).unwrap();
    for which in 1..=3 {
        let a = plain.min_rate(which, &[]).unwrap();
        let b = s.min_rate(which, &[]).unwrap();
        assert!((a - b).abs() < 1e-9, "R{which}: {a} vs {b}");
    }
    let a = plain.min_rate(3, &[(1, 0.7), (2, 0.25)]).unwrap();
    let b = s.min_rate(3, &[(1, 0.7), (2, 0.25)]).unwrap();
    assert!((a - b).abs() < 1e-9);
}

#[test]
fn model_validation() {
    let (p, _) = ptp();
    assert!(MdModel::new(&p, 4, &["X"]).is_err());
    assert!(MdModel::new(&p, 1, &["Q"]).is_err());
    let m = MdModel::new(&p, 1, &["X"]).unwrap();
    assert!(m.codebook(fam("{2}"), &["U"]).is_err());
    let q = p.with_function(&["X", "U"], "S", |v| v[0] + 2.0 * v[1]).unwrap();
    let t = StructuredTriple {
        a_in: fam("{1}"),
        a_out: fam("{2}"),
        a_sum: fam("{3}"),
        v_in: "X".into(),
        v_out: "U".into(),
        w_sum: "S".into(),
        w_cover: vec![],
    };
    let m = MdModel::new(&q, 3, &["X"]).unwrap();
    assert!(matches!(m.structured(t.clone()), Err(crate::Error::AxisMismatch(_))));
    let same = StructuredTriple { a_out: fam("{1}"), ..t };
    assert!(MdModel::new(&q, 3, &["X"]).unwrap().structured(same).is_err());
}

#[test]
fn discretized_ex2_source_is_consistent() {
    let (src, t) = md_ex2_source(0.6, &ExampleGrid { n: 2, sigmas: 5.0 }).unwrap();
    let m = MdModel::new(&src, 3, &["X"]).unwrap().structured(t).unwrap();
    assert!(structured_constraints(&m, 1, 1).is_ok());
    assert!(structured_constraints(&m, 1, 2).is_err());
}
