use super::*;

fn ax(name: &str, pts: &[f64]) -> Axis {
    Axis::new(name, pts.to_vec()).unwrap()
}

fn two_by_two(p: [f64; 4]) -> JointPmf {
    JointPmf::new(vec![ax("A", &[0.0, 1.0]), ax("B", &[0.0, 1.0])], p.to_vec()).unwrap()
}

fn hb(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

#[test]
fn axis_validation() {
    assert!(Axis::new("x", vec![]).is_err());
    assert!(Axis::new("x", vec![0.0, 0.0]).is_err());
    assert!(Axis::new("x", vec![1.0, f64::NAN]).is_err());
    let g = Axis::grid("x", 2, -2, 2).unwrap();
    assert_eq!(g.points(), &[-0.5, -0.25, 0.0, 0.25, 0.5]);
    assert_eq!(g.index_of(-0.0), Some(2));
}

#[test]
fn pmf_validation() {
    assert!(JointPmf::new(vec![ax("a", &[0.0, 1.0])], vec![0.5, 0.6]).is_err());
    assert!(JointPmf::new(vec![ax("a", &[0.0, 1.0])], vec![1.5, -0.5]).is_err());
    assert!(JointPmf::new(vec![ax("a", &[0.0]), ax("a", &[1.0])], vec![1.0]).is_err());
    assert!(JointPmf::new(vec![ax("a", &[0.0, 1.0])], vec![1.0]).is_err());
}

#[test]
fn marginal_examples() {
    let u = two_by_two([0.25; 4]);
    let m = marginal(&u, &RandomVarGroup::one("A")).unwrap();
    assert_eq!(m.probs(), &[0.5, 0.5]);
    let d = two_by_two([0.5, 0.0, 0.0, 0.5]);
    assert_eq!(marginal(&d, &RandomVarGroup::one("B")).unwrap().probs(), &[0.5, 0.5]);
    let a = JointPmf::new(vec![ax("a", &[0.0, 1.0])], vec![0.5, 0.5]).unwrap();
    let b = JointPmf::new(vec![ax("b", &[0.0, 1.0])], vec![0.3, 0.7]).unwrap();
    let c = JointPmf::new(vec![ax("c", &[0.0])], vec![1.0]).unwrap();
    let p = JointPmf::product(&[&a, &b, &c]).unwrap();
    let m = marginal(&p, &RandomVarGroup::one("b")).unwrap();
    assert!((m.probs()[0] - 0.3).abs() < 1e-15 && (m.probs()[1] - 0.7).abs() < 1e-15);
    assert!(matches!(
        marginal(&p, &RandomVarGroup::one("z")),
        Err(Error::UnknownAxis(_))
    ));
}

#[test]
fn marginal_order_follows_request() {
    let p = JointPmf::new(
        vec![ax("a", &[0.0, 1.0]), ax("b", &[0.0, 1.0, 2.0])],
        vec![0.1, 0.2, 0.3, 0.15, 0.05, 0.2],
    )
    .unwrap();
    let m = marginal(&p, &RandomVarGroup::new(&["b", "a"]).unwrap()).unwrap();
    assert_eq!(m.axes()[0].name(), "b");
    let expect = [0.1, 0.15, 0.2, 0.05, 0.3, 0.2];
    for (x, y) in m.probs().iter().zip(expect) {
        assert!((x - y).abs() < 1e-15);
    }
}

#[test]
fn entropy_examples() {
    let u = JointPmf::new(vec![ax("a", &[0.0, 1.0, 2.0, 3.0])], vec![0.25; 4]).unwrap();
    assert!((entropy(&u, &RandomVarGroup::one("a")).unwrap() - 2.0).abs() < 1e-15);
    let pm = JointPmf::point_mass(ax("a", &[0.0, 1.0]), 1).unwrap();
    assert_eq!(entropy(&pm, &RandomVarGroup::one("a")).unwrap(), 0.0);
    let q = JointPmf::new(vec![ax("a", &[0.0, 1.0])], vec![0.25, 0.75]).unwrap();
    assert!((entropy(&q, &RandomVarGroup::one("a")).unwrap() - 0.811_278_124_459_132_8).abs() < 1e-12);
}

#[test]
fn mi_examples() {
    let a = RandomVarGroup::one("A");
    let b = RandomVarGroup::one("B");
    let ind = two_by_two([0.06, 0.14, 0.24, 0.56]);
    assert!(mutual_information(&ind, &a, &b).unwrap().abs() < 1e-12);
    let diag = two_by_two([0.5, 0.0, 0.0, 0.5]);
    assert!((mutual_information(&diag, &a, &b).unwrap() - 1.0).abs() < 1e-15);
    let dsbs = two_by_two([0.4, 0.1, 0.1, 0.4]);
    let v = mutual_information(&dsbs, &a, &b).unwrap();
    assert!((v - (1.0 - hb(0.2))).abs() < 1e-12);
    assert!((v - 0.2781).abs() < 1e-4);
    assert!(matches!(
        mutual_information(&dsbs, &a, &a),
        Err(Error::OverlappingGroups(_))
    ));
}

#[test]
fn cmi_examples() {
    let x = JointPmf::new(vec![ax("X", &[0.0, 1.0])], vec![0.5, 0.5]).unwrap();
    let p = x.extend(&["X"], ax("Y", &[0.0, 1.0]), |v| {
        if v[0] == 0.0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }
    })
    .unwrap()
    .extend(&["X"], ax("U", &[0.0, 1.0]), |v| {
        if v[0] == 0.0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }
    })
    .unwrap();
    let g = |n: &str| RandomVarGroup::one(n);
    assert!(conditional_mi(&p, &g("X"), &g("Y"), &g("U")).unwrap().abs() < 1e-15);
    let c = JointPmf::product(&[&two_by_two([0.4, 0.1, 0.1, 0.4]), &JointPmf::point_mass(ax("C", &[0.0]), 0).unwrap()]).unwrap();
    let a = conditional_mi(&c, &g("A"), &g("B"), &g("C")).unwrap();
    let m = mutual_information(&c, &g("A"), &g("B")).unwrap();
    assert!((a - m).abs() < 1e-15);
}

#[test]
fn kl_and_l1_examples() {
    let a = ax("a", &[0.0, 1.0]);
    let p = JointPmf::new(vec![a.clone()], vec![1.0, 0.0]).unwrap();
    let q = JointPmf::new(vec![a.clone()], vec![0.5, 0.5]).unwrap();
    assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    assert!((kl_divergence(&p, &q).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(kl_divergence(&q, &p).unwrap(), f64::INFINITY);
    assert_eq!(l1_distance(&p, &q).unwrap(), 1.0);
    assert_eq!(p.tv_sup(&q).unwrap(), 0.5);
    let r = JointPmf::new(vec![a], vec![0.0, 1.0]).unwrap();
    assert_eq!(l1_distance(&p, &r).unwrap(), 2.0);
    let other = JointPmf::new(vec![ax("b", &[0.0, 1.0])], vec![0.5, 0.5]).unwrap();
    assert!(matches!(l1_distance(&p, &other), Err(Error::AxisMismatch(_))));
}

#[test]
fn pushforward_sum() {
    let u = JointPmf::new(vec![ax("U", &[0.0, 0.5])], vec![0.5, 0.5]).unwrap();
    let v = JointPmf::new(vec![ax("V", &[0.0, 0.5])], vec![0.5, 0.5]).unwrap();
    let uv = JointPmf::product(&[&u, &v]).unwrap();
    let g = RandomVarGroup::new(&["U", "V"]).unwrap();
    let out = ax("S", &[0.0, 0.5, 1.0]);
    let p = pushforward(&uv, &g, |x| x[0] + x[1], out).unwrap();
    let s = marginal(&p, &RandomVarGroup::one("S")).unwrap();
    assert_eq!(s.probs(), &[0.25, 0.5, 0.25]);
    let i = mutual_information(&p, &RandomVarGroup::one("S"), &RandomVarGroup::one("U")).unwrap();
    assert!((i - 0.5).abs() < 1e-15);
    let bad = pushforward(&uv, &g, |x| x[0] + x[1] + 0.1, ax("S", &[0.0, 0.5, 1.0]));
    assert!(matches!(bad, Err(Error::GridMismatch { .. })));
}

#[test]
fn pushforward_identity_and_constant() {
    let dsbs = two_by_two([0.4, 0.1, 0.1, 0.4]);
    let g = RandomVarGroup::one("A");
    let c = pushforward(&dsbs, &g, |x| x[0], ax("C", &[0.0, 1.0])).unwrap();
    let h = entropy(&c, &g).unwrap();
    let i = mutual_information(&c, &RandomVarGroup::one("C"), &g).unwrap();
    assert!((h - i).abs() < 1e-15);
    let k = pushforward(&dsbs, &g, |_| 7.0, ax("K", &[7.0])).unwrap();
    assert_eq!(mutual_information(&k, &RandomVarGroup::one("K"), &RandomVarGroup::one("B")).unwrap(), 0.0);
}

#[test]
fn expectation_examples() {
    let x = JointPmf::new(vec![ax("X", &[-1.0, 1.0])], vec![0.5, 0.5]).unwrap();
    let g = RandomVarGroup::one("X");
    assert_eq!(expectation(&x, &|_| 1.0, &g).unwrap(), 1.0);
    assert_eq!(expectation(&x, &|v| v[0] * v[0], &g).unwrap(), 1.0);
    let d = two_by_two([0.5, 0.0, 0.0, 0.5]);
    let e = expectation(&d, &|v| (v[0] - v[1]).powi(2), &RandomVarGroup::new(&["A", "B"]).unwrap()).unwrap();
    assert_eq!(e, 0.0);
}

#[test]
fn json_round_trip_is_bit_exact() {
    let a = Axis::new("x", vec![-0.1, 1.0 / 3.0, 2.0f64.sqrt()]).unwrap();
    let p = JointPmf::normalized(vec![a], vec![1.0, std::f64::consts::PI, 0.7]).unwrap();
    let s = serde_json::to_string(&p).unwrap();
    let q: JointPmf = serde_json::from_str(&s).unwrap();
    assert_eq!(p, q);
    for (x, y) in p.probs().iter().zip(q.probs()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
    assert!(serde_json::from_str::<JointPmf>(r#"{"axes":[{"name":"x","points":[0,1]}],"probs":[0.5,0.6]}"#).is_err());
}

#[test]
fn augmented_matches_materialized() {
    let u = JointPmf::new(vec![ax("U", &[0.0, 0.5, 1.0])], vec![0.2, 0.5, 0.3]).unwrap();
    let base = u
        .extend(&["U"], ax("V", &[0.0, 0.5]), |x| vec![0.3 + 0.4 * x[0], 0.7 - 0.4 * x[0]])
        .unwrap()
        .extend(&["V"], ax("X", &[-1.0, 1.0]), |x| vec![0.6 - x[0], 0.4 + x[0]])
        .unwrap();
    let aug = Augmented::new(base)
        .with_derived("W", &["U", "V"], |x| x[0] + x[1])
        .unwrap();
    let dense = aug.materialize().unwrap();
    let sets: [&[&str]; 7] = [&["W"], &["W", "X"], &["W", "U"], &["W", "V", "U"], &["X", "W", "V"], &["U"], &[]];
    for s in sets {
        let a = aug.entropy_of(s).unwrap();
        let b = dense.entropy_of(s).unwrap();
        assert!((a - b).abs() < 1e-13, "{s:?}: {a} vs {b}");
    }
    let e1 = aug.expect(&["X", "W"], &|v| v[0] * v[1]).unwrap();
    let e2 = dense.expect(&["X", "W"], &|v| v[0] * v[1]).unwrap();
    assert!((e1 - e2).abs() < 1e-15);
}
