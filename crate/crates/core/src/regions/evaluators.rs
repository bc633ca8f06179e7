use std::collections::BTreeMap;

use super::model::{LabeledModel, MARKOV_TOL};
use super::system::{HalfspaceSystem, Sense};
use crate::error::{Error, Result};
use crate::prob::union;

/// A single rate together with the expected cost or distortion, when supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct RateOutcome {
    pub rate: f64,
    pub functional: Option<f64>,
}

/// A region with the expected values of whatever functionals the model carries.
#[derive(Debug, Clone)]
pub struct RegionOutcome {
    pub system: HalfspaceSystem,
    pub functionals: BTreeMap<String, f64>,
}

impl RegionOutcome {
    fn new(m: &LabeledModel<'_>, system: HalfspaceSystem, names: &[&str]) -> Result<Self> {
        let mut functionals = BTreeMap::new();
        for n in names {
            if let Some(v) = m.evaluate(n)? {
                functionals.insert(n.to_string(), v);
            }
        }
        Ok(Self { system, functionals })
    }
}

fn two_rate() -> HalfspaceSystem {
    HalfspaceSystem::new(&["R1", "R2"]).expect("distinct names")
}

/// Wyner–Ziv rate `I(U;X) - I(U;Y)` with distortion functional `"distortion"`.
///
/// Roles: `X`, `Y`, `U`.
pub fn wz_rate(m: &LabeledModel<'_>) -> Result<RateOutcome> {
    let (x, y, u) = (m.get("X")?, m.get("Y")?, m.get("U")?);
    m.require_markov(&u, &y, &x, "Y - X - U")?;
    let s = m.source();
    let rate = (s.mi(&u, &x)? - s.mi(&u, &y)?).max(0.0);
    Ok(RateOutcome {
        rate,
        functional: m.evaluate("distortion")?,
    })
}

type Groups<'m> = Vec<&'m str>;

fn gp_check<'m>(m: &'m LabeledModel<'_>) -> Result<(Groups<'m>, Groups<'m>, Groups<'m>, Groups<'m>)> {
    let (u, s, x, y) = (m.get("U")?, m.get("S")?, m.get("X")?, m.get("Y")?);
    m.require_markov(&u, &y, &union(&[&x, &s]), "U - (X,S) - Y")?;
    let h = m.source().cond_entropy(&x, &union(&[&u, &s]))?;
    if h > MARKOV_TOL {
        return Err(Error::MarkovViolation(format!("X is not a function of (U,S): H(X|U,S) = {h:.3e}")));
    }
    Ok((u, s, x, y))
}

/// Gelfand–Pinsker rate `I(U;Y) - I(U;S)` with cost functional `"cost"`.
///
/// Roles: `U`, `S`, `X`, `Y`. `X` must be a deterministic function of `(U,S)`.
pub fn gp_rate(m: &LabeledModel<'_>) -> Result<RateOutcome> {
    let (u, s, _, y) = gp_check(m)?;
    let src = m.source();
    let rate = (src.mi(&u, &y)? - src.mi(&u, &s)?).max(0.0);
    Ok(RateOutcome {
        rate,
        functional: m.evaluate("cost")?,
    })
}

/// The alternative functional `I(U;X) - I(U;Y)` of the theorem statement.
pub fn gp_rate_statement(m: &LabeledModel<'_>) -> Result<RateOutcome> {
    let (u, _, x, y) = gp_check(m)?;
    let src = m.source();
    let rate = (src.mi(&u, &x)? - src.mi(&u, &y)?).max(0.0);
    Ok(RateOutcome {
        rate,
        functional: m.evaluate("cost")?,
    })
}

/// Superposition region of the degraded broadcast channel.
///
/// Roles: `X`, `Y`, `Z`, `U`; functional `"cost"`.
pub fn dbc_region(m: &LabeledModel<'_>) -> Result<RegionOutcome> {
    let (x, y, z, u) = (m.get("X")?, m.get("Y")?, m.get("Z")?, m.get("U")?);
    m.require_markov(&z, &union(&[&x, &u]), &y, "X - Y - Z")?;
    m.require_markov(&u, &union(&[&y, &z]), &x, "U - X - (Y,Z)")?;
    let s = m.source();
    let mut h = two_rate();
    h.add(&[("R1", 1.0)], Sense::Le, s.cmi(&x, &y, &u)?, "R1")?;
    h.add(&[("R2", 1.0)], Sense::Le, s.mi(&u, &z)?, "R2")?;
    RegionOutcome::new(m, h, &["cost"])
}

/// Berger–Tung region. Roles: `X`, `Y`, `U`, `V`; functionals `"d1"`, `"d2"`.
pub fn berger_tung_region(m: &LabeledModel<'_>) -> Result<RegionOutcome> {
    let (x, y, u, v) = (m.get("X")?, m.get("Y")?, m.get("U")?, m.get("V")?);
    m.require_markov(&u, &union(&[&y, &v]), &x, "U - X - (Y,V)")?;
    m.require_markov(&v, &union(&[&x, &u]), &y, "(X,U) - Y - V")?;
    let s = m.source();
    let mut h = two_rate();
    h.add(&[("R1", 1.0)], Sense::Ge, s.cmi(&x, &u, &v)?, "R1")?;
    h.add(&[("R2", 1.0)], Sense::Ge, s.cmi(&y, &v, &u)?, "R2")?;
    h.add(
        &[("R1", 1.0), ("R2", 1.0)],
        Sense::Ge,
        s.mi(&union(&[&x, &y]), &union(&[&u, &v]))?,
        "R1+R2",
    )?;
    RegionOutcome::new(m, h, &["d1", "d2"])
}

/// Two-help-one region with a structured layer `W = U + V`.
///
/// Roles: `X`, `Y`, `U`, `V`, `W` (the sum axis); optional `U1`, `V1`, `Q`.
/// Functional `"distortion"`.
pub fn two_help_one_region(m: &LabeledModel<'_>) -> Result<RegionOutcome> {
    let (x, y, u, v, w) = (m.get("X")?, m.get("Y")?, m.get("U")?, m.get("V")?, m.get("W")?);
    let (u1, v1, q) = (m.get_or_empty("U1"), m.get_or_empty("V1"), m.get_or_empty("Q"));
    m.require_sum(&w, &[&u, &v])?;
    let uu = union(&[&u, &u1]);
    let vv = union(&[&v, &v1]);
    let xq = union(&[&x, &q]);
    let yq = union(&[&y, &q]);
    m.require_markov(&uu, &union(&[&y, &vv]), &xq, "(U,U1) - (X,Q) - (Y,Q)")?;
    m.require_markov(&vv, &union(&[&x, &uu]), &yq, "(X,Q) - (Y,Q) - (V,V1)")?;
    if !q.is_empty() {
        m.require_markov(&q, &union(&[&x, &y]), &[], "Q independent of (X,Y)")?;
    }
    let s = m.source();
    let qu1v1 = union(&[&q, &u1, &v1]);
    let iwv = s.cmi(&w, &v, &qu1v1)?;
    let iwu = s.cmi(&w, &u, &qu1v1)?;
    let iuv = s.cmi(&u, &v, &qu1v1)?;
    let r1 = s.cmi(&x, &uu, &union(&[&q, &v1]))? + iwv - iuv;
    let r2 = s.cmi(&y, &vv, &union(&[&q, &u1]))? + iwu - iuv;
    let sum = s.cmi(&union(&[&x, &y]), &union(&[&u, &v, &u1, &v1]), &q)? + iwv + iwu - iuv;
    let mut h = two_rate();
    h.add(&[("R1", 1.0)], Sense::Ge, r1, "R1")?;
    h.add(&[("R2", 1.0)], Sense::Ge, r2, "R2")?;
    h.add(&[("R1", 1.0), ("R2", 1.0)], Sense::Ge, sum, "R1+R2")?;
    RegionOutcome::new(m, h, &["distortion"])
}

/// Computation-aided MAC region.
///
/// Roles: `X1`, `X2`, `Y`, `S` (the sum axis `X1 + X2`); optional `U1`, `U2`, `Q`.
pub fn mac_compute_region(m: &LabeledModel<'_>) -> Result<RegionOutcome> {
    let (x1, x2, y, sum) = (m.get("X1")?, m.get("X2")?, m.get("Y")?, m.get("S")?);
    let (u1, u2, q) = (m.get_or_empty("U1"), m.get_or_empty("U2"), m.get_or_empty("Q"));
    m.require_sum(&sum, &[&x1, &x2])?;
    m.require_markov(&union(&[&u1, &x1]), &union(&[&u2, &x2]), &q, "(U1,X1) - Q - (U2,X2)")?;
    let s = m.source();
    let uuq = union(&[&u1, &u2, &q]);
    let iu1 = s.cmi(&u1, &y, &union(&[&u2, &q]))?;
    let iu2 = s.cmi(&u2, &y, &union(&[&u1, &q]))?;
    let iuu = s.cmi(&union(&[&u1, &u2]), &y, &q)?;
    let isy = s.cmi(&sum, &y, &uuq)?;
    let is_x1 = s.cmi(&sum, &x1, &uuq)?;
    let is_x2 = s.cmi(&sum, &x2, &uuq)?;
    // Negative upper bounds are floored at 0: the origin is always achievable.
    let mut h = two_rate();
    h.add(&[("R1", 1.0)], Sense::Le, (iu1 + isy - is_x2).max(0.0), "R1")?;
    h.add(&[("R2", 1.0)], Sense::Le, (iu2 + isy - is_x1).max(0.0), "R2")?;
    h.add(
        &[("R1", 1.0), ("R2", 1.0)],
        Sense::Le,
        (iuu + 2.0 * isy - is_x1 - is_x2).max(0.0),
        "R1+R2",
    )?;
    RegionOutcome::new(m, h, &["cost"])
}

/// Three-to-one interference channel region with coset codes.
///
/// Roles: `X1`, `X2`, `X3`, `Y1`, `Y2`, `Y3`, `U2`, `U3`, `S` (the sum axis
/// `U2 + U3`); optional `Q`.
pub fn ic_3to1_region(m: &LabeledModel<'_>) -> Result<RegionOutcome> {
    let x1 = m.get("X1")?;
    let xs = [m.get("X2")?, m.get("X3")?];
    let y1 = m.get("Y1")?;
    let ys = [m.get("Y2")?, m.get("Y3")?];
    let us = [m.get("U2")?, m.get("U3")?];
    let sum = m.get("S")?;
    let q = m.get_or_empty("Q");
    m.require_sum(&sum, &[&us[0], &us[1]])?;
    let src = m.source();
    let ux: Vec<Vec<&str>> = (0..2).map(|j| union(&[&us[j], &xs[j]])).collect();
    let parts: [&[&str]; 3] = [&x1, &ux[0], &ux[1]];
    let joint = union(&parts);
    let mut gap = -src.cond_entropy(&joint, &q)?;
    for p in parts {
        gap += src.cond_entropy(p, &q)?;
    }
    if gap > MARKOV_TOL {
        return Err(Error::MarkovViolation(format!(
            "inputs are not conditionally independent given Q (gap {gap:.3e})"
        )));
    }
    let names = ["R2", "R3"];
    let mut h = HalfspaceSystem::new(&["R1", "R2", "R3"])?;
    h.add(&[("R1", 1.0)], Sense::Le, src.cmi(&x1, &y1, &union(&[&sum, &q]))?, "R1")?;
    let x1s = union(&[&x1, &sum]);
    let i_x1s = src.cmi(&x1s, &y1, &q)?;
    let i_su: Vec<f64> = (0..2).map(|j| src.cmi(&sum, &us[j], &q)).collect::<Result<_>>()?;
    for j in 0..2 {
        h.add(&[("R1", 1.0)], Sense::Le, (i_x1s - i_su[j]).max(0.0), &format!("R1|{}", names[j]))?;
    }
    for j in 0..2 {
        h.add(&[(names[j], 1.0)], Sense::Le, src.cmi(&ux[j], &ys[j], &q)?, names[j])?;
    }
    for j in 0..2 {
        let jbar = 1 - j;
        let b = src.cmi(&xs[j], &ys[j], &union(&[&q, &us[j]]))? + i_x1s - i_su[jbar];
        h.add(&[("R1", 1.0), (names[j], 1.0)], Sense::Le, b.max(0.0), &format!("R1+{}", names[j]))?;
    }
    RegionOutcome::new(m, h, &["cost"])
}
