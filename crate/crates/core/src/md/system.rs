use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{check_ell, format_subset, ibar, is_subset, subsets, Family, Subset};
use crate::error::{invalid, Error, Result};
use crate::prob::InfoSource;
use crate::regions::{Functional, HalfspaceSystem, Sense};

/// Tolerance for `W_sum = V_in + V_out` holding almost surely.
pub const SUM_TOL: f64 = 1e-9;
/// Beyond this many codebooks the covering rows (one per subset) are refused.
pub const MAX_CODEBOOKS: usize = 16;

/// An unstructured codebook `U_M` and the axes carrying it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub family: Family,
    pub axes: Vec<String>,
}

/// An axis equal to `alpha V_in + beta V_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WAxis {
    pub alpha: i64,
    pub beta: i64,
    pub axis: String,
}

/// Structured layer: `V_in`, `V_out` from a shared linear code and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredTriple {
    pub a_in: Family,
    pub a_out: Family,
    pub a_sum: Family,
    pub v_in: String,
    pub v_out: String,
    /// `V_in + V_out`, used by the packing rows.
    pub w_sum: String,
    /// Other combinations for the second covering row.
    #[serde(default)]
    pub w_cover: Vec<WAxis>,
}

/// Source axes, codebooks and the optional structured layer over one pmf.
pub struct MdModel<'a> {
    source: &'a dyn InfoSource,
    ell: u8,
    x: Vec<String>,
    codebooks: Vec<Codebook>,
    structured: Option<StructuredTriple>,
    distortions: Vec<(Subset, Functional)>,
    experimental: bool,
}

impl<'a> MdModel<'a> {
    pub fn new(source: &'a dyn InfoSource, ell: u8, x: &[&str]) -> Result<Self> {
        check_ell(ell)?;
        if x.is_empty() {
            return Err(invalid("x", "source axes must be nonempty"));
        }
        let m = Self {
            source,
            ell,
            x: x.iter().map(|s| s.to_string()).collect(),
            codebooks: Vec::new(),
            structured: None,
            distortions: Vec::new(),
            experimental: false,
        };
        m.check_axes(x)?;
        Ok(m)
    }

    fn check_axes(&self, axes: &[&str]) -> Result<()> {
        let names = self.source.var_names();
        match axes.iter().find(|a| !names.iter().any(|n| n == *a)) {
            Some(a) => Err(Error::UnknownAxis(a.to_string())),
            None => Ok(()),
        }
    }

    fn check_family(&self, f: &Family) -> Result<()> {
        if f.span() >> self.ell != 0 {
            return Err(invalid("family", format!("{f} mentions a description beyond {}", self.ell)));
        }
        Ok(())
    }

    pub fn codebook(mut self, family: Family, axes: &[&str]) -> Result<Self> {
        self.check_family(&family)?;
        self.check_axes(axes)?;
        if self.codebooks.iter().any(|c| c.family == family) {
            return Err(invalid("family", format!("codebook {family} given twice")));
        }
        self.codebooks.push(Codebook {
            family,
            axes: axes.iter().map(|s| s.to_string()).collect(),
        });
        Ok(self)
    }

    pub fn structured(mut self, t: StructuredTriple) -> Result<Self> {
        for f in [&t.a_in, &t.a_out, &t.a_sum] {
            self.check_family(f)?;
        }
        if t.a_in == t.a_out || t.a_in == t.a_sum || t.a_out == t.a_sum {
            return Err(invalid("structured", "A_in, A_out and A_sum must be distinct"));
        }
        let mut axes = vec![t.v_in.as_str(), t.v_out.as_str(), t.w_sum.as_str()];
        axes.extend(t.w_cover.iter().map(|w| w.axis.as_str()));
        self.check_axes(&axes)?;
        self.structured = Some(t);
        self.w_axis(1, 1)?;
        Ok(self)
    }

    /// Allows packing rows for decoder configurations outside the printed cases.
    pub fn experimental(mut self, on: bool) -> Self {
        self.experimental = on;
        self
    }

    /// Expected distortion functional for decoder `n`.
    pub fn distortion(mut self, n: Subset, f: Functional) -> Result<Self> {
        if n == 0 || n >> self.ell != 0 {
            return Err(invalid("decoder", format!("{} is not a decoder", format_subset(n))));
        }
        let inputs: Vec<&str> = f.inputs.iter().map(String::as_str).collect();
        self.check_axes(&inputs)?;
        self.distortions.push((n, f));
        Ok(self)
    }

    pub fn ell(&self) -> u8 {
        self.ell
    }

    pub fn codebooks(&self) -> &[Codebook] {
        &self.codebooks
    }

    pub fn triple(&self) -> Option<&StructuredTriple> {
        self.structured.as_ref()
    }

    /// Evaluates every declared distortion functional.
    pub fn distortions(&self) -> Result<Vec<(Subset, f64)>> {
        self.distortions
            .iter()
            .map(|(n, f)| {
                let inputs: Vec<&str> = f.inputs.iter().map(String::as_str).collect();
                Ok((*n, self.source.expect(&inputs, &|v| (f.f)(v))?))
            })
            .collect()
    }

    /// The axis realizing `alpha V_in + beta V_out`, checked against the pmf.
    fn w_axis(&self, alpha: i64, beta: i64) -> Result<&str> {
        let t = self
            .structured
            .as_ref()
            .ok_or_else(|| invalid("structured", "model has no structured triple"))?;
        let name = t
            .w_cover
            .iter()
            .find(|w| w.alpha == alpha && w.beta == beta)
            .map(|w| w.axis.as_str())
            .or(((alpha, beta) == (1, 1)).then_some(t.w_sum.as_str()))
            .ok_or_else(|| invalid("alpha", format!("no axis for {alpha} V_in + {beta} V_out")))?;
        let gap = self
            .source
            .linear_gap(name, &[(&t.v_in, alpha as f64), (&t.v_out, beta as f64)])?;
        if gap > SUM_TOL {
            return Err(Error::AxisMismatch(format!(
                "`{name}` is not {alpha} {} + {beta} {} (gap {gap:.3e})",
                t.v_in, t.v_out
            )));
        }
        Ok(name)
    }
}

/// Rate variables `R1..Rℓ` plus codebook rates and splits, with all rows.
#[derive(Debug, Clone)]
pub struct MdConstraintSystem {
    system: HalfspaceSystem,
    ell: u8,
}

pub fn rate_name(i: u8) -> String {
    format!("R{i}")
}

impl MdConstraintSystem {
    pub fn system(&self) -> &HalfspaceSystem {
        &self.system
    }

    pub fn rates(&self) -> Vec<String> {
        (1..=self.ell).map(rate_name).collect()
    }

    fn check_rate(&self, i: u8) -> Result<String> {
        if !(1..=self.ell).contains(&i) {
            return Err(invalid("rate", format!("R{i} does not exist")));
        }
        Ok(rate_name(i))
    }

    /// Adds `R_i = R_j`.
    pub fn with_equal_rates(mut self, i: u8, j: u8) -> Result<Self> {
        let (a, b) = (self.check_rate(i)?, self.check_rate(j)?);
        self.system.add_eq(&[(&a, 1.0), (&b, -1.0)], 0.0, &format!("{a}={b}"))?;
        Ok(self)
    }

    /// Whether nonnegative auxiliaries exist with `R = targets`.
    pub fn rate_feasible(&self, targets: &[f64]) -> Result<bool> {
        if targets.len() != self.ell as usize {
            return Err(Error::Dimension {
                expected: self.ell as usize,
                got: targets.len(),
            });
        }
        let mut s = self.system.clone();
        for (i, &t) in targets.iter().enumerate() {
            s = s.fix(&rate_name(i as u8 + 1), t)?;
        }
        s.feasible()
    }

    /// Smallest `R_which` with the listed rates pinned and the rest free.
    pub fn min_rate(&self, which: u8, fixed: &[(u8, f64)]) -> Result<f64> {
        let target = self.check_rate(which)?;
        let mut s = self.system.clone();
        for &(i, v) in fixed {
            if i == which {
                return Err(invalid("fixed", format!("R{i} is the minimized rate")));
            }
            s = s.fix(&self.check_rate(i)?, v)?;
        }
        s.minimize(&[(&target, 1.0)])
    }
}

impl fmt::Display for MdConstraintSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.system.fmt(f)
    }
}

/// A codebook as seen by the row generators.
struct Item<'m> {
    label: String,
    family: &'m Family,
    axes: Vec<&'m str>,
    rate: String,
    rho: String,
}

impl Item<'_> {
    fn rho_var(&self, i: u8) -> String {
        format!("{}|{i}]", self.rho)
    }

    /// `rate - Σ ρ_i` over descriptions `i` that decoder `n` receives.
    fn packed(&self, n: Subset, ell: u8, terms: &mut BTreeMap<String, f64>) {
        *terms.entry(self.rate.clone()).or_default() += 1.0;
        for i in 1..=ell {
            let bit = 1 << (i - 1);
            if self.family.span() & n & bit != 0 {
                *terms.entry(self.rho_var(i)).or_default() -= 1.0;
            }
        }
    }
}

fn codebook_items<'m>(m: &'m MdModel<'_>) -> Vec<Item<'m>> {
    m.codebooks
        .iter()
        .map(|c| Item {
            label: c.family.to_string(),
            family: &c.family,
            axes: c.axes.iter().map(String::as_str).collect(),
            rate: format!("r[{}]", c.family),
            rho: format!("rho[{}", c.family),
        })
        .collect()
}

fn pick<'s, 'm>(items: &'s [&'s Item<'m>], mask: u32) -> Vec<&'s Item<'m>> {
    (0..items.len()).filter(|i| mask >> i & 1 == 1).map(|i| items[i]).collect()
}

fn groups<'m>(items: &[&Item<'m>]) -> Vec<Vec<&'m str>> {
    items.iter().map(|i| i.axes.clone()).collect()
}

fn flat<'m>(items: &[&Item<'m>]) -> Vec<&'m str> {
    items.iter().flat_map(|i| i.axes.iter().copied()).collect()
}

fn labels(items: &[&Item<'_>]) -> String {
    let v: Vec<&str> = items.iter().map(|i| i.label.as_str()).collect();
    v.join("; ")
}

struct Builder<'m> {
    src: &'m dyn InfoSource,
    x: Vec<&'m str>,
    ell: u8,
    sys: HalfspaceSystem,
}

impl<'m> Builder<'m> {
    fn new(m: &'m MdModel<'_>, items: &[&Item<'m>]) -> Result<Self> {
        let mut vars: Vec<String> = (1..=m.ell).map(rate_name).collect();
        for it in items {
            if !vars.contains(&it.rate) {
                vars.push(it.rate.clone());
            }
            for i in 1..=m.ell {
                if it.family.span() >> (i - 1) & 1 == 1 {
                    vars.push(it.rho_var(i));
                }
            }
        }
        Ok(Self {
            src: m.source,
            x: m.x.iter().map(String::as_str).collect(),
            ell: m.ell,
            sys: HalfspaceSystem::new(&vars)?,
        })
    }

    fn row(&mut self, terms: BTreeMap<String, f64>, sense: Sense, bound: f64, label: String) -> Result<()> {
        let t: Vec<(&str, f64)> = terms.iter().filter(|t| *t.1 != 0.0).map(|(k, v)| (k.as_str(), *v)).collect();
        self.sys.add(&t, sense, bound, &label)
    }

    fn ibar(&self, g: &[Vec<&str>]) -> Result<f64> {
        let refs: Vec<&[&str]> = g.iter().map(Vec::as_slice).collect();
        ibar(self.src, &refs)
    }

    /// `Σ r ≥ Ī(items) + I(items; X)` for every nonempty subset.
    fn covering(&mut self, items: &[&Item<'m>]) -> Result<()> {
        for mask in 1u32..(1 << items.len()) {
            let k = pick(items, mask);
            let rhs = self.ibar(&groups(&k))? + self.src.mi(&flat(&k), &self.x)?;
            let mut terms = BTreeMap::new();
            for it in &k {
                *terms.entry(it.rate.clone()).or_insert(0.0) += 1.0;
            }
            self.row(terms, Sense::Ge, rhs, format!("cover[{}]", labels(&k)))?;
        }
        Ok(())
    }

    /// One row per `L` inside the codebooks first decoded at `n`:
    /// `Σ_K (r - Σρ) ≤ Ī(K) + I(K; prev ∪ L)` with `K = new \ L`.
    fn packing(&mut self, n: Subset, new: &[&Item<'m>], prev: &[&'m str]) -> Result<()> {
        for lmask in 0u32..(1 << new.len()) {
            let kmask = !lmask & ((1 << new.len()) - 1);
            if kmask == 0 {
                continue;
            }
            let k = pick(new, kmask);
            let l = pick(new, lmask);
            let mut known: Vec<&str> = prev.to_vec();
            known.extend(flat(&l));
            let rhs = self.ibar(&groups(&k))? + self.src.mi(&flat(&k), &known)?;
            let mut terms = BTreeMap::new();
            for it in &k {
                it.packed(n, self.ell, &mut terms);
            }
            let label = format!("pack{}[{} | {}]", format_subset(n), labels(&k), labels(&l));
            self.row(terms, Sense::Le, rhs, label)?;
        }
        Ok(())
    }

    fn finish(mut self, items: &[&Item<'m>]) -> Result<MdConstraintSystem> {
        for i in 1..=self.ell {
            let mut terms = BTreeMap::new();
            terms.insert(rate_name(i), 1.0);
            for it in items {
                if it.family.span() >> (i - 1) & 1 == 1 {
                    terms.insert(it.rho_var(i), -1.0);
                }
            }
            let t: Vec<(&str, f64)> = terms.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            self.sys.add_eq(&t, 0.0, &format!("R{i} split"))?;
        }
        Ok(MdConstraintSystem {
            system: self.sys.with_nonnegativity(),
            ell: self.ell,
        })
    }
}

fn split_by_decoder<'s, 'm>(items: &'s [&'s Item<'m>], n: Subset, ell: u8) -> (Vec<&'s Item<'m>>, Vec<&'s Item<'m>>) {
    let strict: Vec<Subset> = subsets(ell).into_iter().filter(|&p| p != n && is_subset(p, n)).collect();
    let mut new = Vec::new();
    let mut prev = Vec::new();
    for it in items {
        if strict.iter().any(|&p| it.family.decoded_by(p)) {
            prev.push(*it);
        } else if it.family.decoded_by(n) {
            new.push(*it);
        }
    }
    (new, prev)
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_CODEBOOKS {
        return Err(Error::TooLarge(format!("{n} codebooks (limit {MAX_CODEBOOKS})")));
    }
    Ok(())
}

/// Covering rows for every codebook subset, packing rows for every decoder,
/// and `R_i = Σ ρ_{M,i}`. A decoder only counts split rates of the
/// descriptions it receives.
pub fn unstructured_constraints(m: &MdModel<'_>) -> Result<MdConstraintSystem> {
    if m.structured.is_some() {
        return Err(invalid("structured", "model has a structured triple; use structured_constraints"));
    }
    check_size(m.codebooks.len())?;
    let owned = codebook_items(m);
    let items: Vec<&Item> = owned.iter().collect();
    let mut b = Builder::new(m, &items)?;
    b.covering(&items)?;
    for n in subsets(m.ell) {
        let (new, prev) = split_by_decoder(&items, n, m.ell);
        b.packing(n, &new, &flat(&prev))?;
    }
    b.finish(&items)
}

/// Rows of the structured scheme with `W = alpha V_in + beta V_out` in the
/// second covering row; the packing rows use `W_sum = V_in + V_out`.
pub fn structured_constraints(m: &MdModel<'_>, alpha: i64, beta: i64) -> Result<MdConstraintSystem> {
    let t = m
        .structured
        .as_ref()
        .ok_or_else(|| invalid("structured", "model has no structured triple"))?;
    if alpha == 0 || beta == 0 {
        return Err(invalid("alpha", "coefficients must be nonzero"));
    }
    check_size(m.codebooks.len() + 2)?;
    let w_ab = m.w_axis(alpha, beta)?;
    let us = codebook_items(m);
    let vin = layer("in", &t.a_in, &t.v_in, "r'[in]");
    let vout = layer("out", &t.a_out, &t.v_out, "r'[out]");
    let w = layer("sum", &t.a_sum, &t.w_sum, "r'[out]");
    let u: Vec<&Item> = us.iter().collect();
    let mut all = u.clone();
    all.extend([&vin, &vout, &w]);
    let mut b = Builder::new(m, &all)?;

    let vs = [&vin, &vout];
    for umask in 0u32..(1 << u.len()) {
        let um = pick(&u, umask);
        for emask in 0u32..4 {
            if umask == 0 && emask == 0 {
                continue;
            }
            let mut k = um.clone();
            k.extend(pick(&vs, emask));
            let rhs = b.ibar(&groups(&k))? + b.src.mi(&flat(&k), &b.x)?;
            let mut terms = BTreeMap::new();
            for it in &k {
                *terms.entry(it.rate.clone()).or_insert(0.0) += 1.0;
            }
            b.row(terms, Sense::Ge, rhs, format!("cover[{}]", labels(&k)))?;
        }
        // Second covering row, for the combination W_{alpha,beta}.
        let ua = flat(&um);
        let mut g = groups(&um);
        g.push(vec![t.v_out.as_str()]);
        let mut uw = ua.clone();
        uw.push(w_ab);
        let rhs = b.ibar(&g)? + b.src.mi(&uw, &b.x)? - b.src.cmi(&[w_ab], &[&t.v_in], &ua)?
            + b.src.cmi(&[&t.v_in], &[&t.v_out], &ua)?;
        let mut terms = BTreeMap::new();
        for it in &um {
            *terms.entry(it.rate.clone()).or_insert(0.0) += 1.0;
        }
        *terms.entry(vout.rate.clone()).or_insert(0.0) += 1.0;
        b.row(terms, Sense::Ge, rhs, format!("cover2[{}; W({alpha},{beta})]", labels(&um)))?;
    }
    let mut e = BTreeMap::new();
    e.insert(vin.rate.clone(), 1.0);
    e.insert(vout.rate.clone(), -1.0);
    b.row(e, Sense::Le, 0.0, "r'[in] <= r'[out]".into())?;

    let mut with_v = u.clone();
    with_v.extend(vs);
    for n in subsets(m.ell) {
        let (new, prev) = split_by_decoder(&all, n, m.ell);
        if new.is_empty() {
            continue;
        }
        let w_new = new.iter().any(|i| std::ptr::eq(*i, &w));
        let w_dec = t.a_sum.decoded_by(n);
        let v_dec = t.a_in.decoded_by(n) || t.a_out.decoded_by(n);
        let prev_axes = flat(&prev);
        if !w_dec {
            b.packing(n, &new, &prev_axes)?;
        } else if w_new && !v_dec {
            structured_packing(&mut b, n, &new, &prev_axes, t, &w)?;
        } else if m.experimental {
            b.packing(n, &new, &prev_axes)?;
        } else {
            return Err(Error::Unsupported(format!(
                "decoder {} decodes the sum together with V_in or V_out; enable experimental rows",
                format_subset(n)
            )));
        }
    }
    b.finish(&all)
}

fn layer<'m>(label: &str, family: &'m Family, axis: &'m str, rate: &str) -> Item<'m> {
    Item {
        label: label.to_string(),
        family,
        axes: vec![axis],
        rate: rate.to_string(),
        rho: format!("rho'[{label}"),
    }
}

/// Packing for a decoder that recovers `W_sum` but neither `V_in` nor
/// `V_out`. The conditioning set is the newly decoded codebooks.
fn structured_packing<'m>(
    b: &mut Builder<'m>,
    n: Subset,
    new: &[&Item<'m>],
    prev: &[&'m str],
    t: &'m StructuredTriple,
    w: &Item<'m>,
) -> Result<()> {
    let new_u: Vec<&Item> = new.iter().copied().filter(|i| !std::ptr::eq(*i, w)).collect();
    let ws = t.w_sum.as_str();
    for lmask in 0u32..(1 << new_u.len()) {
        let kmask = !lmask & ((1 << new_u.len()) - 1);
        let k = pick(&new_u, kmask);
        let l = pick(&new_u, lmask);
        let ka = flat(&k);
        let mut known = prev.to_vec();
        known.extend(flat(&l));
        let mut g = groups(&k);
        g.push(vec![t.v_out.as_str()]);
        let mut kw = ka.clone();
        kw.push(ws);
        let rhs = b.ibar(&g)? + b.src.mi(&kw, &known)? - b.src.cmi(&[ws], &[&t.v_in], &ka)?
            + b.src.cmi(&[&t.v_in], &[&t.v_out], &ka)?;
        let mut terms = BTreeMap::new();
        for it in &k {
            it.packed(n, b.ell, &mut terms);
        }
        w.packed(n, b.ell, &mut terms);
        let label = format!("pack{}[{}; sum | {}]", format_subset(n), labels(&k), labels(&l));
        b.row(terms, Sense::Le, rhs, label)?;
    }
    Ok(())
}
