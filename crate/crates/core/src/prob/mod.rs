//! Finite joint pmfs over named real-valued axes and the information measures on them.

mod augmented;
mod markov;
mod source;

pub use augmented::Augmented;
pub use markov::MarkovPmf;
pub use source::InfoSource;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{entropy_bits, KahanSum};

/// Tolerance on the total mass of a validated pmf.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    name: String,
    points: Vec<f64>,
}

impl Axis {
    pub fn new(name: impl Into<String>, points: Vec<f64>) -> Result<Self> {
        let name = name.into();
        let bad = |reason: &str| Error::InvalidAxis {
            name: name.clone(),
            reason: reason.to_string(),
        };
        if points.is_empty() {
            return Err(bad("no points"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(bad("non-finite point"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("points not strictly increasing"));
        }
        Ok(Self { name, points })
    }

    /// Dyadic grid `k * 2^-n` for `k` in `k_lo..=k_hi`.
    pub fn grid(name: impl Into<String>, n: u32, k_lo: i64, k_hi: i64) -> Result<Self> {
        let step = (-(n as f64)).exp2();
        Self::new(name, (k_lo..=k_hi).map(|k| k as f64 * step).collect())
    }

    /// Single-point axis, used for trivial variables.
    pub fn constant(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            points: vec![value],
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            points: self.points.clone(),
        }
    }

    /// Index of an exact point value.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        let value = value + 0.0;
        self.points.binary_search_by(|p| p.total_cmp(&value)).ok()
    }
}

/// A nonempty set of axis names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomVarGroup(Vec<String>);

impl RandomVarGroup {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidPmf("empty variable group".into()));
        }
        let mut out: Vec<String> = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            if out.iter().any(|o| o == n) {
                return Err(Error::DuplicateAxis(n.to_string()));
            }
            out.push(n.to_string());
        }
        Ok(Self(out))
    }

    pub fn one(name: &str) -> Self {
        Self(vec![name.to_string()])
    }

    pub fn names(&self) -> Vec<&str> {
        self.0.iter().map(String::as_str).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    axes: Vec<Axis>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PmfDoc {
    axes: Vec<Axis>,
    probs: Vec<f64>,
}

impl Serialize for JointPmf {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PmfDoc {
            axes: self.axes.clone(),
            probs: self.probs.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for JointPmf {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = PmfDoc::deserialize(d)?;
        let axes = doc
            .axes
            .into_iter()
            .map(|a| Axis::new(a.name, a.points))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        JointPmf::new(axes, doc.probs).map_err(serde::de::Error::custom)
    }
}

impl JointPmf {
    pub fn new(axes: Vec<Axis>, probs: Vec<f64>) -> Result<Self> {
        let p = Self::unchecked(axes, probs)?;
        let total = KahanSum::from_iter(p.probs.iter().copied()).total();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidPmf(format!("total mass {total}")));
        }
        Ok(p)
    }

    /// Builds a pmf from nonnegative weights, dividing by their total.
    pub fn normalized(axes: Vec<Axis>, mut weights: Vec<f64>) -> Result<Self> {
        let total = KahanSum::from_iter(weights.iter().copied()).total();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidPmf(format!("total weight {total}")));
        }
        for w in &mut weights {
            *w /= total;
        }
        Self::unchecked(axes, weights)
    }

    fn unchecked(axes: Vec<Axis>, probs: Vec<f64>) -> Result<Self> {
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::DuplicateAxis(a.name.clone()));
            }
        }
        let size: usize = axes.iter().map(Axis::len).product();
        if size != probs.len() {
            return Err(Error::Dimension {
                expected: size,
                got: probs.len(),
            });
        }
        if probs.iter().any(|&q| !(q >= 0.0 && q.is_finite())) {
            return Err(Error::InvalidPmf("negative or non-finite entry".into()));
        }
        Ok(Self { axes, probs })
    }

    /// Point mass on a single axis value.
    pub fn point_mass(axis: Axis, index: usize) -> Result<Self> {
        let mut probs = vec![0.0; axis.len()];
        *probs
            .get_mut(index)
            .ok_or(Error::Dimension { expected: axis.len(), got: index })? = 1.0;
        Self::new(vec![axis], probs)
    }

    /// Product measure of independent pmfs.
    pub fn product(parts: &[&JointPmf]) -> Result<Self> {
        let mut axes = Vec::new();
        let mut probs = vec![1.0];
        for p in parts {
            axes.extend(p.axes.iter().cloned());
            let mut next = Vec::with_capacity(probs.len() * p.probs.len());
            for &a in &probs {
                next.extend(p.probs.iter().map(|&b| a * b));
            }
            probs = next;
        }
        Self::normalized(axes, probs)
    }

    /// Appends an axis drawn from a conditional law given existing axes.
    ///
    /// `channel` receives the input point values and returns the conditional pmf
    /// over `out`'s points.
    pub fn extend<F>(&self, inputs: &[&str], out: Axis, channel: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        self.try_extend(inputs, out, |v| Ok(channel(v)))
    }

    fn try_extend<F>(&self, inputs: &[&str], out: Axis, channel: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        self.check_new_axis(&out)?;
        let idx = self.indices(inputs)?;
        let m = out.len();
        let mut probs = Vec::with_capacity(self.probs.len() * m);
        let mut cache: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();
        let mut vals = vec![0.0; idx.len()];
        for (flat, &q) in self.probs.iter().enumerate() {
            let coords = self.coords(flat);
            let key: Vec<usize> = idx.iter().map(|&i| coords[i]).collect();
            let row = match cache.get(&key) {
                Some(r) => r,
                None => {
                    for (v, (&i, &k)) in vals.iter_mut().zip(idx.iter().zip(&key)) {
                        *v = self.axes[i].points[k];
                    }
                    let r = channel(&vals)?;
                    if r.len() != m {
                        return Err(Error::Dimension { expected: m, got: r.len() });
                    }
                    let s: f64 = r.iter().sum();
                    if (s - 1.0).abs() > 1e-9 || r.iter().any(|&x| x < 0.0) {
                        return Err(Error::InvalidPmf(format!("conditional row sums to {s}")));
                    }
                    cache.entry(key.clone()).or_insert(r)
                }
            };
            probs.extend(row.iter().map(|&r| q * r));
        }
        let mut axes = self.axes.clone();
        axes.push(out);
        Self::normalized(axes, probs)
    }

    /// Appends the deterministic variable `f(inputs)` on its image axis.
    pub fn with_function<F>(&self, inputs: &[&str], name: &str, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        if inputs.is_empty() {
            return self.extend(&[], Axis::constant(name, f(&[]) + 0.0), |_| vec![1.0]);
        }
        let g = RandomVarGroup::new(inputs)?;
        let out = image_axis(self, &g, &f, name)?;
        pushforward(self, &g, f, out)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::len).collect()
    }

    pub fn axis(&self, name: &str) -> Result<&Axis> {
        self.axes
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    fn indices<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let i = self.axis_index(n.as_ref())?;
            if out.contains(&i) {
                return Err(Error::DuplicateAxis(n.as_ref().to_string()));
            }
            out.push(i);
        }
        Ok(out)
    }

    fn check_new_axis(&self, a: &Axis) -> Result<()> {
        if self.axes.iter().any(|b| b.name == a.name) {
            return Err(Error::DuplicateAxis(a.name.clone()));
        }
        Ok(())
    }

    /// Per-axis coordinates of a flat index.
    pub fn coords(&self, mut flat: usize) -> Vec<usize> {
        let mut c = vec![0; self.axes.len()];
        for (i, a) in self.axes.iter().enumerate().rev() {
            c[i] = flat % a.len();
            flat /= a.len();
        }
        c
    }

    /// Sums the tensor onto the listed axis positions, in the listed order.
    pub(crate) fn reduce(&self, keep: &[usize]) -> Vec<f64> {
        let shape = self.shape();
        let out_len: usize = keep.iter().map(|&i| shape[i]).product();
        let mut out_stride = vec![0usize; shape.len()];
        let mut s = 1;
        for &i in keep.iter().rev() {
            out_stride[i] = s;
            s *= shape[i];
        }
        if keep.len() == shape.len() && keep.iter().enumerate().all(|(a, &b)| a == b) {
            return self.probs.clone();
        }
        let mut acc = vec![KahanSum::new(); out_len];
        let d = shape.len();
        let mut idx = vec![0usize; d];
        let mut o = 0usize;
        for &q in &self.probs {
            acc[o].add(q);
            for k in (0..d).rev() {
                idx[k] += 1;
                o += out_stride[k];
                if idx[k] < shape[k] {
                    break;
                }
                o -= out_stride[k] * shape[k];
                idx[k] = 0;
            }
        }
        acc.iter().map(KahanSum::total).collect()
    }

    /// Entropy in bits of the marginal over the listed axes.
    pub fn entropy_names<S: AsRef<str>>(&self, names: &[S]) -> Result<f64> {
        let idx = self.indices(names)?;
        if idx.is_empty() {
            return Ok(0.0);
        }
        Ok(entropy_bits(&self.reduce(&idx)))
    }

    /// Expectation of `g` evaluated on the listed axes.
    pub fn expect_names<S: AsRef<str>>(&self, names: &[S], g: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
        let idx = self.indices(names)?;
        let m = self.reduce(&idx);
        let axes: Vec<&Axis> = idx.iter().map(|&i| &self.axes[i]).collect();
        let mut acc = KahanSum::new();
        let mut vals = vec![0.0; axes.len()];
        for (flat, &q) in m.iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            let mut f = flat;
            for (k, a) in axes.iter().enumerate().rev() {
                vals[k] = a.points[f % a.len()];
                f /= a.len();
            }
            acc.add(q * g(&vals));
        }
        Ok(acc.total())
    }

    pub fn tv_sup(&self, other: &JointPmf) -> Result<f64> {
        Ok(l1_distance(self, other)? / 2.0)
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = KahanSum::new();
        for x in iter {
            k.add(x);
        }
        k
    }
}

pub fn marginal(p: &JointPmf, keep: &RandomVarGroup) -> Result<JointPmf> {
    let idx = p.indices(&keep.0)?;
    let axes = idx.iter().map(|&i| p.axes[i].clone()).collect();
    JointPmf::normalized(axes, p.reduce(&idx))
}

pub fn entropy(p: &JointPmf, over: &RandomVarGroup) -> Result<f64> {
    p.entropy_names(&over.0)
}

pub fn mutual_information(p: &JointPmf, a: &RandomVarGroup, b: &RandomVarGroup) -> Result<f64> {
    p.mi(&a.names(), &b.names())
}

pub fn conditional_mi(
    p: &JointPmf,
    a: &RandomVarGroup,
    b: &RandomVarGroup,
    c: &RandomVarGroup,
) -> Result<f64> {
    p.cmi(&a.names(), &b.names(), &c.names())
}

fn same_axes(p: &JointPmf, q: &JointPmf) -> Result<()> {
    if p.axes != q.axes {
        return Err(Error::AxisMismatch("pmfs have different axes".into()));
    }
    Ok(())
}

/// Relative entropy in bits; `+inf` when `p` is not absolutely continuous w.r.t. `q`.
pub fn kl_divergence(p: &JointPmf, q: &JointPmf) -> Result<f64> {
    same_axes(p, q)?;
    let mut acc = KahanSum::new();
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            acc.add(a * (a / b).log2());
        }
    }
    Ok(acc.total().max(0.0))
}

/// Sum of absolute differences, in `[0, 2]`.
pub fn l1_distance(p: &JointPmf, q: &JointPmf) -> Result<f64> {
    same_axes(p, q)?;
    Ok(KahanSum::from_iter(p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs())).total())
}

/// Appends `out_axis` as the deterministic image of `inputs` under `f`.
pub fn pushforward<F>(p: &JointPmf, inputs: &RandomVarGroup, f: F, out_axis: Axis) -> Result<JointPmf>
where
    F: Fn(&[f64]) -> f64,
{
    let m = out_axis.len();
    let name = out_axis.name.clone();
    let pts = out_axis.points.clone();
    p.try_extend(&inputs.names(), out_axis, |v| {
        let y = f(v) + 0.0;
        let k = pts
            .binary_search_by(|q| q.total_cmp(&y))
            .map_err(|_| Error::GridMismatch {
                axis: name.clone(),
                value: y,
            })?;
        let mut row = vec![0.0; m];
        row[k] = 1.0;
        Ok(row)
    })
}

/// The sorted set of values `f` takes on the input grid; a convenient output axis.
pub fn image_axis<F>(p: &JointPmf, inputs: &RandomVarGroup, f: F, name: &str) -> Result<Axis>
where
    F: Fn(&[f64]) -> f64,
{
    let idx = p.indices(&inputs.0)?;
    let mut vals = Vec::new();
    let mut buf = vec![0.0; idx.len()];
    let sizes: Vec<usize> = idx.iter().map(|&i| p.axes[i].len()).collect();
    let total: usize = sizes.iter().product();
    for flat in 0..total {
        let mut r = flat;
        for k in (0..idx.len()).rev() {
            buf[k] = p.axes[idx[k]].points[r % sizes[k]];
            r /= sizes[k];
        }
        vals.push(f(&buf) + 0.0);
    }
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    Axis::new(name, vals)
}

pub fn expectation(p: &JointPmf, g: &dyn Fn(&[f64]) -> f64, over: &RandomVarGroup) -> Result<f64> {
    p.expect_names(&over.0, g)
}

pub(crate) fn check_disjoint(groups: &[&[&str]]) -> Result<()> {
    for (i, a) in groups.iter().enumerate() {
        for b in &groups[i + 1..] {
            if let Some(n) = a.iter().find(|n| b.contains(n)) {
                return Err(Error::OverlappingGroups(n.to_string()));
            }
        }
    }
    Ok(())
}

pub(crate) fn union<'a>(groups: &[&[&'a str]]) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for g in groups {
        for n in *g {
            if !out.contains(n) {
                out.push(n);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
