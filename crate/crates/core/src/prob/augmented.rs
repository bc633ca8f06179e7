use super::{Axis, InfoSource, JointPmf, RandomVarGroup};
use crate::error::{Error, Result};
use crate::numeric::{entropy_bits, KahanSum};

const MAX_DENSE: usize = 100_000_000;

#[derive(Debug, Clone)]
struct Derived {
    axis: Axis,
    inputs: Vec<usize>,
    table: Vec<usize>,
}

/// A pmf plus virtual axes that are deterministic functions of base axes.
///
/// Derived axes are never materialized into the full tensor, so adding `U+V`
/// to a large pmf costs only the size of the `(U, V)` lookup table.
#[derive(Debug, Clone)]
pub struct Augmented {
    base: JointPmf,
    derived: Vec<Derived>,
}

impl Augmented {
    pub fn new(base: JointPmf) -> Self {
        Self {
            base,
            derived: Vec::new(),
        }
    }

    pub fn base(&self) -> &JointPmf {
        &self.base
    }

    /// Adds `name = f(inputs)`; the axis is the exact image of the input grid.
    pub fn with_derived<F>(mut self, name: &str, inputs: &[&str], f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        if self.var_names().iter().any(|n| n == name) {
            return Err(Error::DuplicateAxis(name.to_string()));
        }
        let group = RandomVarGroup::new(inputs)?;
        let axis = super::image_axis(&self.base, &group, &f, name)?;
        let idx = self.base.indices(inputs)?;
        let sizes: Vec<usize> = idx.iter().map(|&i| self.base.axes[i].len()).collect();
        let total: usize = sizes.iter().product();
        let mut table = Vec::with_capacity(total);
        let mut buf = vec![0.0; idx.len()];
        for flat in 0..total {
            let mut r = flat;
            for k in (0..idx.len()).rev() {
                buf[k] = self.base.axes[idx[k]].points[r % sizes[k]];
                r /= sizes[k];
            }
            let y = f(&buf);
            table.push(axis.index_of(y).ok_or(Error::GridMismatch {
                axis: name.to_string(),
                value: y,
            })?);
        }
        self.derived.push(Derived {
            axis,
            inputs: idx,
            table,
        });
        Ok(self)
    }

    pub fn axis(&self, name: &str) -> Result<&Axis> {
        if let Some(d) = self.derived.iter().find(|d| d.axis.name() == name) {
            return Ok(&d.axis);
        }
        self.base.axis(name)
    }

    /// Dense pmf with every derived axis appended.
    pub fn materialize(&self) -> Result<JointPmf> {
        let mut p = self.base.clone();
        for d in &self.derived {
            let names: Vec<&str> = d.inputs.iter().map(|&i| self.base.axes[i].name()).collect();
            let sizes: Vec<usize> = d.inputs.iter().map(|&i| self.base.axes[i].len()).collect();
            let m = d.axis.len();
            let base_axes = &self.base.axes;
            let inputs = &d.inputs;
            p = p.extend(&names, d.axis.clone(), |v| {
                let mut flat = 0;
                for (k, &x) in v.iter().enumerate() {
                    flat = flat * sizes[k] + base_axes[inputs[k]].index_of(x).unwrap_or(0);
                }
                let mut row = vec![0.0; m];
                row[d.table[flat]] = 1.0;
                row
            })?;
        }
        Ok(p)
    }

    /// Resolves names into base positions and the derived axes that must be kept.
    fn plan(&self, names: &[&str]) -> Result<(Vec<usize>, Vec<usize>)> {
        let mut base = Vec::new();
        let mut der = Vec::new();
        for n in names {
            if let Some(j) = self.derived.iter().position(|d| d.axis.name() == *n) {
                if der.contains(&j) {
                    return Err(Error::DuplicateAxis(n.to_string()));
                }
                der.push(j);
            } else {
                let i = self.base.axis_index(n)?;
                if base.contains(&i) {
                    return Err(Error::DuplicateAxis(n.to_string()));
                }
                base.push(i);
            }
        }
        Ok((base, der))
    }

    /// Walks the marginal over `base ∪ inputs(der)`, yielding the probability,
    /// base coordinates and derived output indices for each cell.
    fn walk(&self, base: &[usize], der: &[usize], mut visit: impl FnMut(f64, &[usize], &[usize])) {
        let mut needed = base.to_vec();
        for &j in der {
            for &i in &self.derived[j].inputs {
                if !needed.contains(&i) {
                    needed.push(i);
                }
            }
        }
        let m = self.base.reduce(&needed);
        let sizes: Vec<usize> = needed.iter().map(|&i| self.base.axes[i].len()).collect();
        let pos: Vec<Vec<usize>> = der
            .iter()
            .map(|&j| {
                self.derived[j]
                    .inputs
                    .iter()
                    .map(|i| needed.iter().position(|n| n == i).unwrap())
                    .collect()
            })
            .collect();
        let mut coords = vec![0usize; needed.len()];
        let mut outs = vec![0usize; der.len()];
        for (flat, &q) in m.iter().enumerate() {
            if q != 0.0 {
                let mut r = flat;
                for k in (0..needed.len()).rev() {
                    coords[k] = r % sizes[k];
                    r /= sizes[k];
                }
                for (o, (&j, p)) in outs.iter_mut().zip(der.iter().zip(&pos)) {
                    let d = &self.derived[j];
                    let mut t = 0;
                    for &pi in p {
                        t = t * sizes[pi] + coords[pi];
                    }
                    *o = d.table[t];
                }
                visit(q, &coords[..base.len()], &outs);
            }
        }
    }
}

impl InfoSource for Augmented {
    fn var_names(&self) -> Vec<String> {
        let mut v = self.base.var_names();
        v.extend(self.derived.iter().map(|d| d.axis.name().to_string()));
        v
    }

    fn entropy_of(&self, names: &[&str]) -> Result<f64> {
        let (base, mut der) = self.plan(names)?;
        // A derived axis adds no entropy when all of its inputs are present.
        der.retain(|&j| !self.derived[j].inputs.iter().all(|i| base.contains(i)));
        if der.is_empty() {
            return Ok(entropy_bits(&self.base.reduce(&base)));
        }
        let mut dims: Vec<usize> = base.iter().map(|&i| self.base.axes[i].len()).collect();
        dims.extend(der.iter().map(|&j| self.derived[j].axis.len()));
        let size = dims.iter().try_fold(1usize, |a, &b| a.checked_mul(b));
        let size = match size {
            Some(s) if s <= MAX_DENSE => s,
            _ => return Err(Error::TooLarge(format!("joint of {names:?}"))),
        };
        let mut acc = vec![KahanSum::new(); size];
        self.walk(&base, &der, |q, bc, dc| {
            let mut t = 0;
            for (k, &c) in bc.iter().chain(dc).enumerate() {
                t = t * dims[k] + c;
            }
            acc[t].add(q);
        });
        let v: Vec<f64> = acc.iter().map(KahanSum::total).collect();
        Ok(entropy_bits(&v))
    }

    fn expect(&self, names: &[&str], g: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
        let (base, der) = self.plan(names)?;
        let mut acc = KahanSum::new();
        let mut vals = vec![0.0; names.len()];
        // Map each requested name to its slot among base coords or derived outputs.
        let slots: Vec<(bool, usize)> = names
            .iter()
            .map(|n| {
                match self.derived.iter().position(|d| d.axis.name() == *n) {
                    Some(j) => (true, der.iter().position(|&x| x == j).unwrap()),
                    None => {
                        let i = self.base.axis_index(n).unwrap();
                        (false, base.iter().position(|&x| x == i).unwrap())
                    }
                }
            })
            .collect();
        self.walk(&base, &der, |q, bc, dc| {
            for (v, &(is_der, k)) in vals.iter_mut().zip(&slots) {
                *v = if is_der {
                    self.derived[der[k]].axis.points()[dc[k]]
                } else {
                    self.base.axes[base[k]].points()[bc[k]]
                };
            }
            acc.add(q * g(&vals));
        });
        Ok(acc.total())
    }
}
