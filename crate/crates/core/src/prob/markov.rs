use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::{Augmented, Axis, InfoSource, JointPmf};
use crate::error::{invalid, Error, Result};
use crate::numeric::{entropy_bits, KahanSum};

const ROW_TOL: f64 = 1e-9;
const MAX_WORK: usize = 200_000_000;
const MAX_DENSE: usize = 20_000_000;

/// Factored pmf of a long Markov chain `U - X - Y - V`:
/// `P(x, y) P(u | x) P(v | y)`, with an optional derived axis `W = αU + βV`.
///
/// Joint entropies are reduced with the chain rule to at most two-dimensional
/// tables, so the four-axis tensor is never formed.
#[derive(Debug, Clone)]
pub struct MarkovPmf {
    axes: [Axis; 4],
    pxy: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    sum: Option<SumAxis>,
    cache: Cache,
}

#[derive(Debug, Clone)]
struct SumAxis {
    axis: Axis,
    alpha: i64,
    beta: i64,
    table: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
struct Cache {
    px: OnceLock<DVector<f64>>,
    py: OnceLock<DVector<f64>>,
    pxv: OnceLock<DMatrix<f64>>,
    puy: OnceLock<DMatrix<f64>>,
    puv: OnceLock<DMatrix<f64>>,
}

#[derive(Clone, Copy, Default, PartialEq, Debug)]
struct Set {
    x: bool,
    y: bool,
    u: bool,
    v: bool,
    w: bool,
}

const X: usize = 0;
const Y: usize = 1;
const U: usize = 2;
const V: usize = 3;

fn stochastic(m: &mut DMatrix<f64>, what: &str) -> Result<()> {
    for mut row in m.row_iter_mut() {
        if row.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidPmf(format!("{what}: negative or non-finite entry")));
        }
        let s = KahanSum::from_iter(row.iter().copied()).total();
        if (s - 1.0).abs() > ROW_TOL {
            return Err(Error::InvalidPmf(format!("{what}: row sums to {s}")));
        }
        row /= s;
    }
    Ok(())
}

impl MarkovPmf {
    /// Axes in the order `X, Y, U, V`; `a` is `P(U|X)` (rows X), `b` is `P(V|Y)`.
    pub fn new(axes: [Axis; 4], pxy: DMatrix<f64>, mut a: DMatrix<f64>, mut b: DMatrix<f64>) -> Result<Self> {
        for i in 0..4 {
            for j in 0..i {
                if axes[i].name() == axes[j].name() {
                    return Err(Error::DuplicateAxis(axes[i].name().to_string()));
                }
            }
        }
        let (nx, ny, nu, nv) = (axes[X].len(), axes[Y].len(), axes[U].len(), axes[V].len());
        let dims = [(pxy.shape(), (nx, ny)), (a.shape(), (nx, nu)), (b.shape(), (ny, nv))];
        for (got, want) in dims {
            if got != want {
                return Err(Error::Dimension {
                    expected: want.0 * want.1,
                    got: got.0 * got.1,
                });
            }
        }
        if pxy.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidPmf("P(X,Y) has a negative entry".into()));
        }
        let s = KahanSum::from_iter(pxy.iter().copied()).total();
        if (s - 1.0).abs() > super::MASS_TOL {
            return Err(Error::InvalidPmf(format!("P(X,Y) sums to {s}")));
        }
        stochastic(&mut a, "P(U|X)")?;
        stochastic(&mut b, "P(V|Y)")?;
        Ok(Self {
            axes,
            pxy,
            a,
            b,
            sum: None,
            cache: Cache::default(),
        })
    }

    /// Adds `name = alpha * U + beta * V` with nonzero integer coefficients.
    pub fn with_sum(mut self, name: &str, alpha: i64, beta: i64) -> Result<Self> {
        if alpha == 0 || beta == 0 {
            return Err(invalid("alpha", "sum coefficients must be nonzero"));
        }
        if self.axes.iter().any(|a| a.name() == name) {
            return Err(Error::DuplicateAxis(name.to_string()));
        }
        let (us, vs) = (self.axes[U].points(), self.axes[V].points());
        let f = |u: f64, v: f64| alpha as f64 * u + beta as f64 * v + 0.0;
        let mut vals: Vec<f64> = us.iter().flat_map(|&u| vs.iter().map(move |&v| f(u, v))).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        let axis = Axis::new(name, vals)?;
        let table = us
            .iter()
            .flat_map(|&u| vs.iter().map(move |&v| (u, v)))
            .map(|(u, v)| axis.index_of(f(u, v)).expect("value is in the image"))
            .collect();
        self.sum = Some(SumAxis {
            axis,
            alpha,
            beta,
            table,
        });
        Ok(self)
    }

    pub fn axes(&self) -> Vec<&Axis> {
        let mut v: Vec<&Axis> = self.axes.iter().collect();
        if let Some(s) = &self.sum {
            v.push(&s.axis);
        }
        v
    }

    pub fn pxy(&self) -> &DMatrix<f64> {
        &self.pxy
    }

    pub fn channel_u(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn channel_v(&self) -> &DMatrix<f64> {
        &self.b
    }

    fn px(&self) -> &DVector<f64> {
        self.cache.px.get_or_init(|| {
            DVector::from_iterator(self.pxy.nrows(), self.pxy.row_iter().map(|r| KahanSum::from_iter(r.iter().copied()).total()))
        })
    }

    fn py(&self) -> &DVector<f64> {
        self.cache.py.get_or_init(|| {
            DVector::from_iterator(
                self.pxy.ncols(),
                self.pxy.column_iter().map(|c| KahanSum::from_iter(c.iter().copied()).total()),
            )
        })
    }

    fn pxv(&self) -> &DMatrix<f64> {
        self.cache.pxv.get_or_init(|| &self.pxy * &self.b)
    }

    fn puy(&self) -> &DMatrix<f64> {
        self.cache.puy.get_or_init(|| self.a.transpose() * &self.pxy)
    }

    fn puv(&self) -> &DMatrix<f64> {
        self.cache.puv.get_or_init(|| self.puy() * &self.b)
    }

    fn pu(&self) -> DVector<f64> {
        self.a.transpose() * self.px()
    }

    fn pv(&self) -> DVector<f64> {
        self.b.transpose() * self.py()
    }

    fn parse(&self, names: &[&str]) -> Result<Set> {
        let mut s = Set::default();
        for n in names {
            let slot = match self.axes.iter().position(|a| a.name() == *n) {
                Some(X) => &mut s.x,
                Some(Y) => &mut s.y,
                Some(U) => &mut s.u,
                Some(V) => &mut s.v,
                _ => match &self.sum {
                    Some(w) if w.axis.name() == *n => &mut s.w,
                    _ => return Err(Error::UnknownAxis(n.to_string())),
                },
            };
            if *slot {
                return Err(Error::DuplicateAxis(n.to_string()));
            }
            *slot = true;
        }
        Ok(s)
    }

    fn cond_entropy_rows(m: &DMatrix<f64>, weights: &DVector<f64>) -> f64 {
        let mut acc = KahanSum::new();
        for (row, &w) in m.row_iter().zip(weights.iter()) {
            if w > 0.0 {
                let r: Vec<f64> = row.iter().copied().collect();
                acc.add(w * entropy_bits(&r));
            }
        }
        acc.total()
    }

    /// Law of `W` given independent `U ~ pu`, `V ~ pv` (scaled by `scale`), accumulated into `out`.
    fn convolve(&self, pu: &[f64], pv: &[f64], scale: f64, out: &mut [f64]) {
        let w = self.sum.as_ref().expect("sum axis present");
        let nv = pv.len();
        for (i, &a) in pu.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let t = &w.table[i * nv..(i + 1) * nv];
            for (j, &b) in pv.iter().enumerate() {
                out[t[j]] += scale * a * b;
            }
        }
    }

    fn entropy_set(&self, mut s: Set) -> Result<f64> {
        if s.w {
            // (W, U) and (U, V) are in bijection, likewise (W, V).
            match (s.u, s.v) {
                (true, true) => s.w = false,
                (true, false) => {
                    s.w = false;
                    s.v = true;
                }
                (false, true) => {
                    s.w = false;
                    s.u = true;
                }
                _ => {}
            }
        }
        let mut h = 0.0;
        if s.x && s.u {
            h += Self::cond_entropy_rows(&self.a, self.px());
            s.u = false;
        }
        if s.y && s.v {
            h += Self::cond_entropy_rows(&self.b, self.py());
            s.v = false;
        }
        let m = |mat: &DMatrix<f64>| entropy_bits(mat.as_slice());
        let vec = |v: &DVector<f64>| entropy_bits(v.as_slice());
        if s.w {
            return Ok(h + self.entropy_with_w(s)?);
        }
        h += match (s.x, s.y, s.u, s.v) {
            (false, false, false, false) => 0.0,
            (true, false, false, false) => vec(self.px()),
            (false, true, false, false) => vec(self.py()),
            (false, false, true, false) => vec(&self.pu()),
            (false, false, false, true) => vec(&self.pv()),
            (true, true, false, false) => m(&self.pxy),
            (true, false, false, true) => m(self.pxv()),
            (false, true, true, false) => m(self.puy()),
            (false, false, true, true) => m(self.puv()),
            other => unreachable!("chain rule leaves no set {other:?}"),
        };
        Ok(h)
    }

    fn entropy_with_w(&self, s: Set) -> Result<f64> {
        let w = self.sum.as_ref().expect("parsed");
        let nw = w.axis.len();
        let (nx, ny, nu, nv) = (self.axes[X].len(), self.axes[Y].len(), self.axes[U].len(), self.axes[V].len());
        let col = |m: &DMatrix<f64>, j: usize| -> Vec<f64> { m.column(j).iter().copied().collect() };
        let row = |m: &DMatrix<f64>, i: usize| -> Vec<f64> { m.row(i).iter().copied().collect() };
        match (s.x, s.y) {
            (false, false) => {
                let puv = self.puv();
                let mut out = vec![0.0; nw];
                for (k, &t) in w.table.iter().enumerate() {
                    out[t] += puv[(k / nv, k % nv)];
                }
                Ok(entropy_bits(&out))
            }
            (true, false) => {
                if nx * nu * nv > MAX_WORK {
                    return Err(Error::TooLarge("H(W, X)".into()));
                }
                // Given X, U is independent of (Y, V).
                let px = self.px();
                let pxv = self.pxv();
                let mut all = Vec::with_capacity(nx * nw);
                for i in 0..nx {
                    let mut out = vec![0.0; nw];
                    if px[i] > 0.0 {
                        let pv: Vec<f64> = row(pxv, i);
                        self.convolve(&row(&self.a, i), &pv, 1.0, &mut out);
                    }
                    all.extend(out);
                }
                Ok(entropy_bits(&all))
            }
            (false, true) => {
                if ny * nu * nv > MAX_WORK {
                    return Err(Error::TooLarge("H(W, Y)".into()));
                }
                let py = self.py();
                let puy = self.puy();
                let mut all = Vec::with_capacity(ny * nw);
                for j in 0..ny {
                    let mut out = vec![0.0; nw];
                    if py[j] > 0.0 {
                        self.convolve(&col(puy, j), &row(&self.b, j), 1.0, &mut out);
                    }
                    all.extend(out);
                }
                Ok(entropy_bits(&all))
            }
            (true, true) => {
                if nx * ny * nu * nv > MAX_WORK {
                    return Err(Error::TooLarge("H(W, X, Y)".into()));
                }
                let mut all = Vec::with_capacity(nx * ny * nw);
                for i in 0..nx {
                    let pu = row(&self.a, i);
                    for j in 0..ny {
                        let mut out = vec![0.0; nw];
                        let p = self.pxy[(i, j)];
                        if p > 0.0 {
                            self.convolve(&pu, &row(&self.b, j), p, &mut out);
                        }
                        all.extend(out);
                    }
                }
                Ok(entropy_bits(&all))
            }
        }
    }

    /// `E g` over names drawn from `U, V, W`, summed on the `(U, V)` marginal.
    fn expect_uvw(&self, names: &[&str], g: &dyn Fn(&[f64]) -> f64) -> f64 {
        let w = self.sum.as_ref().expect("parsed");
        let (us, vs, ws) = (self.axes[U].points(), self.axes[V].points(), w.axis.points());
        let slot: Vec<usize> = names
            .iter()
            .map(|n| match self.axes.iter().position(|a| a.name() == *n) {
                Some(U) => 0,
                Some(V) => 1,
                _ => 2,
            })
            .collect();
        let puv = self.puv();
        let mut acc = KahanSum::new();
        let mut vals = vec![0.0; names.len()];
        for k in 0..us.len() {
            for l in 0..vs.len() {
                let q = puv[(k, l)];
                if q == 0.0 {
                    continue;
                }
                let uvw = [us[k], vs[l], ws[w.table[k * vs.len() + l]]];
                for (v, &s) in vals.iter_mut().zip(&slot) {
                    *v = uvw[s];
                }
                acc.add(q * g(&vals));
            }
        }
        acc.total()
    }

    /// Dense pmf over `X, Y, U, V` (and the sum axis, if any).
    pub fn joint(&self) -> Result<JointPmf> {
        let (nx, ny, nu, nv) = (self.axes[X].len(), self.axes[Y].len(), self.axes[U].len(), self.axes[V].len());
        let size = nx * ny * nu * nv;
        if size > MAX_DENSE {
            return Err(Error::TooLarge(format!("dense joint with {size} entries")));
        }
        let mut probs = Vec::with_capacity(size);
        for i in 0..nx {
            for j in 0..ny {
                let p = self.pxy[(i, j)];
                for k in 0..nu {
                    let pa = p * self.a[(i, k)];
                    for l in 0..nv {
                        probs.push(pa * self.b[(j, l)]);
                    }
                }
            }
        }
        JointPmf::normalized(self.axes.to_vec(), probs)
    }

    fn augmented(&self) -> Result<Augmented> {
        let mut aug = Augmented::new(self.joint()?);
        if let Some(w) = &self.sum {
            let (a, b) = (w.alpha as f64, w.beta as f64);
            aug = aug.with_derived(w.axis.name(), &[self.axes[U].name(), self.axes[V].name()], |v| {
                a * v[0] + b * v[1] + 0.0
            })?;
        }
        Ok(aug)
    }

    /// Two-variable marginal table for the pairs that have closed forms.
    fn pair(&self, s: Set) -> Option<(Vec<&Axis>, Vec<f64>)> {
        let flat = |m: &DMatrix<f64>| -> Vec<f64> {
            let mut v = Vec::with_capacity(m.len());
            for r in m.row_iter() {
                v.extend(r.iter().copied());
            }
            v
        };
        let diag = |p: &DVector<f64>, m: &DMatrix<f64>| -> Vec<f64> {
            let mut v = Vec::with_capacity(m.len());
            for (r, &w) in m.row_iter().zip(p.iter()) {
                v.extend(r.iter().map(|x| x * w));
            }
            v
        };
        let ax = &self.axes;
        Some(match (s.x, s.y, s.u, s.v, s.w) {
            (true, false, false, false, false) => (vec![&ax[X]], self.px().as_slice().to_vec()),
            (false, true, false, false, false) => (vec![&ax[Y]], self.py().as_slice().to_vec()),
            (false, false, true, false, false) => (vec![&ax[U]], self.pu().as_slice().to_vec()),
            (false, false, false, true, false) => (vec![&ax[V]], self.pv().as_slice().to_vec()),
            (true, true, false, false, false) => (vec![&ax[X], &ax[Y]], flat(&self.pxy)),
            (true, false, true, false, false) => (vec![&ax[X], &ax[U]], diag(self.px(), &self.a)),
            (false, true, false, true, false) => (vec![&ax[Y], &ax[V]], diag(self.py(), &self.b)),
            (true, false, false, true, false) => (vec![&ax[X], &ax[V]], flat(self.pxv())),
            (false, true, true, false, false) => (vec![&ax[U], &ax[Y]], flat(self.puy())),
            (false, false, true, true, false) => (vec![&ax[U], &ax[V]], flat(self.puv())),
            _ => return None,
        })
    }
}

impl InfoSource for MarkovPmf {
    fn var_names(&self) -> Vec<String> {
        self.axes().iter().map(|a| a.name().to_string()).collect()
    }

    fn entropy_of(&self, names: &[&str]) -> Result<f64> {
        let s = self.parse(names)?;
        self.entropy_set(s)
    }

    fn expect(&self, names: &[&str], g: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
        let s = self.parse(names)?;
        if s.w && !s.x && !s.y {
            return Ok(self.expect_uvw(names, g));
        }
        let Some((axes, probs)) = self.pair(s) else {
            return self.augmented()?.expect(names, g);
        };
        // `pair` yields axes in X, Y, U, V order; permute values into the caller's order.
        let order: Vec<usize> = names
            .iter()
            .map(|n| axes.iter().position(|a| a.name() == *n).expect("parsed"))
            .collect();
        let mut acc = KahanSum::new();
        let mut canon = vec![0.0; axes.len()];
        let mut vals = vec![0.0; axes.len()];
        for (flat, &q) in probs.iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            let mut r = flat;
            for k in (0..axes.len()).rev() {
                canon[k] = axes[k].points()[r % axes[k].len()];
                r /= axes[k].len();
            }
            for (v, &o) in vals.iter_mut().zip(&order) {
                *v = canon[o];
            }
            acc.add(q * g(&vals));
        }
        Ok(acc.total())
    }
}
