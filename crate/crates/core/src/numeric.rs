//! Small numerical kernels shared by the discretization and optimization code.

use crate::error::{Error, Result};

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn ksum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = KahanSum::new();
    for x in it {
        acc.add(x);
    }
    acc.total()
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature with an absolute tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature { a, b });
    }
    if b <= a {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Quadrature { a, b });
    }
    // Converged, or the interval has shrunk to rounding width around a jump.
    if delta.abs() <= 15.0 * tol || (b - a) <= 1e-13 * a.abs().max(b.abs()).max(1.0) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature { a, b });
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?;
    Ok(l + r)
}

/// Adaptive Simpson over `[a, b]` split at the given interior breakpoints.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut acc = KahanSum::new();
    let mut lo = a;
    let share = tol / (pts.len() + 1) as f64;
    for &p in pts.iter().chain(std::iter::once(&b)) {
        acc.add(adaptive_simpson(f, lo, p, share)?);
        lo = p;
    }
    Ok(acc.total())
}

const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Composite 5-point Gauss-Legendre nodes on `[a, b]` with panels no wider than `h`.
pub fn gauss_nodes(a: f64, b: f64, h: f64) -> Vec<(f64, f64)> {
    if b <= a {
        return Vec::new();
    }
    let panels = ((b - a) / h).ceil().max(1.0) as usize;
    let w = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * 5);
    for p in 0..panels {
        let lo = a + w * p as f64;
        let mid = lo + 0.5 * w;
        for k in 0..5 {
            out.push((mid + 0.5 * w * GL5_X[k], 0.5 * w * GL5_W[k]));
        }
    }
    out
}

/// Entropy in bits of a nonnegative weight vector that sums to one.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &q in probs {
        if q > 0.0 {
            acc.add(-q * q.log2());
        }
    }
    acc.total()
}

/// MI values within this distance below zero are rounding noise and clamp to zero.
pub const MI_CLAMP: f64 = 1e-12;

pub fn clamp_mi(v: f64) -> f64 {
    if (-MI_CLAMP..0.0).contains(&v) {
        0.0
    } else {
        v
    }
}

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut v = vec![1.0];
        v.extend(std::iter::repeat_n(1e-16, 10_000));
        assert!((ksum(v) - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn simpson_polynomial_exact() {
        let r = adaptive_simpson(&|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 0.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_gaussian_mass() {
        let r = adaptive_simpson(&norm_pdf, -1.0, 1.0, 1e-12).unwrap();
        assert!((r - 0.682_689_492_137_085_9).abs() < 1e-11);
    }

    #[test]
    fn gauss_nodes_integrate_cubic() {
        let s: f64 = gauss_nodes(-1.0, 3.0, 0.7)
            .iter()
            .map(|&(t, w)| w * t.powi(3))
            .sum();
        assert!((s - 20.0).abs() < 1e-12);
    }

    #[test]
    fn norm_cdf_reference() {
        let v = norm_cdf(1.0);
        assert!((v - 0.841_344_746_068_542_9).abs() < 1e-15, "{v}");
        assert!(norm_cdf(-40.0) >= 0.0);
    }
}
