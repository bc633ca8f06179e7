//! Brute-force oracles shared by the property and acceptance tests.
#![allow(dead_code)]

use contnet::regions::{HalfspaceSystem, Sense};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub const BOX: f64 = 10.0;

/// Random system over `n` variables with `rows` random rows plus a box `|x_i| <= BOX`.
pub fn random_system<R: Rng>(rng: &mut R, n: usize, rows: usize) -> HalfspaceSystem {
    let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let mut h = HalfspaceSystem::new(&names).unwrap();
    for _ in 0..rows {
        let coeffs: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(-3.0..3.0) })
            .collect();
        let sense = if rng.random_bool(0.5) { Sense::Le } else { Sense::Ge };
        let b: f64 = rng.random_range(-4.0..4.0);
        let b = if sense == Sense::Le { b.abs() } else { -b.abs() };
        h.push(coeffs, sense, b, None).unwrap();
    }
    for i in 0..n {
        let mut c = vec![0.0; n];
        c[i] = 1.0;
        h.push(c.clone(), Sense::Le, BOX, None).unwrap();
        h.push(c, Sense::Ge, -BOX, None).unwrap();
    }
    h
}

/// Rows as `(a, b)` with `a·x <= b`.
pub fn le_rows(h: &HalfspaceSystem) -> Vec<(Vec<f64>, f64)> {
    h.rows()
        .iter()
        .map(|r| match r.sense {
            Sense::Le => (r.coeffs.clone(), r.bound),
            Sense::Ge => (r.coeffs.iter().map(|c| -c).collect(), -r.bound),
        })
        .collect()
}

/// Smallest slack `b - a·x` over all rows; nonnegative means membership.
pub fn min_slack(h: &HalfspaceSystem, x: &[f64]) -> f64 {
    le_rows(h)
        .iter()
        .map(|(a, b)| b - a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Best achievable smallest slack over the free coordinates `free`, with the
/// others fixed to `fixed` (in variable order, free entries ignored).
///
/// The optimum of a max-min of affine functions over a bounded polytope is
/// attained at a vertex of the slack arrangement; this enumerates candidates
/// from every choice of `d + 1` rows whose slacks are equalized.
pub fn best_slack(h: &HalfspaceSystem, free: &[usize], fixed: &[f64]) -> f64 {
    let rows = le_rows(h);
    let d = free.len();
    let reduced: Vec<(Vec<f64>, f64)> = rows
        .iter()
        .map(|(a, b)| {
            let rest: f64 = (0..a.len()).filter(|i| !free.contains(i)).map(|i| a[i] * fixed[i]).sum();
            (free.iter().map(|&i| a[i]).collect(), b - rest)
        })
        .collect();
    let slack = |x: &[f64]| {
        reduced
            .iter()
            .map(|(a, b)| b - a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    };
    if d == 0 {
        return slack(&[]);
    }
    // Unknowns (x, t): a·x + t = b on d + 1 chosen rows.
    let m = reduced.len();
    let mut best = f64::NEG_INFINITY;
    let mut idx: Vec<usize> = (0..=d).collect();
    loop {
        let mut mat = DMatrix::zeros(d + 1, d + 1);
        let mut rhs = DVector::zeros(d + 1);
        for (r, &k) in idx.iter().enumerate() {
            for c in 0..d {
                mat[(r, c)] = reduced[k].0[c];
            }
            mat[(r, d)] = 1.0;
            rhs[r] = reduced[k].1;
        }
        if let Some(sol) = mat.lu().solve(&rhs) {
            if sol.iter().all(|v| v.is_finite()) {
                let x: Vec<f64> = sol.iter().take(d).copied().collect();
                best = best.max(slack(&x));
            }
        }
        // next combination
        let mut i = d + 1;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - (d + 1 - i) {
                idx[i] += 1;
                for j in i + 1..=d {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}
