use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Cap on the BT quantization noise variances.
pub const Q_MAX: f64 = 1e8;
const Q_MIN: f64 = 1e-10;

/// A one-parameter sweep range: `steps` evenly spaced values from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepRange {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps < 2 || !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(invalid("sweep", format!("need min < max and steps >= 2, got ({min}, {max}, {steps})")));
        }
        Ok(Self { min, max, steps })
    }

    /// Range with a fixed step, including both ends.
    pub fn stepped(min: f64, max: f64, step: f64) -> Result<Self> {
        let steps = ((max - min) / step).round() as usize + 1;
        Self::new(min, max, steps)
    }

    pub fn values(&self) -> Vec<f64> {
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.min + i as f64 * h).collect()
    }
}

/// Grid over two parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub first: SweepRange,
    pub second: SweepRange,
}

pub fn sigma_z2(rho: f64, c: f64) -> f64 {
    1.0 + c * c - 2.0 * rho * c
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(invalid("rho", "must lie in [0, 1]"));
    }
    Ok(())
}

/// Lattice (structured) scheme for reconstructing `Z = X - cY`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThuLattice {
    pub sigma_z2: f64,
    /// Total quantization noise `D σ² / (σ² - D)`, shared as `q1 + q2`.
    pub q_total: f64,
    /// `(q1, R1, R2)` along the achievable curve.
    pub curve: Vec<(f64, f64, f64)>,
    /// Sum rate at the symmetric point, `log2(2σ²/D)`.
    pub symmetric_sum: f64,
}

/// Rate pair of the lattice scheme for a split `q1` of the quantization noise.
pub fn thu_lattice_rates(rho: f64, c: f64, d: f64, q1: f64) -> Result<(f64, f64)> {
    check_rho(rho)?;
    let s = sigma_z2(rho, c);
    if !(d > 0.0 && d < s) {
        return Err(invalid("D", format!("need 0 < D < σ² = {s}")));
    }
    let q_total = d * s / (s - d);
    if !(q1 > 0.0 && q1 < q_total) {
        return Err(invalid("q1", format!("must lie in (0, {q_total})")));
    }
    let r1 = 0.5 * (s * s / (q1 * (s - d))).log2();
    let r2 = 0.5 * (s * s / (d * s - q1 * (s - d))).log2();
    Ok((r1, r2))
}

/// `R2` on the frontier `2^{-2R1} + 2^{-2R2} = D/σ²`, or `None` past its end.
pub fn thu_frontier_r2(rho: f64, c: f64, d: f64, r1: f64) -> Option<f64> {
    let s = sigma_z2(rho, c);
    let rest = d / s - (-2.0 * r1).exp2();
    (rest > 0.0).then(|| -0.5 * rest.log2())
}

/// Sum rate of the lattice scheme at its symmetric point; 0 once `D >= σ²`.
pub fn thu_lattice_sum(rho: f64, c: f64, d: f64) -> f64 {
    let s = sigma_z2(rho, c);
    if d >= s {
        0.0
    } else {
        (2.0 * s / d).log2()
    }
}

pub fn thu_lattice(rho: f64, c: f64, d: f64, points: usize) -> Result<ThuLattice> {
    check_rho(rho)?;
    if !(d > 0.0) {
        return Err(invalid("D", "must be positive"));
    }
    let s = sigma_z2(rho, c);
    if d >= s {
        return Ok(ThuLattice {
            sigma_z2: s,
            q_total: f64::INFINITY,
            curve: Vec::new(),
            symmetric_sum: 0.0,
        });
    }
    let q_total = d * s / (s - d);
    let curve = (1..=points)
        .map(|i| {
            let q1 = q_total * i as f64 / (points + 1) as f64;
            let (r1, r2) = thu_lattice_rates(rho, c, d, q1)?;
            Ok((q1, r1, r2))
        })
        .collect::<Result<_>>()?;
    Ok(ThuLattice {
        sigma_z2: s,
        q_total,
        curve,
        symmetric_sum: thu_lattice_sum(rho, c, d),
    })
}

/// The BT rows for quantization noises `(q1, q2)`: `(R1, R2, R1+R2, D)`.
pub fn bt_rows(rho: f64, c: f64, q1: f64, q2: f64) -> (f64, f64, f64, f64) {
    let alpha = 1.0 - rho * rho;
    let s = sigma_z2(rho, c);
    let den = (1.0 + q1) * (1.0 + q2) - rho * rho;
    let r1 = 0.5 * (den / (q1 * (1.0 + q2))).log2();
    let r2 = 0.5 * (den / (q2 * (1.0 + q1))).log2();
    let sum = 0.5 * (den / (q1 * q2)).log2();
    let dist = (q1 * alpha + q2 * c * c * alpha + q1 * q2 * s) / den;
    (r1, r2, sum, dist)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BtOptimum {
    pub sum_rate: f64,
    pub q1: f64,
    pub q2: f64,
}

/// Largest feasible `q2` for a given `q1`; the sum rate falls in `q2`.
fn best_q2(rho: f64, c: f64, d: f64, q1: f64) -> Option<f64> {
    let alpha = 1.0 - rho * rho;
    let s = sigma_z2(rho, c);
    // D(q2) = (a + b q2) / (m + e q2)
    let a = q1 * alpha;
    let b = c * c * alpha + q1 * s;
    let m = 1.0 + q1 - rho * rho;
    let e = 1.0 + q1;
    let slope = b - d * e;
    let room = d * m - a;
    if slope <= 0.0 {
        if room >= 0.0 || slope < 0.0 {
            Some(Q_MAX)
        } else {
            None
        }
    } else if room > 0.0 {
        Some((room / slope).min(Q_MAX))
    } else {
        None
    }
}

fn sum_at(rho: f64, c: f64, d: f64, lq1: f64) -> f64 {
    let q1 = lq1.exp();
    match best_q2(rho, c, d, q1) {
        Some(q2) => bt_rows(rho, c, q1, q2).2,
        None => f64::INFINITY,
    }
}

/// Minimum BT sum rate meeting distortion `D` for `Z = X - cY`.
///
/// For each `q1` the optimal `q2` is found in closed form (the distortion is
/// linear-fractional in `q2` and the sum rate decreasing), so the search is a
/// log-grid over `q1` followed by golden-section refinement.
pub fn thu_bt_min_sumrate(rho: f64, c: f64, d: f64) -> Result<BtOptimum> {
    check_rho(rho)?;
    if !(d > 0.0) {
        return Err(invalid("D", "must be positive"));
    }
    const GRID: usize = 801;
    let (lo, hi) = (Q_MIN.ln(), Q_MAX.ln());
    let h = (hi - lo) / (GRID - 1) as f64;
    let mut best = (f64::INFINITY, 0usize);
    for i in 0..GRID {
        let v = sum_at(rho, c, d, lo + i as f64 * h);
        if v < best.0 {
            best = (v, i);
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Infeasible);
    }
    let (mut a, mut b) = (lo + best.1.saturating_sub(1) as f64 * h, lo + (best.1 + 1).min(GRID - 1) as f64 * h);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (sum_at(rho, c, d, x1), sum_at(rho, c, d, x2));
    for _ in 0..100 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = sum_at(rho, c, d, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = sum_at(rho, c, d, x2);
        }
    }
    let (lq, v) = [(x1, f1), (x2, f2), (lo + best.1 as f64 * h, best.0)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .expect("nonempty");
    let q1 = lq.exp();
    let q2 = best_q2(rho, c, d, q1).ok_or(Error::Infeasible)?;
    Ok(BtOptimum {
        sum_rate: v.max(0.0),
        q1,
        q2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainCell {
    pub rho: f64,
    pub c: f64,
    pub gain_bits: f64,
}

/// Per `(ρ, c)`: the largest lattice gain over the distortion schedule,
/// `max_D (BT min-sum - lattice sum)` floored at 0.
pub fn thu_gain_sweep(grid: &SweepGrid, distortions: &[f64]) -> Result<Vec<GainCell>> {
    let rhos = grid.first.values();
    let cs = grid.second.values();
    let cells: Vec<(f64, f64)> = rhos.iter().flat_map(|&r| cs.iter().map(move |&c| (r, c))).collect();
    cells
        .par_iter()
        .map(|&(rho, c)| {
            let mut gain = 0.0f64;
            for &d in distortions {
                let bt = thu_bt_min_sumrate(rho, c, d)?.sum_rate;
                gain = gain.max(bt - thu_lattice_sum(rho, c, d));
            }
            Ok(GainCell {
                rho,
                c,
                gain_bits: gain,
            })
        })
        .collect()
}

pub fn gain_csv(cells: &[GainCell]) -> String {
    let mut s = String::from("rho,c,gain_bits\n");
    for g in cells {
        s.push_str(&format!("{},{},{}\n", fmt_num(g.rho), fmt_num(g.c), g.gain_bits));
    }
    s
}

/// Grid values rounded to 12 significant places so CSV keys are stable.
pub(crate) fn fmt_num(v: f64) -> String {
    let r = (v * 1e12).round() / 1e12;
    format!("{}", r + 0.0)
}
