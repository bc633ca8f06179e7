use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::thu::SweepRange;
use crate::error::{invalid, Result};

/// Which third-order row to use in the unstructured conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CubicRow {
    /// `(P+1)^3 <= (a²+1)P + 1`, as printed.
    Printed,
    /// `(P+1)^3 <= (2a²+1)P + 1`, the three-user sum-rate row of `Y1 = X1 + aX2 + aX3 + Z1`.
    Corrected,
}

fn le(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + 1e-12)
}

/// User 1 reaches its interference-free capacity with coset codes:
/// `(P+1)/a² <= 2P/(1+2P)`.
pub fn ic_structured_feasible(a: f64, p: f64) -> bool {
    le((p + 1.0) * (1.0 + 2.0 * p), 2.0 * p * a * a)
}

/// The structured bound on `R1` in its `min{0, ·}` form.
pub fn ic_structured_r1_bound(a: f64, p: f64) -> f64 {
    let cap = 0.5 * (1.0 + p).log2();
    cap + (0.5 * (0.5 + a * a * p / (p + 1.0)).log2() - cap).min(0.0)
}

/// All three users reach capacity when receiver 1 decodes `X2` and `X3` first.
pub fn ic_unstructured_feasible(a: f64, p: f64, cubic: CubicRow) -> bool {
    let a2 = a * a;
    let x = p + 1.0;
    let third = match cubic {
        CubicRow::Printed => (a2 + 1.0) * p + 1.0,
        CubicRow::Corrected => (2.0 * a2 + 1.0) * p + 1.0,
    };
    le(x, a2 * p + 1.0)
        && le(x * x, 2.0 * a2 * p + 1.0)
        && le(x * x, (a2 + 1.0) * p + 1.0)
        && le(x * x * x, third)
}

#[derive(Debug, Clone, Serialize)]
pub struct IcMask {
    /// `cells[i][j]` is the verdict at `(a_i, P_j)`.
    pub cells: Vec<Vec<bool>>,
    /// Smallest feasible `P` per `a`.
    pub min_p: Vec<Option<f64>>,
    /// Smallest `a` with any feasible `P`.
    pub min_a: Option<f64>,
    pub area: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct IcMasks {
    pub a: Vec<f64>,
    pub p: Vec<f64>,
    pub structured: IcMask,
    pub unstructured: IcMask,
}

fn mask<F: Fn(f64, f64) -> bool + Sync>(a: &[f64], p: &[f64], f: F) -> IcMask {
    let cells: Vec<Vec<bool>> = a.par_iter().map(|&ai| p.iter().map(|&pj| f(ai, pj)).collect()).collect();
    let min_p: Vec<Option<f64>> = cells
        .iter()
        .map(|row| row.iter().position(|&b| b).map(|j| p[j]))
        .collect();
    let min_a = min_p.iter().position(Option::is_some).map(|i| a[i]);
    let area = cells.iter().map(|r| r.iter().filter(|&&b| b).count()).sum();
    IcMask {
        cells,
        min_p,
        min_a,
        area,
    }
}

/// Feasibility masks over an `(a, P)` grid for the structured and unstructured schemes.
pub fn ic_gaussian_masks(a: &SweepRange, p: &SweepRange, cubic: CubicRow) -> Result<IcMasks> {
    if a.min <= 0.0 || p.min <= 0.0 {
        return Err(invalid("grid", "a and P must be positive"));
    }
    let av = a.values();
    let pv = p.values();
    Ok(IcMasks {
        structured: mask(&av, &pv, ic_structured_feasible),
        unstructured: mask(&av, &pv, |x, y| ic_unstructured_feasible(x, y, cubic)),
        a: av,
        p: pv,
    })
}

/// Closed-form smallest `a` for the structured scheme, `sqrt(3/2 + sqrt 2)`.
pub fn ic_structured_min_a() -> f64 {
    (1.5 + 2f64.sqrt()).sqrt()
}
