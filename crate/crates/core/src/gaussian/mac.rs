use serde::Serialize;

use crate::error::{invalid, Result};
use crate::regions::{HalfspaceSystem, Sense};

/// Sums closer than this are reported as equal.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct MacComparison {
    pub unstructured: HalfspaceSystem,
    pub structured: HalfspaceSystem,
    pub unstructured_sum: f64,
    pub structured_sum: f64,
    /// Structured sum rate strictly exceeds the unstructured one.
    pub crossover: bool,
    /// The algebraic condition `(1+P1/P2)(1+P2/P1) <= 1 + P1/N + P2/N`.
    pub printed_condition: bool,
}

/// Gaussian MAC `Y = X1 + X2 + N(0, N)`: the standard region against the
/// region obtained by decoding the sum with lattice codes.
pub fn mac_gaussian(p1: f64, p2: f64, n: f64) -> Result<MacComparison> {
    for (name, v) in [("P1", p1), ("P2", p2), ("N", n)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(name, "must be positive"));
        }
    }
    let half_log = |x: f64| 0.5 * x.log2();
    let mut u = HalfspaceSystem::new(&["R1", "R2"])?;
    u.add(&[("R1", 1.0)], Sense::Le, half_log(1.0 + p1 / n), "R1")?;
    u.add(&[("R2", 1.0)], Sense::Le, half_log(1.0 + p2 / n), "R2")?;
    u.add(&[("R1", 1.0), ("R2", 1.0)], Sense::Le, half_log(1.0 + (p1 + p2) / n), "R1+R2")?;
    let mut s = HalfspaceSystem::new(&["R1", "R2"])?;
    let total = p1 + p2;
    let b1 = half_log(p1 * (total + n) / (total * n)).max(0.0);
    let b2 = half_log(p2 * (total + n) / (total * n)).max(0.0);
    s.add(&[("R1", 1.0)], Sense::Le, b1, "R1")?;
    s.add(&[("R2", 1.0)], Sense::Le, b2, "R2")?;
    let unstructured_sum = u.max_sum_rate()?;
    let structured_sum = s.max_sum_rate()?;
    let lhs = (1.0 + p1 / p2) * (1.0 + p2 / p1);
    let rhs = 1.0 + p1 / n + p2 / n;
    Ok(MacComparison {
        unstructured: u,
        structured: s,
        unstructured_sum,
        structured_sum,
        crossover: structured_sum > unstructured_sum + TIE_TOL,
        printed_condition: lhs <= rhs * (1.0 + 1e-12),
    })
}
