use rayon::prelude::*;

use super::{cells, grid_axis, quantize_index, AxisSpec, Cell, ClipMode, Density1D, Density2D};
use crate::error::{invalid, Error, Result};
use crate::numeric::{gauss_nodes, integrate_pieces, KahanSum};
use crate::prob::{Axis, JointPmf};

/// Absolute quadrature tolerance per cell.
pub const CELL_TOL: f64 = 1e-10;

/// Widest Gauss-Legendre panel used for cell integrals in two dimensions.
const PANEL: f64 = 1.0 / 64.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizeReport {
    /// Mass captured before renormalization.
    pub raw_mass: f64,
    /// `1 - raw_mass`: tail beyond the declared support plus window loss in redraw mode.
    pub discarded: f64,
}

/// Integration interval of a cell after intersecting with the support and,
/// in redraw mode, the clip window.
fn cell_interval(cell: &Cell, spec: &AxisSpec, support: (f64, f64)) -> (f64, f64) {
    let (mut a, mut b) = (cell.lo.max(support.0), cell.hi.min(support.1));
    if spec.clip.mode == ClipMode::Redraw {
        a = a.max(-spec.clip.lower);
        b = b.min(spec.clip.upper);
    }
    (a, b)
}

pub fn discretize_1d(d: &Density1D, spec: &AxisSpec, name: &str) -> Result<JointPmf> {
    Ok(discretize_1d_report(d, spec, name)?.0)
}

pub fn discretize_1d_report(
    d: &Density1D,
    spec: &AxisSpec,
    name: &str,
) -> Result<(JointPmf, DiscretizeReport)> {
    d.validate()?;
    let cs = cells(&spec.clip, &spec.grid)?;
    let support = d.support();
    let bps = d.breakpoints();
    let masses = cs
        .par_iter()
        .map(|c| {
            let (a, b) = cell_interval(c, spec, support);
            integrate_pieces(&|t| d.pdf(t), a, b, &bps, CELL_TOL)
        })
        .collect::<Result<Vec<f64>>>()?;
    finish(vec![grid_axis(name, &spec.clip, &spec.grid)?], masses)
}

fn finish(axes: Vec<Axis>, mut masses: Vec<f64>) -> Result<(JointPmf, DiscretizeReport)> {
    for m in &mut masses {
        *m = m.max(0.0);
    }
    let raw: f64 = KahanSum::from_iter(masses.iter().copied()).total();
    if !(raw > 0.0) {
        return Err(Error::EmptyWindow);
    }
    let p = JointPmf::normalized(axes, masses)?;
    Ok((
        p,
        DiscretizeReport {
            raw_mass: raw,
            discarded: 1.0 - raw,
        },
    ))
}

/// Gauss-Legendre nodes over `[a, b]`, split at breakpoints.
pub(crate) fn cell_nodes(a: f64, b: f64, bps: &[f64], panel: f64) -> Vec<(f64, f64)> {
    if !(b > a) {
        return Vec::new();
    }
    let mut cuts: Vec<f64> = bps.iter().copied().filter(|&t| t > a && t < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::new();
    let mut lo = a;
    for &c in cuts.iter().chain(std::iter::once(&b)) {
        out.extend(gauss_nodes(lo, c, panel.min(c - lo)));
        lo = c;
    }
    out
}

pub(crate) fn cell_boundaries(cs: &[Cell], spec: &AxisSpec) -> Vec<f64> {
    let mut b: Vec<f64> = cs.iter().map(|c| c.lo).collect();
    b.push(cs[cs.len() - 1].hi);
    if spec.clip.mode == ClipMode::Redraw {
        for v in &mut b {
            *v = v.clamp(-spec.clip.lower, spec.clip.upper);
        }
    }
    b
}

/// Joint pmf of `(X, Y)` on the two grids.
///
/// Each cell mass is `∫_{x cell} f_X(t) [F(b|t) - F(a|t)] dt` with the
/// conditional CDF in closed form and composite Gauss-Legendre in `t`.
/// Redraw mode renormalizes over the window rectangle.
pub fn discretize_2d(
    d: &Density2D,
    sx: &AxisSpec,
    sy: &AxisSpec,
    names: [&str; 2],
) -> Result<(JointPmf, DiscretizeReport)> {
    d.validate()?;
    let cx = cells(&sx.clip, &sx.grid)?;
    let cy = cells(&sy.clip, &sy.grid)?;
    let yb = cell_boundaries(&cy, sy);
    let mx = d.marginal_x();
    let support = mx.support();
    let bps = mx.breakpoints();
    let ny = cy.len();
    let panel = PANEL.min(sx.grid.step());
    let rows: Vec<Vec<f64>> = cx
        .par_iter()
        .map(|c| {
            let (a, b) = cell_interval(c, sx, support);
            let mut acc = vec![KahanSum::new(); ny];
            let mut vals = vec![0.0; yb.len()];
            for (t, w) in cell_nodes(a, b, &bps, panel) {
                for (v, &y) in vals.iter_mut().zip(&yb) {
                    *v = d.x_density_y_cdf(t, y);
                }
                for j in 0..ny {
                    acc[j].add(w * (vals[j + 1] - vals[j]));
                }
            }
            acc.iter().map(KahanSum::total).collect()
        })
        .collect();
    let masses = rows.into_iter().flatten().collect();
    finish(
        vec![
            grid_axis(names[0], &sx.clip, &sx.grid)?,
            grid_axis(names[1], &sy.clip, &sy.grid)?,
        ],
        masses,
    )
}

/// Empirical pmf of samples mapped through clip and quantize.
///
/// Saturate mode clips each coordinate; redraw mode drops samples that leave
/// the window, which is the empirical version of renormalizing in-window mass.
pub fn histogram_discretize(samples: &[Vec<f64>], specs: &[AxisSpec], names: &[&str]) -> Result<JointPmf> {
    if samples.is_empty() {
        return Err(invalid("samples", "empty sample list"));
    }
    if specs.len() != names.len() {
        return Err(Error::Dimension {
            expected: specs.len(),
            got: names.len(),
        });
    }
    let ranges = specs
        .iter()
        .map(|s| super::index_range(&s.clip, &s.grid))
        .collect::<Result<Vec<_>>>()?;
    let dims: Vec<usize> = ranges.iter().map(|(a, b)| (b - a + 1) as usize).collect();
    let mut counts = vec![0u64; dims.iter().product()];
    let mut kept = 0u64;
    'outer: for s in samples {
        if s.len() != specs.len() {
            return Err(Error::Dimension {
                expected: specs.len(),
                got: s.len(),
            });
        }
        let mut flat = 0usize;
        for (k, (&x, spec)) in s.iter().zip(specs).enumerate() {
            let c = &spec.clip;
            if c.mode == ClipMode::Redraw && !c.contains(x) {
                continue 'outer;
            }
            let clipped = x.min(c.upper).max(-c.lower);
            let q = quantize_index(clipped, &spec.grid)?.clamp(ranges[k].0, ranges[k].1);
            flat = flat * dims[k] + (q - ranges[k].0) as usize;
        }
        counts[flat] += 1;
        kept += 1;
    }
    if kept == 0 {
        return Err(Error::EmptyWindow);
    }
    let axes = specs
        .iter()
        .zip(names)
        .map(|(s, n)| grid_axis(n, &s.clip, &s.grid))
        .collect::<Result<Vec<_>>>()?;
    JointPmf::normalized(axes, counts.into_iter().map(|c| c as f64 / kept as f64).collect())
}
