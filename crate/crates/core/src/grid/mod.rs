//! Clipping, smoothing and quantization of continuous laws onto dyadic grids.

mod density;
mod discretize;
mod markov;

pub use density::{Density1D, Density2D};
pub use discretize::{
    discretize_1d, discretize_1d_report, discretize_2d, histogram_discretize, DiscretizeReport,
};
pub use markov::{discretize_markov, discretize_markov_factored, LinearChannel, MarkovGrids, MarkovModel};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::prob::Axis;

pub const MAX_N: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClipMode {
    /// Values outside the window are moved to the nearest endpoint.
    Saturate,
    /// Out-of-window mass is replaced by the renormalized in-window law.
    Redraw,
}

/// Window `[-lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipSpec {
    pub lower: f64,
    pub upper: f64,
    pub mode: ClipMode,
}

impl ClipSpec {
    pub fn new(lower: f64, upper: f64, mode: ClipMode) -> Result<Self> {
        if !(lower > 0.0 && lower.is_finite()) {
            return Err(invalid("lower", "must be positive and finite"));
        }
        if !(upper > 0.0 && upper.is_finite()) {
            return Err(invalid("upper", "must be positive and finite"));
        }
        Ok(Self { lower, upper, mode })
    }

    pub fn symmetric(l: f64, mode: ClipMode) -> Result<Self> {
        Self::new(l, l, mode)
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= -self.lower && s <= self.upper
    }
}

/// Cell width `2^-n`; ties in quantization round toward `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: u32,
}

impl GridSpec {
    pub fn new(n: u32) -> Result<Self> {
        if n > MAX_N {
            return Err(invalid("n", format!("must be at most {MAX_N}")));
        }
        Ok(Self { n })
    }

    pub fn step(&self) -> f64 {
        (-(self.n as f64)).exp2()
    }

    pub fn scale(&self) -> f64 {
        (self.n as f64).exp2()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothSpec {
    pub eps: f64,
}

impl SmoothSpec {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid("eps", "must be positive and finite"));
        }
        Ok(Self { eps })
    }
}

/// Saturating clip. Redraw acts on laws, not on points, so it is rejected here.
pub fn clip(s: f64, c: &ClipSpec) -> Result<f64> {
    match c.mode {
        ClipMode::Saturate => Ok(s.min(c.upper).max(-c.lower)),
        ClipMode::Redraw => Err(Error::Unsupported(
            "redraw clipping applies to distributions, not points".into(),
        )),
    }
}

const MAX_INDEX: f64 = 4_503_599_627_370_496.0; // 2^52

pub fn quantize_index(s: f64, g: &GridSpec) -> Result<i64> {
    let k = (s * g.scale() + 0.5).floor();
    if !k.is_finite() || k.abs() > MAX_INDEX {
        return Err(invalid("s", format!("grid index overflow for {s}")));
    }
    Ok(k as i64)
}

pub fn quantize(s: f64, g: &GridSpec) -> Result<f64> {
    Ok(quantize_index(s, g)? as f64 * g.step() + 0.0)
}

/// One discretization cell around grid point `index * 2^-n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: i64,
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Grid index range `ceil(-l 2^n) ..= floor(u 2^n)` covered by the window.
pub fn index_range(c: &ClipSpec, g: &GridSpec) -> Result<(i64, i64)> {
    let lo = (-c.lower * g.scale()).ceil();
    let hi = (c.upper * g.scale()).floor();
    if !(lo.abs() <= MAX_INDEX && hi.abs() <= MAX_INDEX) {
        return Err(invalid("n", "grid index overflow"));
    }
    if hi <= lo {
        return Err(invalid("clip", "window narrower than one cell"));
    }
    Ok((lo as i64, hi as i64))
}

/// Cells partitioning the real line, one per grid point in the window.
///
/// Interior cells are `(p - h/2, p + h/2)`; the two end cells are unbounded.
/// Cell boundaries carry zero mass under the densities used here, so
/// open/closed ends only matter for `quantize`, which rounds ties upward.
pub fn cells(c: &ClipSpec, g: &GridSpec) -> Result<Vec<Cell>> {
    let (k_lo, k_hi) = index_range(c, g)?;
    let h = g.step();
    Ok((k_lo..=k_hi)
        .map(|k| {
            let point = k as f64 * h + 0.0;
            Cell {
                index: k,
                point,
                lo: if k == k_lo { f64::NEG_INFINITY } else { (k as f64 - 0.5) * h },
                hi: if k == k_hi { f64::INFINITY } else { (k as f64 + 0.5) * h },
            }
        })
        .collect())
}

/// Largest cell index when cells are numbered from zero, as in the printed
/// cell equations; the number of cells is one more.
pub fn last_cell_index(c: &ClipSpec, g: &GridSpec) -> Result<i64> {
    let (lo, hi) = index_range(c, g)?;
    Ok(hi - lo)
}

pub fn grid_axis(name: &str, c: &ClipSpec, g: &GridSpec) -> Result<Axis> {
    let (lo, hi) = index_range(c, g)?;
    Axis::grid(name, g.n, lo, hi)
}

/// Convolution with uniform noise on `[-eps, eps]`.
pub fn smooth(d: &Density1D, s: &SmoothSpec) -> Density1D {
    Density1D::Smoothed {
        base: Box::new(d.clone()),
        eps: s.eps,
    }
}

/// Clip window and grid for one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub clip: ClipSpec,
    pub grid: GridSpec,
}

impl AxisSpec {
    pub fn new(clip: ClipSpec, grid: GridSpec) -> Self {
        Self { clip, grid }
    }

    pub fn symmetric(l: f64, n: u32, mode: ClipMode) -> Result<Self> {
        Ok(Self {
            clip: ClipSpec::symmetric(l, mode)?,
            grid: GridSpec::new(n)?,
        })
    }
}
