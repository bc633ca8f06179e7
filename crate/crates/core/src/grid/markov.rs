use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::discretize::{cell_boundaries, cell_nodes, discretize_2d};
use super::{cells, grid_axis, AxisSpec, ClipMode, Density1D, Density2D, SmoothSpec};
use crate::error::{invalid, Result};
use crate::numeric::KahanSum;
use crate::prob::{JointPmf, MarkovPmf};

const PANEL: f64 = 1.0 / 64.0;

/// `out = gain * in + offset + noise`; no noise means a deterministic map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearChannel {
    pub gain: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub noise: Option<Density1D>,
}

impl LinearChannel {
    pub fn additive(gain: f64, noise_sd: f64) -> Result<Self> {
        Ok(Self {
            gain,
            offset: 0.0,
            noise: Some(Density1D::gaussian(0.0, noise_sd)?),
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            gain: 0.0,
            offset: value,
            noise: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.offset.is_finite()) {
            return Err(invalid("gain", "gain and offset must be finite"));
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        Ok(())
    }

    fn cdf(&self, z: f64) -> f64 {
        match &self.noise {
            Some(n) => n.cdf(z),
            None => {
                if z >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn cdf_int(&self, z: f64) -> f64 {
        match &self.noise {
            Some(n) => n.cdf_integral(z),
            None => z.max(0.0),
        }
    }
}

/// Source density with forward channels `U | X` and `V | Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovModel {
    pub source: Density2D,
    pub u: LinearChannel,
    pub v: LinearChannel,
}

impl MarkovModel {
    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.u.validate()?;
        self.v.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovGrids {
    pub x: AxisSpec,
    pub y: AxisSpec,
    pub u: AxisSpec,
    pub v: AxisSpec,
    /// Smoothing of the auxiliaries before quantization; `None` quantizes them directly.
    #[serde(default)]
    pub smooth: Option<SmoothSpec>,
}

/// Discretizes `U - X - Y - V` keeping the factorization `P(X,Y) P(U|X) P(V|Y)`.
pub fn discretize_markov_factored(m: &MarkovModel, g: &MarkovGrids, names: [&str; 4]) -> Result<MarkovPmf> {
    m.validate()?;
    let (pxy, _) = discretize_2d(&m.source, &g.x, &g.y, [names[0], names[1]])?;
    let nx = pxy.axes()[0].len();
    let ny = pxy.axes()[1].len();
    let pxy_m = DMatrix::from_row_slice(nx, ny, pxy.probs());
    let a = channel_matrix(&m.source.marginal_x(), &m.u, &g.x, &g.u, g.smooth)?;
    let b = channel_matrix(&m.source.marginal_y(), &m.v, &g.y, &g.v, g.smooth)?;
    MarkovPmf::new(
        [
            pxy.axes()[0].clone(),
            pxy.axes()[1].clone(),
            grid_axis(names[2], &g.u.clip, &g.u.grid)?,
            grid_axis(names[3], &g.v.clip, &g.v.grid)?,
        ],
        pxy_m,
        a,
        b,
    )
}

/// Dense four-axis version; only for small grids.
pub fn discretize_markov(m: &MarkovModel, g: &MarkovGrids, names: [&str; 4]) -> Result<JointPmf> {
    discretize_markov_factored(m, g, names)?.joint()
}

/// `P(Û = j | X̂ = i)` averaged over each input cell with weight `f_X`.
fn channel_matrix(
    fx: &Density1D,
    ch: &LinearChannel,
    sx: &AxisSpec,
    su: &AxisSpec,
    smooth: Option<SmoothSpec>,
) -> Result<DMatrix<f64>> {
    let cx = cells(&sx.clip, &sx.grid)?;
    let cu = cells(&su.clip, &su.grid)?;
    let full = AxisSpec {
        clip: super::ClipSpec { mode: ClipMode::Saturate, ..su.clip },
        grid: su.grid,
    };
    let ub = cell_boundaries(&cu, &full);
    let nu = cu.len();
    let support = fx.support();
    let bps = fx.breakpoints();
    let panel = PANEL.min(sx.grid.step());
    let law = AuxLaw {
        ch,
        lo: -su.clip.lower,
        hi: su.clip.upper,
        mode: su.clip.mode,
        eps: smooth.map(|s| s.eps),
    };
    // Per input cell: in-window row mass, out-of-window mass, total weight.
    let parts: Vec<(Vec<f64>, f64, f64)> = cx
        .par_iter()
        .map(|c| {
            let (mut a, mut b) = (c.lo.max(support.0), c.hi.min(support.1));
            if sx.clip.mode == ClipMode::Redraw {
                a = a.max(-sx.clip.lower);
                b = b.min(sx.clip.upper);
            }
            let mut nodes: Vec<(f64, f64)> = cell_nodes(a, b, &bps, panel)
                .into_iter()
                .map(|(t, w)| (t, w * fx.pdf(t)))
                .collect();
            if nodes.iter().all(|n| n.1 <= 0.0) {
                nodes = vec![(c.point.clamp(support.0, support.1), 1.0)];
            }
            let mut row = vec![KahanSum::new(); nu];
            let mut out = KahanSum::new();
            let mut tot = KahanSum::new();
            let mut s = vec![0.0; ub.len()];
            for (t, w) in nodes {
                let mean = ch.gain * t + ch.offset;
                for (v, &bnd) in s.iter_mut().zip(&ub) {
                    *v = law.below(bnd, mean);
                }
                for j in 0..nu {
                    row[j].add(w * (s[j + 1] - s[j]).max(0.0));
                }
                out.add(w * law.outside(mean));
                tot.add(w);
            }
            (row.iter().map(KahanSum::total).collect(), out.total(), tot.total())
        })
        .collect();
    let mut redraw = vec![KahanSum::new(); nu];
    for (row, _, _) in &parts {
        for (r, v) in redraw.iter_mut().zip(row) {
            r.add(*v);
        }
    }
    let redraw: Vec<f64> = redraw.iter().map(KahanSum::total).collect();
    let rsum: f64 = KahanSum::from_iter(redraw.iter().copied()).total();
    let mut m = DMatrix::zeros(cx.len(), nu);
    for (i, (row, out, tot)) in parts.iter().enumerate() {
        let mut acc = KahanSum::new();
        for j in 0..nu {
            let extra = if rsum > 0.0 { out * redraw[j] / rsum } else { 0.0 };
            let v = (row[j] + extra) / tot;
            m[(i, j)] = v;
            acc.add(v);
        }
        let s = acc.total();
        if s > 0.0 {
            for j in 0..nu {
                m[(i, j)] /= s;
            }
        }
    }
    Ok(m)
}

/// Law of the clipped (and optionally smoothed) auxiliary given the channel mean.
struct AuxLaw<'a> {
    ch: &'a LinearChannel,
    lo: f64,
    hi: f64,
    mode: ClipMode,
    eps: Option<f64>,
}

impl AuxLaw<'_> {
    /// In-window mass at or below `c`: `P(C(U) + N <= c)` for saturate,
    /// `P(U in W, U + N <= c)` for redraw.
    fn below(&self, c: f64, m: f64) -> f64 {
        match self.eps {
            None => match self.mode {
                ClipMode::Saturate => {
                    if c == f64::INFINITY {
                        1.0
                    } else if c == f64::NEG_INFINITY {
                        0.0
                    } else {
                        self.ch.cdf(c - m)
                    }
                }
                ClipMode::Redraw => {
                    let cc = c.clamp(self.lo, self.hi);
                    self.ch.cdf(cc - m) - self.ch.cdf(self.lo - m)
                }
            },
            Some(eps) => {
                if c == f64::INFINITY {
                    return match self.mode {
                        ClipMode::Saturate => 1.0,
                        ClipMode::Redraw => self.in_window(m),
                    };
                }
                if c == f64::NEG_INFINITY {
                    return 0.0;
                }
                self.integral(c - eps, c + eps, m) / (2.0 * eps)
            }
        }
    }

    fn in_window(&self, m: f64) -> f64 {
        self.ch.cdf(self.hi - m) - self.ch.cdf(self.lo - m)
    }

    fn outside(&self, m: f64) -> f64 {
        match self.mode {
            ClipMode::Saturate => 0.0,
            ClipMode::Redraw => (1.0 - self.in_window(m)).max(0.0),
        }
    }

    /// `∫_p^q H(s) ds` where `H` is the CDF-like function of the clipped variable.
    fn integral(&self, p: f64, q: f64, m: f64) -> f64 {
        let a = p.max(self.lo);
        let b = q.min(self.hi);
        let mut acc = 0.0;
        if a < b {
            acc += self.ch.cdf_int(b - m) - self.ch.cdf_int(a - m);
            if self.mode == ClipMode::Redraw {
                acc -= self.ch.cdf(self.lo - m) * (b - a);
            }
        }
        let top = (q - p.max(self.hi)).max(0.0);
        acc += top
            * match self.mode {
                ClipMode::Saturate => 1.0,
                ClipMode::Redraw => self.in_window(m),
            };
        acc
    }
}
