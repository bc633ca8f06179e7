//! Numerical checks of the discretization and clipping limits: MI traces along
//! refinement schedules, smoothing, the Markov-forcing lemma and the clipped
//! variational-distance identity.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{
    cells, discretize_2d, discretize_markov_factored, grid_axis, AxisSpec, ClipMode, ClipSpec, Density1D, Density2D,
    GridSpec, MarkovGrids, MarkovModel, SmoothSpec,
};
use crate::numeric::{gauss_nodes, KahanSum};
use crate::prob::{marginal, Axis, InfoSource, JointPmf, RandomVarGroup};

#[cfg(test)]
mod tests;

/// Slack allowed when comparing the finest error against the coarsest.
pub const MONOTONE_SLACK: f64 = 1e-3;

/// Tolerance on the factorization `P_C P_{AB|C} P_{DE|C}`.
pub const FACTOR_TOL: f64 = 1e-9;

/// One refinement step: grid `2^-n`, clip window `[-l, u]`, smoothing `eps`
/// (`0` quantizes directly).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulePoint {
    pub n: u32,
    pub l: f64,
    pub u: f64,
    #[serde(default)]
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SchedulePoint>", into = "Vec<SchedulePoint>")]
pub struct Schedule(Vec<SchedulePoint>);

impl Schedule {
    pub fn new(points: Vec<SchedulePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("schedule", "must be nonempty"));
        }
        for p in &points {
            if !(p.eps >= 0.0 && p.eps.is_finite()) {
                return Err(invalid("eps", format!("must be finite and nonnegative, got {}", p.eps)));
            }
            ClipSpec::new(p.l, p.u, ClipMode::Saturate)?;
        }
        for w in points.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if b.n < a.n {
                return Err(invalid("n", "must be nondecreasing"));
            }
            if b.l < a.l || b.u < a.u {
                return Err(invalid("l", "clip window must not shrink"));
            }
            if b.eps > a.eps {
                return Err(invalid("eps", "must be nonincreasing"));
            }
        }
        Ok(Self(points))
    }

    /// Grids `n_lo..=n_hi` on a fixed window, no smoothing.
    pub fn refine(n_lo: u32, n_hi: u32, l: f64, u: f64) -> Result<Self> {
        Self::new((n_lo..=n_hi).map(|n| SchedulePoint { n, l, u, eps: 0.0 }).collect())
    }

    pub fn points(&self) -> &[SchedulePoint] {
        &self.0
    }
}

impl TryFrom<Vec<SchedulePoint>> for Schedule {
    type Error = Error;
    fn try_from(v: Vec<SchedulePoint>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Schedule> for Vec<SchedulePoint> {
    fn from(s: Schedule) -> Self {
        s.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub schedule: Schedule,
    pub values: Vec<f64>,
    pub target: f64,
    pub tolerance: f64,
}

impl ConvergenceTrace {
    pub fn errors(&self) -> Vec<f64> {
        self.values.iter().map(|v| (v - self.target).abs()).collect()
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("schedule is nonempty")
    }

    pub fn final_error(&self) -> f64 {
        (self.final_value() - self.target).abs()
    }

    /// Final error within tolerance, and no worse than the coarsest step.
    pub fn passes(&self) -> bool {
        let e = self.errors();
        self.final_error() <= self.tolerance && e[e.len() - 1] <= e[0] + MONOTONE_SLACK
    }
}

/// MI quantity traced by [`mi_trace`]. `W` stands for `Û + V̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MiTag {
    /// `I(X̂; Û)`
    XU,
    /// `I(Ŷ; V̂)`
    YV,
    /// `I(W; Û)`
    SumU,
    /// `I(W; V̂)`
    SumV,
    /// `I(Û; V̂)`
    UV,
    /// `I(X̂; Ŷ)`
    XY,
    /// `I(W, Ŷ; Û)`
    Cor10,
}

impl MiTag {
    pub const ALL: [MiTag; 7] = [
        MiTag::XU,
        MiTag::YV,
        MiTag::SumU,
        MiTag::SumV,
        MiTag::UV,
        MiTag::XY,
        MiTag::Cor10,
    ];

    /// The two sides of the MI over variables named `X, Y, U, V, W`.
    pub fn sides(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            MiTag::XU => (&["X"], &["U"]),
            MiTag::YV => (&["Y"], &["V"]),
            MiTag::SumU => (&["W"], &["U"]),
            MiTag::SumV => (&["W"], &["V"]),
            MiTag::UV => (&["U"], &["V"]),
            MiTag::XY => (&["X"], &["Y"]),
            MiTag::Cor10 => (&["W", "Y"], &["U"]),
        }
    }

    fn needs_sum(self) -> bool {
        matches!(self, MiTag::SumU | MiTag::SumV | MiTag::Cor10)
    }
}

impl std::str::FromStr for MiTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "xu" => MiTag::XU,
            "yv" => MiTag::YV,
            "sum-u" => MiTag::SumU,
            "sum-v" => MiTag::SumV,
            "uv" => MiTag::UV,
            "xy" => MiTag::XY,
            "cor10" => MiTag::Cor10,
            _ => return Err(invalid("tag", format!("unknown MI tag `{s}`"))),
        })
    }
}

fn point_grids(p: &SchedulePoint) -> Result<MarkovGrids> {
    let axis = AxisSpec::new(ClipSpec::new(p.l, p.u, ClipMode::Saturate)?, GridSpec::new(p.n)?);
    Ok(MarkovGrids {
        x: axis,
        y: axis,
        u: axis,
        v: axis,
        smooth: if p.eps > 0.0 { Some(SmoothSpec::new(p.eps)?) } else { None },
    })
}

/// The tagged MI of the discretized model at one schedule point.
pub fn mi_at(m: &MarkovModel, which: MiTag, p: &SchedulePoint) -> Result<f64> {
    let mut pmf = discretize_markov_factored(m, &point_grids(p)?, ["X", "Y", "U", "V"])?;
    if which.needs_sum() {
        pmf = pmf.with_sum("W", 1, 1)?;
    }
    let (a, b) = which.sides();
    pmf.mi(a, b)
}

/// Traces the tagged MI along the schedule; points run in parallel.
pub fn mi_trace(m: &MarkovModel, which: MiTag, s: &Schedule, oracle: f64, tolerance: f64) -> Result<ConvergenceTrace> {
    if !oracle.is_finite() {
        return Err(invalid("oracle", "must be finite"));
    }
    let values = s
        .points()
        .par_iter()
        .map(|p| mi_at(m, which, p))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ConvergenceTrace {
        schedule: s.clone(),
        values,
        target: oracle,
        tolerance,
    })
}

/// `I(Û + V̂, Ŷ; Û)` along the schedule.
pub fn check_corollary10(m: &MarkovModel, s: &Schedule, oracle: f64, tolerance: f64) -> Result<ConvergenceTrace> {
    mi_trace(m, MiTag::Cor10, s, oracle, tolerance)
}

/// `I(N̂_ε; Z)` with `N_ε ~ U[-ε, ε]` independent of `U ~ d` and `Z` the
/// quantized `U + N_ε`, on a grid of width `2^-n`.
pub fn smoothing_mi(d: &Density1D, eps: f64, n: u32) -> Result<f64> {
    let g = GridSpec::new(n)?;
    if g.step() > eps / 4.0 {
        return Err(invalid("n", format!("cell width {} exceeds eps/4 = {}", g.step(), eps / 4.0)));
    }
    if !d.is_bounded() {
        return Err(invalid("d", "support must be bounded"));
    }
    let (lo, hi) = d.support();
    let window = |a: f64, b: f64| ClipSpec::new((-a).max(g.step()), b.max(g.step()), ClipMode::Saturate);
    let nc = cells(&window(-eps, eps)?, &g)?;
    let zc = cells(&window(lo - eps, hi + eps)?, &g)?;
    let h = g.step();
    // P(N̂ = i, Z ∈ cell j) = ∫_{cell i} f_N(t) [F_U(z_hi - t) - F_U(z_lo - t)] dt.
    let rows: Vec<Vec<f64>> = nc
        .par_iter()
        .map(|c| {
            let (a, b) = (c.lo.max(-eps), c.hi.min(eps));
            let mut acc = vec![KahanSum::new(); zc.len()];
            for (t, w) in gauss_nodes(a, b, h / 4.0) {
                let w = w / (2.0 * eps);
                for (k, z) in zc.iter().enumerate() {
                    acc[k].add(w * (d.cdf(z.hi - t) - d.cdf(z.lo - t)));
                }
            }
            acc.iter().map(KahanSum::total).collect()
        })
        .collect();
    let axes = vec![grid_axis("N", &window(-eps, eps)?, &g)?, grid_axis("Z", &window(lo - eps, hi + eps)?, &g)?];
    let joint = JointPmf::normalized(axes, rows.into_iter().flatten().collect())?;
    joint.mi(&["N"], &["Z"])
}

/// Smoothing trace over decreasing `eps`, each on a grid of width `2^-n`.
/// The target is `0` and the trace must not grow by more than [`MONOTONE_SLACK`].
pub fn check_smoothing(d: &Density1D, eps: &[f64], n: u32, tolerance: f64) -> Result<ConvergenceTrace> {
    d.validate()?;
    if !d.is_bounded() {
        return Err(invalid("d", "support must be bounded"));
    }
    let (lo, hi) = d.support();
    let widest = eps.iter().copied().fold(0.0, f64::max);
    let schedule = Schedule::new(
        eps.iter()
            .map(|&e| SchedulePoint {
                n,
                l: (-lo).max(0.0) + widest,
                u: hi.max(0.0) + widest,
                eps: e,
            })
            .collect(),
    )?;
    let values = eps
        .par_iter()
        .map(|&e| smoothing_mi(d, e, n))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ConvergenceTrace {
        schedule,
        values,
        target: 0.0,
        tolerance,
    })
}

impl ConvergenceTrace {
    /// Each step no larger than the previous one plus [`MONOTONE_SLACK`].
    pub fn nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McForcedCheck {
    /// `I(A; C | B) + I(E; C | D)`
    pub lhs: f64,
    /// `V(P_CAE, P_CÂÊ)² / (2 ln 2)`
    pub rhs: f64,
    pub holds: bool,
}

/// Dense tensor of `p` with axes in the order of `names`.
fn ordered(p: &JointPmf, names: &[&str]) -> Result<JointPmf> {
    marginal(p, &RandomVarGroup::new(names)?)
}

/// Checks `(A,B) - C - (D,E)` and evaluates the forcing inequality with
/// `Â - B - C - D - Ê`, `P_BÂ = P_BA`, `P_DÊ = P_DE`.
pub fn check_mc_forced1(p: &JointPmf, names: [&str; 5]) -> Result<McForcedCheck> {
    if p.axes().len() != 5 {
        return Err(Error::Dimension {
            expected: 5,
            got: p.axes().len(),
        });
    }
    let q = ordered(p, &names)?;
    let sh = q.shape();
    let (na, nb, nc, nd, ne) = (sh[0], sh[1], sh[2], sh[3], sh[4]);
    let pr = q.probs();
    let at = |a: usize, b: usize, c: usize, d: usize, e: usize| pr[(((a * nb + b) * nc + c) * nd + d) * ne + e];

    let m = |keep: &[&str]| -> Result<Vec<f64>> { Ok(ordered(&q, keep)?.probs().to_vec()) };
    let [a_, b_, c_, d_, e_] = names;
    let pc = m(&[c_])?;
    let pabc = m(&[a_, b_, c_])?;
    let pcde = m(&[c_, d_, e_])?;
    let pab = m(&[a_, b_])?;
    let pde = m(&[d_, e_])?;
    let pb = m(&[b_])?;
    let pd = m(&[d_])?;
    let pbcd = m(&[b_, c_, d_])?;

    let mut worst: f64 = 0.0;
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                for d in 0..nd {
                    for e in 0..ne {
                        let f = if pc[c] > 0.0 {
                            pabc[(a * nb + b) * nc + c] * pcde[(c * nd + d) * ne + e] / pc[c]
                        } else {
                            0.0
                        };
                        worst = worst.max((at(a, b, c, d, e) - f).abs());
                    }
                }
            }
        }
    }
    if worst > FACTOR_TOL {
        return Err(Error::MarkovViolation(format!(
            "({a_},{b_}) - {c_} - ({d_},{e_}) fails by {worst:e}"
        )));
    }

    // P_CAE and P_CÂÊ = Σ_{b,d} P_BCD P_{A|B} P_{E|D}.
    let mut true_cae = vec![0.0; nc * na * ne];
    let mut hat_cae = vec![0.0; nc * na * ne];
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                for d in 0..nd {
                    let pbcd_v = pbcd[(b * nc + c) * nd + d];
                    for e in 0..ne {
                        let k = (c * na + a) * ne + e;
                        true_cae[k] += at(a, b, c, d, e);
                        if pb[b] > 0.0 && pd[d] > 0.0 {
                            hat_cae[k] += pbcd_v * pab[a * nb + b] / pb[b] * pde[d * ne + e] / pd[d];
                        }
                    }
                }
            }
        }
    }
    let l1 = KahanSum::from_iter(true_cae.iter().zip(&hat_cae).map(|(x, y)| (x - y).abs())).total();
    let lhs = q.cmi(&[a_], &[c_], &[b_])? + q.cmi(&[e_], &[c_], &[d_])?;
    let rhs = l1 * l1 / (2.0 * std::f64::consts::LN_2);
    Ok(McForcedCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-10,
    })
}

fn dirichlet_ones<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Random `P_C P_{AB|C} P_{DE|C}` over axes `A..E` with the given sizes,
/// every factor drawn from a flat Dirichlet.
pub fn random_mc_instance<R: Rng + ?Sized>(rng: &mut R, sizes: [usize; 5]) -> Result<JointPmf> {
    let [na, nb, nc, nd, ne] = sizes;
    let pc = dirichlet_ones(rng, nc);
    let pab: Vec<Vec<f64>> = (0..nc).map(|_| dirichlet_ones(rng, na * nb)).collect();
    let pde: Vec<Vec<f64>> = (0..nc).map(|_| dirichlet_ones(rng, nd * ne)).collect();
    let mut probs = Vec::with_capacity(na * nb * nc * nd * ne);
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                for d in 0..nd {
                    for e in 0..ne {
                        probs.push(pc[c] * pab[c][a * nb + b] * pde[c][d * ne + e]);
                    }
                }
            }
        }
    }
    let axes = ["A", "B", "C", "D", "E"]
        .iter()
        .zip(sizes)
        .map(|(n, k)| Axis::new(*n, (0..k).map(|i| i as f64).collect()))
        .collect::<Result<Vec<_>>>()?;
    JointPmf::normalized(axes, probs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClippedTvCheck {
    /// `V(P_S̃T̃, P_ST)` on the discretized proxy.
    pub tv: f64,
    /// `2 (1 - P(S, T both inside the window))` from the continuous law.
    pub formula: f64,
    pub identity_err: f64,
}

/// `P(-l_x ≤ S ≤ u_x, -l_y ≤ T ≤ u_y)` by quadrature in `S`.
fn window_mass(d: &Density2D, wx: &ClipSpec, wy: &ClipSpec) -> f64 {
    let (lo, hi) = d.marginal_x().support();
    let (a, b) = ((-wx.lower).max(lo), wx.upper.min(hi));
    KahanSum::from_iter(
        gauss_nodes(a, b, (b - a) / 512.0)
            .into_iter()
            .map(|(t, w)| w * (d.x_density_y_cdf(t, wy.upper) - d.x_density_y_cdf(t, -wy.lower))),
    )
    .total()
}

/// Saturating both coordinates into the windows moves exactly the
/// out-of-window mass, so the L1 distance is twice that mass.
///
/// The proxy pmf lives on a `2^-n` grid one cell wider than each window, so
/// its end cells hold the tails that clipping moves.
pub fn check_clipped_tv(d: &Density2D, wx: &ClipSpec, wy: &ClipSpec, n: u32) -> Result<ClippedTvCheck> {
    let g = GridSpec::new(n)?;
    let h = g.step();
    let wide = |w: &ClipSpec| -> Result<AxisSpec> {
        Ok(AxisSpec::new(ClipSpec::new(w.lower + h, w.upper + h, ClipMode::Saturate)?, g))
    };
    let (p, _) = discretize_2d(d, &wide(wx)?, &wide(wy)?, ["S", "T"])?;
    let (xs, ys) = (p.axes()[0].points(), p.axes()[1].points());
    let inside = |v: f64, w: &ClipSpec| v >= -w.lower - h / 2.0 && v <= w.upper + h / 2.0;
    // Grid points at the window ends: the nearest inside each bound.
    let clamp_idx = |pts: &[f64], w: &ClipSpec, v: f64| -> usize {
        let target = v.clamp(-w.lower, w.upper);
        pts.iter()
            .enumerate()
            .filter(|(_, &x)| inside(x, w))
            .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
            .map(|(i, _)| i)
            .expect("window holds a grid point")
    };
    let nx = xs.len();
    let ny = ys.len();
    let mut clipped = vec![0.0; nx * ny];
    for (k, &q) in p.probs().iter().enumerate() {
        let (i, j) = (k / ny, k % ny);
        let ii = if inside(xs[i], wx) { i } else { clamp_idx(xs, wx, xs[i]) };
        let jj = if inside(ys[j], wy) { j } else { clamp_idx(ys, wy, ys[j]) };
        clipped[ii * ny + jj] += q;
    }
    let tv = KahanSum::from_iter(p.probs().iter().zip(&clipped).map(|(a, b)| (a - b).abs())).total();
    let formula = 2.0 * (1.0 - window_mass(d, wx, wy));
    Ok(ClippedTvCheck {
        tv,
        formula,
        identity_err: (tv - formula).abs(),
    })
}
