use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::spec::{gaussian_cmi, gaussian_mi, GaussianSpec};
use crate::error::{invalid, Error, Result};

fn check_p(p: f64, lo: f64, hi: f64) -> Result<()> {
    if !(p > lo && p < hi) {
        return Err(invalid("P", format!("must lie in ({lo}, {hi})")));
    }
    Ok(())
}

/// Structured rate triple `(½log 1/P, ½log 1/P, ½log 2/P)`.
pub fn md_ex1_structured(p: f64) -> Result<[f64; 3]> {
    check_p(p, 0.0, 1.0)?;
    let r = 0.5 * (1.0 / p).log2();
    Ok([r, r, 0.5 * (2.0 / p).log2()])
}

/// Upper end of the `θ` search box.
pub const THETA_MAX: f64 = 10.0;
/// Half-width of the `α` search box.
pub const ALPHA_MAX: f64 = 4.0;

/// Test-channel parameters of the unstructured scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ex1Params {
    pub alpha: [f64; 7],
    pub theta: [f64; 2],
}

/// Builds `(X, Z, U13, U23, U1, U2, U3, XZ = X+Z)` over the basis
/// `(X, Z, Q13, Q23, Q1, Q2, Q3)`.
///
/// `U1 = c·(X - E[X|U13]) + Q1` with unit-variance `Q1`; `c` is chosen so that
/// decoder {1} sees distortion exactly `P`, and is 0 when `U13` alone already
/// reaches it. `U2` is built the same way from `Z`.
pub fn ex1_model(params: &Ex1Params, p: f64) -> Result<GaussianSpec> {
    let [t1, t2] = params.theta;
    let e = |i: usize| {
        let mut v = vec![0.0; 7];
        v[i] = 1.0;
        v
    };
    let u13: Vec<f64> = (0..7).map(|i| e(0)[i] + e(2)[i]).collect();
    let u23: Vec<f64> = (0..7).map(|i| e(1)[i] + e(3)[i]).collect();
    let refine = |src: usize, u: &[f64], t: f64, q: usize| -> Vec<f64> {
        // residual variance after U_{·,3} is s; the forward noise giving MMSE P is sP/(s-P)
        let s = t / (1.0 + t);
        let c = if s > p { ((s - p) / (s * p)).sqrt() } else { 0.0 };
        (0..7).map(|i| c * (e(src)[i] - u[i] / (1.0 + t)) + e(q)[i]).collect()
    };
    let u1 = refine(0, &u13, t1, 4);
    let u2 = refine(1, &u23, t2, 5);
    GaussianSpec::from_linear(
        &[1.0, 1.0, t1, t2, 1.0, 1.0, 1.0],
        &[
            ("X", e(0)),
            ("Z", e(1)),
            ("U13", u13),
            ("U23", u23),
            ("U1", u1),
            ("U2", u2),
            ("U3", params.alpha.to_vec()),
            ("XZ", (0..7).map(|i| e(0)[i] + e(1)[i]).collect()),
        ],
    )
}

/// `I(X,Z; U3,U13,U23) + I(U1,U2; U3 | U13,U23,X,Z)`.
pub fn ex1_r3_bound(g: &GaussianSpec) -> Result<f64> {
    Ok(gaussian_mi(g, &["X", "Z"], &["U3", "U13", "U23"])?
        + gaussian_cmi(g, &["U1", "U2"], &["U3"], &["U13", "U23", "X", "Z"])?)
}

/// Distortion excesses (positive means violated) at decoders {3}, {1,3}, {2,3}.
pub fn ex1_violations(g: &GaussianSpec, p: f64) -> Result<[f64; 5]> {
    let d13 = ["U13", "U23", "U1", "U3"];
    let d23 = ["U13", "U23", "U2", "U3"];
    Ok([
        g.mmse(&[("X", 1.0), ("Z", 1.0)], &["U13", "U23", "U3"])? - 2.0 * p,
        g.mmse(&[("X", 1.0)], &d13)? - p,
        g.mmse(&[("Z", 1.0)], &d13)? - p,
        g.mmse(&[("X", 1.0)], &d23)? - p,
        g.mmse(&[("Z", 1.0)], &d23)? - p,
    ])
}

#[derive(Debug, Clone, Serialize)]
pub struct Ex1Unstructured {
    pub min_r3: f64,
    pub params: Ex1Params,
    pub max_violation: f64,
    /// Whether some start ended at a feasible test channel.
    pub converged: bool,
    pub starts: usize,
}

/// Multi-start settings for the unstructured optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ex1Search {
    pub starts: usize,
    pub seed: u64,
    pub theta_max: f64,
}

impl Default for Ex1Search {
    fn default() -> Self {
        Self {
            starts: 24,
            seed: 1,
            theta_max: THETA_MAX,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Ex1Result {
    pub p: f64,
    pub structured: [f64; 3],
    pub unstructured: Ex1Unstructured,
}

/// Cap on `α7²` when no distortion constraint binds.
const NOISE_CAP: f64 = 1e12;
const INFEASIBLE: f64 = 1e3;
/// Largest constraint violation still reported as converged.
pub const FEAS_TOL: f64 = 1e-6;

/// The targets and observation sets of the five distortion constraints,
/// excluding `U3`.
const CONSTRAINTS: [(&str, &[&str], f64); 5] = [
    ("XZ", &["U13", "U23"], 2.0),
    ("X", &["U13", "U23", "U1"], 1.0),
    ("Z", &["U13", "U23", "U1"], 1.0),
    ("X", &["U13", "U23", "U2"], 1.0),
    ("Z", &["U13", "U23", "U2"], 1.0),
];

/// Largest `α7²` meeting every distortion constraint, or the total shortfall
/// at `α7 = 0` when none does.
///
/// With `U3 = L + α7·Q3` each constraint reads `m0 - c²/(v + α7²) <= D`, where
/// `(m0, c, v)` is the conditional covariance of the target and `L` given the
/// other observations; so the feasible `α7²` form an interval `[0, cap]`.
fn max_noise(g: &GaussianSpec, p: f64) -> Result<std::result::Result<f64, f64>> {
    let mut cap = NOISE_CAP;
    let mut shortfall = 0.0;
    for (t, obs, k) in CONSTRAINTS {
        let mut o = obs.to_vec();
        let c = g.cond_cov(&[t, "U3"], &o)?;
        let (m0, cx, v) = (c[(0, 0)], c[(0, 1)], c[(1, 1)]);
        let d = k * p;
        if m0 <= d {
            continue;
        }
        let bound = cx * cx / (m0 - d) - v;
        if bound < 0.0 {
            o.push("U3");
            shortfall += g.mmse(&[(t, 1.0)], &o)? - d;
        }
        cap = cap.min(bound);
    }
    Ok(if shortfall > 0.0 || cap < 0.0 { Err(shortfall.max(0.0)) } else { Ok(cap) })
}

#[derive(Clone, Copy)]
struct Ex1Cost {
    p: f64,
    theta_lo: f64,
    theta_hi: f64,
}

impl Ex1Cost {
    /// Test channel from search coordinates: six `α` weights and two `θ` logits.
    /// `α7` is then the largest noise weight meeting the distortions, and the
    /// whole `α` is rescaled into the search box (the bound is scale-free in `U3`).
    fn params(&self, z: &[f64]) -> Result<(Ex1Params, f64)> {
        let sig = |t: f64| 1.0 / (1.0 + (-t).exp());
        let th = |t: f64| self.theta_lo + (self.theta_hi - self.theta_lo) * sig(t);
        let mut params = Ex1Params {
            alpha: [z[0], z[1], z[2], z[3], z[4], z[5], 0.0],
            theta: [th(z[6]), th(z[7])],
        };
        let g = ex1_model(&params, self.p)?;
        let shortfall = match max_noise(&g, self.p)? {
            Ok(a2) => {
                params.alpha[6] = a2.sqrt();
                0.0
            }
            Err(s) => s,
        };
        let m = params.alpha.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m > ALPHA_MAX {
            for a in &mut params.alpha {
                *a *= ALPHA_MAX / m;
            }
        }
        Ok((params, shortfall))
    }

    fn eval(&self, z: &[f64]) -> Option<(f64, f64)> {
        let (params, shortfall) = self.params(z).ok()?;
        if shortfall > 0.0 {
            return Some((INFEASIBLE + shortfall, shortfall));
        }
        let g = ex1_model(&params, self.p).ok()?;
        let r = ex1_r3_bound(&g).ok().filter(|r| r.is_finite())?;
        Some((r, 0.0))
    }
}

impl CostFunction for Ex1Cost {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, z: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(z).map_or(10.0 * INFEASIBLE, |c| c.0))
    }
}

fn nelder_mead(cost: &Ex1Cost, x0: Vec<f64>, step: f64, iters: u64) -> Vec<f64> {
    let mut simplex = vec![x0.clone()];
    for i in 0..x0.len() {
        let mut v = x0.clone();
        v[i] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-13)
        .expect("valid tolerance");
    let problem = Ex1Cost { ..*cost };
    match Executor::new(problem, solver).configure(|s| s.max_iters(iters)).run() {
        Ok(r) => r.state().get_best_param().cloned().unwrap_or(x0),
        Err(_) => x0,
    }
}

/// Minimum of the unstructured `R3` bound over the Gaussian test channels,
/// by multi-start Nelder–Mead. Every evaluated channel meets the distortion
/// constraints exactly, so no penalty weight is involved.
///
/// `θ` ranges over `[P/(1-P), theta_max]`: below `P/(1-P)` decoder {1}
/// would beat its distortion and need more than `½ log 1/P` bits.
///
/// Start `k` is drawn from `ChaCha8Rng::seed_from_u64(seed + k)`, so the
/// result does not depend on thread scheduling.
pub fn md_ex1_unstructured(p: f64, search: &Ex1Search) -> Result<Ex1Unstructured> {
    check_p(p, 0.0, 1.0)?;
    let Ex1Search { starts, seed, theta_max } = *search;
    if starts == 0 {
        return Err(invalid("starts", "must be positive"));
    }
    let theta_lo = (p / (1.0 - p)).max(1e-4);
    if !(theta_max > theta_lo) {
        return Err(invalid("theta_max", format!("must exceed {theta_lo}")));
    }
    let cost = Ex1Cost {
        p,
        theta_lo,
        theta_hi: theta_max,
    };
    let runs: Vec<(Vec<f64>, f64, f64)> = (0..starts)
        .into_par_iter()
        .filter_map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let x0: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut z = nelder_mead(&cost, x0, 0.5, 3000);
            for _ in 0..2 {
                z = nelder_mead(&cost, z, 0.1, 2000);
            }
            let (c, short) = cost.eval(&z)?;
            Some((z, c, short))
        })
        .collect();
    let best = runs
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::Infeasible)?;
    let (params, shortfall) = cost.params(&best.0)?;
    let g = ex1_model(&params, p)?;
    let worst = ex1_violations(&g, p)?.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(Ex1Unstructured {
        min_r3: ex1_r3_bound(&g)?,
        params,
        max_violation: worst,
        converged: shortfall == 0.0 && worst <= FEAS_TOL,
        starts,
    })
}

pub fn md_ex1(p: f64) -> Result<Ex1Result> {
    Ok(Ex1Result {
        p,
        structured: md_ex1_structured(p)?,
        unstructured: md_ex1_unstructured(p, &Ex1Search::default())?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Ex2Result {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    /// `D1, D2, D3, D12, D13, D23`.
    pub distortions: [f64; 6],
}

pub const EX2_DISTORTION_LABELS: [&str; 6] = ["D1", "D2", "D3", "D12", "D13", "D23"];

/// Closed-form rates of the second example, valid for `½ < P < ⅔`.
pub fn md_ex2(p: f64) -> Result<Ex2Result> {
    check_p(p, 0.5, 2.0 / 3.0)?;
    let a = 0.5 * (p * p / (p + (1.0 - p).powi(2))).log2();
    let b = 0.25 * (1.0 / (2.0 * p - 1.0)).log2();
    let r1 = a.max(b);
    let d = 2.0 * p - 1.0;
    Ok(Ex2Result {
        r1,
        r2: r1,
        r3: r1 + 0.5,
        distortions: [p, p, 2.0 * p, d, d, d],
    })
}

/// `(X, U, V, W = U+V)` of the second example, generated as
/// `U, V ~ N(0, 1-P)` independent and `X = U + V + N(0, 2P-1)`.
pub fn ex2_model(p: f64) -> Result<GaussianSpec> {
    check_p(p, 0.5, 1.0)?;
    GaussianSpec::from_linear(
        &[1.0 - p, 1.0 - p, 2.0 * p - 1.0],
        &[
            ("X", vec![1.0, 1.0, 1.0]),
            ("U", vec![1.0, 0.0, 0.0]),
            ("V", vec![0.0, 1.0, 0.0]),
            ("W", vec![1.0, 1.0, 0.0]),
        ],
    )
}

/// `(Var(V | X, U), Var(V | X, U+V))`; the extra covering row matters when
/// the first is smaller.
pub fn ex2_nonredundancy(p: f64) -> Result<(f64, f64)> {
    let g = ex2_model(p)?;
    Ok((g.mmse(&[("V", 1.0)], &["X", "U"])?, g.mmse(&[("V", 1.0)], &["X", "W"])?))
}
