use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numeric::{adaptive_simpson, integrate_pieces, norm_cdf, norm_pdf};

/// Gaussian tails beyond this many standard deviations are treated as empty.
pub const GAUSS_CUTOFF: f64 = 12.0;

/// Parametric one-dimensional densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Density1D {
    Gaussian { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Piecewise-linear density through `(xs[i], ys[i])`, zero outside; rescaled to unit mass.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
    Mixture { weights: Vec<f64>, components: Vec<Density1D> },
    /// `base` convolved with uniform noise on `[-eps, eps]`.
    Smoothed { base: Box<Density1D>, eps: f64 },
}

impl Density1D {
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        let d = Density1D::Gaussian { mean, sd };
        d.validate()?;
        Ok(d)
    }

    pub fn standard_normal() -> Self {
        Density1D::Gaussian { mean: 0.0, sd: 1.0 }
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = Density1D::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn triangular(lo: f64, peak: f64, hi: f64) -> Result<Self> {
        let d = Density1D::Tabulated {
            xs: vec![lo, peak, hi],
            ys: vec![0.0, 1.0, 0.0],
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Density1D::Gaussian { mean, sd } => {
                if !mean.is_finite() {
                    return Err(invalid("mean", "must be finite"));
                }
                if !(*sd > 0.0 && sd.is_finite()) {
                    return Err(invalid("sd", "must be positive"));
                }
            }
            Density1D::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(invalid("lo", "need finite lo < hi"));
                }
            }
            Density1D::Tabulated { xs, ys } => {
                if xs.len() < 2 || xs.len() != ys.len() {
                    return Err(invalid("xs", "need at least two knots and matching ys"));
                }
                if xs.windows(2).any(|w| !(w[0] < w[1])) || xs.iter().any(|x| !x.is_finite()) {
                    return Err(invalid("xs", "knots must be finite and increasing"));
                }
                if ys.iter().any(|y| !(*y >= 0.0 && y.is_finite())) {
                    return Err(invalid("ys", "values must be nonnegative"));
                }
                if self.tab_mass() <= 0.0 {
                    return Err(invalid("ys", "zero mass"));
                }
            }
            Density1D::Mixture { weights, components } => {
                if weights.is_empty() || weights.len() != components.len() {
                    return Err(invalid("weights", "need one weight per component"));
                }
                if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                    return Err(invalid("weights", "must be nonnegative"));
                }
                let s: f64 = weights.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(invalid("weights", format!("sum to {s}, not 1")));
                }
                for c in components {
                    c.validate()?;
                }
            }
            Density1D::Smoothed { base, eps } => {
                if !(*eps > 0.0 && eps.is_finite()) {
                    return Err(invalid("eps", "must be positive"));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    fn tab_mass(&self) -> f64 {
        match self {
            Density1D::Tabulated { xs, ys } => xs
                .windows(2)
                .zip(ys.windows(2))
                .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
                .sum(),
            _ => 1.0,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Density1D::Gaussian { mean, sd } => norm_pdf((x - mean) / sd) / sd,
            Density1D::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Density1D::Tabulated { xs, ys } => {
                if x < xs[0] || x > xs[xs.len() - 1] {
                    return 0.0;
                }
                let i = seg(xs, x);
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                (ys[i] + t * (ys[i + 1] - ys[i])) / self.tab_mass()
            }
            Density1D::Mixture { weights, components } => {
                weights.iter().zip(components).map(|(w, c)| w * c.pdf(x)).sum()
            }
            Density1D::Smoothed { base, eps } => (base.cdf(x + eps) - base.cdf(x - eps)) / (2.0 * eps),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Density1D::Gaussian { mean, sd } => norm_cdf((x - mean) / sd),
            Density1D::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Density1D::Tabulated { xs, ys } => {
                if x <= xs[0] {
                    return 0.0;
                }
                if x >= xs[xs.len() - 1] {
                    return 1.0;
                }
                let m = self.tab_mass();
                let i = seg(xs, x);
                let mut acc = 0.0;
                for j in 0..i {
                    acc += 0.5 * (xs[j + 1] - xs[j]) * (ys[j] + ys[j + 1]);
                }
                let h = xs[i + 1] - xs[i];
                let t = x - xs[i];
                acc += ys[i] * t + (ys[i + 1] - ys[i]) * t * t / (2.0 * h);
                (acc / m).clamp(0.0, 1.0)
            }
            Density1D::Mixture { weights, components } => {
                weights.iter().zip(components).map(|(w, c)| w * c.cdf(x)).sum()
            }
            Density1D::Smoothed { base, eps } => {
                (base.cdf_integral(x + eps) - base.cdf_integral(x - eps)) / (2.0 * eps)
            }
        }
    }

    /// `∫_{-inf}^x F(t) dt`.
    pub fn cdf_integral(&self, x: f64) -> f64 {
        match self {
            Density1D::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                sd * (z * norm_cdf(z) + norm_pdf(z))
            }
            Density1D::Uniform { lo, hi } => {
                if x <= *lo {
                    0.0
                } else if x <= *hi {
                    (x - lo) * (x - lo) / (2.0 * (hi - lo))
                } else {
                    0.5 * (hi - lo) + (x - hi)
                }
            }
            Density1D::Tabulated { xs, ys } => {
                if x <= xs[0] {
                    return 0.0;
                }
                let m = self.tab_mass();
                let last = xs.len() - 1;
                let end = x.min(xs[last]);
                let mut cum = 0.0;
                let mut acc = 0.0;
                for j in 0..last {
                    if xs[j] >= end {
                        break;
                    }
                    let h = xs[j + 1] - xs[j];
                    let t = (end - xs[j]).min(h);
                    let dy = ys[j + 1] - ys[j];
                    acc += cum * t + ys[j] * t * t / 2.0 + dy * t * t * t / (6.0 * h);
                    cum += ys[j] * t + dy * t * t / (2.0 * h);
                }
                acc / m + (x - end).max(0.0)
            }
            Density1D::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.cdf_integral(x))
                .sum(),
            Density1D::Smoothed { .. } => {
                let (lo, hi) = self.support();
                if x <= lo {
                    return 0.0;
                }
                let top = x.min(hi);
                let core = adaptive_simpson(&|t| self.cdf(t), lo, top, 1e-13).unwrap_or(f64::NAN);
                core + (x - top).max(0.0)
            }
        }
    }

    /// True when the support is a bounded interval (no Gaussian component).
    pub fn is_bounded(&self) -> bool {
        match self {
            Density1D::Gaussian { .. } => false,
            Density1D::Uniform { .. } | Density1D::Tabulated { .. } => true,
            Density1D::Mixture { components, .. } => components.iter().all(Density1D::is_bounded),
            Density1D::Smoothed { base, .. } => base.is_bounded(),
        }
    }

    /// Interval carrying all mass up to the Gaussian cutoff.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Density1D::Gaussian { mean, sd } => (mean - GAUSS_CUTOFF * sd, mean + GAUSS_CUTOFF * sd),
            Density1D::Uniform { lo, hi } => (*lo, *hi),
            Density1D::Tabulated { xs, .. } => (xs[0], xs[xs.len() - 1]),
            Density1D::Mixture { components, .. } => components
                .iter()
                .map(Density1D::support)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1))),
            Density1D::Smoothed { base, eps } => {
                let (a, b) = base.support();
                (a - eps, b + eps)
            }
        }
    }

    /// Points where the density or its derivative may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Density1D::Gaussian { .. } => Vec::new(),
            Density1D::Uniform { lo, hi } => vec![*lo, *hi],
            Density1D::Tabulated { xs, .. } => xs.clone(),
            Density1D::Mixture { components, .. } => {
                components.iter().flat_map(Density1D::breakpoints).collect()
            }
            Density1D::Smoothed { base, eps } => base
                .breakpoints()
                .into_iter()
                .flat_map(|b| [b - eps, b + eps])
                .collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Density1D::Gaussian { mean, .. } => *mean,
            Density1D::Uniform { lo, hi } => 0.5 * (lo + hi),
            Density1D::Mixture { weights, components } => {
                weights.iter().zip(components).map(|(w, c)| w * c.mean()).sum()
            }
            Density1D::Smoothed { base, .. } => base.mean(),
            Density1D::Tabulated { .. } => {
                let (lo, hi) = self.support();
                integrate_pieces(&|t| t * self.pdf(t), lo, hi, &self.breakpoints(), 1e-12)
                    .unwrap_or(f64::NAN)
            }
        }
    }

    /// Numerical mass over the declared support.
    pub fn total_mass(&self) -> Result<f64> {
        let (lo, hi) = self.support();
        integrate_pieces(&|t| self.pdf(t), lo, hi, &self.breakpoints(), 1e-10)
    }
}

fn seg(xs: &[f64], x: f64) -> usize {
    match xs.binary_search_by(|p| p.total_cmp(&x)) {
        Ok(i) => i.min(xs.len() - 2),
        Err(i) => (i - 1).min(xs.len() - 2),
    }
}

/// Two-dimensional source densities over `(X, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Density2D {
    Gaussian {
        mean: [f64; 2],
        sd: [f64; 2],
        rho: f64,
    },
    Product { x: Density1D, y: Density1D },
    Mixture { weights: Vec<f64>, components: Vec<Density2D> },
}

impl Density2D {
    pub fn bivariate_normal(rho: f64) -> Result<Self> {
        let d = Density2D::Gaussian {
            mean: [0.0, 0.0],
            sd: [1.0, 1.0],
            rho,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Density2D::Gaussian { mean, sd, rho } => {
                if mean.iter().any(|m| !m.is_finite()) {
                    return Err(invalid("mean", "must be finite"));
                }
                if sd.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(invalid("sd", "must be positive"));
                }
                if !(rho.abs() < 1.0) {
                    return Err(invalid("rho", "must lie in (-1, 1)"));
                }
            }
            Density2D::Product { x, y } => {
                x.validate()?;
                y.validate()?;
            }
            Density2D::Mixture { weights, components } => {
                if weights.is_empty() || weights.len() != components.len() {
                    return Err(invalid("weights", "need one weight per component"));
                }
                let s: f64 = weights.iter().sum();
                if (s - 1.0).abs() > 1e-9 || weights.iter().any(|w| *w < 0.0) {
                    return Err(invalid("weights", "must be nonnegative and sum to 1"));
                }
                for c in components {
                    c.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn marginal_x(&self) -> Density1D {
        match self {
            Density2D::Gaussian { mean, sd, .. } => Density1D::Gaussian { mean: mean[0], sd: sd[0] },
            Density2D::Product { x, .. } => x.clone(),
            Density2D::Mixture { weights, components } => Density1D::Mixture {
                weights: weights.clone(),
                components: components.iter().map(Density2D::marginal_x).collect(),
            },
        }
    }

    pub fn marginal_y(&self) -> Density1D {
        match self {
            Density2D::Gaussian { mean, sd, .. } => Density1D::Gaussian { mean: mean[1], sd: sd[1] },
            Density2D::Product { y, .. } => y.clone(),
            Density2D::Mixture { weights, components } => Density1D::Mixture {
                weights: weights.clone(),
                components: components.iter().map(Density2D::marginal_y).collect(),
            },
        }
    }

    pub fn pdf(&self, x: f64, y: f64) -> f64 {
        match self {
            Density2D::Gaussian { .. } => self.x_density_y_cdf_slope(x, y),
            Density2D::Product { x: dx, y: dy } => dx.pdf(x) * dy.pdf(y),
            Density2D::Mixture { weights, components } => {
                weights.iter().zip(components).map(|(w, c)| w * c.pdf(x, y)).sum()
            }
        }
    }

    fn x_density_y_cdf_slope(&self, x: f64, y: f64) -> f64 {
        if let Density2D::Gaussian { mean, sd, rho } = self {
            let zx = (x - mean[0]) / sd[0];
            let s = (1.0 - rho * rho).sqrt();
            let zy = ((y - mean[1]) / sd[1] - rho * zx) / s;
            norm_pdf(zx) / sd[0] * norm_pdf(zy) / (sd[1] * s)
        } else {
            unreachable!()
        }
    }

    /// `f_X(x) * P(Y <= y | X = x)`.
    pub fn x_density_y_cdf(&self, x: f64, y: f64) -> f64 {
        match self {
            Density2D::Gaussian { mean, sd, rho } => {
                let zx = (x - mean[0]) / sd[0];
                let fx = norm_pdf(zx) / sd[0];
                if y == f64::INFINITY {
                    return fx;
                }
                if y == f64::NEG_INFINITY {
                    return 0.0;
                }
                let s = (1.0 - rho * rho).sqrt();
                fx * norm_cdf(((y - mean[1]) / sd[1] - rho * zx) / s)
            }
            Density2D::Product { x: dx, y: dy } => dx.pdf(x) * dy.cdf(y),
            Density2D::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.x_density_y_cdf(x, y))
                .sum(),
        }
    }

    pub fn support(&self) -> ((f64, f64), (f64, f64)) {
        (self.marginal_x().support(), self.marginal_y().support())
    }
}
