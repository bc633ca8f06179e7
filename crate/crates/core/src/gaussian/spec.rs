use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::prob::InfoSource;

/// Eigenvalues below this (relative to the largest) count as zero.
const SINGULAR_REL: f64 = 1e-12;

/// A labeled Gaussian vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    labels: Vec<String>,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl GaussianSpec {
    pub fn new<S: AsRef<str>>(labels: &[S], mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = labels.len();
        if mean.len() != n || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: cov.nrows(),
            });
        }
        let mut names: Vec<String> = Vec::with_capacity(n);
        for l in labels {
            let l = l.as_ref().to_string();
            if names.contains(&l) {
                return Err(Error::DuplicateAxis(l));
            }
            names.push(l);
        }
        for i in 0..n {
            for j in 0..n {
                if !cov[(i, j)].is_finite() || (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 {
                    return Err(invalid("cov", "not symmetric"));
                }
            }
        }
        if n > 0 {
            let min = cov.clone().symmetric_eigenvalues().min();
            if min < -1e-10 {
                return Err(invalid("cov", format!("eigenvalue {min} is negative")));
            }
        }
        Ok(Self {
            labels: names,
            mean,
            cov: (0..n).map(|i| cov.row(i).iter().copied().collect()).collect(),
        })
    }

    pub fn zero_mean<S: AsRef<str>>(labels: &[S], cov: DMatrix<f64>) -> Result<Self> {
        Self::new(labels, vec![0.0; labels.len()], cov)
    }

    /// Variables given as linear combinations of independent zero-mean basis
    /// variables with the listed variances.
    pub fn from_linear(basis_var: &[f64], rows: &[(&str, Vec<f64>)]) -> Result<Self> {
        if basis_var.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid("basis_var", "variances must be finite and nonnegative"));
        }
        let k = basis_var.len();
        let mut a = DMatrix::zeros(rows.len(), k);
        for (i, (_, c)) in rows.iter().enumerate() {
            if c.len() != k {
                return Err(Error::Dimension { expected: k, got: c.len() });
            }
            for j in 0..k {
                a[(i, j)] = c[j];
            }
        }
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(basis_var));
        let cov = &a * d * a.transpose();
        let cov = (&cov + cov.transpose()) * 0.5;
        let labels: Vec<&str> = rows.iter().map(|r| r.0).collect();
        Self::zero_mean(&labels, cov)
    }

    /// Unit-variance pair `(X, Y)` with correlation `rho`.
    pub fn bivariate(rho: f64) -> Result<Self> {
        if !(rho.abs() <= 1.0) {
            return Err(invalid("rho", "must lie in [-1, 1]"));
        }
        Self::zero_mean(&["X", "Y"], DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> DMatrix<f64> {
        let n = self.labels.len();
        DMatrix::from_fn(n, n, |i, j| self.cov[i][j])
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn sub_cov(&self, names: &[&str]) -> Result<DMatrix<f64>> {
        let idx = names.iter().map(|n| self.index(n)).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[idx[i]][idx[j]]))
    }

    /// `log2 det` of a sub-covariance, or `None` when it is singular.
    pub fn log2det(&self, names: &[&str]) -> Result<Option<f64>> {
        if names.is_empty() {
            return Ok(Some(0.0));
        }
        let eig = self.sub_cov(names)?.symmetric_eigenvalues();
        let max = eig.max().max(0.0);
        if eig.min() <= SINGULAR_REL * max.max(1.0) {
            return Ok(None);
        }
        Ok(Some(eig.iter().map(|v| v.log2()).sum()))
    }

    /// Covariance of `names` given `obs` (Schur complement, pseudo-inverse on
    /// a singular observation block).
    pub fn cond_cov(&self, names: &[&str], obs: &[&str]) -> Result<DMatrix<f64>> {
        let a = self.sub_cov(names)?;
        if obs.is_empty() {
            return Ok(a);
        }
        let ia = names.iter().map(|n| self.index(n)).collect::<Result<Vec<_>>>()?;
        let io = obs.iter().map(|n| self.index(n)).collect::<Result<Vec<_>>>()?;
        let cross = DMatrix::from_fn(ia.len(), io.len(), |i, j| self.cov[ia[i]][io[j]]);
        let pinv = sym_pinv(&self.sub_cov(obs)?);
        let out = a - &cross * pinv * cross.transpose();
        Ok((&out + out.transpose()) * 0.5)
    }

    /// Conditional variance of `Σ w·var` given the observed variables.
    pub fn mmse(&self, target: &[(&str, f64)], obs: &[&str]) -> Result<f64> {
        let n = self.labels.len();
        let mut t = DVector::zeros(n);
        for (name, w) in target {
            t[self.index(name)?] += w;
        }
        let cov = self.cov();
        let prior = (t.transpose() * &cov * &t)[(0, 0)];
        if obs.is_empty() {
            return Ok(prior);
        }
        let idx = obs.iter().map(|o| self.index(o)).collect::<Result<Vec<_>>>()?;
        let c = DVector::from_fn(idx.len(), |i, _| (cov.row(idx[i]) * &t)[(0, 0)]);
        let pinv = sym_pinv(&self.sub_cov(obs)?);
        Ok((prior - (c.transpose() * pinv * &c)[(0, 0)]).max(0.0))
    }
}

/// Pseudo-inverse of a covariance block. Works on the correlation matrix so a
/// single huge variance can't swamp the rank cutoff for the others.
fn sym_pinv(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let d = DVector::from_fn(n, |i, _| {
        let v = s[(i, i)];
        if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 }
    });
    let r = DMatrix::from_fn(n, n, |i, j| s[(i, j)] * d[i] * d[j]);
    let eig = r.symmetric_eigen();
    let cut = SINGULAR_REL * eig.eigenvalues.amax().max(1.0);
    let inv = eig.eigenvalues.map(|l| if l > cut { 1.0 / l } else { 0.0 });
    let rp = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
    DMatrix::from_fn(n, n, |i, j| rp[(i, j)] * d[i] * d[j])
}

fn require(g: &GaussianSpec, names: &[&str]) -> Result<f64> {
    g.log2det(names)?
        .ok_or_else(|| Error::Singular(format!("covariance of {names:?} is singular")))
}

fn concat<'a>(parts: &[&[&'a str]]) -> Vec<&'a str> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

/// `½ log2 (det Σ_a det Σ_b / det Σ_ab)`; `+∞` when `a` and `b` are
/// linearly dependent while each is nondegenerate.
pub fn gaussian_mi(g: &GaussianSpec, a: &[&str], b: &[&str]) -> Result<f64> {
    gaussian_cmi(g, a, b, &[])
}

pub fn gaussian_cmi(g: &GaussianSpec, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
    crate::prob::check_disjoint(&[a, b, c])?;
    let ac = require(g, &concat(&[a, c]))?;
    let bc = require(g, &concat(&[b, c]))?;
    let cc = require(g, c)?;
    match g.log2det(&concat(&[a, b, c]))? {
        None => Ok(f64::INFINITY),
        Some(abc) => Ok((0.5 * (ac + bc - abc - cc)).max(0.0)),
    }
}

/// Differential entropies in bits. Information quantities built from them are
/// the usual Gaussian ones; expectations of arbitrary functions are not offered.
impl InfoSource for GaussianSpec {
    fn var_names(&self) -> Vec<String> {
        self.labels.clone()
    }

    fn entropy_of(&self, names: &[&str]) -> Result<f64> {
        let ld = require(self, names)?;
        Ok(0.5 * (names.len() as f64 * (2.0 * std::f64::consts::PI * std::f64::consts::E).log2() + ld))
    }

    fn expect(&self, _names: &[&str], _g: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
        Err(Error::Unsupported("expectations over a Gaussian spec".into()))
    }

    fn mi(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        gaussian_cmi(self, a, b, &[])
    }

    fn cmi(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        gaussian_cmi(self, a, b, c)
    }

    /// Standard deviation of the residual, which is zero exactly when the
    /// linear relation holds.
    fn linear_gap(&self, out: &str, terms: &[(&str, f64)]) -> Result<f64> {
        let mut t = vec![(out, 1.0)];
        t.extend(terms.iter().map(|(n, c)| (*n, -c)));
        let mut names: Vec<&str> = Vec::new();
        for (n, _) in &t {
            if !names.contains(n) {
                names.push(n);
            }
        }
        let cov = self.sub_cov(&names)?;
        let w = DVector::from_fn(names.len(), |i, _| {
            t.iter().filter(|x| x.0 == names[i]).map(|x| x.1).sum::<f64>()
        });
        let var = (w.transpose() * &cov * &w)[(0, 0)];
        let scale: f64 = (0..names.len()).map(|i| w[i] * w[i] * cov[(i, i)]).sum();
        if var <= SINGULAR_REL * scale {
            return Ok(0.0);
        }
        Ok(var.sqrt())
    }
}
