use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two rows whose normalized coefficients agree within this are merged.
pub const MERGE_TOL: f64 = 1e-12;
/// Slack allowed when testing membership.
pub const CONTAINS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Row {
    fn satisfied(&self, x: &[f64], slack: f64) -> bool {
        let lhs: f64 = self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        match self.sense {
            Sense::Le => lhs <= self.bound + slack,
            Sense::Ge => lhs >= self.bound - slack,
        }
    }
}

/// Linear inequalities over named variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceSystem {
    variables: Vec<String>,
    rows: Vec<Row>,
}

/// Row in `a·x <= b` form with the set of original rows it was derived from.
#[derive(Debug, Clone)]
struct Canon {
    a: Vec<f64>,
    b: f64,
    origin: Vec<u64>,
}

fn bits_len(v: &[u64]) -> u32 {
    v.iter().map(|w| w.count_ones()).sum()
}

fn bits_or(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x | y).collect()
}

impl HalfspaceSystem {
    pub fn new<S: AsRef<str>>(variables: &[S]) -> Result<Self> {
        let mut v: Vec<String> = Vec::new();
        for s in variables {
            let s = s.as_ref().to_string();
            if v.contains(&s) {
                return Err(Error::DuplicateAxis(s));
            }
            v.push(s);
        }
        Ok(Self {
            variables: v,
            rows: Vec::new(),
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn add_variable(&mut self, name: &str) -> Result<()> {
        if self.variables.iter().any(|v| v == name) {
            return Err(Error::DuplicateAxis(name.to_string()));
        }
        self.variables.push(name.to_string());
        for r in &mut self.rows {
            r.coeffs.push(0.0);
        }
        Ok(())
    }

    pub fn push(&mut self, coeffs: Vec<f64>, sense: Sense, bound: f64, label: Option<String>) -> Result<()> {
        if coeffs.len() != self.variables.len() {
            return Err(Error::Dimension {
                expected: self.variables.len(),
                got: coeffs.len(),
            });
        }
        if !bound.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "bound".into(),
                reason: format!("non-finite row {label:?}: bound {bound}"),
            });
        }
        self.rows.push(Row {
            coeffs,
            sense,
            bound,
            label,
        });
        Ok(())
    }

    /// Adds `Σ c·var (sense) bound` given by variable names.
    pub fn add(&mut self, terms: &[(&str, f64)], sense: Sense, bound: f64, label: &str) -> Result<()> {
        let mut coeffs = vec![0.0; self.variables.len()];
        for (n, c) in terms {
            coeffs[self.var_index(n)?] += c;
        }
        let label = (!label.is_empty()).then(|| label.to_string());
        self.push(coeffs, sense, bound, label)
    }

    pub fn add_eq(&mut self, terms: &[(&str, f64)], bound: f64, label: &str) -> Result<()> {
        self.add(terms, Sense::Le, bound, label)?;
        self.add(terms, Sense::Ge, bound, label)
    }

    /// Adds `var >= 0` for every variable.
    pub fn with_nonnegativity(mut self) -> Self {
        for i in 0..self.variables.len() {
            let mut c = vec![0.0; self.variables.len()];
            c[i] = 1.0;
            self.rows.push(Row {
                coeffs: c,
                sense: Sense::Ge,
                bound: 0.0,
                label: Some(format!("{} >= 0", self.variables[i])),
            });
        }
        self
    }

    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        if point.len() != self.variables.len() {
            return Err(Error::Dimension {
                expected: self.variables.len(),
                got: point.len(),
            });
        }
        Ok(self.rows.iter().all(|r| r.satisfied(point, CONTAINS_SLACK)))
    }

    /// Substitutes `var = value` and drops the variable.
    pub fn fix(&self, var: &str, value: f64) -> Result<Self> {
        let k = self.var_index(var)?;
        let mut variables = self.variables.clone();
        variables.remove(k);
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut coeffs = r.coeffs.clone();
                let c = coeffs.remove(k);
                Row {
                    coeffs,
                    sense: r.sense,
                    bound: r.bound - c * value,
                    label: r.label.clone(),
                }
            })
            .collect();
        Ok(Self { variables, rows })
    }

    fn canon(&self) -> Vec<Canon> {
        let words = self.rows.len().div_ceil(64).max(1);
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let s = if r.sense == Sense::Le { 1.0 } else { -1.0 };
                let mut origin = vec![0u64; words];
                origin[i / 64] |= 1 << (i % 64);
                Canon {
                    a: r.coeffs.iter().map(|c| s * c).collect(),
                    b: s * r.bound,
                    origin,
                }
            })
            .collect();
        tidy(rows)
    }

    fn from_canon(variables: Vec<String>, rows: Vec<Canon>) -> Self {
        let rows = rows
            .into_iter()
            .map(|c| Row {
                coeffs: c.a,
                sense: Sense::Le,
                bound: c.b,
                label: None,
            })
            .collect();
        Self { variables, rows }
    }

    /// Exact projection eliminating `var`.
    pub fn fm_eliminate(&self, var: &str) -> Result<Self> {
        self.fm_eliminate_all(&[var])
    }

    /// Eliminates several variables, choosing the cheapest order greedily.
    pub fn fm_eliminate_all(&self, vars: &[&str]) -> Result<Self> {
        let mut idx = vars.iter().map(|v| self.var_index(v)).collect::<Result<Vec<_>>>()?;
        let mut rows = self.canon();
        let mut done = 0u32;
        while !idx.is_empty() {
            let (pos, _) = idx
                .iter()
                .enumerate()
                .map(|(p, &k)| {
                    let pos = rows.iter().filter(|r| r.a[k] > 0.0).count() as i64;
                    let neg = rows.iter().filter(|r| r.a[k] < 0.0).count() as i64;
                    (p, pos * neg - pos - neg)
                })
                .min_by_key(|&(_, cost)| cost)
                .expect("nonempty");
            let k = idx.swap_remove(pos);
            done += 1;
            rows = eliminate(rows, k, done);
        }
        let keep: Vec<usize> = (0..self.variables.len())
            .filter(|i| !vars.iter().any(|v| self.variables[*i] == *v))
            .collect();
        let variables = keep.iter().map(|&i| self.variables[i].clone()).collect();
        let rows = rows
            .into_iter()
            .map(|r| Canon {
                a: keep.iter().map(|&i| r.a[i]).collect(),
                b: r.b,
                origin: r.origin,
            })
            .collect();
        Ok(Self::from_canon(variables, rows))
    }

    /// Minimum of `Σ c·var` over the system.
    pub fn minimize(&self, objective: &[(&str, f64)]) -> Result<f64> {
        const T: &str = "\u{0}objective";
        let mut s = self.clone();
        s.add_variable(T)?;
        let mut terms: Vec<(&str, f64)> = vec![(T, 1.0)];
        terms.extend(objective.iter().map(|(n, c)| (*n, -c)));
        s.add_eq(&terms, 0.0, "objective")?;
        let others: Vec<String> = self.variables.clone();
        let others: Vec<&str> = others.iter().map(String::as_str).collect();
        let p = s.fm_eliminate_all(&others)?;
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for r in &p.rows {
            let a = r.coeffs[0];
            if a == 0.0 {
                if r.bound < -CONTAINS_SLACK {
                    return Err(Error::Infeasible);
                }
            } else if a > 0.0 {
                hi = hi.min(r.bound / a);
            } else {
                lo = lo.max(r.bound / a);
            }
        }
        if lo > hi + CONTAINS_SLACK {
            return Err(Error::Infeasible);
        }
        if lo == f64::NEG_INFINITY {
            return Err(Error::Unbounded);
        }
        Ok(lo)
    }

    /// Whether some point satisfies every row.
    pub fn feasible(&self) -> Result<bool> {
        let all: Vec<&str> = self.variables.iter().map(String::as_str).collect();
        let p = self.fm_eliminate_all(&all)?;
        Ok(p.rows.iter().all(|r| r.bound >= -CONTAINS_SLACK))
    }

    fn sum_terms(&self) -> Vec<(&str, f64)> {
        self.variables.iter().map(|v| (v.as_str(), 1.0)).collect()
    }

    /// Largest `Σ R_i` subject to the rows and `R_i >= 0`.
    pub fn max_sum_rate(&self) -> Result<f64> {
        let s = self.clone().with_nonnegativity();
        let neg: Vec<(&str, f64)> = self.sum_terms().into_iter().map(|(n, c)| (n, -c)).collect();
        Ok(-s.minimize(&neg)?)
    }

    /// Smallest `Σ R_i` subject to the rows and `R_i >= 0`.
    pub fn min_sum_rate(&self) -> Result<f64> {
        let s = self.clone().with_nonnegativity();
        s.minimize(&self.sum_terms())
    }

    /// Largest value of the bound on one variable when the others are free.
    pub fn max_of(&self, var: &str) -> Result<f64> {
        let s = self.clone().with_nonnegativity();
        Ok(-s.minimize(&[(var, -1.0)])?)
    }

    pub fn min_of(&self, var: &str) -> Result<f64> {
        let s = self.clone().with_nonnegativity();
        s.minimize(&[(var, 1.0)])
    }

    /// Row bound by label, for systems whose rows were all added with labels.
    pub fn bound_of(&self, label: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.label.as_deref() == Some(label)).map(|r| r.bound)
    }
}

/// Normalizes rows to unit max coefficient, drops trivially true rows and
/// merges parallel rows keeping the tighter bound.
fn tidy(rows: Vec<Canon>) -> Vec<Canon> {
    let mut out: Vec<Canon> = Vec::with_capacity(rows.len());
    for mut r in rows {
        let m = r.a.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if m <= MERGE_TOL {
            if r.b >= 0.0 {
                continue;
            }
            // Infeasible `0 <= negative`: keep a single representative.
            for c in &mut r.a {
                *c = 0.0;
            }
            if let Some(o) = out.iter_mut().find(|o| o.a.iter().all(|&c| c == 0.0)) {
                if r.b < o.b {
                    *o = r;
                }
                continue;
            }
            out.push(r);
            continue;
        }
        for c in &mut r.a {
            *c /= m;
            if c.abs() <= MERGE_TOL {
                *c = 0.0;
            }
        }
        r.b /= m;
        match out
            .iter_mut()
            .find(|o| o.a.iter().zip(&r.a).all(|(x, y)| (x - y).abs() <= MERGE_TOL))
        {
            Some(o) => {
                if r.b < o.b || (r.b == o.b && bits_len(&r.origin) < bits_len(&o.origin)) {
                    *o = r;
                }
            }
            None => out.push(r),
        }
    }
    out
}

fn eliminate(rows: Vec<Canon>, k: usize, eliminated: u32) -> Vec<Canon> {
    let (mut pos, mut neg, mut zero) = (Vec::new(), Vec::new(), Vec::new());
    for r in rows {
        if r.a[k] > 0.0 {
            pos.push(r);
        } else if r.a[k] < 0.0 {
            neg.push(r);
        } else {
            zero.push(r);
        }
    }
    for p in &pos {
        for n in &neg {
            let origin = bits_or(&p.origin, &n.origin);
            // Kohler's criterion: such a combination is implied by others.
            if bits_len(&origin) > eliminated + 1 {
                continue;
            }
            let (sp, sn) = (1.0 / p.a[k], -1.0 / n.a[k]);
            let mut a: Vec<f64> = p.a.iter().zip(&n.a).map(|(x, y)| sp * x + sn * y).collect();
            a[k] = 0.0;
            zero.push(Canon {
                a,
                b: sp * p.b + sn * n.b,
                origin,
            });
        }
    }
    tidy(zero)
}

impl fmt::Display for HalfspaceSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let mut first = true;
            for (c, v) in r.coeffs.iter().zip(&self.variables) {
                if *c == 0.0 {
                    continue;
                }
                if !first {
                    write!(f, " + ")?;
                }
                first = false;
                if *c == 1.0 {
                    write!(f, "{v}")?;
                } else {
                    write!(f, "{c}*{v}")?;
                }
            }
            if first {
                write!(f, "0")?;
            }
            let s = if r.sense == Sense::Le { "<=" } else { ">=" };
            write!(f, " {s} {}", r.bound)?;
            if let Some(l) = &r.label {
                write!(f, "    [{l}]")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
