use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::prob::InfoSource;

/// Tolerance for the Markov and independence preconditions.
pub const MARKOV_TOL: f64 = 1e-9;

pub type RealFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A real function of some named variables (distortion, cost, reconstruction).
#[derive(Clone)]
pub struct Functional {
    pub inputs: Vec<String>,
    pub f: Arc<RealFn>,
}

impl Functional {
    pub fn new<F>(inputs: &[&str], f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Functional({:?})", self.inputs)
    }
}

/// A pmf plus the semantic roles its axes play in a coding theorem.
pub struct LabeledModel<'a> {
    source: &'a dyn InfoSource,
    roles: BTreeMap<String, Vec<String>>,
    functionals: BTreeMap<String, Functional>,
}

impl<'a> LabeledModel<'a> {
    pub fn new(source: &'a dyn InfoSource) -> Self {
        Self {
            source,
            roles: BTreeMap::new(),
            functionals: BTreeMap::new(),
        }
    }

    /// Assigns a role to a group of axes. An empty group is a trivial variable.
    pub fn role(mut self, role: &str, axes: &[&str]) -> Result<Self> {
        let names = self.source.var_names();
        for a in axes {
            if !names.iter().any(|n| n == a) {
                return Err(Error::UnknownAxis(a.to_string()));
            }
        }
        self.roles
            .insert(role.to_string(), axes.iter().map(|s| s.to_string()).collect());
        Ok(self)
    }

    pub fn functional(mut self, name: &str, f: Functional) -> Result<Self> {
        let names = self.source.var_names();
        for a in &f.inputs {
            if !names.iter().any(|n| n == a) {
                return Err(Error::UnknownAxis(a.clone()));
            }
        }
        self.functionals.insert(name.to_string(), f);
        Ok(self)
    }

    pub fn source(&self) -> &dyn InfoSource {
        self.source
    }

    pub fn get(&self, role: &str) -> Result<Vec<&str>> {
        self.roles
            .get(role)
            .map(|v| v.iter().map(String::as_str).collect())
            .ok_or_else(|| Error::MissingRole(role.to_string()))
    }

    /// Axes of an optional role; absent roles are trivial.
    pub fn get_or_empty(&self, role: &str) -> Vec<&str> {
        self.get(role).unwrap_or_default()
    }

    /// Expected value of a named functional, if one was supplied.
    pub fn evaluate(&self, name: &str) -> Result<Option<f64>> {
        match self.functionals.get(name) {
            None => Ok(None),
            Some(fun) => {
                let inputs: Vec<&str> = fun.inputs.iter().map(String::as_str).collect();
                let f = &fun.f;
                self.source.expect(&inputs, &|v| f(v)).map(Some)
            }
        }
    }

    pub(crate) fn require_markov(&self, a: &[&str], b: &[&str], given: &[&str], what: &str) -> Result<()> {
        let v = self.source.cmi(a, b, given)?;
        if v > MARKOV_TOL {
            return Err(Error::MarkovViolation(format!("{what}: conditional MI {v:.3e}")));
        }
        Ok(())
    }

    /// Checks that the `sum` axis equals the sum of the `parts` with probability one.
    pub(crate) fn require_sum(&self, sum: &[&str], parts: &[&[&str]]) -> Result<()> {
        let [s] = sum else {
            return Err(Error::AxisMismatch(format!("sum role must be a single axis, got {sum:?}")));
        };
        let mut terms = Vec::new();
        for p in parts {
            match p {
                [] => {}
                [x] => terms.push((*x, 1.0)),
                _ => return Err(Error::AxisMismatch(format!("summand role must be a single axis, got {p:?}"))),
            }
        }
        let dev = self.source.linear_gap(s, &terms)?;
        if dev > MARKOV_TOL {
            let names: Vec<&str> = terms.iter().map(|t| t.0).collect();
            return Err(Error::AxisMismatch(format!(
                "`{s}` is not the sum of {names:?} (mean deviation {dev:.3e})"
            )));
        }
        Ok(())
    }
}
