use super::{check_disjoint, union, JointPmf};
use crate::error::Result;
use crate::numeric::clamp_mi;

/// Anything that can report joint entropies of named variables.
///
/// Region evaluators are written against this trait so they work on dense pmfs,
/// pmfs with virtual derived axes, and factored Markov models alike.
pub trait InfoSource: Sync {
    fn var_names(&self) -> Vec<String>;

    /// Joint entropy in bits; the empty set has entropy 0.
    fn entropy_of(&self, names: &[&str]) -> Result<f64>;

    /// Expectation of `g` applied to the listed variables.
    fn expect(&self, names: &[&str], g: &dyn Fn(&[f64]) -> f64) -> Result<f64>;

    fn mi(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        check_disjoint(&[a, b])?;
        let v = self.entropy_of(a)? + self.entropy_of(b)? - self.entropy_of(&union(&[a, b]))?;
        Ok(clamp_mi(v))
    }

    fn cmi(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        check_disjoint(&[a, b, c])?;
        if c.is_empty() {
            return self.mi(a, b);
        }
        let v = self.entropy_of(&union(&[a, c]))? + self.entropy_of(&union(&[b, c]))?
            - self.entropy_of(&union(&[a, b, c]))?
            - self.entropy_of(c)?;
        Ok(clamp_mi(v))
    }

    /// Mean absolute gap `E|out - Σ c·x|`; zero when `out` is that linear
    /// combination almost surely.
    fn linear_gap(&self, out: &str, terms: &[(&str, f64)]) -> Result<f64> {
        let mut names = vec![out];
        names.extend(terms.iter().map(|t| t.0));
        self.expect(&names, &|v| {
            let lin: f64 = terms.iter().zip(&v[1..]).map(|(t, x)| t.1 * x).sum();
            (v[0] - lin).abs()
        })
    }

    /// Conditional entropy `H(a | c)`.
    fn cond_entropy(&self, a: &[&str], c: &[&str]) -> Result<f64> {
        Ok(self.entropy_of(&union(&[a, c]))? - self.entropy_of(c)?)
    }
}

impl InfoSource for JointPmf {
    fn var_names(&self) -> Vec<String> {
        self.axes().iter().map(|a| a.name().to_string()).collect()
    }

    fn entropy_of(&self, names: &[&str]) -> Result<f64> {
        self.entropy_names(names)
    }

    fn expect(&self, names: &[&str], g: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
        self.expect_names(names, g)
    }
}
