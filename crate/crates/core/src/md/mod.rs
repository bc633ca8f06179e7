//! Sperner-set coding for multiple descriptions: antichains of description
//! subsets, decoded codebook sets, and the covering/packing systems of the
//! unstructured and structured schemes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::prob::{check_disjoint, InfoSource};

mod examples;
mod system;
#[cfg(test)]
mod tests;

pub use examples::*;
pub use system::*;

/// Largest supported number of descriptions.
pub const MAX_ELL: u8 = 3;

/// Subset of descriptions as a bitmask: bit `i - 1` is description `i`.
pub type Subset = u8;

fn check_ell(ell: u8) -> Result<()> {
    if !(1..=MAX_ELL).contains(&ell) {
        return Err(invalid("ell", format!("must be in 1..={MAX_ELL}, got {ell}")));
    }
    Ok(())
}

fn subset_key(s: Subset) -> (u32, Subset) {
    (s.count_ones(), s)
}

fn is_subset(a: Subset, b: Subset) -> bool {
    a & !b == 0
}

/// Nonempty subsets of `{1..ell}` in (size, lexicographic) order.
pub fn subsets(ell: u8) -> Vec<Subset> {
    let mut v: Vec<Subset> = (1..(1u8 << ell)).collect();
    v.sort_by_key(|&s| subset_key(s));
    v
}

pub fn format_subset(s: Subset) -> String {
    let parts: Vec<String> = (0..8).filter(|i| s >> i & 1 == 1).map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

/// An antichain of nonempty description subsets; indexes one SSC codebook.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Family(Vec<Subset>);

impl Family {
    pub fn new(members: &[Subset]) -> Result<Self> {
        let mut m = members.to_vec();
        m.sort_by_key(|&s| subset_key(s));
        m.dedup();
        if m.is_empty() {
            return Err(invalid("family", "must have at least one member"));
        }
        if m.contains(&0) {
            return Err(invalid("family", "members must be nonempty"));
        }
        for (i, &a) in m.iter().enumerate() {
            for &b in &m[i + 1..] {
                if is_subset(a, b) || is_subset(b, a) {
                    return Err(invalid(
                        "family",
                        format!("{} and {} are nested", format_subset(a), format_subset(b)),
                    ));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn members(&self) -> &[Subset] {
        &self.0
    }

    /// Union of the members: the descriptions this codebook is binned on.
    pub fn span(&self) -> Subset {
        self.0.iter().fold(0, |a, &b| a | b)
    }

    /// Decoder `n` recovers the codebook when some member lies inside `n`.
    pub fn decoded_by(&self, n: Subset) -> bool {
        self.0.iter().any(|&m| is_subset(m, n))
    }

    fn sort_key(&self) -> (usize, Vec<(u32, Subset)>) {
        (self.0.len(), self.0.iter().map(|&s| subset_key(s)).collect())
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|&s| format_subset(s)).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for Family {
    type Err = crate::Error;

    /// Parses `{1},{2,3}`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid("family", format!("cannot parse `{s}`"));
        let mut members = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let body = rest.strip_prefix('{').ok_or_else(bad)?;
            let end = body.find('}').ok_or_else(bad)?;
            let mut m: Subset = 0;
            for t in body[..end].split(',') {
                let i: u8 = t.trim().parse().map_err(|_| bad())?;
                if !(1..=8).contains(&i) {
                    return Err(bad());
                }
                m |= 1 << (i - 1);
            }
            members.push(m);
            rest = body[end + 1..].trim_start();
            rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
        }
        Family::new(&members)
    }
}

impl TryFrom<String> for Family {
    type Error = crate::Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

/// Every antichain of nonempty subsets of `{1..ell}`, empty family excluded.
pub fn enumerate_sperner(ell: u8) -> Result<Vec<Family>> {
    check_ell(ell)?;
    let subs = subsets(ell);
    let mut out = Vec::new();
    for pick in 1u32..(1 << subs.len()) {
        let members: Vec<Subset> = (0..subs.len()).filter(|i| pick >> i & 1 == 1).map(|i| subs[i]).collect();
        if let Ok(f) = Family::new(&members) {
            out.push(f);
        }
    }
    out.sort_by_key(Family::sort_key);
    Ok(out)
}

/// `(M_N, M̃_N)`: families decoded at `n`, and those already decoded at some
/// strict subset of `n`.
pub fn decoded_sets(n: Subset, ell: u8) -> Result<(Vec<Family>, Vec<Family>)> {
    check_ell(ell)?;
    if n == 0 || n >> ell != 0 {
        return Err(invalid("N", format!("{} is not a nonempty subset of the descriptions", format_subset(n))));
    }
    let all = enumerate_sperner(ell)?;
    let strict: Vec<Subset> = subsets(ell).into_iter().filter(|&p| p != n && is_subset(p, n)).collect();
    let m = all.iter().filter(|f| f.decoded_by(n)).cloned().collect();
    let mt = all
        .iter()
        .filter(|f| strict.iter().any(|&p| f.decoded_by(p)))
        .cloned()
        .collect();
    Ok((m, mt))
}

/// `Σ_{j≥2} I(Z_j; Z_1..Z_{j-1})`. The telescoped form `Σ H(Z_j) - H(Z)`
/// shows the value does not depend on the order of the groups.
pub fn ibar(p: &dyn InfoSource, groups: &[&[&str]]) -> Result<f64> {
    check_disjoint(groups)?;
    let mut seen: Vec<&str> = Vec::new();
    let mut total = 0.0;
    for g in groups {
        if !seen.is_empty() && !g.is_empty() {
            total += p.mi(g, &seen)?;
        }
        seen.extend_from_slice(g);
    }
    Ok(total)
}
