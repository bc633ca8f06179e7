//! Config documents for the subcommands that take a model.

use std::collections::BTreeMap;

use contnet::converge::Schedule;
use contnet::gaussian::GaussianSpec;
use contnet::grid::{
    discretize_1d, discretize_2d, discretize_markov_factored, AxisSpec, Density1D, Density2D, MarkovGrids,
    MarkovModel,
};
use contnet::md::ExampleGrid;
use contnet::prob::{InfoSource, JointPmf, MarkovPmf};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Parses `text` as JSON into `T`, naming the offending key on failure.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<(T, serde_json::Value), CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config is not valid JSON: {e}")))?;
    let t = serde_path_to_error::deserialize(value.clone()).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("config key `{path}`: {}", e.inner()))
    })?;
    Ok((t, value))
}

fn name_x() -> String {
    "X".into()
}

fn names_xy() -> [String; 2] {
    ["X".into(), "Y".into()]
}

fn names_xyuv() -> [String; 4] {
    ["X".into(), "Y".into(), "U".into(), "V".into()]
}

fn one() -> i64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumConfig {
    pub name: String,
    #[serde(default = "one")]
    pub alpha: i64,
    #[serde(default = "one")]
    pub beta: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
pub enum SourceConfig {
    Density1d {
        density: Density1D,
        axis: AxisSpec,
        #[serde(default = "name_x")]
        name: String,
    },
    Density2d {
        density: Density2D,
        x: AxisSpec,
        y: AxisSpec,
        #[serde(default = "names_xy")]
        names: [String; 2],
    },
    /// `U - X - Y - V`, kept factored; `sum` adds `alpha U + beta V`.
    Markov {
        model: MarkovModel,
        grids: MarkovGrids,
        #[serde(default = "names_xyuv")]
        names: [String; 4],
        #[serde(default)]
        sum: Option<SumConfig>,
    },
    /// Zero-mean Gaussian vector, evaluated in closed form.
    Gaussian { labels: Vec<String>, cov: Vec<Vec<f64>> },
}

#[allow(clippy::large_enum_variant)]
pub enum Source {
    Pmf(JointPmf),
    Markov(MarkovPmf),
    Gaussian(GaussianSpec),
}

impl Source {
    pub fn info(&self) -> &dyn InfoSource {
        match self {
            Source::Pmf(p) => p,
            Source::Markov(p) => p,
            Source::Gaussian(g) => g,
        }
    }
}

impl SourceConfig {
    pub fn build(&self) -> Result<Source, CliError> {
        Ok(match self {
            SourceConfig::Density1d { density, axis, name } => Source::Pmf(discretize_1d(density, axis, name)?),
            SourceConfig::Density2d { density, x, y, names } => {
                Source::Pmf(discretize_2d(density, x, y, [&names[0], &names[1]])?.0)
            }
            SourceConfig::Markov {
                model,
                grids,
                names,
                sum,
            } => {
                let n: [&str; 4] = [&names[0], &names[1], &names[2], &names[3]];
                let mut p = discretize_markov_factored(model, grids, n)?;
                if let Some(s) = sum {
                    p = p.with_sum(&s.name, s.alpha, s.beta)?;
                }
                Source::Markov(p)
            }
            SourceConfig::Gaussian { labels, cov } => {
                let k = labels.len();
                if cov.len() != k || cov.iter().any(|r| r.len() != k) {
                    return Err(CliError::Config(format!("config key `source.gaussian.cov`: must be {k}x{k}")));
                }
                let m = DMatrix::from_fn(k, k, |i, j| cov[i][j]);
                Source::Gaussian(GaussianSpec::zero_mean(labels, m)?)
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizeConfig {
    pub source: SourceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiConfig {
    pub source: SourceConfig,
    pub a: Vec<String>,
    pub b: Vec<String>,
    #[serde(default)]
    pub given: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub model: MarkovModel,
    /// One of `xu`, `yv`, `sum-u`, `sum-v`, `uv`, `xy`, `cor10`.
    pub tag: String,
    pub schedule: Schedule,
    pub oracle: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Wz,
    Gp,
    Dbc,
    Bt,
    Thu,
    Mac,
    Ic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub source: SourceConfig,
    pub region: RegionKind,
    /// Role name to axis names, e.g. `"U": ["U"]`.
    pub roles: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MdExampleName {
    Ex1,
    Ex2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdExampleConfig {
    pub name: MdExampleName,
    pub p: f64,
    pub grid: ExampleGrid,
    #[serde(default = "one")]
    pub alpha: i64,
    #[serde(default = "one")]
    pub beta: i64,
    /// Pairs `[i, j]` constrained to `Ri = Rj`.
    #[serde(default)]
    pub equal_rates: Vec<[u8; 2]>,
    /// Rates held fixed while the others are minimized.
    #[serde(default)]
    pub fixed: Vec<(u8, f64)>,
    /// A rate triple to test for feasibility.
    #[serde(default)]
    pub targets: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MdSscConfig {
    /// Lists every codebook family for `ell` descriptions.
    Sperner { ell: u8 },
    Example(MdExampleConfig),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let text = r#"{"source": {"density1d": {"density": {"kind": "uniform", "lo": 0, "hi": 1},
            "axis": {"clip": {"lower": 1, "upper": 1, "mode": "saturate"}, "grid": {"n": 2}}, "nmae": "Q"}}}"#;
        let Err(CliError::Config(msg)) = parse::<DiscretizeConfig>(text) else {
            panic!("expected a config error");
        };
        assert!(msg.contains("nmae"), "{msg}");
    }

    #[test]
    fn wrong_type_names_the_path() {
        let text = r#"{"model": {"source": {"kind": "gaussian", "mean": [0, 0], "sd": [1, 1], "rho": "high"},
            "u": {"gain": 1}, "v": {"gain": 1}}, "tag": "xy", "schedule": [{"n": 2, "l": 4, "u": 4}],
            "oracle": 0, "tolerance": 1}"#;
        let Err(CliError::Config(msg)) = parse::<ConvergeConfig>(text) else {
            panic!("expected a config error");
        };
        // Internally tagged densities are buffered, so the path stops at the tag.
        assert!(msg.contains("model.source"), "{msg}");
    }

    #[test]
    fn schedule_invariants_are_schema_errors() {
        let text = r#"{"model": {"source": {"kind": "gaussian", "mean": [0, 0], "sd": [1, 1], "rho": 0.5},
            "u": {"gain": 0}, "v": {"gain": 0}}, "tag": "xy",
            "schedule": [{"n": 3, "l": 4, "u": 4}, {"n": 2, "l": 4, "u": 4}], "oracle": 0, "tolerance": 1}"#;
        let Err(CliError::Config(msg)) = parse::<ConvergeConfig>(text) else {
            panic!("expected a config error");
        };
        assert!(msg.contains("schedule"), "{msg}");
    }
}
