use serde::{Deserialize, Serialize};

use super::{Family, StructuredTriple};
use crate::error::{invalid, Result};
use crate::grid::{
    cells, discretize_1d, discretize_markov_factored, grid_axis, AxisSpec, ClipMode, Density1D, Density2D,
    LinearChannel, MarkovGrids, MarkovModel,
};
use crate::numeric::norm_cdf;
use crate::prob::{Augmented, JointPmf, MarkovPmf};

/// Grid resolution `2^-n` and clip window of `sigmas` standard deviations,
/// used for every axis of a discretized example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleGrid {
    pub n: u32,
    pub sigmas: f64,
}

impl ExampleGrid {
    fn axis(&self, sd: f64) -> Result<AxisSpec> {
        AxisSpec::symmetric(self.sigmas * sd, self.n, ClipMode::Saturate)
    }
}

/// `A_in = {1}`, `A_out = {2}`, `A_sum = {3}`: the layout of both examples.
pub fn sum_triple(v_in: &str, v_out: &str, w: &str) -> StructuredTriple {
    let fam = |s: &str| s.parse::<Family>().expect("literal family");
    StructuredTriple {
        a_in: fam("{1}"),
        a_out: fam("{2}"),
        a_sum: fam("{3}"),
        v_in: v_in.into(),
        v_out: v_out.into(),
        w_sum: w.into(),
        w_cover: Vec::new(),
    }
}

/// First example, structured layer only: `X, Z` independent standard
/// normals, `V1 = X + N`, `V2 = Z + N'`, `W = V1 + V2`.
///
/// The noise variance is `P / (1 - P)`, so that `I(V1; X) = ½ log(1/P)` and
/// the error of estimating `X` from `V1` is exactly `P`.
pub fn md_ex1_structured_source(p: f64, g: &ExampleGrid) -> Result<(MarkovPmf, StructuredTriple)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid("P", format!("must be in (0, 1), got {p}")));
    }
    let noise = (p / (1.0 - p)).sqrt();
    let vsd = (1.0 + noise * noise).sqrt();
    let model = MarkovModel {
        source: Density2D::bivariate_normal(0.0)?,
        u: LinearChannel::additive(1.0, noise)?,
        v: LinearChannel::additive(1.0, noise)?,
    };
    let grids = MarkovGrids {
        x: g.axis(1.0)?,
        y: g.axis(1.0)?,
        u: g.axis(vsd)?,
        v: g.axis(vsd)?,
        smooth: None,
    };
    let src = discretize_markov_factored(&model, &grids, ["X", "Z", "V1", "V2"])?.with_sum("W", 1, 1)?;
    Ok((src, sum_triple("V1", "V2", "W")))
}

/// Second example, `U, V ~ N(0, 1-P)` independent and `X = U + V + N(0, 2P-1)`,
/// with `W = U + V`. `X` is drawn given the quantized `U + V`.
pub fn md_ex2_source(p: f64, g: &ExampleGrid) -> Result<(Augmented, StructuredTriple)> {
    if !(p > 0.5 && p < 1.0) {
        return Err(invalid("P", format!("must be in (1/2, 1), got {p}")));
    }
    let sd = (1.0 - p).sqrt();
    let noise = (2.0 * p - 1.0).sqrt();
    let spec = g.axis(sd)?;
    let u = discretize_1d(&Density1D::gaussian(0.0, sd)?, &spec, "U")?;
    let v = discretize_1d(&Density1D::gaussian(0.0, sd)?, &spec, "V")?;
    let uv = JointPmf::product(&[&u, &v])?;
    let xs = g.axis(1.0)?;
    let xcells = cells(&xs.clip, &xs.grid)?;
    let joint = uv.extend(&["U", "V"], grid_axis("X", &xs.clip, &xs.grid)?, |s| {
        let m = s[0] + s[1];
        xcells
            .iter()
            .map(|c| norm_cdf((c.hi - m) / noise) - norm_cdf((c.lo - m) / noise))
            .collect()
    })?;
    let src = Augmented::new(joint).with_derived("W", &["U", "V"], |v| v[0] + v[1])?;
    Ok((src, sum_triple("U", "V", "W")))
}
