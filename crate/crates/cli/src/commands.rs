use std::str::FromStr;

use contnet::converge::{mi_trace, MiTag};
use contnet::gaussian::{
    ic_gaussian_masks, mac_gaussian, md_ex1_structured, md_ex1_unstructured, md_ex2, thu_bt_min_sumrate,
    thu_gain_sweep, thu_lattice_sum, CubicRow, Ex1Search, SweepGrid, SweepRange, EX2_DISTORTION_LABELS,
};
use contnet::md::{
    enumerate_sperner, md_ex1_structured_source, md_ex2_source, structured_constraints, MdConstraintSystem, MdModel,
};
use contnet::regions::{
    berger_tung_region, dbc_region, gp_rate, ic_3to1_region, mac_compute_region, two_help_one_region, wz_rate,
    HalfspaceSystem, LabeledModel, Sense,
};
use rayon::prelude::*;

use crate::config::{
    ConvergeConfig, DiscretizeConfig, MdExampleConfig, MdExampleName, MdSscConfig, MiConfig, RegionConfig,
    RegionKind, Source,
};
use crate::error::CliError;
use crate::table::{Cell, Header, Table};

pub type Output = (Header, Table);

pub fn discretize(c: &DiscretizeConfig, h: Header) -> Result<Output, CliError> {
    let Source::Pmf(p) = c.source.build()? else {
        return Err(CliError::Config(
            "config key `source`: discretize needs a density1d or density2d source".into(),
        ));
    };
    let mut cols: Vec<&str> = p.axes().iter().map(|a| a.name()).collect();
    cols.push("p");
    let mut t = Table::new(&cols);
    for (k, &q) in p.probs().iter().enumerate() {
        let mut row: Vec<Cell> = p
            .coords(k)
            .iter()
            .zip(p.axes())
            .map(|(&i, a)| a.points()[i].into())
            .collect();
        row.push(q.into());
        t.push(row);
    }
    Ok((h, t))
}

fn join(names: &[String]) -> String {
    names.join(" ")
}

pub fn mi(c: &MiConfig, h: Header) -> Result<Output, CliError> {
    let src = c.source.build()?;
    let s = src.info();
    let a: Vec<&str> = c.a.iter().map(String::as_str).collect();
    let b: Vec<&str> = c.b.iter().map(String::as_str).collect();
    let g: Vec<&str> = c.given.iter().map(String::as_str).collect();
    let bits = if g.is_empty() { s.mi(&a, &b)? } else { s.cmi(&a, &b, &g)? };
    let mut t = Table::new(&["a", "b", "given", "bits"]);
    t.push(vec![join(&c.a).into(), join(&c.b).into(), join(&c.given).into(), bits.into()]);
    Ok((h, t))
}

pub fn converge(c: &ConvergeConfig, mut h: Header) -> Result<Output, CliError> {
    let tag = MiTag::from_str(&c.tag).map_err(|e| CliError::Config(format!("config key `tag`: {e}")))?;
    let trace = mi_trace(&c.model, tag, &c.schedule, c.oracle, c.tolerance)?;
    h.add("oracle", Cell::from(c.oracle));
    h.add("tolerance", Cell::from(c.tolerance));
    h.add("passes", trace.passes());
    let mut t = Table::new(&["n", "l", "u", "eps", "value", "abs_err"]);
    for ((p, v), e) in c.schedule.points().iter().zip(&trace.values).zip(trace.errors()) {
        t.push(vec![p.n.into(), p.l.into(), p.u.into(), p.eps.into(), (*v).into(), e.into()]);
    }
    Ok((h, t))
}

fn sense(s: Sense) -> &'static str {
    match s {
        Sense::Le => "<=",
        Sense::Ge => ">=",
    }
}

/// One row per halfspace: label, coefficients, sense, bound.
fn system_table(sys: &HalfspaceSystem) -> Table {
    let mut cols = vec!["label".to_string()];
    cols.extend(sys.variables().iter().cloned());
    cols.extend(["sense".to_string(), "bound".to_string()]);
    let mut t = Table::new(&cols);
    for r in sys.rows() {
        let mut row: Vec<Cell> = vec![r.label.clone().unwrap_or_default().into()];
        row.extend(r.coeffs.iter().map(|&c| Cell::from(c)));
        row.push(sense(r.sense).into());
        row.push(r.bound.into());
        t.push(row);
    }
    t
}

pub fn region(c: &RegionConfig, mut h: Header) -> Result<Output, CliError> {
    let src = c.source.build()?;
    let mut m = LabeledModel::new(src.info());
    for (role, axes) in &c.roles {
        let axes: Vec<&str> = axes.iter().map(String::as_str).collect();
        m = m.role(role, &axes)?;
    }
    let out = match c.region {
        RegionKind::Wz | RegionKind::Gp => {
            let r = if c.region == RegionKind::Wz { wz_rate(&m)? } else { gp_rate(&m)? };
            let mut t = Table::new(&["label", "R", "sense", "bound"]);
            t.push(vec!["R".into(), 1.0.into(), ">=".into(), r.rate.into()]);
            return Ok((h, t));
        }
        RegionKind::Dbc => dbc_region(&m)?,
        RegionKind::Bt => berger_tung_region(&m)?,
        RegionKind::Thu => two_help_one_region(&m)?,
        RegionKind::Mac => mac_compute_region(&m)?,
        RegionKind::Ic => ic_3to1_region(&m)?,
    };
    for (k, v) in &out.functionals {
        h.add(k, Cell::from(*v));
    }
    Ok((h, system_table(&out.system)))
}

fn md_system(c: &MdExampleConfig) -> Result<MdConstraintSystem, CliError> {
    let sys = match c.name {
        MdExampleName::Ex1 => {
            let (src, tr) = md_ex1_structured_source(c.p, &c.grid)?;
            let m = MdModel::new(&src, 3, &["X", "Z"])?.structured(tr)?;
            structured_constraints(&m, c.alpha, c.beta)?
        }
        MdExampleName::Ex2 => {
            let (src, tr) = md_ex2_source(c.p, &c.grid)?;
            let m = MdModel::new(&src, 3, &["X"])?.structured(tr)?;
            structured_constraints(&m, c.alpha, c.beta)?
        }
    };
    let mut sys = sys;
    for &[i, j] in &c.equal_rates {
        sys = sys.with_equal_rates(i, j)?;
    }
    Ok(sys)
}

pub fn md_ssc(c: &MdSscConfig, h: Header) -> Result<Output, CliError> {
    match c {
        MdSscConfig::Sperner { ell } => {
            let mut t = Table::new(&["index", "family"]);
            for (i, f) in enumerate_sperner(*ell)?.into_iter().enumerate() {
                t.push(vec![(i + 1).into(), f.to_string().into()]);
            }
            Ok((h, t))
        }
        MdSscConfig::Example(e) => {
            let sys = md_system(e)?;
            let mut t = Table::new(&["quantity", "value"]);
            let fixed: Vec<u8> = e.fixed.iter().map(|f| f.0).collect();
            for i in 1..=3u8 {
                if !fixed.contains(&i) {
                    t.push(vec![format!("min R{i}").into(), sys.min_rate(i, &e.fixed)?.into()]);
                }
            }
            if let Some(r) = &e.targets {
                t.push(vec!["feasible".into(), sys.rate_feasible(r)?.into()]);
            }
            Ok((h, t))
        }
    }
}

pub fn gaussian_mac(p1: &[f64], p2: &[f64], n: f64, h: Header) -> Result<Output, CliError> {
    if p1.len() != p2.len() {
        return Err(CliError::Config("--p1 and --p2 need the same number of values".into()));
    }
    let mut t = Table::new(&[
        "p1",
        "p2",
        "n",
        "structured_sum",
        "unstructured_sum",
        "crossover",
        "printed_condition",
    ]);
    for (&a, &b) in p1.iter().zip(p2) {
        let m = mac_gaussian(a, b, n)?;
        t.push(vec![
            a.into(),
            b.into(),
            n.into(),
            m.structured_sum.into(),
            m.unstructured_sum.into(),
            m.crossover.into(),
            m.printed_condition.into(),
        ]);
    }
    Ok((h, t))
}

pub fn gaussian_thu(rho: f64, c: f64, d: &[f64], h: Header) -> Result<Output, CliError> {
    let rows: Vec<Result<Vec<Cell>, CliError>> = d
        .par_iter()
        .map(|&d| {
            let bt = thu_bt_min_sumrate(rho, c, d)?;
            let lat = thu_lattice_sum(rho, c, d);
            Ok(vec![
                rho.into(),
                c.into(),
                d.into(),
                lat.into(),
                bt.sum_rate.into(),
                bt.q1.into(),
                bt.q2.into(),
                (bt.sum_rate - lat).max(0.0).into(),
            ])
        })
        .collect();
    let mut t = Table::new(&["rho", "c", "d", "lattice_sum", "bt_sum", "bt_q1", "bt_q2", "gain"]);
    for r in rows {
        t.push(r?);
    }
    Ok((h, t))
}

pub fn gaussian_rhoc(grid: &SweepGrid, d: &[f64], h: Header) -> Result<Output, CliError> {
    let mut t = Table::new(&["rho", "c", "gain_bits"]);
    for g in thu_gain_sweep(grid, d)? {
        t.push(vec![g.rho.into(), g.c.into(), g.gain_bits.into()]);
    }
    Ok((h, t))
}

pub fn gaussian_ic(a: &SweepRange, p: &SweepRange, mut h: Header) -> Result<Output, CliError> {
    let m = ic_gaussian_masks(a, p, CubicRow::Corrected)?;
    h.add("structured_area", m.structured.area);
    h.add("unstructured_area", m.unstructured.area);
    h.add("structured_min_a", Cell::from(m.structured.min_a));
    h.add("unstructured_min_a", Cell::from(m.unstructured.min_a));
    let mut t = Table::new(&["a", "structured_min_p", "unstructured_min_p"]);
    for (i, &ai) in m.a.iter().enumerate() {
        t.push(vec![ai.into(), m.structured.min_p[i].into(), m.unstructured.min_p[i].into()]);
    }
    Ok((h, t))
}

pub fn gaussian_md1(ps: &[f64], starts: usize, seed: u64, h: Header) -> Result<Output, CliError> {
    let search = Ex1Search {
        starts,
        seed,
        ..Ex1Search::default()
    };
    let mut t = Table::new(&[
        "p",
        "structured_r1",
        "structured_r2",
        "structured_r3",
        "unstructured_min_r3",
        "max_violation",
        "converged",
    ]);
    for &p in ps {
        let s = md_ex1_structured(p)?;
        let u = md_ex1_unstructured(p, &search)?;
        t.push(vec![
            p.into(),
            s[0].into(),
            s[1].into(),
            s[2].into(),
            u.min_r3.into(),
            u.max_violation.into(),
            u.converged.into(),
        ]);
    }
    Ok((h, t))
}

pub fn gaussian_md2(ps: &[f64], h: Header) -> Result<Output, CliError> {
    let mut cols = vec!["p", "r1", "r2", "r3"];
    cols.extend(EX2_DISTORTION_LABELS);
    let mut t = Table::new(&cols);
    for &p in ps {
        let r = md_ex2(p)?;
        let mut row: Vec<Cell> = vec![p.into(), r.r1.into(), r.r2.into(), r.r3.into()];
        row.extend(r.distortions.iter().map(|&d| Cell::from(d)));
        t.push(row);
    }
    Ok((h, t))
}
