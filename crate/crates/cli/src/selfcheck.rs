//! Fast invariant suite behind `contnet selfcheck`.

use contnet::converge::{check_clipped_tv, check_mc_forced1, mi_at, random_mc_instance, MiTag, SchedulePoint};
use contnet::gaussian::mac_gaussian;
use contnet::grid::{ClipMode, ClipSpec, Density2D, LinearChannel, MarkovModel};
use contnet::md::enumerate_sperner;
use contnet::prob::{kl_divergence, l1_distance};
use contnet::regions::{HalfspaceSystem, Sense};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::table::Table;

type Check = (&'static str, bool, String);

fn mac() -> contnet::Result<Check> {
    let m = mac_gaussian(3.0, 3.0, 1.0)?;
    let ok = (m.structured_sum - 1.80737).abs() < 1e-4 && (m.unstructured_sum - 1.40368).abs() < 1e-4;
    Ok(("mac-sums", ok, format!("{} {}", m.structured_sum, m.unstructured_sum)))
}

fn sperner() -> contnet::Result<Check> {
    let counts: Vec<usize> = (1..=3).map(|l| enumerate_sperner(l).map(|f| f.len())).collect::<Result<_, _>>()?;
    Ok(("sperner-counts", counts == [1, 4, 18], format!("{counts:?}")))
}

fn forced_chain(seed: u64) -> contnet::Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let p = random_mc_instance(&mut rng, [2, 2, 3, 2, 2])?;
        let r = check_mc_forced1(&p, ["A", "B", "C", "D", "E"])?;
        worst = worst.min(r.lhs - r.rhs);
    }
    Ok(("forced-chain", worst >= -1e-10, format!("min lhs-rhs {worst}")))
}

fn pinsker(seed: u64) -> contnet::Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let p = random_mc_instance(&mut rng, [2, 1, 3, 1, 1])?;
        let q = random_mc_instance(&mut rng, [2, 1, 3, 1, 1])?;
        let l1 = l1_distance(&p, &q)?;
        worst = worst.min(kl_divergence(&p, &q)? - l1 * l1 / (2.0 * std::f64::consts::LN_2));
    }
    Ok(("pinsker", worst >= -1e-12, format!("min slack {worst}")))
}

fn elimination() -> contnet::Result<Check> {
    let mut s = HalfspaceSystem::new(&["x", "y"])?;
    s.add(&[("x", 1.0), ("y", 1.0)], Sense::Le, 1.0, "x+y")?;
    s.add(&[("x", 1.0), ("y", -1.0)], Sense::Le, 0.0, "x-y")?;
    let s = s.with_nonnegativity();
    // x <= y and x + y <= 1 leave x <= 1/2.
    let x = s.fm_eliminate("y")?.max_of("x")?;
    Ok(("fm-eliminate", (x - 0.5).abs() < 1e-12, format!("max x {x}")))
}

fn correlated_mi() -> contnet::Result<Check> {
    let m = MarkovModel {
        source: Density2D::bivariate_normal(0.5)?,
        u: LinearChannel::constant(0.0),
        v: LinearChannel::constant(0.0),
    };
    let p = SchedulePoint {
        n: 5,
        l: 6.0,
        u: 6.0,
        eps: 0.0,
    };
    let v = mi_at(&m, MiTag::XY, &p)?;
    let exact = -0.5 * 0.75f64.log2();
    Ok(("gaussian-mi", (v - exact).abs() < 5e-3, format!("{v} vs {exact}")))
}

fn clipped_tv() -> contnet::Result<Check> {
    let w = ClipSpec::symmetric(1.0, ClipMode::Saturate)?;
    let r = check_clipped_tv(&Density2D::bivariate_normal(0.0)?, &w, &w, 8)?;
    Ok(("clipped-tv", r.identity_err < 5e-3, format!("identity error {}", r.identity_err)))
}

/// Runs every check; the bool is false when any of them failed.
pub fn run(seed: u64) -> contnet::Result<(Table, bool)> {
    let checks = [
        mac()?,
        sperner()?,
        forced_chain(seed)?,
        pinsker(seed)?,
        elimination()?,
        correlated_mi()?,
        clipped_tv()?,
    ];
    let mut t = Table::new(&["check", "pass", "detail"]);
    let all = checks.iter().all(|c| c.1);
    for (name, ok, detail) in checks {
        t.push(vec![name.into(), ok.into(), detail.into()]);
    }
    Ok((t, all))
}
