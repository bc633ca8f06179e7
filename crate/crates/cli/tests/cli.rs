use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_contnet");

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = Command::new(BIN);
    c.args(args);
    match threads {
        Some(t) => c.env("CONTNET_THREADS", t),
        None => c.env_remove("CONTNET_THREADS"),
    };
    c.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

/// Data rows as maps from column name to cell text.
fn rows(text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let cols: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records()
        .map(|rec| cols.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn mac_row_has_both_sums() {
    let o = run(&["gaussian", "mac", "--p1", "3", "--p2", "3", "--n", "1"], None);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 1);
    // Quoted to five places; the closed forms give 1.8073549 and 1.4036775.
    assert!((num(&r[0]["structured_sum"]) - 1.80737).abs() < 1e-4);
    assert!((num(&r[0]["unstructured_sum"]) - 1.40368).abs() < 1e-4);
}

#[test]
fn mac_sweep_crosses_at_three_halves() {
    let list = "1,1.25,1.5,1.75,3";
    let o = run(&["gaussian", "mac", "--p1", list, "--p2", list], None);
    let r = rows(&stdout(&o));
    let crossed: Vec<bool> = r.iter().map(|row| row["crossover"] == "true").collect();
    assert_eq!(crossed, [false, false, false, true, true]);
    let at = &r[2];
    assert!((num(&at["structured_sum"]) - num(&at["unstructured_sum"])).abs() < 1e-9);
}

#[test]
fn header_block_carries_version_hash_and_seed() {
    let o = run(&["--seed", "42", "gaussian", "md2"], None);
    let text = stdout(&o);
    let head: Vec<&str> = text.lines().take(4).collect();
    assert_eq!(head[0], concat!("# tool: contnet ", env!("CARGO_PKG_VERSION")));
    assert_eq!(head[1], "# command: gaussian md2");
    let hash = head[2].strip_prefix("# config-sha256: ").unwrap();
    assert_eq!(hash.len(), 64);
    assert_eq!(head[3], "# seed: 42");
    // The hash covers the config, not the seed.
    let other = stdout(&run(&["--seed", "7", "gaussian", "md2"], None));
    assert!(other.contains(hash));
    let changed = stdout(&run(&["gaussian", "md2", "--p", "0.6"], None));
    assert!(!changed.contains(hash));
}

#[test]
fn selfcheck_passes() {
    let o = run(&["selfcheck"], None);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(rows(&stdout(&o)).iter().all(|r| r["pass"] == "true"));
}

#[test]
fn malformed_config_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"source": {"density1d": {"density": {"kind": "uniform", "lo": -1, "hi": 1},
            "axis": {"clip": {"lower": 1, "upper": 1, "mode": "saturate"}, "grid": {"n": 2, "bins": 4}}}}}"#,
    )
    .unwrap();
    let o = run(&["discretize", path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("source.density1d.axis.grid.bins"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn invalid_parameter_exits_2() {
    let o = run(&["gaussian", "md2", "--p", "0.9"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["gaussian", "thu", "--rho", "0.5", "--c", "0.5", "--d", "-0.5"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["gaussian", "mac", "--p1", "-1", "--p2", "1"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_window_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.json");
    // All mass lies outside the window in redraw mode.
    std::fs::write(
        &path,
        r#"{"source": {"density1d": {"density": {"kind": "uniform", "lo": 5, "hi": 6},
            "axis": {"clip": {"lower": 1, "upper": 1, "mode": "redraw"}, "grid": {"n": 2}}}}}"#,
    )
    .unwrap();
    let o = run(&["discretize", path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_subcommand_exits_64_with_usage() {
    let o = run(&["frobnicate"], None);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage:"));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let args = ["gaussian", "thu", "--rho", "0.9", "--c", "0.9", "--d", "0.01,0.05"];
    let mut with_out: Vec<&str> = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let o = run(&with_out, None);
    assert!(o.status.success() && o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&run(&args, None)));
}

#[test]
fn output_is_identical_across_thread_counts() {
    let cfg = |name: &str| configs().join(name).to_str().unwrap().to_string();
    let cases: Vec<Vec<String>> = vec![
        ["gaussian", "fig-rhocrange", "--rho-steps", "6", "--c-steps", "5"].map(String::from).to_vec(),
        ["--seed", "3", "gaussian", "fig-md1", "--p", "0.3", "--starts", "4"].map(String::from).to_vec(),
        vec!["converge".into(), cfg("converge-xy.json")],
        vec!["md-ssc".into(), cfg("md-ex2.json")],
        vec!["mi".into(), cfg("mi-gaussian-pair.json")],
    ];
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let one = run(&args, Some("1"));
        let four = run(&args, Some("4"));
        assert!(one.status.success(), "{args:?}: {}", String::from_utf8_lossy(&one.stderr));
        assert_eq!(one.stdout, four.stdout, "{args:?}");
    }
}

#[test]
fn bad_thread_env_is_a_config_error() {
    let o = run(&["gaussian", "md2"], Some("zero"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_configs_run() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        let cmd = match name.split('-').next().unwrap() {
            "md" => "md-ssc",
            c => c,
        }
        .to_string();
        let o = run(&[&cmd, path.to_str().unwrap()], None);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!rows(&stdout(&o)).is_empty(), "{name}");
    }
}

#[test]
fn discretized_uniform_masses() {
    let o = run(&["discretize", configs().join("discretize-uniform.json").to_str().unwrap()], None);
    let r = rows(&stdout(&o));
    // Step 1/4 on [-1, 1]: half cells at the ends.
    assert_eq!(r.len(), 9);
    assert_eq!(r[0]["p"], "0.0625");
    assert_eq!(r[4]["p"], "0.125");
    let total: f64 = r.iter().map(|row| num(&row["p"])).sum();
    assert!((total - 1.0).abs() < 1e-12);
}
