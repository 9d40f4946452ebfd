use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn amfd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amfd")).args(args).output().unwrap()
}

fn small_spec(dir: &Path) -> String {
    let path = dir.join("put.json");
    fs::write(
        &path,
        r#"{
            "option": {"kind": "put", "strike": 100},
            "params": {"r": 0.02, "sigma": 0.4, "T": 0.5},
            "methods": ["BE-IT", "CN-P", "PR"],
            "nu_list": [7, 11, 15, 19, 23]
        }"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn converge_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path());
    let out = dir.path().join("results");
    let o = amfd(&["converge", "--spec", &spec, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("errors.csv")).unwrap();
    assert!(csv.starts_with("method,m,N,error,seconds,avg_penalty_iters\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 5);
    let svg = fs::read_to_string(out.join("errors.svg")).unwrap();
    assert!(svg.starts_with("<?xml") || svg.starts_with("<svg"));
    assert!(out.join("orders.csv").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("CN-P"));
}

#[test]
fn unknown_method_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path());
    let o = amfd(&["price", "--spec", &spec, "--method", "XX-IT", "--m", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("XX-IT"));
    let out = dir.path().join("r");
    let o = amfd(&[
        "converge",
        "--spec",
        &spec,
        "--out",
        out.to_str().unwrap(),
        "--method",
        "nope",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn job_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path());
    let run = |jobs: &str| {
        let out = dir.path().join(format!("j{jobs}"));
        let o = amfd(&[
            "converge",
            "--spec",
            &spec,
            "--out",
            out.to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        assert!(o.status.success());
        (
            fs::read(out.join("errors.csv")).unwrap(),
            fs::read(out.join("orders.csv")).unwrap(),
        )
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn price_region_multipliers_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = amfd(&["price", "--spec", "minput2d", "--method", "HV-IT", "--m", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("s1,s2,payoff,value\n"));
    assert_eq!(text.lines().count(), 1 + 11 * 11);

    let region = d.join("region.csv");
    let o = amfd(&[
        "region",
        "--spec",
        "put1d",
        "--method",
        "BE-P",
        "--m",
        "40",
        "--out",
        region.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(fs::read_to_string(&region).unwrap().starts_with("s,flag\n"));

    let o = amfd(&["multipliers", "--spec", "put1d", "--method", "BE-P", "--m", "40"]);
    assert_eq!(o.status.code(), Some(1));
    let o = amfd(&["multipliers", "--spec", "put1d", "--method", "BE-IT", "--m", "40"]);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("t_n,s_i,lambda\n"));

    let spec = small_spec(d);
    let out = d.join("c");
    assert!(amfd(&["converge", "--spec", &spec, "--out", out.to_str().unwrap()])
        .status
        .success());
    let svg = d.join("again.svg");
    let o = amfd(&[
        "plot",
        "--csv",
        out.join("errors.csv").to_str().unwrap(),
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read(svg).unwrap(), fs::read(out.join("errors.svg")).unwrap());
}
