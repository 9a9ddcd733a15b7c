use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_rcp");

fn rcp(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path) -> std::path::PathBuf {
    let out = dir.join("scenario.json");
    let o = rcp(&[
        "gen",
        "--out",
        s(&out),
        "--seed",
        "4",
        "--clusters",
        "2",
        "--nodes-per-cluster",
        "15",
        "--controllers",
        "2",
        "--steps",
        "12",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn gen_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = fs::read(gen(tmp.path())).unwrap();
    let b = fs::read(gen(tmp.path())).unwrap();
    assert_eq!(a, b);
}

#[test]
fn run_with_zero_walltime_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = gen(tmp.path());
    for algo in ["rcp", "frame"] {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let out = tmp.path().join(format!("{algo}{k}.csv"));
            let o = rcp(&["run", "--algo", algo, "--scenario", s(&sc), "--out", s(&out), "--zero-walltime"]);
            assert!(o.status.success());
            outputs.push(fs::read_to_string(&out).unwrap());
        }
        assert_eq!(outputs[0], outputs[1]);
        let lines: Vec<&str> = outputs[0].lines().collect();
        assert_eq!(lines.len(), 13);
        assert!(lines[0]
            .starts_with("step,t,temperature,d1,d2,entropy,free_energy,tracking_error,wall_us,y0_0,y0_1,y1_0,y1_1"));
    }
}

#[test]
fn overrides_reach_the_trace_header() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = gen(tmp.path());
    let out = tmp.path().join("r.csv");
    let o = rcp(&[
        "run",
        "--algo",
        "rcp",
        "--scenario",
        s(&sc),
        "--out",
        s(&out),
        "--steps",
        "7",
        "--gamma",
        "0.25",
        "--k0",
        "0.3",
    ]);
    assert!(o.status.success());
    let header: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r.header.json")).unwrap()).unwrap();
    assert_eq!(header["steps"], 7);
    assert_eq!(header["gamma"], 0.25);
    assert_eq!(header["params"]["k0"], 0.3);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 8);
}

#[test]
fn plot_writes_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = gen(tmp.path());
    let csv = tmp.path().join("r.csv");
    assert!(rcp(&["run", "--algo", "rcp", "--scenario", s(&sc), "--out", s(&csv)]).status.success());
    let svg = tmp.path().join("p.svg");
    let o = rcp(&["plot", "--trace", s(&csv), s(&csv), "--out", s(&svg)]);
    assert!(o.status.success());
    roxmltree::Document::parse(&fs::read_to_string(svg).unwrap()).unwrap();
}

#[test]
fn invalid_input_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = gen(tmp.path());
    let out = tmp.path().join("x.csv");
    let missing = tmp.path().join("missing.json");
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--algo", "nope", "--scenario", s(&sc), "--out", s(&out)],
        vec!["run", "--algo", "rcp", "--scenario", s(&missing), "--out", s(&out)],
        vec!["run", "--algo", "rcp", "--scenario", s(&sc), "--out", s(&out), "--alpha", "1.5"],
        vec!["run", "--algo", "rcp", "--scenario", s(&sc), "--out", s(&out), "--steps", "0"],
        vec!["gen", "--out", s(&out), "--controllers", "0"],
    ];
    for args in cases {
        let o = rcp(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    fs::write(tmp.path().join("bad.json"), r#"{"dimension": 2, "extra": 1}"#).unwrap();
    let o = rcp(&["run", "--algo", "frame", "--scenario", s(&tmp.path().join("bad.json")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));
}

#[test]
fn non_finite_run_exits_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = gen(tmp.path());
    let out = tmp.path().join("x.csv");
    // an absurd gain overflows the explicit Euler update
    let o = rcp(&["run", "--algo", "rcp", "--scenario", s(&sc), "--out", s(&out), "--k0", "1e300"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
