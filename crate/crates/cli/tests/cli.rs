use std::path::Path;
use std::process::{Command, Output};

use gevrey_ks::experiments::config::{DefaultValue, KEYS};

fn gevrey_ks(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gevrey-ks")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

const SMALL_RUN: &str = r#"
[model]
variant = "KS1D"

[grid]
L = "4pi"
N = 64

[stepping]
dt = 0.02
t_end = 20.0
sample_interval = 0.1

[diagnostics]
c = 0.25
"#;

fn small_run(dir: &Path) -> Output {
    let config = dir.join("run.toml");
    std::fs::write(&config, SMALL_RUN).unwrap();
    let out = dir.join("out");
    gevrey_ks(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

#[test]
fn run_writes_every_output() {
    let tmp = tempfile::tempdir().unwrap();
    let o = small_run(tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.toml", "norms.csv", "tails.csv", "fits.json", "run.json", "final.ckpt"] {
        assert!(tmp.path().join("out").join(f).is_file(), "{f}");
    }
    let header = std::fs::read_to_string(tmp.path().join("out/norms.csv")).unwrap();
    assert!(header.starts_with("t,l2,lp_4,lp_8,hs_1,hs_2,mean_minus_phi,grad_sq_integral"));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.toml");
    assert_eq!(code(&gevrey_ks(&["run", "--config", missing.to_str().unwrap()])), 2);
    let out = tmp.path().join("o");
    let o = gevrey_ks(&["run", "--set", "grid.M=3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.M"));
    assert_eq!(code(&gevrey_ks(&["run", "--set", "grid.N=7", "--out", out.to_str().unwrap()])), 2);
}

#[test]
fn divergence_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = gevrey_ks(&[
        "run", "--set", "grid.L=\"4pi\"", "--set", "grid.N=32", "--set", "stepping.t_end=50.0",
        "--set", "stepping.max_amplitude=0.5", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("norms.csv").is_file());
}

#[test]
fn analyze_is_a_fixed_point() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&small_run(tmp.path())), 0);
    let out = tmp.path().join("out");
    let before = std::fs::read(out.join("fits.json")).unwrap();
    assert_eq!(code(&gevrey_ks(&["analyze", out.to_str().unwrap()])), 0);
    assert_eq!(std::fs::read(out.join("fits.json")).unwrap(), before);
}

#[test]
fn analyze_rejects_empty_and_corrupt_directories() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&gevrey_ks(&["analyze", tmp.path().to_str().unwrap()])), 2);
    assert_eq!(code(&small_run(tmp.path())), 0);
    let out = tmp.path().join("out");
    std::fs::write(out.join("norms.csv"), "t,l2\n0.0,abc\n").unwrap();
    assert_eq!(code(&gevrey_ks(&["analyze", out.to_str().unwrap()])), 2);
    std::fs::remove_file(out.join("norms.csv")).unwrap();
    assert_eq!(code(&gevrey_ks(&["analyze", out.to_str().unwrap()])), 2);
}

fn total_j_used(fits: &Path) -> usize {
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(fits).unwrap()).unwrap();
    v["gevrey"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g["fit"]["j_used"].as_array().map_or(0, |j| j.len()))
        .sum()
}

#[test]
fn raising_the_noise_floor_never_adds_fit_points() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&small_run(tmp.path())), 0);
    let out = tmp.path().join("out");
    let mut previous = usize::MAX;
    for floor in ["1e-14", "1e-10", "1e-6", "1e-3"] {
        let set = format!("diagnostics.noise_floor={floor}");
        assert_eq!(code(&gevrey_ks(&["analyze", out.to_str().unwrap(), "--set", &set])), 0);
        let used = total_j_used(&out.join("fits.json"));
        assert!(used <= previous, "floor {floor}: {used} > {previous}");
        previous = used;
    }
}

#[test]
fn help_lists_every_default() {
    let o = gevrey_ks(&["run", "--help"]);
    assert_eq!(code(&o), 0);
    let help = String::from_utf8_lossy(&o.stdout);
    for k in KEYS {
        let (DefaultValue::Literal(d) | DefaultValue::Derived(d) | DefaultValue::Conditional(d)) = k.default;
        let line = help.lines().find(|l| l.split_whitespace().next() == Some(k.key)).unwrap_or_else(|| panic!("{}", k.key));
        assert!(line.contains(&format!("[{d}]")), "{line}");
    }
}

#[test]
fn verify_prints_a_table() {
    let o = gevrey_ks(&["verify", "--suite", "burgers-monotonicity"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{text}");
    assert!(text.starts_with("criterion 3 burgers-monotonicity: PASS"));
    assert!(text.contains("required <= 1e-8"));
    assert_eq!(code(&gevrey_ks(&["verify", "--suite", "nope"])), 2);
}

#[test]
fn sweep_fits_a_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let o = gevrey_ks(&[
        "sweep", "--set", "grid.L=8.0", "--set", "grid.N=32", "--set", "stepping.t_end=20.0",
        "--set", "sweep.L_values=[8.0, 12.0, 16.0]", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("sweep.json").is_file());
    assert!(out.join("L_12").join("norms.csv").is_file());
}
