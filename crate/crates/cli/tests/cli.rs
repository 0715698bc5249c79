use serde_json::Value;
use std::path::PathBuf;
use std::process::Command;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_polyakov")).args(args).output().expect("binary runs");
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    assert_eq!(v["schema"], 1);
    (out.status.code().expect("exit code"), v)
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("polyakov-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn unknown_kind_exits_two_with_key_path() {
    let p = tmp("bad.toml");
    std::fs::write(&p, "name = \"bad\"\nseed = 1\n[atlas]\nkind = \"klein\"\n").unwrap();
    let (code, v) = run(&["atlas", "verify", "--scenario", p.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(v["error"].as_str().unwrap().contains("atlas.kind"), "{v}");
}

#[test]
fn unknown_h_kind_exits_two() {
    let s = scenario("torus.toml");
    let (code, v) = run(&["polyakov", "action", "--scenario", s.to_str().unwrap(), "--h", "{ kind = \"bogus\" }"]);
    assert_eq!(code, 2);
    assert!(v["error"].as_str().unwrap().contains("h.kind"), "{v}");
}

#[test]
fn missing_scenario_exits_two() {
    let (code, _) = run(&["atlas", "verify", "--scenario", "/nonexistent/x.toml"]);
    assert_eq!(code, 2);
}

#[test]
fn euler_number_of_genus_two() {
    let (code, v) = run(&["fuchsian", "euler", "--genus", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["euler_number"], -2);
    let (code, _) = run(&["fuchsian", "euler", "--genus", "3"]);
    assert_eq!(code, 2);
}

#[test]
fn torus_scenario_suite_passes() {
    let s = scenario("torus.toml");
    let (code, v) = run(&["suite", "--scenario", s.to_str().unwrap()]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["pass"], true);
}

#[test]
fn annulus_has_no_fundamental_cycle() {
    let s = scenario("annulus_synthetic.toml");
    let (code, _) = run(&["chains", "fundamental", "--scenario", s.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn emitted_cocycle_and_cycle_pair_to_the_action() {
    let s = scenario("torus.toml");
    let s = s.to_str().unwrap();
    let cyc = tmp("torus.cycle.json");
    let co = tmp("torus.cocycle.json");
    let (code, _) = run(&["chains", "fundamental", "--scenario", s, "--emit", cyc.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, _) = run(&["polyakov", "build", "--scenario", s, "--emit", co.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, act) = run(&["polyakov", "action", "--scenario", s]);
    assert_eq!(code, 0);
    let (code, pair) = run(&["pair", "--cocycle", co.to_str().unwrap(), "--cycle", cyc.to_str().unwrap()]);
    assert_eq!(code, 0, "{pair}");
    for k in ["A_re", "A_im"] {
        let a = act["result"][k].as_f64().unwrap();
        let b = pair["result"][k].as_f64().unwrap();
        assert!((a - b).abs() < 1e-12, "{k}: {a} vs {b}");
    }
}

#[test]
fn pair_rejects_swapped_files() {
    let s = scenario("torus.toml");
    let s = s.to_str().unwrap();
    let cyc = tmp("swap.cycle.json");
    let co = tmp("swap.cocycle.json");
    run(&["chains", "fundamental", "--scenario", s, "--emit", cyc.to_str().unwrap()]);
    run(&["polyakov", "build", "--scenario", s, "--emit", co.to_str().unwrap()]);
    let (code, _) = run(&["pair", "--cocycle", cyc.to_str().unwrap(), "--cycle", co.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn on_shell_data_has_zero_el_residual() {
    let s = scenario("torus.toml");
    let (code, v) = run(&["vary", "el", "--scenario", s.to_str().unwrap(), "--h", "{ kind = \"on_shell\", big_h = [1.5, -0.5] }"]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["on_shell"], true);
}
