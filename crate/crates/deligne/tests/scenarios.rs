use deligne::scenario::{builtin_dir, Scenario};
use deligne::suite::{action_value, lagrangian, scenario_checks};
use deligne::C64;
use std::f64::consts::PI;

fn load(name: &str) -> Scenario {
    Scenario::load(&builtin_dir().join(name)).unwrap()
}

#[test]
fn builtin_scenarios_pass_their_checks() {
    for name in ["torus.toml", "sphere3.toml", "genus2_octagon.toml", "annulus_synthetic.toml"] {
        let sc = load(name);
        let seed = sc.seed;
        let b = sc.build().unwrap();
        let failed: Vec<_> = scenario_checks(&b, seed).into_iter().filter(|r| !r.pass).collect();
        assert!(failed.is_empty(), "{name}: {failed:?}");
    }
}

#[test]
fn chern_numbers_match_euler_characteristics() {
    for (name, chi) in [("torus.toml", 0), ("sphere3.toml", 2), ("genus2_octagon.toml", -2)] {
        let b = load(name).build().unwrap();
        let sigma = b.sigma().unwrap();
        assert_eq!(b.atlas.chern_number(&sigma.eps).unwrap(), chi, "{name}");
    }
}

#[test]
fn constant_h_on_affine_torus_gives_eight_pi_mu_h() {
    let mut sc = load("torus.toml");
    sc.override_h("{ kind = \"constant\", value = [2, 1] }").unwrap();
    let b = sc.build().unwrap();
    let cc = lagrangian(&b).unwrap();
    let av = action_value(&b, &cc, &sc.rule()).unwrap();
    // μ = 0.15 + 0.05i, h = 2 + i, unit-area lattice.
    let want = C64::new(8.0 * PI, 0.0) * C64::new(0.15, 0.05) * C64::new(2.0, 1.0);
    assert!((av.s_raw - want).norm() < 1e-8 * want.norm(), "{} vs {want}", av.s_raw);
    let a = (want / (C64::new(0.0, 2.0 * PI) * C64::new(0.0, 2.0 * PI))).exp();
    assert!((av.a - a).norm() < 1e-8);
}

#[test]
fn annulus_is_not_closed() {
    let b = load("annulus_synthetic.toml").build().unwrap();
    assert!(!b.closed);
}
