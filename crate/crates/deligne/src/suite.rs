//! Acceptance criteria and per-scenario verification batteries.

use crate::atlas::{Atlas, Tuple};
use crate::cech_deligne::{cech_delta_forms, random_cochain, residuals, total_d, verify_cocycle, exp_map, DeligneCocycle3, FormLayer};
use crate::chains::{Chain, Pt, Simplex};
use crate::fields::QuadratureRule;
use crate::group_cohomology::{
    build_polygon_cycle, euler_number, polygon_centre_h, group_delta, FanApex, FuchsianGroup, GroupCochain, Psl, TranslatedLagrangian,
};
use crate::fields::FormValue;
use crate::jet::Jet;
use crate::pairing::{action, pair_multiplicative, pair_total, reduce_mod_z3, ActionValue};
use crate::polyakov::{build_lagrangian_cocycle, random_torsor_shift, shift_log_branches, BranchShift, Lagrangian, TameTrivialization};
use crate::scenario::{load_builtin, Built, DeformationSpec, HSpec, Scenario, Tolerances};
use crate::variation::{
    descent_check, el_residual, fd_variation_check, lie_cocycle_check, operator_checks, source_form_consistency,
};
use crate::{Error, MaxTracker, Report};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub id: usize,
    pub title: String,
    pub pass: bool,
    pub seconds: f64,
    pub reports: Vec<Report>,
}

pub const TITLES: [&str; 9] = [
    "algebraic identities",
    "fundamental class",
    "Lagrangian cocycle",
    "closed-form torus action",
    "gauge invariances",
    "pairing duality",
    "topological invariants",
    "variation theorem",
    "operator identities",
];

/// Runs `f`, turning an error into a failing report.
fn guard(name: &str, f: impl FnOnce() -> Result<Vec<Report>, Error>) -> Vec<Report> {
    match f() {
        Ok(r) => r,
        Err(e) => vec![Report::flag(name, false, e.to_string())],
    }
}

fn prefixed(prefix: &str, reports: Vec<Report>) -> Vec<Report> {
    reports
        .into_iter()
        .map(|mut r| {
            r.name = format!("{prefix}: {}", r.name);
            r
        })
        .collect()
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt)
}

/// Max sampled norm of every component of a form layer.
fn layer_residual(atlas: &Atlas, layer: &FormLayer, order: usize) -> MaxTracker {
    let mut m = MaxTracker::default();
    for (t, c) in layer {
        let last = *t.last().unwrap();
        for z in atlas.samples_in(t, last) {
            m.push(c(&Jet::var(z, order)).norm0(), || format!("tuple {t:?} at {z}"));
        }
    }
    m
}

/// Random chain of affine simplices of dimension ≤ 3 on tuples of length ≤ 4.
pub fn random_chain(atlas: &Atlas, rng: &mut impl Rng, terms: usize) -> Chain {
    let mut tuples: Vec<&Tuple> = Vec::new();
    for len in 1..=4 {
        tuples.extend(atlas.tuples(len));
    }
    let mut out = Chain::new();
    if tuples.is_empty() {
        return out;
    }
    for _ in 0..terms {
        let t = tuples[rng.gen_range(0..tuples.len())].clone();
        let chart = *t.last().unwrap();
        let z0 = atlas.seed_in(&t, chart);
        let dim = rng.gen_range(0..=3);
        let pts = (0..=dim)
            .map(|_| Pt::new(z0 + C64::new(rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3))))
            .collect();
        out.add_term(Simplex::Affine { chart, pts }, t, rng.gen_range(-3..=3));
    }
    out
}

/// D² = 0 on random Deligne cochains, δ̌² = 0 on random form layers and
/// ∂′∂′ = ∂″∂″ = 0, ∂∂ = 0 on random chains.
pub fn algebraic_checks(atlas: &Atlas, rng: &mut impl Rng, tol: f64) -> Result<Vec<Report>, Error> {
    let mut dd = MaxTracker::default();
    let mut dd_int = 0i64;
    for (p, n) in [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2)] {
        let x = random_cochain(atlas, p, n, rng);
        let y = total_d(atlas, &total_d(atlas, &x)?)?;
        let (forms, imax) = residuals(atlas, &y, 3);
        dd_int = dd_int.max(imax);
        for (r, m) in forms {
            dd.push(m.value, || format!("p={p} n={n} layer {r}: {}", m.at));
        }
    }
    let mut cc = MaxTracker::default();
    for q in 0..=1 {
        // 0-forms and 1-forms at Čech degree q
        for (p, layer_idx) in [(1usize, 0usize), (2, 1)] {
            let x = random_cochain(atlas, p, q + p, rng);
            let layer = &x.forms[layer_idx];
            let d1 = cech_delta_forms(atlas, layer, q)?;
            let d2 = cech_delta_forms(atlas, &d1, q + 1)?;
            let m = layer_residual(atlas, &d2, 2);
            cc.push(m.value, || format!("q={q} degree {}: {}", p - 1, m.at));
        }
    }
    let mut bad_pp = 0;
    let mut bad_ss = 0;
    let mut bad_tot = 0;
    let mut bad_shift = 0;
    for _ in 0..20 {
        let c = random_chain(atlas, rng, 12);
        bad_pp += c.boundary_prime().boundary_prime().len();
        bad_ss += c.boundary_second().boundary_second().len();
        bad_tot += c.total_boundary().total_boundary().len();
        bad_shift += c.shifted_boundary().shifted_boundary().len();
    }
    Ok(vec![
        dd.report("D² = 0 (forms)", tol),
        Report::flag("D² = 0 (integers)", dd_int == 0, format!("max |k| = {dd_int}")),
        cc.report("δ̌² = 0", tol),
        Report::flag("∂′∂′ = 0", bad_pp == 0, format!("{bad_pp} residual terms")),
        Report::flag("∂″∂″ = 0", bad_ss == 0, format!("{bad_ss} residual terms")),
        Report::flag("∂∂ = 0 (total)", bad_tot == 0, format!("{bad_tot} residual terms")),
        Report::flag("∂∂ = 0 (shifted)", bad_shift == 0, format!("{bad_shift} residual terms")),
    ])
}

/// δ² = 0 for the group coboundary on a bounded 1-cochain.
pub fn group_delta_check(group: &FuchsianGroup, rng: &mut impl Rng, tol: f64) -> Report {
    let coeffs: Vec<C64> = (0..4).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let phi: GroupCochain = Arc::new(move |g: &[Psl], z: &Jet| {
        let m = g[0].0;
        let k = |x: f64| 1.0 / (1.0 + x * x);
        let w = z.scale(coeffs[0] * k(m[0][1])).add_const(coeffs[1] * k(m[1][0])) * z.conj().scale(coeffs[2]);
        FormValue::F0(w + (*z * *z).scale(coeffs[3] * k(m[0][0] + m[1][1])))
    });
    let dd = group_delta(&group_delta(&phi));
    let mut m = MaxTracker::default();
    for k in 0..10 {
        let e: Vec<Psl> = (0..3).map(|_| group.random_element(rng, 2)).collect();
        m.push(dd(&e, &Jet::var(C64::new(0.1, 0.7), 2)).norm0(), || format!("trial {k}"));
    }
    m.report("group δ² = 0", tol)
}

/// Ω[f] for a built scenario, with its trivializations.
pub struct Cocycle {
    pub lag: Lagrangian,
    pub triv: Arc<TameTrivialization>,
    pub triv_t: Arc<TameTrivialization>,
}

pub fn lagrangian(b: &Built) -> Result<Cocycle, Error> {
    let (triv, triv_t) = b.trivializations()?;
    let lag = build_lagrangian_cocycle(&b.defm, &b.h, &triv, &triv_t)?;
    Ok(Cocycle { lag, triv, triv_t })
}

pub fn cocycle_checks(b: &Built, cc: &Cocycle, tol: &Tolerances) -> Result<Vec<Report>, Error> {
    let mut out = verify_cocycle(&b.atlas, &cc.lag.cocycle, tol.forms)?;
    out.extend(cc.lag.ledger.verify(&b.atlas));
    out.push(Report::flag(
        "m matches its closed form",
        cc.lag.m == cc.lag.m_closed,
        format!("{} nonzero entries", cc.lag.m.values().filter(|v| **v != 0).count()),
    ));
    Ok(out)
}

pub fn action_value(b: &Built, cc: &Cocycle, rule: &QuadratureRule) -> Result<ActionValue, Error> {
    let sigma = b.sigma()?.total();
    action(&b.atlas, &cc.lag.cocycle, &sigma, rule)
}

/// 8πμ⟨h⟩ for an undeformed torus family, where ⟨h⟩ is the mean of h.
pub fn torus_closed_form(sc: &Scenario) -> Option<C64> {
    let DeformationSpec::TorusAffine { mu, t, perturbation } = &sc.deformation else { return None };
    if *t != 0.0 && !perturbation.terms.is_empty() {
        return None;
    }
    let mean = match &sc.h {
        HSpec::Zero => C64::new(0.0, 0.0),
        HSpec::Constant(v) => *v,
        HSpec::Trig { offset, poly } => {
            *offset + poly.terms.iter().filter(|(a, b, _)| *a == 0 && *b == 0).map(|x| x.2).sum::<C64>()
        }
        _ => return None,
    };
    Some(*mu * mean * (8.0 * PI))
}

/// A[f] under random integer log-branch shifts.
pub fn branch_shift_checks(b: &Built, cc: &Cocycle, n: usize, rng: &mut impl Rng, tol: f64, rule: &QuadratureRule) -> Result<Vec<Report>, Error> {
    let a0 = action_value(b, cc, rule)?.a;
    let sigma = b.sigma()?.total();
    let mut m = MaxTracker::default();
    let mut nres = 0.0f64;
    for k in 0..n {
        let sh = BranchShift::random(&b.atlas, rng, 2);
        let st = shift_log_branches(&b.defm, &cc.lag.ledger, &cc.triv, &cc.triv_t, &sh)?;
        nres = nres.max(st.n_residual);
        let lag2 = build_lagrangian_cocycle(&st.defm, &b.h, &st.triv, &st.triv_t)?;
        let a1 = action(&st.defm.atlas, &lag2.cocycle, &sigma, rule)?.a;
        m.push((a1 / a0 - 1.0).norm(), || format!("shift {k}"));
    }
    Ok(vec![
        m.report(&format!("A[f] invariant under {n} log-branch shifts"), tol),
        Report::new("re-derived n integral", nres, 1e-9, String::new()),
    ])
}

/// The ratio A(shifted trivialization)/A for f = id and for the scenario f.
pub fn torsor_check(b: &Built, rng: &mut impl Rng, tol: f64, rule: &QuadratureRule) -> Result<Vec<Report>, Error> {
    let (triv, _) = b.trivializations()?;
    if !Arc::ptr_eq(&b.defm.atlas, &b.defm.tilde) {
        return Err(Error::Config {
            path: "deformation".into(),
            msg: "the torsor check needs X̃ = X".into(),
        });
    }
    let (beta, p) = random_torsor_shift(&b.atlas, rng)?;
    let shifted = Arc::new(triv.shifted(&beta, &p)?);
    let mut out = shifted.verify(&b.atlas, 1e-9)?;
    let sigma = b.sigma()?.total();
    let id = Arc::new(crate::polyakov::DeformationData::identity(b.atlas.clone()));
    let ratio = |d: &Arc<crate::polyakov::DeformationData>| -> Result<C64, Error> {
        let l0 = build_lagrangian_cocycle(d, &b.h, &triv, &triv)?;
        let l1 = build_lagrangian_cocycle(d, &b.h, &shifted, &triv)?;
        Ok(action(&b.atlas, &l1.cocycle, &sigma, rule)?.a / action(&b.atlas, &l0.cocycle, &sigma, rule)?.a)
    };
    let (r_id, r_f) = (ratio(&id)?, ratio(&b.defm)?);
    out.push(Report::new(
        "torsor factor independent of f",
        (r_id - r_f).norm() / r_id.norm(),
        tol,
        format!("id {r_id}, f {r_f}"),
    ));
    out.push(Report::flag("torsor factor nontrivial", (r_id - 1.0).norm() > 1e-3, format!("{r_id}")));
    Ok(out)
}

/// ⟨Dλ, ′Σ⟩ ∈ ℤ(3) for random λ, and A = exp(S/(2πi)²) against the
/// multiplicative pairing.
pub fn pairing_checks(
    b: &Built,
    cc: Option<&Cocycle>,
    n: usize,
    rng: &mut impl Rng,
    tol: f64,
    rule: &QuadratureRule,
) -> Result<Vec<Report>, Error> {
    let sigma = b.sigma()?.total();
    let mut m = MaxTracker::default();
    for k in 0..n {
        let lam = random_cochain(&b.atlas, 3, 2, rng);
        let d = DeligneCocycle3(total_d(&b.atlas, &lam)?);
        let s = pair_total(&b.atlas, &d, &sigma, rule)?;
        m.push(reduce_mod_z3(s).norm(), || format!("λ {k}: {s}"));
    }
    let mut out = vec![m.report(&format!("⟨Dλ, ′Σ⟩ ∈ ℤ(3) for {n} random λ"), tol)];
    if let Some(cc) = cc {
        let av = action(&b.atlas, &cc.lag.cocycle, &sigma, rule)?;
        let mult = pair_multiplicative(&b.atlas, &exp_map(&cc.lag.cocycle), &sigma, rule)?;
        out.push(Report::new(
            "A = exp(S/(2πi)²) = ⟨exp Ω, Σ⟩",
            (mult / av.a - 1.0).norm(),
            1e-12,
            format!("A {} vs {}", av.a, mult),
        ));
    }
    Ok(out)
}

/// Relator, Euler number from two fans, Gauss–Bonnet area and the
/// translated Lagrangian relations for a Fuchsian scenario.
pub fn group_checks(b: &Built, rng: &mut impl Rng, tol: &Tolerances) -> Result<Vec<Report>, Error> {
    let Some(group) = b.group()? else { return Ok(Vec::new()) };
    let spec = b.scenario.group.as_ref().unwrap();
    let mut out = group.verify(tol.algebra);
    let chi = 2 - 2 * group.genus as i64;
    let fans = [
        ("centre", FanApex::Interior(polygon_centre_h(&spec.vertices))),
        ("vertex 0", FanApex::Vertex(0)),
        ("vertex 3", FanApex::Vertex(3)),
    ];
    for (label, apex) in fans {
        let cyc = build_polygon_cycle(&group, &spec.vertices, apex)?;
        out.extend(prefixed(&format!("fan from {label}"), cyc.verify()));
        let e = euler_number(&cyc)?;
        out.push(Report::flag(&format!("Euler number = {chi} (fan from {label})"), e == chi, format!("{e}")));
        if label == "centre" {
            let area = cyc.hyperbolic_area(&QuadratureRule::new(32, 32));
            let want = -2.0 * PI * chi as f64;
            out.push(Report::new("hyperbolic area = −2πχ", (area - want).abs(), 1e-8, format!("{area}")));
        }
    }
    out.push(group_delta_check(&group, rng, tol.algebra));
    out.extend(prefixed("translated Ω", TranslatedLagrangian::identity().verify(&group, rng, 20, tol.forms)));
    Ok(out)
}

/// Descent data, finite-difference δS and consistency of the source form.
pub fn variation_checks(b: &Built, tol: &Tolerances, rule: &QuadratureRule) -> Result<Vec<Report>, Error> {
    let (Some(var), Some(step)) = (b.variation(), b.scenario.variation_step) else { return Ok(Vec::new()) };
    let (triv, triv_t) = b.trivializations()?;
    let family = |s: f64| (b.family)(s);
    let mut out = vec![var.verticality(1e-10), source_form_consistency(&var, &b.h, 1e-10)];
    out.extend(descent_check(&family, &var, &b.h, &triv, &triv_t, step, 1e-7)?);
    let sigma = b.sigma()?.total();
    let fd = fd_variation_check(&family, &var, &b.h, &triv, &triv_t, &sigma, rule, step)?;
    out.push(Report::new(
        if fd.relative { "δS = 2πi∫a (relative)" } else { "δS = 2πi∫a (absolute)" },
        fd.error,
        tol.variation,
        format!("fd {} predicted {}", fd.fd, fd.predicted),
    ));
    Ok(out)
}

fn find<'a>(built: &'a [Built], name: &str) -> Result<&'a Built, Error> {
    built.iter().find(|b| b.scenario.name == name).ok_or_else(|| Error::Config {
        path: "scenarios".into(),
        msg: format!("built-in scenario `{name}` missing"),
    })
}

/// The built-in scenarios, built once.
pub struct Suite {
    pub built: Vec<Built>,
    pub seed: u64,
    pub rule: QuadratureRule,
}

impl Suite {
    pub fn builtin(seed: u64) -> Result<Suite, Error> {
        let built = load_builtin()?.iter().map(|s| s.build()).collect::<Result<Vec<_>, _>>()?;
        Ok(Suite { built, seed, rule: QuadratureRule::default() })
    }

    fn closed(&self) -> impl Iterator<Item = &Built> {
        self.built.iter().filter(|b| b.closed)
    }

    pub fn run_all(&self) -> Vec<Criterion> {
        (1..=9).map(|k| self.criterion(k)).collect()
    }

    pub fn criterion(&self, id: usize) -> Criterion {
        let start = Instant::now();
        let tol = Tolerances::default();
        let mut rng = rng_for(self.seed, id as u64);
        let rule = &self.rule;
        let reports = match id {
            1 => {
                let mut out = Vec::new();
                for b in &self.built {
                    let name = &b.scenario.name;
                    out.extend(prefixed(name, guard("algebra", || algebraic_checks(&b.atlas, &mut rng, tol.algebra))));
                    if let Ok(Some(g)) = b.group() {
                        out.push(group_delta_check(&g, &mut rng, tol.algebra));
                    }
                }
                out
            }
            2 => {
                let mut out = Vec::new();
                for b in self.closed() {
                    out.extend(prefixed(&b.scenario.name, guard("fundamental cycle", || Ok(b.sigma()?.verify()))));
                }
                out
            }
            3 => {
                let mut out = Vec::new();
                for name in ["torus", "sphere3", "genus2_octagon"] {
                    out.extend(prefixed(
                        name,
                        guard("Lagrangian", || {
                            let b = find(&self.built, name)?;
                            cocycle_checks(b, &lagrangian(b)?, &tol)
                        }),
                    ));
                }
                out.extend(guard("translated Ω", || {
                    let b = find(&self.built, "genus2_octagon")?;
                    let g = b.group()?.ok_or_else(|| Error::Relation("no group".into()))?;
                    Ok(prefixed("group translation", TranslatedLagrangian::identity().verify(&g, &mut rng, 20, tol.forms)))
                }));
                out
            }
            4 => guard("closed form", || self.torus_closed_forms(&tol)),
            5 => guard("gauge", || {
                let b = find(&self.built, "sphere3")?;
                let cc = lagrangian(b)?;
                let mut out = branch_shift_checks(b, &cc, 20, &mut rng, tol.gauge, rule)?;
                out.extend(torsor_check(b, &mut rng, tol.torsor, rule)?);
                Ok(out)
            }),
            6 => {
                let mut out = Vec::new();
                for (name, n) in [("torus", 7), ("sphere3", 7), ("genus2_octagon", 6)] {
                    out.extend(prefixed(
                        name,
                        guard("pairing", || {
                            let b = find(&self.built, name)?;
                            let cc = lagrangian(b)?;
                            pairing_checks(b, Some(&cc), n, &mut rng, tol.pairing, rule)
                        }),
                    ));
                }
                out
            }
            7 => {
                let mut out = guard("Euler number", || {
                    let b = find(&self.built, "genus2_octagon")?;
                    group_checks(b, &mut rng, &tol)
                });
                for (name, want) in [("sphere3", 2), ("torus", 0), ("genus2_octagon", -2)] {
                    out.extend(guard(name, || {
                        let b = find(&self.built, name)?;
                        let eps = b.sigma()?.eps;
                        let c = b.atlas.chern_number(&eps)?;
                        Ok(vec![Report::flag(&format!("{name}: Chern pairing = {want}"), c == want, format!("{c}"))])
                    }));
                }
                out
            }
            8 => {
                let mut out = Vec::new();
                for name in ["torus", "sphere3"] {
                    out.extend(prefixed(
                        name,
                        guard("variation", || variation_checks(find(&self.built, name)?, &tol, rule)),
                    ));
                }
                out.extend(guard("on-shell", || self.on_shell_checks(&tol)));
                out
            }
            9 => {
                let mut out = operator_checks(&mut rng, 10, tol.operators);
                out.push(lie_cocycle_check(&mut rng, 10, tol.operators));
                out
            }
            _ => vec![Report::flag("criterion", false, format!("no criterion {id}"))],
        };
        Criterion {
            id,
            title: TITLES.get(id.wrapping_sub(1)).unwrap_or(&"?").to_string(),
            pass: !reports.is_empty() && reports.iter().all(|r| r.pass),
            seconds: start.elapsed().as_secs_f64(),
            reports,
        }
    }

    fn torus_closed_forms(&self, tol: &Tolerances) -> Result<Vec<Report>, Error> {
        let base = find(&self.built, "torus")?.scenario.clone();
        let mut out = Vec::new();
        for mu in [0.1, 0.2] {
            for h in [C64::new(1.0, 0.0), C64::new(2.0, 1.0)] {
                let mut sc = base.clone();
                sc.deformation = DeformationSpec::TorusAffine {
                    mu: C64::new(mu, 0.0),
                    perturbation: Default::default(),
                    t: 0.0,
                };
                sc.h = HSpec::Constant(h);
                let b = sc.build()?;
                let cc = lagrangian(&b)?;
                let s = action_value(&b, &cc, &self.rule)?.s_raw;
                let want = torus_closed_form(&sc).unwrap();
                out.push(Report::new(
                    &format!("S = 8πμh at μ = {mu}, h = {h}"),
                    (s - want).norm() / want.norm(),
                    tol.closed_form,
                    format!("S = {s}, 8πμh = {want}"),
                ));
            }
        }
        Ok(out)
    }

    /// EL residual for the torus with constant h and with the on-shell h
    /// of a perturbed map.
    fn on_shell_checks(&self, tol: &Tolerances) -> Result<Vec<Report>, Error> {
        let base = find(&self.built, "torus")?.scenario.clone();
        let mut out = Vec::new();
        let variants = [
            ("constant μ, constant h", 0.0, HSpec::Constant(C64::new(2.0, 1.0))),
            ("perturbed f, h = {f, z} + H(∂f)²", 0.5, HSpec::OnShell { big_h: C64::new(1.5, -0.5) }),
        ];
        for (label, t, h) in variants {
            let mut sc = base.clone();
            if let DeformationSpec::TorusAffine { t: tt, .. } = &mut sc.deformation {
                *tt = t;
            }
            sc.h = h;
            let b = sc.build()?;
            let r = el_residual(&b.defm, &b.h);
            out.push(Report::new(&format!("EL residual: {label}"), r, tol.el, String::new()));
        }
        Ok(out)
    }
}

/// Every applicable check for one scenario.
pub fn scenario_checks(b: &Built, seed: u64) -> Vec<Report> {
    let tol = &b.scenario.tol;
    let rule = b.scenario.rule();
    let mut rng = rng_for(seed, 0);
    let a = &b.atlas;
    let mut out = vec![a.verify_transitions(tol.algebra)];
    out.push(Report::flag(
        "nerve simplicial identities",
        a.build_nerve(3).map(|n| n.check_simplicial_identities()).unwrap_or(false),
        String::new(),
    ));
    out.push(a.verify_projective_connection(&*b.h, tol.forms));
    out.extend(guard("algebra", || algebraic_checks(a, &mut rng, tol.algebra)));
    out.extend(b.defm.verify(tol.forms));
    let cc = match lagrangian(b) {
        Ok(cc) => {
            out.extend(guard("Lagrangian", || cocycle_checks(b, &cc, tol)));
            Some(cc)
        }
        Err(e) => {
            out.push(Report::flag("Lagrangian", false, e.to_string()));
            None
        }
    };
    if b.closed {
        out.extend(guard("fundamental cycle", || Ok(b.sigma()?.verify())));
        if let Some(cc) = &cc {
            out.extend(guard("action", || {
                let av = action_value(b, cc, &rule)?;
                let mut r = vec![Report::new(
                    "A = exp(S/(2πi)²)",
                    (av.a - (av.s_raw / crate::two_pi_i_pow(2)).exp()).norm() / av.a.norm(),
                    1e-10,
                    format!("S = {}, A = {}", av.s_reduced, av.a),
                )];
                if let Some(want) = torus_closed_form(&b.scenario) {
                    r.push(Report::new(
                        "S = 8πμ⟨h⟩",
                        (av.s_raw - want).norm() / want.norm().max(1e-300),
                        tol.closed_form,
                        format!("S = {}, 8πμ⟨h⟩ = {want}", av.s_raw),
                    ));
                }
                Ok(r)
            }));
            out.extend(guard("log branches", || branch_shift_checks(b, cc, 3, &mut rng, tol.gauge, &rule)));
            out.extend(guard("pairing", || pairing_checks(b, Some(cc), 3, &mut rng, tol.pairing, &rule)));
        }
        out.extend(guard("Chern number", || {
            let c = a.chern_number(&b.sigma()?.eps)?;
            Ok(vec![Report::flag("Chern number is an integer", true, format!("{c}"))])
        }));
    }
    out.extend(guard("group", || group_checks(b, &mut rng, tol)));
    out.extend(guard("variation", || variation_checks(b, tol, &rule)));
    if matches!(b.scenario.h, HSpec::OnShell { .. }) {
        out.push(Report::new("EL residual", el_residual(&b.defm, &b.h), tol.el, String::new()));
    }
    out
}
