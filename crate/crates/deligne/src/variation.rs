//! Vertical variations of the action: the operators ∂̄_μ and 𝒟_h, the
//! source form a(f, δf), the descent data (η, λ), the Euler–Lagrange
//! residual, finite-difference checks and the Lie-algebra 1-cocycle.

use crate::atlas::{Atlas, ChartFn};
use crate::cech_deligne::{cech_delta_forms, Comp, FormLayer};
use crate::chains::Chain;
use crate::fields::{d, FormValue, QuadratureRule};
use crate::jet::Jet;
use crate::pairing::{action, pair_layer};
use crate::polyakov::{big_theta, omega, theta, BranchLedger, DeformationData, TameTrivialization};
use crate::{Error, MaxTracker, Report, TWO_PI_I};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::sync::Arc;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// ∂̄_μ φ = ∂̄φ − μ∂φ − k(∂μ)φ on weight (k, 0). Lowers the order by one.
pub fn dbar_mu(k: i32, phi: &Jet, mu: &Jet) -> Jet {
    let n = phi.order().min(mu.order()) - 1;
    let phi_n = phi.truncate(n);
    (phi.dzbar() - mu.truncate(n) * phi.dz() - mu.dz() * phi_n.scale(c(k as f64))).truncate(n)
}

/// 𝒟_h v = ∂³v + 2h∂v + (∂h)v. Lowers the order by three.
pub fn d_h(v: &Jet, h: &Jet) -> Jet {
    let n = v.order().min(h.order() + 2) - 3;
    let v1 = v.dz();
    let v3 = v1.dz().dz();
    (v3 + h.truncate(n) * v1.truncate(n).scale(c(2.0)) + h.dz().truncate(n) * v.truncate(n)).truncate(n)
}

/// L_v q = v∂q + 2(∂v)q on weight-2 fields.
pub fn lie(v: &Jet, q: &Jet) -> Jet {
    let n = v.order().min(q.order()) - 1;
    (v.truncate(n) * q.dz() + v.dz() * q.truncate(n).scale(c(2.0))).truncate(n)
}

/// [v, w] = v∂w − w∂v.
pub fn bracket(v: &Jet, w: &Jet) -> Jet {
    let n = v.order().min(w.order()) - 1;
    (v.truncate(n) * w.dz() - w.truncate(n) * v.dz()).truncate(n)
}

/// {f, z} = ∂(∂²f/∂f) − ½(∂²f/∂f)². Lowers the order by three.
pub fn schwarzian(f: &Jet) -> Jet {
    let fz = f.dz();
    let r = fz.dz() * fz.truncate(fz.order() - 1).recip();
    let n = r.order() - 1;
    (r.dz() - (r * r).truncate(n).scale(c(0.5))).truncate(n)
}

/// A vertical variation δf of a deformation f, given chartwise.
#[derive(Clone)]
pub struct Variation {
    pub defm: Arc<DeformationData>,
    /// δf_i as a jet in chart i.
    pub var_f: ChartFn,
}

impl Variation {
    /// v = δf/∂f.
    pub fn v(&self, i: usize, z0: C64, n: usize) -> Jet {
        let df = self.defm.df(i, z0, n).0;
        (self.var_f)(i, &Jet::var(z0, n)) * df.recip()
    }

    /// δ log ∂f = ∂(δf)/∂f.
    pub fn var_log_df(&self, i: usize, z0: C64, n: usize) -> Jet {
        let vf = (self.var_f)(i, &Jet::var(z0, n + 1));
        vf.dz() * self.defm.df(i, z0, n).0.recip()
    }

    /// δμ = ∂̄_μ v.
    pub fn var_mu(&self, i: usize, z0: C64, n: usize) -> Jet {
        dbar_mu(-1, &self.v(i, z0, n + 1), &self.defm.mu(i, z0, n + 1))
    }

    /// Max over the chart samples of |v_j − v_i∘z_ij / z′_ij|.
    pub fn verticality(&self, tol: f64) -> Report {
        tensor_consistency(&self.defm.atlas, &|i, z| self.v(i, z, 0).value(), (-1, 0), "v = δf/∂f chart-consistent", tol)
    }
}

/// Chart consistency of a weight-(p, q) tensor:
/// φ_j = φ_i∘z_ij · (z′_ij)^p · conj(z′_ij)^q.
pub fn tensor_consistency(
    atlas: &Atlas,
    phi: &dyn Fn(usize, C64) -> C64,
    weight: (i32, i32),
    name: &str,
    tol: f64,
) -> Report {
    let mut m = MaxTracker::default();
    for t in atlas.tuples(2) {
        let (i, j) = (t[0], t[1]);
        let tr = atlas.tr(i, j);
        for z in atlas.samples_in(t, j) {
            let zp = crate::fields::PointMap::deriv(tr, z);
            let lhs = phi(j, z);
            let rhs = phi(i, tr.apply(z)) * zp.powi(weight.0) * zp.conj().powi(weight.1);
            let scale = lhs.norm().max(1.0);
            m.push((lhs - rhs).norm() / scale, || format!("tuple {t:?} at {z}"));
        }
    }
    m.report(name, tol)
}

/// 𝒟_h μ − ∂̄h in chart i, as a jet of order n.
pub fn el_residual_jet(defm: &DeformationData, h: &ChartFn, i: usize, z0: C64, n: usize) -> Jet {
    let mu = defm.mu(i, z0, n + 3);
    let hh = h(i, &Jet::var(z0, n + 2));
    (d_h(&mu, &hh) - hh.dzbar().truncate(n)).truncate(n)
}

/// sup |𝒟_h μ − ∂̄h| over the chart samples.
pub fn el_residual(defm: &DeformationData, h: &ChartFn) -> f64 {
    let a = &defm.atlas;
    let mut worst = 0.0f64;
    for t in a.tuples(1) {
        for z in a.samples_in(t, t[0]) {
            worst = worst.max(el_residual_jet(defm, h, t[0], z, 0).value().norm());
        }
    }
    worst
}

/// a_i = −2(∂̄h − 𝒟_h μ) v dz∧dz̄.
pub fn source_form(var: &Variation, h: &ChartFn) -> FormLayer {
    let mut out = FormLayer::new();
    for t in var.defm.atlas.tuples(1) {
        let i = t[0];
        let (var, h) = (var.clone(), h.clone());
        let comp: Comp = Arc::new(move |z: &Jet| {
            let (z0, n) = (z.value(), z.order());
            let el = el_residual_jet(&var.defm, &h, i, z0, n);
            FormValue::F2((el * var.v(i, z0, n)).scale(c(2.0)))
        });
        out.insert(t.clone(), comp);
    }
    out
}

/// Chart consistency of the source form (a global 2-form).
pub fn source_form_consistency(var: &Variation, h: &ChartFn, tol: f64) -> Report {
    let a = source_form(var, h);
    tensor_consistency(
        &var.defm.atlas,
        &|i, z| a[&vec![i]](&Jet::var(z, 0)).as_f2().value(),
        (1, 1),
        "a(f, δf) chart-consistent",
        tol,
    )
}

/// η_i = δλ_i dλ_i + 2∂λ_i δμ dz̄ − 2(h − {f, z}) v (dz + μ dz̄) and
/// λ_ij = 2(w″/w′)_ij∘f_j δf_j − (ℓ̃_ij∘f_j + ℓ_ij) δλ_j, for a
/// trivialization with τ = 0.
pub fn eta_lambda(var: &Variation, h: &ChartFn) -> (FormLayer, FormLayer) {
    let atlas = var.defm.atlas.clone();
    let mut eta = FormLayer::new();
    for t in atlas.tuples(1) {
        let i = t[0];
        let (var, h) = (var.clone(), h.clone());
        let comp: Comp = Arc::new(move |z: &Jet| {
            let (z0, n) = (z.value(), z.order());
            let d = &var.defm;
            let fz = d.df(i, z0, n + 1).0;
            let inv = fz.truncate(n).recip();
            let (lz, lzb) = (fz.dz() * inv, fz.dzbar() * inv);
            let vl = var.var_log_df(i, z0, n);
            let vmu = var.var_mu(i, z0, n);
            let mu = d.mu(i, z0, n);
            let s = schwarzian(&d.f_jet(i, z0, n + 3));
            let k = (h(i, &Jet::var(z0, n)) - s) * var.v(i, z0, n) * c(2.0);
            FormValue::F1(vl * lz - k, vl * lzb + lz * vmu * c(2.0) - k * mu)
        });
        eta.insert(t.clone(), comp);
    }
    let mut lam = FormLayer::new();
    for t in atlas.tuples(2) {
        let (i, j) = (t[0], t[1]);
        let var = var.clone();
        let comp: Comp = Arc::new(move |z: &Jet| {
            let (z0, n) = (z.value(), z.order());
            let d = &var.defm;
            let fj = d.f_jet(j, z0, n);
            let vf = (var.var_f)(j, &Jet::var(z0, n));
            let r = d.tilde.ratio(i, j, &fj);
            let s = d.ltilde_f(i, j, z0, n) + d.atlas.log_deriv(i, j, &Jet::var(z0, n));
            FormValue::F0(r * vf * c(2.0) - s * var.var_log_df(j, z0, n))
        });
        lam.insert(t.clone(), comp);
    }
    (eta, lam)
}

/// Richardson-extrapolated central difference from steps s, s/2, s/4.
pub fn richardson<T>(g: &dyn Fn(f64) -> T, s: f64, sub: &dyn Fn(&T, &T) -> T, scale: &dyn Fn(&T, f64) -> T) -> T {
    let central = |t: f64| scale(&sub(&g(t), &g(-t)), 0.5 / t);
    let (d1, d2, d3) = (central(s), central(s / 2.0), central(s / 4.0));
    let r1 = scale(&sub(&scale(&d2, 4.0), &d1), 1.0 / 3.0);
    let r2 = scale(&sub(&scale(&d3, 4.0), &d2), 1.0 / 3.0);
    scale(&sub(&scale(&r2, 16.0), &r1), 1.0 / 15.0)
}

fn fv_sub(a: &FormValue, b: &FormValue) -> FormValue {
    a.sub(b)
}

fn fv_scale(a: &FormValue, s: f64) -> FormValue {
    a.scale(c(s))
}

/// A one-parameter family f_t with fixed atlases.
pub type Family<'a> = &'a dyn Fn(f64) -> DeformationData;

/// δω = a + dη, δθ = δ̌η + dλ and δΘ = δ̌λ at the chart samples, with δ
/// the t-derivative of the family at t = 0 (Richardson, base step `step`).
pub fn descent_check(
    family: Family,
    var: &Variation,
    h: &ChartFn,
    triv: &Arc<TameTrivialization>,
    triv_t: &Arc<TameTrivialization>,
    step: f64,
    tol: f64,
) -> Result<Vec<Report>, Error> {
    let atlas = var.defm.atlas.clone();
    let mut defms = std::collections::BTreeMap::new();
    for k in [1.0, -1.0, 0.5, -0.5, 0.25, -0.25] {
        let dm = Arc::new(family(k * step));
        let ledger = BranchLedger::build(&dm)?;
        defms.insert((k * 1e6) as i64, (dm, ledger));
    }
    let at = |t: f64| &defms[&((t / step * 1e6).round() as i64)];
    let a = source_form(var, h);
    let (eta, lam) = eta_lambda(var, h);
    let deta1 = cech_delta_forms(&atlas, &eta, 0)?;
    let dlam2 = cech_delta_forms(&atlas, &lam, 1)?;

    let mut r_om = MaxTracker::default();
    for t in atlas.tuples(1) {
        for z in atlas.samples_in(t, t[0]) {
            let g = |s: f64| {
                let (dm, _) = at(s);
                omega(dm, h)[t](&Jet::var(z, 0))
            };
            let fd = richardson(&g, step, &fv_sub, &fv_scale);
            let want = a[t](&Jet::var(z, 0)).add(&d(&eta[t](&Jet::var(z, 1))));
            r_om.push(fd.sub(&want).norm0() / want.norm0().max(1.0), || format!("{t:?} at {z}"));
        }
    }
    let mut r_th = MaxTracker::default();
    for t in atlas.tuples(2) {
        for z in atlas.samples_in(t, t[1]) {
            let g = |s: f64| {
                let (dm, _) = at(s);
                theta(dm)[t](&Jet::var(z, 0))
            };
            let fd = richardson(&g, step, &fv_sub, &fv_scale);
            let want = deta1[t](&Jet::var(z, 0)).add(&d(&lam[t](&Jet::var(z, 1))));
            r_th.push(fd.sub(&want).norm0() / want.norm0().max(1.0), || format!("{t:?} at {z}"));
        }
    }
    let mut r_bt = MaxTracker::default();
    for t in atlas.tuples(3) {
        for z in atlas.samples_in(t, t[2]) {
            let g = |s: f64| {
                let (dm, ledger) = at(s);
                big_theta(dm, ledger, triv, triv_t)[t](&Jet::var(z, 0))
            };
            let fd = richardson(&g, step, &fv_sub, &fv_scale);
            let want = dlam2[t](&Jet::var(z, 0));
            r_bt.push(fd.sub(&want).norm0() / want.norm0().max(1.0), || format!("{t:?} at {z}"));
        }
    }
    Ok(vec![
        r_om.report("δω = a + dη", tol),
        r_th.report("δθ = δ̌η + dλ", tol),
        r_bt.report("δΘ = δ̌λ", tol),
    ])
}

/// Outcome of the finite-difference variation check.
#[derive(Clone, Debug, Serialize)]
pub struct FdVariation {
    /// Richardson-extrapolated dS/dt at t = 0.
    pub fd: C64,
    /// 2πi ∫ a(f, δf).
    pub predicted: C64,
    pub abs_error: f64,
    /// Relative error, or the absolute error when both sides vanish.
    pub error: f64,
    pub relative: bool,
}

/// Compares dS/dt of the family with 2πi∫a(f, δf) over the cycle.
pub fn fd_variation_check(
    family: Family,
    var: &Variation,
    h: &ChartFn,
    triv: &Arc<TameTrivialization>,
    triv_t: &Arc<TameTrivialization>,
    sigma: &Chain,
    rule: &QuadratureRule,
    step: f64,
) -> Result<FdVariation, Error> {
    let atlas = var.defm.atlas.clone();
    let s_at = |t: f64| -> Result<C64, Error> {
        let dm = Arc::new(family(t));
        let lag = crate::polyakov::build_lagrangian_cocycle(&dm, h, triv, triv_t)?;
        Ok(action(&atlas, &lag.cocycle, sigma, rule)?.s_raw)
    };
    let mut vals = std::collections::BTreeMap::new();
    for k in [1.0, -1.0, 0.5, -0.5, 0.25, -0.25] {
        vals.insert((k * 4.0) as i64, s_at(k * step)?);
    }
    let g = |t: f64| vals[&((t / step * 4.0).round() as i64)];
    let fd = richardson(&g, step, &|a: &C64, b: &C64| a - b, &|a: &C64, s: f64| a * s);
    let a = source_form(var, h);
    let predicted = TWO_PI_I * pair_layer(&atlas, &a, sigma, 1, rule)?;
    let abs_error = (fd - predicted).norm();
    let scale = fd.norm().max(predicted.norm());
    let relative = scale > 1e-8;
    Ok(FdVariation {
        fd,
        predicted,
        abs_error,
        error: if relative { abs_error / scale } else { abs_error },
        relative,
    })
}

/// Fields on the square torus ℂ/ℤ[i] in the global coordinate, with
/// integrals by the periodic trapezoid rule on an N×N grid.
pub struct TorusCalculus {
    pub grid: usize,
}

/// A field on the torus given as a jet-valued function of the global
/// coordinate jet.
pub type TorusField = Arc<dyn Fn(&Jet) -> Jet + Send + Sync>;

impl TorusCalculus {
    /// ∫ g dx dy over the unit square.
    pub fn integrate(&self, g: &dyn Fn(C64) -> C64) -> C64 {
        let n = self.grid;
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                acc += g(C64::new(a as f64 / n as f64, b as f64 / n as f64));
            }
        }
        acc / (n * n) as f64
    }

    /// ∫ g dz∧dz̄ = −2i ∫ g dx dy.
    pub fn integrate_2form(&self, g: &dyn Fn(C64) -> C64) -> C64 {
        C64::new(0.0, -2.0) * self.integrate(g)
    }
}

/// On-shell data on the torus: μ = ∂̄f/∂f and h = {f, z} + H(∂f)² for a
/// global f with f(z + λ) = f(z) + A(λ). Then 𝒟_h μ = ∂̄h.
pub struct OnShellTorus {
    pub f: TorusField,
    pub big_h: C64,
}

impl OnShellTorus {
    pub fn mu(&self, z0: C64, n: usize) -> Jet {
        let f = (self.f)(&Jet::var(z0, n + 1));
        f.dzbar() * f.dz().recip()
    }

    pub fn h(&self, z0: C64, n: usize) -> Jet {
        let f = (self.f)(&Jet::var(z0, n + 3));
        let fz = f.dz().truncate(n);
        schwarzian(&f) + (fz * fz).scale(self.big_h)
    }

    /// c(v) = 2∫ μ 𝒟_h v dz∧dz̄.
    pub fn lie_cocycle(&self, calc: &TorusCalculus, v: &TorusField) -> C64 {
        calc.integrate_2form(&|z| {
            let dv = d_h(&v(&Jet::var(z, 3)), &self.h(z, 1));
            self.mu(z, 0).value() * dv.value() * 2.0
        })
    }

    /// δc(v, w) = v·c(w) − w·c(v) − c([v, w]) with the infinitesimal
    /// action v·c(w) = 2∫(∂̄_μ v 𝒟_h w + μ L_v 𝒟_h w).
    pub fn lie_coboundary(&self, calc: &TorusCalculus, v: &TorusField, w: &TorusField) -> C64 {
        calc.integrate_2form(&|z| {
            let (vj, wj) = (v(&Jet::var(z, 4)), w(&Jet::var(z, 4)));
            let h = self.h(z, 2);
            let mu = self.mu(z, 1);
            let (dv, dw) = (d_h(&vj, &h), d_h(&wj, &h));
            let t1 = dbar_mu(-1, &vj.truncate(1), &mu).value() * dw.value();
            let t2 = mu.value() * lie(&vj.truncate(2), &dw).value();
            let t3 = dbar_mu(-1, &wj.truncate(1), &mu).value() * dv.value();
            let t4 = mu.value() * lie(&wj.truncate(2), &dv).value();
            let t5 = mu.value() * d_h(&bracket(&vj, &wj), &h).value();
            (t1 + t2 - t3 - t4 - t5) * 2.0
        })
    }
}

/// Random jet with coefficients uniform in the unit square.
pub fn random_jet(rng: &mut impl rand::Rng, n: usize) -> Jet {
    let mut j = Jet::real(0.0, n);
    for a in 0..=n {
        for b in 0..=n - a {
            j.set_coef(a, b, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    j
}

fn random_mu(rng: &mut impl rand::Rng, n: usize) -> Jet {
    let mut m = random_jet(rng, n).scale(c(0.2));
    m.set_coef(0, 0, C64::new(0.1, -0.2));
    m
}

/// Pointwise operator identities on random jets of order 5:
/// 𝒟_h∂̄_μ v − ∂̄_μ𝒟_h v = L_v(𝒟_hμ − ∂̄h), the Lie identity for 𝒟_h,
/// and ∂̄_μ{f, z} = ∂³μ with μ = ∂̄f/∂f.
pub fn operator_checks(rng: &mut impl rand::Rng, trials: usize, tol: f64) -> Vec<Report> {
    let mut comm = MaxTracker::default();
    let mut lie_id = MaxTracker::default();
    let mut schw = MaxTracker::default();
    for k in 0..trials {
        let v = random_jet(rng, 5);
        let h = random_jet(rng, 5);
        let mu = random_mu(rng, 5);
        let lhs = d_h(&dbar_mu(-1, &v, &mu), &h) - dbar_mu(2, &d_h(&v, &h), &mu);
        let el = d_h(&mu, &h) - h.dzbar().truncate(2);
        let rhs = lie(&v.truncate(3), &el);
        comm.push((lhs.truncate(1) - rhs.truncate(1)).max_abs(), || format!("trial {k}"));

        let w = random_jet(rng, 5);
        let l = lie(&v.truncate(3), &d_h(&w, &h)) - lie(&w.truncate(3), &d_h(&v, &h)) - d_h(&bracket(&v, &w), &h);
        lie_id.push(l.truncate(1).max_abs(), || format!("trial {k}"));

        let mut f = random_jet(rng, 6).scale(c(0.1));
        f.set_coef(1, 0, c(1.0));
        f.set_coef(0, 1, C64::new(0.2, 0.1));
        let mu_f = f.dzbar() * f.dz().recip();
        let r = dbar_mu(2, &schwarzian(&f), &mu_f) - mu_f.dz().dz().dz();
        schw.push(r.truncate(1).max_abs(), || format!("trial {k}"));
    }
    vec![
        comm.report("𝒟_h∂̄_μ − ∂̄_μ𝒟_h = L(𝒟_hμ − ∂̄h)", tol),
        lie_id.report("L_v𝒟_h w − L_w𝒟_h v = 𝒟_h[v, w]", tol),
        schw.report("∂̄_μ{f, z} = ∂³μ", tol),
    ]
}

/// δc(v, w) for random trigonometric fields on an on-shell torus whose
/// f = z + μ₀z̄ + w(z) has non-constant μ.
pub fn lie_cocycle_check(rng: &mut impl rand::Rng, pairs: usize, tol: f64) -> Report {
    use crate::scenario::deform::TrigPoly;
    let w = TrigPoly {
        terms: vec![(1, 0, C64::new(0.02, 0.01)), (-1, 1, C64::new(0.0, 0.015)), (0, 2, C64::new(0.005, 0.0))],
    };
    let mu0 = C64::new(0.15, 0.05);
    let s = OnShellTorus {
        f: Arc::new(move |z: &Jet| *z + z.conj().scale(mu0) + w.eval(z)),
        big_h: C64::new(1.5, -0.5),
    };
    let calc = TorusCalculus { grid: 48 };
    let field = |p: TrigPoly| -> TorusField { Arc::new(move |z: &Jet| p.eval(z)) };
    let mut m = MaxTracker::default();
    for k in 0..pairs {
        let v = field(TrigPoly::random(rng, 3, 0.05));
        let u = field(TrigPoly::random(rng, 3, 0.05));
        m.push(s.lie_coboundary(&calc, &v, &u).norm(), || format!("pair {k}"));
    }
    m.report("δc(v, w) = 0", tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::FundamentalCycle;
    use crate::scenario::deform::{constant_h, sphere_h, SphereFlow, TorusFamily, TrigPoly, DEFAULT_FLOW};
    use crate::scenario::sphere::build_sphere_caps;
    use crate::scenario::star::torus_development;
    use rand::SeedableRng;

    fn rng() -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(5)
    }

    #[test]
    fn operator_basics() {
        let z = Jet::var(C64::new(0.3, 0.2), 5);
        let zero = Jet::real(0.0, 5);
        // μ = 0 gives plain ∂̄
        let phi = (z * z.conj()).sin();
        let a = dbar_mu(2, &phi, &zero);
        assert!((a - phi.dzbar()).max_abs() < 1e-14);
        // 𝒟_0 z³ = 6 and 𝒟_h 1 = ∂h
        assert!((d_h(&(z * z * z), &zero).value() - 6.0).norm() < 1e-12);
        let h = (z * z.conj()).exp();
        let one = Jet::real(1.0, 5);
        assert!((d_h(&one, &h) - h.dz().truncate(2)).max_abs() < 1e-12);
        // ∂̄_μ kills pullbacks of holomorphic functions for μ = ∂̄f/∂f
        let f = z + z.conj().scale(C64::new(0.2, 0.1)) + (z * z.conj()).scale(c(0.05));
        let mu = f.dzbar() * f.dz().recip();
        let g = f.exp();
        assert!(dbar_mu(0, &g.truncate(4), &mu).max_abs() < 1e-12);
    }

    #[test]
    fn commutator_identity_on_random_jets() {
        let mut r = rng();
        for _ in 0..10 {
            let v = random_jet(&mut r, 5);
            let h = random_jet(&mut r, 5);
            let mu = random_mu(&mut r, 5);
            let lhs = d_h(&dbar_mu(-1, &v, &mu), &h) - dbar_mu(2, &d_h(&v, &h), &mu);
            let el = d_h(&mu, &h) - h.dzbar().truncate(2);
            let rhs = lie(&v.truncate(3), &el);
            assert!((lhs.truncate(1) - rhs.truncate(1)).max_abs() < 1e-10);
            // with μ = 0 and h = 0 every term vanishes for holomorphic v
            let zero = Jet::real(0.0, 5);
            let hv = Jet::var(C64::new(0.1, 0.0), 5).exp();
            assert!((d_h(&dbar_mu(-1, &hv, &zero), &zero)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn lie_identity_and_schwarzian_identity() {
        let mut r = rng();
        for _ in 0..10 {
            let (v, w, h) = (random_jet(&mut r, 5), random_jet(&mut r, 5), random_jet(&mut r, 5));
            let lhs = lie(&v.truncate(3), &d_h(&w, &h)) - lie(&w.truncate(3), &d_h(&v, &h)) - d_h(&bracket(&v, &w), &h);
            assert!(lhs.truncate(1).max_abs() < 1e-10);
            let mut f = random_jet(&mut r, 6).scale(c(0.1));
            f.set_coef(1, 0, c(1.0));
            f.set_coef(0, 1, C64::new(0.2, 0.1));
            let mu = f.dzbar() * f.dz().recip();
            let s = schwarzian(&f);
            let lhs = dbar_mu(2, &s, &mu);
            let rhs = mu.dz().dz().dz();
            assert!((lhs.truncate(1) - rhs.truncate(1)).max_abs() < 1e-10);
        }
    }

    fn torus_onshell(t: f64) -> OnShellTorus {
        let w = TrigPoly {
            terms: vec![(1, 0, C64::new(0.02, 0.01)), (-1, 1, C64::new(0.0, 0.015)), (0, 2, C64::new(0.005, 0.0))],
        };
        let mu0 = C64::new(0.15, 0.05);
        OnShellTorus {
            f: Arc::new(move |z: &Jet| *z + z.conj().scale(mu0) + w.eval(z).scale(c(t))),
            big_h: C64::new(1.5, -0.5),
        }
    }

    fn trig_field(p: TrigPoly) -> TorusField {
        Arc::new(move |z: &Jet| p.eval(z))
    }

    #[test]
    fn onshell_torus_el_and_cocycle() {
        let s = torus_onshell(1.0);
        let calc = TorusCalculus { grid: 48 };
        let z = C64::new(0.37, 0.61);
        let el = d_h(&s.mu(z, 3), &s.h(z, 3)) - s.h(z, 3).dzbar().truncate(0);
        assert!(el.truncate(0).value().norm() < 1e-10);
        let mut r = rng();
        for _ in 0..3 {
            let v = trig_field(TrigPoly::random(&mut r, 3, 0.05));
            let w = trig_field(TrigPoly::random(&mut r, 3, 0.05));
            let dc = s.lie_coboundary(&calc, &v, &w);
            assert!(dc.norm() < 1e-8, "{dc}");
        }
        // affine fibre: two on-shell h differ by a μ-holomorphic quadratic differential
        let s2 = OnShellTorus { f: s.f.clone(), big_h: C64::new(-0.3, 2.0) };
        let dh = s2.h(z, 2) - s.h(z, 2);
        assert!(dbar_mu(2, &dh, &s.mu(z, 2)).value().norm() < 1e-10);
        // constant μ and h: c(v) = 0
        let flat = torus_onshell(0.0);
        let v = trig_field(TrigPoly::random(&mut r, 3, 0.1));
        assert!(flat.lie_cocycle(&calc, &v).norm() < 1e-10);
    }

    #[test]
    fn d_h_is_skew_on_the_torus() {
        let calc = TorusCalculus { grid: 48 };
        let mut r = rng();
        let h = trig_field(TrigPoly::random(&mut r, 3, 0.5));
        let u = trig_field(TrigPoly::random(&mut r, 3, 0.2));
        let v = trig_field(TrigPoly::random(&mut r, 3, 0.2));
        let pair = |a: &TorusField, b: &TorusField| {
            calc.integrate(&|z| a(&Jet::var(z, 0)).value() * d_h(&b(&Jet::var(z, 3)), &h(&Jet::var(z, 1))).value())
        };
        let (x, y) = (pair(&u, &v), pair(&v, &u));
        assert!((x + y).norm() < 1e-8 * x.norm().max(1.0), "{x} {y}");
    }

    fn sphere_setup() -> (SphereFlow, ChartFn, Arc<TameTrivialization>) {
        let caps = build_sphere_caps().unwrap();
        let h = sphere_h(&caps);
        let flow = SphereFlow::new(caps, DEFAULT_FLOW);
        let triv = Arc::new(TameTrivialization::dilogarithm(flow.atlas.clone(), 1e-9).unwrap());
        (flow, h, triv)
    }

    #[test]
    fn sphere_descent_data_match_finite_differences() {
        let (flow, h, triv) = sphere_setup();
        let var = Variation { defm: Arc::new(flow.deformation(0.0)), var_f: flow.v_field() };
        assert!(var.verticality(1e-10).pass);
        assert!(source_form_consistency(&var, &h, 1e-10).pass);
        let fam = |t: f64| flow.deformation(t);
        for r in descent_check(&fam, &var, &h, &triv, &triv, 1e-2, 1e-7).unwrap() {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn torus_descent_data_match_finite_differences() {
        let mut r = rng();
        let fam = TorusFamily::new(&torus_development(), C64::new(0.2, 0.1)).unwrap();
        let w = TrigPoly::random(&mut r, 2, 0.05);
        let h = trig_h(&fam, TrigPoly::random(&mut r, 2, 0.3));
        let var = Variation { defm: Arc::new(fam.deformation(0.0, &w)), var_f: fam.v_field(&w) };
        let triv = Arc::new(TameTrivialization::dilogarithm(fam.base.clone(), 1e-9).unwrap());
        let triv_t = Arc::new(TameTrivialization::dilogarithm(fam.tilde.clone(), 1e-9).unwrap());
        let family = |t: f64| fam.deformation(t, &w);
        for rep in descent_check(&family, &var, &h, &triv, &triv_t, 1e-2, 1e-7).unwrap() {
            assert!(rep.pass, "{rep:?}");
        }
    }

    fn trig_h(fam: &TorusFamily, p: TrigPoly) -> ChartFn {
        let lifts = fam.lifts.clone();
        Arc::new(move |i, z: &Jet| p.eval(&z.add_const(lifts[i])).add_const(c(1.0)))
    }

    #[test]
    fn sphere_action_variation_matches_source_form() {
        let (flow, h, triv) = sphere_setup();
        let var = Variation { defm: Arc::new(flow.deformation(0.0)), var_f: flow.v_field() };
        let sigma = FundamentalCycle::build(&flow.atlas).unwrap().total();
        let fam = |t: f64| flow.deformation(t);
        let rep = fd_variation_check(&fam, &var, &h, &triv, &triv, &sigma, &QuadratureRule::default(), 1e-2).unwrap();
        assert!(rep.relative && rep.error < 1e-4, "{rep:?}");
    }

    #[test]
    fn torus_action_is_stationary_for_constant_h() {
        let mut r = rng();
        let fam = TorusFamily::new(&torus_development(), C64::new(0.2, 0.0)).unwrap();
        let w = TrigPoly::random(&mut r, 2, 0.05);
        let h = constant_h(C64::new(2.0, 1.0));
        let var = Variation { defm: Arc::new(fam.deformation(0.0, &w)), var_f: fam.v_field(&w) };
        let triv = Arc::new(TameTrivialization::dilogarithm(fam.base.clone(), 1e-9).unwrap());
        let triv_t = Arc::new(TameTrivialization::dilogarithm(fam.tilde.clone(), 1e-9).unwrap());
        let sigma = FundamentalCycle::build(&fam.base).unwrap().total();
        let family = |t: f64| fam.deformation(t, &w);
        let rep = fd_variation_check(&family, &var, &h, &triv, &triv_t, &sigma, &QuadratureRule::default(), 1e-2).unwrap();
        assert!(rep.abs_error < 1e-10 && rep.predicted.norm() < 1e-10, "{rep:?}");
        assert!(el_residual(&var.defm, &h) < 1e-10);
    }

    #[test]
    fn torus_action_variation_matches_source_form() {
        let mut r = rng();
        let fam = TorusFamily::new(&torus_development(), C64::new(0.15, 0.05)).unwrap();
        // h and w share opposite modes so that ∫a ≠ 0
        let mut w = TrigPoly::random(&mut r, 2, 0.02);
        w.terms.push((-1, 0, C64::new(0.03, 0.01)));
        w.terms.push((0, 1, C64::new(0.0, 0.02)));
        let mut hp = TrigPoly::random(&mut r, 2, 0.3);
        hp.terms.push((1, 0, C64::new(0.4, -0.2)));
        hp.terms.push((0, -1, C64::new(0.1, 0.3)));
        let h = trig_h(&fam, hp);
        let var = Variation { defm: Arc::new(fam.deformation(0.0, &w)), var_f: fam.v_field(&w) };
        assert!(var.verticality(1e-12).pass);
        let triv = Arc::new(TameTrivialization::dilogarithm(fam.base.clone(), 1e-9).unwrap());
        let triv_t = Arc::new(TameTrivialization::dilogarithm(fam.tilde.clone(), 1e-9).unwrap());
        let sigma = FundamentalCycle::build(&fam.base).unwrap().total();
        let family = |t: f64| fam.deformation(t, &w);
        let rep = fd_variation_check(&family, &var, &h, &triv, &triv_t, &sigma, &QuadratureRule::default(), 1e-2).unwrap();
        assert!(rep.relative && rep.error < 1e-4, "{rep:?}");
    }
}
