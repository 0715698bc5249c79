//! The local Lagrangian cocycle Ω[f] = 2πi(ω, θ, −Θ, −m), the
//! dilogarithm trivialization of the holomorphic tame symbol, and the
//! calculus of log-branch and trivialization shifts.

use crate::atlas::{track_log, Atlas, ChartFn, Nerve, Tuple};
use crate::cech_deligne::{
    cech_delta_forms, cech_delta_int, Comp, DeligneCochain, DeligneCocycle3, FormLayer,
};
use crate::fields::{FormValue, GaussLegendre};
use crate::jet::Jet;
use crate::{two_pi_i_pow, Error, MaxTracker, Report, TWO_PI_I};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Largest admissible sup-norm of the Beltrami coefficient.
pub const MU_BOUND: f64 = 0.95;

fn round_int(x: C64, what: &str, t: &[usize], tol: f64) -> Result<i64, Error> {
    let n = x.re.round();
    let res = (x - C64::new(n, 0.0)).norm();
    if res > tol {
        return Err(Error::Relation(format!(
            "{what} on {t:?} is not an integer (residual {res:e})"
        )));
    }
    Ok(n as i64)
}

/// Chart-local deformation map f_i: X → X̃ with X̃ covered by `tilde`,
/// whose transitions are w_ij.
#[derive(Clone)]
pub struct DeformationData {
    pub atlas: Arc<Atlas>,
    pub tilde: Arc<Atlas>,
    f: ChartFn,
    lambda_shift: BTreeMap<usize, i64>,
    pub label: String,
}

impl DeformationData {
    pub fn new(atlas: Arc<Atlas>, tilde: Arc<Atlas>, f: ChartFn, label: &str) -> DeformationData {
        DeformationData {
            atlas,
            tilde,
            f,
            lambda_shift: BTreeMap::new(),
            label: label.to_string(),
        }
    }

    /// Identity deformation X̃ = X.
    pub fn identity(atlas: Arc<Atlas>) -> DeformationData {
        let f: ChartFn = Arc::new(|_, z: &Jet| *z);
        DeformationData::new(atlas.clone(), atlas, f, "identity")
    }

    /// λ_i → λ_i + 2πi p_i.
    pub fn with_lambda_shifts(&self, p: &BTreeMap<usize, i64>) -> DeformationData {
        let mut out = self.clone();
        for (i, k) in p {
            *out.lambda_shift.entry(*i).or_insert(0) += k;
        }
        out
    }

    /// Same deformation, atlases replaced (used for log-branch shifts).
    pub fn with_atlases(&self, atlas: Arc<Atlas>, tilde: Arc<Atlas>) -> DeformationData {
        let mut out = self.clone();
        out.atlas = atlas;
        out.tilde = tilde;
        out
    }

    pub fn f_fn(&self) -> &ChartFn {
        &self.f
    }

    /// f_i as a jet of order n at z0.
    pub fn f_jet(&self, i: usize, z0: C64, n: usize) -> Jet {
        (self.f)(i, &Jet::var(z0, n))
    }

    pub fn f_value(&self, i: usize, z0: C64) -> C64 {
        self.f_jet(i, z0, 0).value()
    }

    /// (∂f_i, ∂̄f_i) as jets of order n.
    pub fn df(&self, i: usize, z0: C64, n: usize) -> (Jet, Jet) {
        let f = self.f_jet(i, z0, n + 1);
        (f.dz(), f.dzbar())
    }

    /// μ_i = ∂̄f_i/∂f_i as a jet of order n.
    pub fn mu(&self, i: usize, z0: C64, n: usize) -> Jet {
        let (a, b) = self.df(i, z0, n);
        b * a.recip()
    }

    /// Branch-resolved λ_i = log ∂f_i, continued from the chart seed.
    pub fn lambda_value(&self, i: usize, z0: C64) -> C64 {
        let seed = self.atlas.regions[&vec![i]].seed;
        let g = |p: C64| self.df(i, p, 0).0.value();
        let shift = *self.lambda_shift.get(&i).unwrap_or(&0) as f64;
        track_log(&g, seed, g(seed).ln() + TWO_PI_I * shift, z0)
    }

    pub fn lambda(&self, i: usize, z0: C64, n: usize) -> Jet {
        self.df(i, z0, n).0.ln_with(self.lambda_value(i, z0))
    }

    /// ℓ̃_ij∘f_j = log w′_ij(f_j) as a jet of order n in chart j.
    pub fn ltilde_f(&self, i: usize, j: usize, z0: C64, n: usize) -> Jet {
        self.tilde.log_deriv(i, j, &self.f_jet(j, z0, n))
    }

    /// Equivariance f_i∘z_ij = w_ij∘f_j, ∂f ≠ 0, ‖μ‖∞ ≤ 0.95 and the
    /// transformation law μ_j = μ_i∘z_ij · conj(z′_ij)/z′_ij.
    pub fn verify(&self, tol: f64) -> Vec<Report> {
        let mut eq = MaxTracker::default();
        let mut mulaw = MaxTracker::default();
        let mut mumax = MaxTracker::default();
        let mut dfmin = f64::INFINITY;
        for t in self.atlas.tuples(1) {
            let i = t[0];
            for z in self.atlas.samples_in(t, i) {
                let m = self.mu(i, z, 0).value().norm();
                mumax.push(m, || format!("chart {i} at {z}"));
                dfmin = dfmin.min(self.df(i, z, 0).0.value().norm());
            }
        }
        for t in self.atlas.tuples(2) {
            let (i, j) = (t[0], t[1]);
            let (Ok(zt), Ok(wt)) = (self.atlas.transition(i, j), self.tilde.transition(i, j)) else {
                eq.push(f64::INFINITY, || format!("missing transition ({i},{j})"));
                continue;
            };
            for z in self.atlas.samples_in(t, j) {
                let lhs = self.f_value(i, zt.apply(z));
                let rhs = wt.apply(self.f_value(j, z));
                eq.push((lhs - rhs).norm(), || format!("pair ({i},{j}) at {z}"));
                let zp = zt.deriv(z);
                let r = self.mu(j, z, 0).value()
                    - self.mu(i, zt.apply(z), 0).value() * zp.conj() / zp;
                mulaw.push(r.norm(), || format!("pair ({i},{j}) at {z}"));
            }
        }
        let mu_at = mumax.at.clone();
        vec![
            eq.report("f_i∘z_ij = w_ij∘f_j", tol),
            mulaw.report("Beltrami transformation law", tol),
            Report::flag(
                "‖μ‖∞ ≤ 0.95",
                mumax.value <= MU_BOUND,
                format!("max |μ| = {:.6} at {mu_at}", mumax.value),
            ),
            Report::flag("∂f ≠ 0", dfmin > 1e-12, format!("min |∂f| = {dfmin:e}")),
        ]
    }

    /// Errors out on a degenerate Beltrami coefficient.
    pub fn check_mu(&self) -> Result<(), Error> {
        for t in self.atlas.tuples(1) {
            let i = t[0];
            for z in self.atlas.samples_in(t, i) {
                let m = self.mu(i, z, 0).value().norm();
                if !(m <= MU_BOUND) {
                    return Err(Error::Numerical(format!(
                        "|μ| = {m:.4} exceeds {MU_BOUND} in chart {i} at {z}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Integer ledger (b, c, c̃) of the chosen logarithm branches; entries
/// are multiples of 2πi.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct BranchLedger {
    pub b: BTreeMap<Tuple, i64>,
    pub c: BTreeMap<Tuple, i64>,
    pub ct: BTreeMap<Tuple, i64>,
}

impl BranchLedger {
    pub fn build(defm: &DeformationData) -> Result<BranchLedger, Error> {
        let a = &defm.atlas;
        let c = a.chern_cocycle()?;
        let mut ct = BTreeMap::new();
        for t in a.tuples(3) {
            let (i, j, k) = (t[0], t[1], t[2]);
            let tjk = a.transition(j, k)?;
            let mut val = None;
            for z in a.samples_in(t, k) {
                let s = defm.ltilde_f(j, k, z, 0).value() - defm.ltilde_f(i, k, z, 0).value()
                    + defm.ltilde_f(i, j, tjk.apply(z), 0).value();
                let n = round_int(s / TWO_PI_I, "c̃", t, 1e-6)?;
                if *val.get_or_insert(n) != n {
                    return Err(Error::Relation(format!("c̃ not constant on {t:?}")));
                }
            }
            ct.insert(t.clone(), val.unwrap_or(0));
        }
        let mut b = BTreeMap::new();
        for t in a.tuples(2) {
            let (i, j) = (t[0], t[1]);
            let tij = a.transition(i, j)?;
            let mut val = None;
            for z in a.samples_in(t, j) {
                let s = defm.ltilde_f(i, j, z, 0).value() + defm.lambda_value(j, z)
                    - defm.lambda_value(i, tij.apply(z))
                    - a.log_deriv_value(i, j, z);
                let n = round_int(s / TWO_PI_I, "b", t, 1e-6)?;
                if *val.get_or_insert(n) != n {
                    return Err(Error::Relation(format!("b not constant on {t:?}")));
                }
            }
            b.insert(t.clone(), val.unwrap_or(0));
        }
        Ok(BranchLedger { b, c, ct })
    }

    /// δ̌b = c̃ − c, δ̌c = 0, δ̌c̃ = 0 in exact integers.
    pub fn verify(&self, atlas: &Atlas) -> Vec<Report> {
        let db = cech_delta_int(atlas, &self.b, 1);
        let mut worst = 0i64;
        let mut at = String::new();
        for t in atlas.tuples(3) {
            let r = db.get(t).unwrap_or(&0) - (self.ct.get(t).unwrap_or(&0) - self.c.get(t).unwrap_or(&0));
            if r.abs() > worst {
                worst = r.abs();
                at = format!("{t:?}");
            }
        }
        let dc = cech_delta_int(atlas, &self.c, 2);
        let dct = cech_delta_int(atlas, &self.ct, 2);
        vec![
            Report::flag("δ̌b = c̃ − c", worst == 0, format!("max defect {worst} {at}")),
            Report::flag("δ̌c = 0", dc.is_empty(), format!("{} nonzero", dc.len())),
            Report::flag("δ̌c̃ = 0", dct.is_empty(), format!("{} nonzero", dct.len())),
        ]
    }
}

/// Trivialization (0, φ, n) of the holomorphic tame symbol (TX, TX] on
/// one atlas, with φ_ijk = L_ijk + β_ijk − 2πi k_ij ℓ_jk where L is the
/// dilogarithm integral and k an optional branch-shift wrap.
#[derive(Clone)]
pub struct TameTrivialization {
    /// Atlas whose logarithms define L (and the wrap term).
    pub base: Arc<Atlas>,
    pub beta: BTreeMap<Tuple, C64>,
    pub n: BTreeMap<Tuple, i64>,
    pub wrap: BTreeMap<(usize, usize), i64>,
    gl: Arc<GaussLegendre>,
}

impl std::fmt::Debug for TameTrivialization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TameTrivialization")
            .field("beta", &self.beta)
            .field("n", &self.n)
            .field("wrap", &self.wrap)
            .finish()
    }
}

/// Path pieces are at most this long in chart coordinates.
const DILOG_PIECE: f64 = 0.2;

impl TameTrivialization {
    /// L_ijk(ζ) = −∫ ℓ_ij(z_jk(s)) (z″/z′)_jk(s) ds from the triple seed.
    pub fn dilog_value(&self, t: &[usize], zeta: C64) -> C64 {
        let a = &self.base;
        let (i, j, k) = (t[0], t[1], t[2]);
        let b = a.regions[t].seed;
        let tjk = a.tr(j, k);
        let pieces = ((zeta - b).norm() / DILOG_PIECE).ceil().max(1.0) as usize;
        let h = (zeta - b) / pieces as f64;
        let mut acc = C64::new(0.0, 0.0);
        for p in 0..pieces {
            let a0 = b + h * p as f64;
            for (u, w) in self.gl.nodes.iter().zip(&self.gl.weights) {
                let s = a0 + h * *u;
                let g = a.log_deriv_value(i, j, tjk.apply(s)) * tjk.ratio_jet(&Jet::var(s, 0)).value();
                acc += g * *w;
            }
        }
        -(acc * h)
    }

    /// The integrand g = ℓ_ij(z_jk) (z″/z′)_jk as a holomorphic jet.
    fn dilog_integrand(&self, t: &[usize], z: &Jet) -> Jet {
        let a = &self.base;
        let (i, j, k) = (t[0], t[1], t[2]);
        let tjk = a.tr(j, k);
        a.log_deriv(i, j, &tjk.apply_jet(z)) * tjk.ratio_jet(z)
    }

    /// φ_ijk(ζ) value in chart k.
    pub fn phi_value(&self, t: &[usize], zeta: C64) -> C64 {
        self.phi_jet(t, zeta, 0).value()
    }

    /// φ_ijk as a holomorphic jet of order n at ζ0 (chart k).
    pub fn phi_jet(&self, t: &[usize], z0: C64, n: usize) -> Jet {
        let mut out = Jet::constant(self.dilog_value(t, z0), n);
        if n > 0 {
            let g = self.dilog_integrand(t, &Jet::var(z0, n - 1));
            for m in 0..n {
                out.set_coef(m + 1, 0, -g.coef(m, 0) / (m + 1) as f64);
            }
        }
        if let Some(bv) = self.beta.get(t) {
            out = out.add_const(*bv);
        }
        let kij = *self.wrap.get(&(t[0], t[1])).unwrap_or(&0);
        if kij != 0 {
            let l = self.base.log_deriv(t[1], t[2], &Jet::var(z0, n));
            out = out - l.scale(TWO_PI_I * kij as f64);
        }
        out
    }

    fn component(self: &Arc<Self>, t: &Tuple) -> Comp {
        let me = self.clone();
        let t = t.clone();
        Arc::new(move |z: &Jet| FormValue::F0(me.phi_jet(&t, z.value(), z.order())))
    }

    /// φ as a form layer over triples.
    pub fn phi_layer(self: &Arc<Self>) -> FormLayer {
        self.base.tuples(3).map(|t| (t.clone(), self.component(t))).collect()
    }

    /// α_ijkl = 2πi c_ijk ℓ_kl + δ̌φ_ijkl at the quadruple seed.
    fn alpha(&self, atlas: &Atlas, c: &BTreeMap<Tuple, i64>, t: &[usize]) -> C64 {
        let l = t[3];
        let z = atlas.regions[t].seed;
        let zk = atlas.tr(t[2], l).apply(z);
        let cv = *c.get(&t[..3].to_vec()).unwrap_or(&0) as f64;
        TWO_PI_I * cv * atlas.log_deriv_value(t[2], l, z)
            + self.phi_value(&Nerve::face(t, 0), z)
            - self.phi_value(&Nerve::face(t, 1), z)
            + self.phi_value(&Nerve::face(t, 2), z)
            - self.phi_value(&t[..3], zk)
    }

    /// Dilogarithm trivialization: n = round(α/(2πi)²) and β the
    /// least-norm solution of δ̌β = (2πi)²n − α.
    pub fn dilogarithm(atlas: Arc<Atlas>, tol: f64) -> Result<TameTrivialization, Error> {
        let mut triv = TameTrivialization {
            base: atlas.clone(),
            beta: BTreeMap::new(),
            n: BTreeMap::new(),
            wrap: BTreeMap::new(),
            gl: Arc::new(GaussLegendre::new(20)),
        };
        let quads: Vec<Tuple> = atlas.tuples(4).cloned().collect();
        if quads.is_empty() {
            return Ok(triv);
        }
        let c = atlas.chern_cocycle()?;
        let triples: Vec<Tuple> = atlas.tuples(3).cloned().collect();
        let col: BTreeMap<&Tuple, usize> = triples.iter().enumerate().map(|(k, t)| (t, k)).collect();
        let p2 = two_pi_i_pow(2);
        let mut m = DMatrix::<f64>::zeros(quads.len(), triples.len());
        let mut rhs_re = DVector::<f64>::zeros(quads.len());
        let mut rhs_im = DVector::<f64>::zeros(quads.len());
        for (r, q) in quads.iter().enumerate() {
            for k in 0..4 {
                let f = Nerve::face(q, k);
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                m[(r, col[&f])] += s;
            }
            let alpha = triv.alpha(&atlas, &c, q);
            let n = (alpha / p2).re.round() as i64;
            triv.n.insert(q.clone(), n);
            let rhs = p2 * n as f64 - alpha;
            rhs_re[r] = rhs.re;
            rhs_im[r] = rhs.im;
        }
        let svd = m.clone().svd(true, true);
        let bre = svd
            .solve(&rhs_re, 1e-12)
            .map_err(|e| Error::Numerical(e.to_string()))?;
        let bim = svd
            .solve(&rhs_im, 1e-12)
            .map_err(|e| Error::Numerical(e.to_string()))?;
        let res = ((&m * &bre - &rhs_re).norm()).max((&m * &bim - &rhs_im).norm());
        if res > tol {
            return Err(Error::Relation(format!(
                "integration constants: δ̌β = (2πi)²n − α unsolvable (residual {res:e})"
            )));
        }
        for (k, t) in triples.iter().enumerate() {
            triv.beta.insert(t.clone(), C64::new(bre[k], bim[k]));
        }
        triv.n.retain(|_, v| *v != 0);
        Ok(triv)
    }

    /// The trivialization as a ℤ(2) Deligne cochain (τ = 0, φ, n) of
    /// total degree 3.
    pub fn as_cochain(self: &Arc<Self>) -> DeligneCochain {
        DeligneCochain {
            p: 2,
            n: 3,
            int: self.n.clone(),
            forms: vec![self.phi_layer(), FormLayer::new()],
        }
    }

    /// Re-derives n from c ℓ_kl = −δ̌φ + n on `atlas` (which may carry
    /// shifted branches); residual of the rounding is returned.
    pub fn rederive_n(&mut self, atlas: &Atlas) -> Result<f64, Error> {
        let c = atlas.chern_cocycle()?;
        let mut worst = 0.0f64;
        let mut n = BTreeMap::new();
        for q in atlas.tuples(4) {
            let x = self.alpha(atlas, &c, q) / two_pi_i_pow(2);
            let k = x.re.round();
            worst = worst.max((x - C64::new(k, 0.0)).norm());
            if k != 0.0 {
                n.insert(q.clone(), k as i64);
            }
        }
        self.n = n;
        Ok(worst)
    }

    /// Residuals of dφ = −ℓ_ij dℓ_jk, c ℓ_kl = −δ̌φ + n and δ̌n = c∪c.
    pub fn verify(self: &Arc<Self>, atlas: &Atlas, tol: f64) -> Result<Vec<Report>, Error> {
        let c = atlas.chern_cocycle()?;
        let mut first = MaxTracker::default();
        for t in atlas.tuples(3) {
            let (i, j, k) = (t[0], t[1], t[2]);
            for z in atlas.samples_in(t, k) {
                let phi = self.phi_jet(t, z, 1);
                let zj = atlas.tr(j, k).apply(z);
                let rhs = -atlas.log_deriv_value(i, j, zj) * atlas.tr(j, k).ratio_jet(&Jet::var(z, 0)).value();
                first.push((phi.coef(1, 0) - rhs).norm(), || format!("{t:?} at {z}"));
            }
        }
        let mut second = MaxTracker::default();
        let p2 = two_pi_i_pow(2);
        for q in atlas.tuples(4) {
            let l = q[3];
            let n = *self.n.get(q).unwrap_or(&0) as f64;
            for z in atlas.samples_in(q, l) {
                let zk = atlas.tr(q[2], l).apply(z);
                let cv = *c.get(&q[..3]).unwrap_or(&0) as f64;
                let r = TWO_PI_I * cv * atlas.log_deriv_value(q[2], l, z)
                    + self.phi_value(&Nerve::face(q, 0), z)
                    - self.phi_value(&Nerve::face(q, 1), z)
                    + self.phi_value(&Nerve::face(q, 2), z)
                    - self.phi_value(&q[..3], zk)
                    - p2 * n;
                second.push(r.norm(), || format!("{q:?} at {z}"));
            }
        }
        let dn = cech_delta_int(atlas, &self.n, 3);
        let mut third = 0i64;
        for t in atlas.tuples(5) {
            let cc = c.get(&t[..3]).unwrap_or(&0) * c.get(&t[2..]).unwrap_or(&0);
            third = third.max((dn.get(t).unwrap_or(&0) - cc).abs());
        }
        Ok(vec![
            first.report("dφ = −ℓ_ij dℓ_jk", tol),
            second.report("c ℓ_kl = −δ̌φ + n", tol),
            Report::flag("δ̌n = c∪c", third == 0, format!("max defect {third}")),
        ])
    }

    /// φ → φ + β, n → n + p for constants β on triples with δ̌β = (2πi)²p.
    pub fn shifted(&self, beta: &BTreeMap<Tuple, C64>, p: &BTreeMap<Tuple, i64>) -> Result<TameTrivialization, Error> {
        let atlas = &self.base;
        let p2 = two_pi_i_pow(2);
        for q in atlas.tuples(4) {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..4 {
                let b = *beta.get(&Nerve::face(q, k)).unwrap_or(&C64::new(0.0, 0.0));
                s += if k % 2 == 0 { b } else { -b };
            }
            let r = (s - p2 * *p.get(q).unwrap_or(&0) as f64).norm();
            if r > 1e-9 {
                return Err(Error::Relation(format!(
                    "trivialization shift is not a cocycle on {q:?} (residual {r:e})"
                )));
            }
        }
        let mut out = self.clone();
        for (t, b) in beta {
            *out.beta.entry(t.clone()).or_insert(C64::new(0.0, 0.0)) += *b;
        }
        for (t, k) in p {
            *out.n.entry(t.clone()).or_insert(0) += *k;
        }
        out.n.retain(|_, v| *v != 0);
        Ok(out)
    }

    /// Same φ read on an atlas with shifted branches ℓ + 2πi k: adds the
    /// wrap term −2πi k_ij ℓ_jk (old ℓ) and re-derives n on `shifted`.
    pub fn wrapped(&self, k: &BTreeMap<(usize, usize), i64>, shifted: &Atlas) -> Result<(TameTrivialization, f64), Error> {
        let mut out = self.clone();
        for (p, v) in k {
            *out.wrap.entry(*p).or_insert(0) += v;
        }
        let res = out.rederive_n(shifted)?;
        Ok((out, res))
    }
}

/// Components of Ω[f] and the integer data it was built from.
#[derive(Clone)]
pub struct Lagrangian {
    pub omega_form: FormLayer,
    pub theta: FormLayer,
    pub big_theta: FormLayer,
    /// m in units of (2πi)², from rounding δ̌Θ.
    pub m: BTreeMap<Tuple, i64>,
    /// m from the closed form ñ − n − (c̃+c)b + c c̃ − c c̃.
    pub m_closed: BTreeMap<Tuple, i64>,
    /// Largest rounding residual of δ̌Θ/(2πi)².
    pub m_residual: f64,
    pub ledger: BranchLedger,
    pub cocycle: DeligneCocycle3,
}

/// ω_i = ((∂²f/∂f)∂μ + 2μh) dz∧dz̄.
pub fn omega(defm: &Arc<DeformationData>, h: &ChartFn) -> FormLayer {
    let mut out = FormLayer::new();
    for t in defm.atlas.tuples(1) {
        let i = t[0];
        let d = defm.clone();
        let h = h.clone();
        let comp: Comp = Arc::new(move |z: &Jet| {
            let n = z.order();
            let z0 = z.value();
            let (fz, fzb) = d.df(i, z0, n + 1);
            let inv = fz.recip();
            let mu = fzb * inv;
            let t1 = fz.dz() * inv * mu.dz();
            let t2 = mu * h(i, &Jet::var(z0, n)) * C64::new(2.0, 0.0);
            FormValue::F2((t1 + t2).truncate(n))
        });
        out.insert(t.clone(), comp);
    }
    out
}

/// θ_ij = 2μ_j (z″/z′)_ij dz̄ − (ℓ̃_ij∘f_j + ℓ_ij) dλ_j + ℓ̃_ij∘f_j dℓ_ij.
pub fn theta(defm: &Arc<DeformationData>) -> FormLayer {
    let mut out = FormLayer::new();
    for t in defm.atlas.tuples(2) {
        let (i, j) = (t[0], t[1]);
        let d = defm.clone();
        let comp: Comp = Arc::new(move |z: &Jet| {
            let n = z.order();
            let z0 = z.value();
            let ratio = d.atlas.ratio(i, j, &Jet::var(z0, n));
            let mu = d.mu(j, z0, n);
            let lt = d.ltilde_f(i, j, z0, n + 1);
            let l = d.atlas.log_deriv(i, j, &Jet::var(z0, n + 1));
            let lam = d.lambda(j, z0, n + 1);
            let s = (lt + l).truncate(n);
            let ltn = lt.truncate(n);
            let a = ltn * l.dz() - s * lam.dz();
            let b = mu * ratio * C64::new(2.0, 0.0) + ltn * l.dzbar() - s * lam.dzbar();
            FormValue::F1(a, b)
        });
        out.insert(t.clone(), comp);
    }
    out
}

/// Θ_ijk = f*φ̃ − φ − 2πi(c̃+c)λ_k − ℓ_ij(z_jk)·ℓ̃_jk(f_k) + 2πi c̃ ℓ_ik.
pub fn big_theta(
    defm: &Arc<DeformationData>,
    ledger: &BranchLedger,
    triv: &Arc<TameTrivialization>,
    triv_t: &Arc<TameTrivialization>,
) -> FormLayer {
    let mut out = FormLayer::new();
    for t in defm.atlas.tuples(3) {
        let (i, j, k) = (t[0], t[1], t[2]);
        let d = defm.clone();
        let (tr, trt) = (triv.clone(), triv_t.clone());
        let c = *ledger.c.get(t).unwrap_or(&0) as f64;
        let ct = *ledger.ct.get(t).unwrap_or(&0) as f64;
        let tt = t.clone();
        let comp: Comp = Arc::new(move |z: &Jet| {
            let n = z.order();
            let z0 = z.value();
            let v = Jet::var(z0, n);
            let fk = d.f_jet(k, z0, n);
            let phit = trt.phi_jet(&tt, fk.value(), n).compose_jet(&fk);
            let phi = tr.phi_jet(&tt, z0, n);
            let lam = d.lambda(k, z0, n);
            let lij = d.atlas.log_deriv(i, j, &d.atlas.tr(j, k).apply_jet(&v));
            let ltjk = d.ltilde_f(j, k, z0, n);
            let lik = d.atlas.log_deriv(i, k, &v);
            let r = phit - phi - lam.scale(TWO_PI_I * (ct + c)) - lij * ltjk
                + lik.scale(TWO_PI_I * ct);
            FormValue::F0(r)
        });
        out.insert(t.clone(), comp);
    }
    out
}

/// m_ijkl = ñ − n − (c̃_ijk + c_ijk) b_kl + c_ijl c̃_jkl − c_ikl c̃_ijk.
pub fn m_closed_form(
    atlas: &Atlas,
    ledger: &BranchLedger,
    n: &BTreeMap<Tuple, i64>,
    nt: &BTreeMap<Tuple, i64>,
) -> BTreeMap<Tuple, i64> {
    let g = |m: &BTreeMap<Tuple, i64>, t: Vec<usize>| *m.get(&t).unwrap_or(&0);
    let mut out = BTreeMap::new();
    for q in atlas.tuples(4) {
        let (i, j, k, l) = (q[0], q[1], q[2], q[3]);
        let v = g(nt, q.clone()) - g(n, q.clone())
            - (g(&ledger.ct, vec![i, j, k]) + g(&ledger.c, vec![i, j, k])) * g(&ledger.b, vec![k, l])
            + g(&ledger.c, vec![i, j, l]) * g(&ledger.ct, vec![j, k, l])
            - g(&ledger.c, vec![i, k, l]) * g(&ledger.ct, vec![i, j, k]);
        if v != 0 {
            out.insert(q.clone(), v);
        }
    }
    out
}

/// m from δ̌Θ at the quadruple samples; returns (m, max rounding residual).
pub fn m_numeric(atlas: &Atlas, big_theta: &FormLayer) -> Result<(BTreeMap<Tuple, i64>, f64), Error> {
    let dl = cech_delta_forms(atlas, big_theta, 2)?;
    let p2 = two_pi_i_pow(2);
    let mut out = BTreeMap::new();
    let mut worst = 0.0f64;
    for (q, comp) in &dl {
        let l = q[3];
        let mut val = None;
        for z in atlas.samples_in(q, l) {
            let x = comp(&Jet::var(z, 0)).as_f0().value() / p2;
            let k = x.re.round();
            worst = worst.max((x - C64::new(k, 0.0)).norm());
            if *val.get_or_insert(k as i64) != k as i64 {
                return Err(Error::Relation(format!("δ̌Θ not constant on {q:?}")));
            }
        }
        if let Some(v) = val.filter(|v| *v != 0) {
            out.insert(q.clone(), v);
        }
    }
    Ok((out, worst))
}

fn scale_layer(l: &FormLayer, s: C64) -> FormLayer {
    l.iter()
        .map(|(t, c)| {
            let c = c.clone();
            (t.clone(), Arc::new(move |z: &Jet| c(z).scale(s)) as Comp)
        })
        .collect()
}

/// Builds Ω[f] = 2πi(ω, θ, −Θ, −m).
pub fn build_lagrangian_cocycle(
    defm: &Arc<DeformationData>,
    h: &ChartFn,
    triv: &Arc<TameTrivialization>,
    triv_t: &Arc<TameTrivialization>,
) -> Result<Lagrangian, Error> {
    defm.check_mu()?;
    let ledger = BranchLedger::build(defm)?;
    let om = omega(defm, h);
    let th = theta(defm);
    let bt = big_theta(defm, &ledger, triv, triv_t);
    let (m, m_residual) = m_numeric(&defm.atlas, &bt)?;
    if m_residual > 1e-6 {
        return Err(Error::Relation(format!(
            "δ̌Θ/(2πi)² is not an integer (residual {m_residual:e})"
        )));
    }
    let m_closed = m_closed_form(&defm.atlas, &ledger, &triv.n, &triv_t.n);
    let neg_m = m.iter().map(|(t, v)| (t.clone(), -v)).collect();
    let cocycle = DeligneCocycle3::new(
        scale_layer(&om, TWO_PI_I),
        scale_layer(&th, TWO_PI_I),
        scale_layer(&bt, -TWO_PI_I),
        neg_m,
    );
    Ok(Lagrangian {
        omega_form: om,
        theta: th,
        big_theta: bt,
        m,
        m_closed,
        m_residual,
        ledger,
        cocycle,
    })
}

/// Integer branch shifts ℓ → ℓ + 2πi k, ℓ̃ → ℓ̃ + 2πi k̃, λ → λ + 2πi p.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct BranchShift {
    pub k: BTreeMap<(usize, usize), i64>,
    pub kt: BTreeMap<(usize, usize), i64>,
    pub p: BTreeMap<usize, i64>,
}

impl BranchShift {
    /// Shifts drawn uniformly from [−range, range] on every pair and chart.
    pub fn random(atlas: &Atlas, rng: &mut impl rand::Rng, range: i64) -> BranchShift {
        let mut s = BranchShift::default();
        for t in atlas.tuples(2) {
            s.k.insert((t[0], t[1]), rng.gen_range(-range..=range));
            s.kt.insert((t[0], t[1]), rng.gen_range(-range..=range));
        }
        for i in 0..atlas.n_charts() {
            s.p.insert(i, rng.gen_range(-range..=range));
        }
        s
    }

    fn as_cochain(m: &BTreeMap<(usize, usize), i64>) -> BTreeMap<Tuple, i64> {
        m.iter().map(|((i, j), v)| (vec![*i, *j], *v)).collect()
    }

    /// b → b + k̃ − k + p_j − p_i, c → c + δ̌k, c̃ → c̃ + δ̌k̃.
    pub fn predicted_ledger(&self, atlas: &Atlas, old: &BranchLedger) -> BranchLedger {
        let dk = cech_delta_int(atlas, &BranchShift::as_cochain(&self.k), 1);
        let dkt = cech_delta_int(atlas, &BranchShift::as_cochain(&self.kt), 1);
        let g = |m: &BTreeMap<(usize, usize), i64>, i, j| *m.get(&(i, j)).unwrap_or(&0);
        let pi = |i| *self.p.get(&i).unwrap_or(&0);
        let mut out = old.clone();
        for t in atlas.tuples(2) {
            let (i, j) = (t[0], t[1]);
            *out.b.entry(t.clone()).or_insert(0) += g(&self.kt, i, j) - g(&self.k, i, j) + pi(j) - pi(i);
        }
        for (t, v) in dk {
            *out.c.entry(t).or_insert(0) += v;
        }
        for (t, v) in dkt {
            *out.ct.entry(t).or_insert(0) += v;
        }
        for m in [&mut out.b, &mut out.c, &mut out.ct] {
            m.retain(|_, v| *v != 0);
        }
        out
    }

    /// n_ijkl → n + k_ij c_jkl + c_ijk k_kl + (δ̌k)_ijk k_kl.
    pub fn predicted_n(
        atlas: &Atlas,
        k: &BTreeMap<(usize, usize), i64>,
        c: &BTreeMap<Tuple, i64>,
        n: &BTreeMap<Tuple, i64>,
    ) -> BTreeMap<Tuple, i64> {
        let dk = cech_delta_int(atlas, &BranchShift::as_cochain(k), 1);
        let g = |i, j| *k.get(&(i, j)).unwrap_or(&0);
        let gc = |m: &BTreeMap<Tuple, i64>, t: Vec<usize>| *m.get(&t).unwrap_or(&0);
        let mut out = BTreeMap::new();
        for q in atlas.tuples(4) {
            let (i, j, kk, l) = (q[0], q[1], q[2], q[3]);
            let v = gc(n, q.clone())
                + g(i, j) * gc(c, vec![j, kk, l])
                + gc(c, vec![i, j, kk]) * g(kk, l)
                + gc(&dk, vec![i, j, kk]) * g(kk, l);
            if v != 0 {
                out.insert(q.clone(), v);
            }
        }
        out
    }

    /// r_ijk = (k̃+k)_ij b_jk + (c̃+c+δ̌k+δ̌k̃)_ijk p_k + k_ij k̃_jk − c̃_ijk k_ik
    /// − (δ̌k̃)_ijk k_ik + k̃_jk c_ijk + k̃_ij c_ijk, in units of (2πi)².
    pub fn r(&self, atlas: &Atlas, old: &BranchLedger) -> BTreeMap<Tuple, i64> {
        let dk = cech_delta_int(atlas, &BranchShift::as_cochain(&self.k), 1);
        let dkt = cech_delta_int(atlas, &BranchShift::as_cochain(&self.kt), 1);
        let g = |m: &BTreeMap<(usize, usize), i64>, i, j| *m.get(&(i, j)).unwrap_or(&0);
        let gc = |m: &BTreeMap<Tuple, i64>, t: Vec<usize>| *m.get(&t).unwrap_or(&0);
        let mut out = BTreeMap::new();
        for t in atlas.tuples(3) {
            let (i, j, k) = (t[0], t[1], t[2]);
            let tt = t.clone();
            let c = gc(&old.c, tt.clone());
            let ct = gc(&old.ct, tt.clone());
            let (dkv, dktv) = (gc(&dk, tt.clone()), gc(&dkt, tt));
            let pk = *self.p.get(&k).unwrap_or(&0);
            let v = (g(&self.kt, i, j) + g(&self.k, i, j)) * gc(&old.b, vec![j, k])
                + (ct + c + dkv + dktv) * pk
                + g(&self.k, i, j) * g(&self.kt, j, k)
                - ct * g(&self.k, i, k)
                - dktv * g(&self.k, i, k)
                + g(&self.kt, j, k) * c
                + g(&self.kt, i, j) * c;
            if v != 0 {
                out.insert(t.clone(), v);
            }
        }
        out
    }
}

/// Data of a log-branch shift: the shifted inputs and the coboundary
/// λ = (0, ψ, r) relating the two cocycles.
pub struct ShiftedSetup {
    pub defm: Arc<DeformationData>,
    pub triv: Arc<TameTrivialization>,
    pub triv_t: Arc<TameTrivialization>,
    /// ψ_ij = 2πi(−(k̃+k)_ij λ_j + k̃_ij ℓ_ij) on the old branches.
    pub psi: FormLayer,
    pub r: BTreeMap<Tuple, i64>,
    /// Largest rounding residual when re-deriving n and ñ.
    pub n_residual: f64,
}

impl ShiftedSetup {
    /// λ = 2πi(0, ψ, r) as a ℤ(3) Deligne cochain of degree 2.
    pub fn coboundary(&self) -> DeligneCochain {
        DeligneCochain {
            p: 3,
            n: 2,
            int: self.r.clone(),
            forms: vec![scale_layer(&self.psi, TWO_PI_I), FormLayer::new(), FormLayer::new()],
        }
    }
}

/// Applies the branch shifts to the atlases, λ and both trivializations.
pub fn shift_log_branches(
    defm: &Arc<DeformationData>,
    ledger: &BranchLedger,
    triv: &TameTrivialization,
    triv_t: &TameTrivialization,
    shift: &BranchShift,
) -> Result<ShiftedSetup, Error> {
    let atlas = Arc::new(defm.atlas.with_log_shifts(&shift.k));
    let tilde = Arc::new(defm.tilde.with_log_shifts(&shift.kt));
    let nd = Arc::new(defm.with_atlases(atlas.clone(), tilde.clone()).with_lambda_shifts(&shift.p));
    let (tr, r1) = triv.wrapped(&shift.k, &atlas)?;
    let (trt, r2) = triv_t.wrapped(&shift.kt, &tilde)?;
    let mut psi = FormLayer::new();
    for t in atlas.tuples(2) {
        let (i, j) = (t[0], t[1]);
        let k = *shift.k.get(&(i, j)).unwrap_or(&0) as f64;
        let kt = *shift.kt.get(&(i, j)).unwrap_or(&0) as f64;
        let d = defm.clone();
        let comp: Comp = Arc::new(move |z: &Jet| {
            let (n, z0) = (z.order(), z.value());
            let lam = d.lambda(j, z0, n);
            let l = d.atlas.log_deriv(i, j, &Jet::var(z0, n));
            FormValue::F0(lam.scale(C64::new(-(kt + k), 0.0) * TWO_PI_I) + l.scale(TWO_PI_I * kt))
        });
        psi.insert(t.clone(), comp);
    }
    Ok(ShiftedSetup {
        defm: nd,
        triv: Arc::new(tr),
        triv_t: Arc::new(trt),
        psi,
        r: shift.r(&defm.atlas, ledger),
        n_residual: r1.max(r2),
    })
}

/// A ℤ(2) → ℂ cocycle (β, p) with β = s·2πi c + δ̌γ + (2πi)² e, so that
/// δ̌β = (2πi)² δ̌e; s, γ and e are random.
pub fn random_torsor_shift(
    atlas: &Atlas,
    rng: &mut impl rand::Rng,
) -> Result<(BTreeMap<Tuple, C64>, BTreeMap<Tuple, i64>), Error> {
    let c = atlas.chern_cocycle()?;
    let s = C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    let gamma: BTreeMap<Tuple, C64> = atlas
        .tuples(2)
        .map(|t| (t.clone(), C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    let e: BTreeMap<Tuple, i64> = atlas.tuples(3).map(|t| (t.clone(), rng.gen_range(-1..=1))).collect();
    let zero = C64::new(0.0, 0.0);
    let mut beta = BTreeMap::new();
    for t in atlas.tuples(3) {
        let mut v = s * TWO_PI_I * *c.get(t).unwrap_or(&0) as f64 + two_pi_i_pow(2) * e[t] as f64;
        for k in 0..3 {
            let g = *gamma.get(&Nerve::face(t, k)).unwrap_or(&zero);
            v += if k % 2 == 0 { g } else { -g };
        }
        beta.insert(t.clone(), v);
    }
    Ok((beta, cech_delta_int(atlas, &e, 2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cech_deligne::{distance, tame_symbol, total_d, verify_cocycle, DeligneCochain, LineBundleCocycle};
    use crate::scenario::sphere::build_sphere_caps;

    fn sphere() -> Arc<Atlas> {
        Arc::new(build_sphere_caps().unwrap().atlas)
    }

    fn zero_h() -> ChartFn {
        Arc::new(|_, z: &Jet| Jet::real(0.0, z.order()))
    }

    #[test]
    fn dilogarithm_trivializes_tame_symbol_on_sphere() {
        let a = sphere();
        let triv = Arc::new(TameTrivialization::dilogarithm(a.clone(), 1e-9).unwrap());
        for r in triv.verify(&a, 1e-9).unwrap() {
            assert!(r.pass, "{r:?}");
        }
        let ell: FormLayer = a
            .tuples(2)
            .map(|t| {
                let (i, j) = (t[0], t[1]);
                let aa = a.clone();
                (t.clone(), Arc::new(move |z: &Jet| FormValue::F0(aa.log_deriv(i, j, z))) as Comp)
            })
            .collect();
        let lb = LineBundleCocycle {
            f: ell,
            m: a.chern_cocycle().unwrap(),
        };
        let sym = tame_symbol(&a, &lb, &lb, 1e-9).unwrap();
        let dt = total_d(&a, &triv.as_cochain()).unwrap();
        let (f, i) = distance(&a, &sym, &dt, 2);
        assert!(f < 1e-9 && i == 0, "forms {f} ints {i}");
    }

    #[test]
    fn identity_lagrangian_is_a_cocycle_on_sphere() {
        let a = sphere();
        let defm = Arc::new(DeformationData::identity(a.clone()));
        let triv = Arc::new(TameTrivialization::dilogarithm(a.clone(), 1e-9).unwrap());
        let lag = build_lagrangian_cocycle(&defm, &zero_h(), &triv, &triv).unwrap();
        for r in lag.ledger.verify(&a) {
            assert!(r.pass, "{r:?}");
        }
        for r in verify_cocycle(&a, &lag.cocycle, 1e-8).unwrap() {
            assert!(r.pass, "{r:?}");
        }
        assert_eq!(lag.m, lag.m_closed);
    }

    fn lagrangian_for(defm: DeformationData, h: &ChartFn) -> (Arc<Atlas>, Lagrangian) {
        let defm = Arc::new(defm);
        let triv = Arc::new(TameTrivialization::dilogarithm(defm.atlas.clone(), 1e-9).unwrap());
        let triv_t = Arc::new(TameTrivialization::dilogarithm(defm.tilde.clone(), 1e-9).unwrap());
        let lag = build_lagrangian_cocycle(&defm, h, &triv, &triv_t).unwrap();
        (defm.atlas.clone(), lag)
    }

    #[test]
    fn torus_action_matches_closed_form() {
        use crate::chains::FundamentalCycle;
        use crate::fields::QuadratureRule;
        use crate::pairing::action;
        use crate::scenario::deform::{constant_h, TorusFamily};
        use crate::scenario::star::torus_development;
        for mu in [0.1, 0.2] {
            let mu = C64::new(mu, 0.0);
            let fam = TorusFamily::new(&torus_development(), mu).unwrap();
            for h in [C64::new(1.0, 0.0), C64::new(2.0, 1.0)] {
                let (a, lag) = lagrangian_for(fam.deformation(0.0, &Default::default()), &constant_h(h));
                for r in verify_cocycle(&a, &lag.cocycle, 1e-8).unwrap() {
                    assert!(r.pass, "{r:?}");
                }
                let sigma = FundamentalCycle::build(&a).unwrap().total();
                let s = action(&a, &lag.cocycle, &sigma, &QuadratureRule::default()).unwrap();
                let want = mu * h * (8.0 * std::f64::consts::PI);
                assert!((s.s_raw - want).norm() <= 1e-8 * want.norm(), "{} vs {want}", s.s_raw);
            }
        }
    }

    #[test]
    fn perturbed_torus_lagrangian_is_a_cocycle() {
        use crate::scenario::deform::{constant_h, TorusFamily, TrigPoly};
        use crate::scenario::star::torus_development;
        let fam = TorusFamily::new(&torus_development(), C64::new(0.15, -0.05)).unwrap();
        let w = TrigPoly {
            terms: vec![(1, 1, C64::new(0.02, 0.01)), (-1, 0, C64::new(0.0, 0.02))],
        };
        let (a, lag) = lagrangian_for(fam.deformation(0.5, &w), &constant_h(C64::new(1.0, -0.5)));
        for r in verify_cocycle(&a, &lag.cocycle, 1e-8).unwrap() {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn sphere_flow_lagrangian_is_a_cocycle() {
        use crate::scenario::deform::{sphere_h, SphereFlow, DEFAULT_FLOW};
        let caps = build_sphere_caps().unwrap();
        let h = sphere_h(&caps);
        let flow = SphereFlow::new(caps, DEFAULT_FLOW);
        let (a, lag) = lagrangian_for(flow.deformation(0.2), &h);
        for r in lag.ledger.verify(&a) {
            assert!(r.pass, "{r:?}");
        }
        for r in verify_cocycle(&a, &lag.cocycle, 1e-8).unwrap() {
            assert!(r.pass, "{r:?}");
        }
        assert_eq!(lag.m, lag.m_closed);
    }

    #[test]
    fn genus_two_identity_lagrangian_is_a_cocycle() {
        use crate::scenario::star::{build_star_cover, octagon_development};
        let a = Arc::new(build_star_cover(&octagon_development()).unwrap().atlas);
        let (a, lag) = lagrangian_for(DeformationData::identity(a), &zero_h());
        for r in verify_cocycle(&a, &lag.cocycle, 1e-8).unwrap() {
            assert!(r.pass, "{r:?}");
        }
        assert_eq!(lag.m, lag.m_closed);
    }

    fn sphere_flow_setup() -> (Arc<DeformationData>, ChartFn, Arc<TameTrivialization>) {
        use crate::scenario::deform::{sphere_h, SphereFlow, DEFAULT_FLOW};
        let caps = build_sphere_caps().unwrap();
        let h = sphere_h(&caps);
        let flow = SphereFlow::new(caps, DEFAULT_FLOW);
        let defm = Arc::new(flow.deformation(0.2));
        let triv = Arc::new(TameTrivialization::dilogarithm(defm.atlas.clone(), 1e-9).unwrap());
        (defm, h, triv)
    }

    fn a_value(defm: &DeformationData, lag: &Lagrangian) -> C64 {
        use crate::chains::FundamentalCycle;
        use crate::fields::QuadratureRule;
        let sigma = FundamentalCycle::build(&defm.atlas).unwrap().total();
        crate::pairing::action(&defm.atlas, &lag.cocycle, &sigma, &QuadratureRule::default())
            .unwrap()
            .a
    }

    #[test]
    fn zero_branch_shift_is_the_identity() {
        let (defm, h, triv) = sphere_flow_setup();
        let lag = build_lagrangian_cocycle(&defm, &h, &triv, &triv).unwrap();
        let st = shift_log_branches(&defm, &lag.ledger, &triv, &triv, &BranchShift::default()).unwrap();
        assert!(st.r.is_empty());
        let (f, i) = distance(&defm.atlas, &total_d(&defm.atlas, &st.coboundary()).unwrap(), &DeligneCochain::zero(3, 3), 1);
        assert!(f < 1e-14 && i == 0);
    }

    #[test]
    fn log_branch_shifts_change_omega_by_a_coboundary() {
        use rand::SeedableRng;
        let (defm, h, triv) = sphere_flow_setup();
        let a = defm.atlas.clone();
        let lag = build_lagrangian_cocycle(&defm, &h, &triv, &triv).unwrap();
        let a0 = a_value(&defm, &lag);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let sh = BranchShift::random(&a, &mut rng, 2);
            let st = shift_log_branches(&defm, &lag.ledger, &triv, &triv, &sh).unwrap();
            assert!(st.n_residual < 1e-9);
            let lag2 = build_lagrangian_cocycle(&st.defm, &h, &st.triv, &st.triv_t).unwrap();
            let nz = |m: &BTreeMap<Tuple, i64>| -> BTreeMap<Tuple, i64> {
                m.iter().filter(|(_, v)| **v != 0).map(|(k, v)| (k.clone(), *v)).collect()
            };
            let pred = sh.predicted_ledger(&a, &lag.ledger);
            assert_eq!(nz(&pred.b), nz(&lag2.ledger.b));
            assert_eq!(nz(&pred.c), nz(&lag2.ledger.c));
            assert_eq!(nz(&pred.ct), nz(&lag2.ledger.ct));
            assert_eq!(BranchShift::predicted_n(&a, &sh.k, &lag.ledger.c, &triv.n), st.triv.n);
            let shifted = lag.cocycle.0.add(&total_d(&a, &st.coboundary()).unwrap());
            let (f, i) = distance(&a, &lag2.cocycle.0, &shifted, 1);
            assert!(f < 1e-9 && i == 0, "forms {f:e} ints {i}");
            let a1 = a_value(&st.defm, &lag2);
            assert!((a1 / a0 - 1.0).norm() < 1e-10, "{a1} vs {a0}");
        }
    }

    #[test]
    fn torsor_shift_factor_is_independent_of_f() {
        use rand::SeedableRng;
        let (flow, h, triv) = sphere_flow_setup();
        let id = Arc::new(DeformationData::identity(flow.atlas.clone()));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (beta, p) = random_torsor_shift(&flow.atlas, &mut rng).unwrap();
        let shifted = Arc::new(triv.shifted(&beta, &p).unwrap());
        for r in shifted.verify(&flow.atlas, 1e-9).unwrap() {
            assert!(r.pass, "{r:?}");
        }
        let ratio = |d: &Arc<DeformationData>| {
            let l0 = build_lagrangian_cocycle(d, &h, &triv, &triv).unwrap();
            let l1 = build_lagrangian_cocycle(d, &h, &shifted, &triv).unwrap();
            a_value(d, &l1) / a_value(d, &l0)
        };
        let (r_id, r_flow) = (ratio(&id), ratio(&flow));
        assert!((r_id - r_flow).norm() <= 1e-8 * r_id.norm(), "{r_id} vs {r_flow}");
        assert!((r_id - 1.0).norm() > 1e-3, "shift acts trivially: {r_id}");
        let both = build_lagrangian_cocycle(&id, &h, &shifted, &shifted).unwrap();
        let plain = build_lagrangian_cocycle(&id, &h, &triv, &triv).unwrap();
        let q = a_value(&id, &both) / a_value(&id, &plain);
        assert!((q - 1.0).norm() < 1e-10, "{q}");
    }
}
