//! Čech cochains with values in the smooth Deligne complex ℤ(p)_D,
//! the total differential, cup products, tame symbols and the
//! exponential map.

use crate::atlas::{Atlas, Nerve, Tuple};
use crate::fields::{d, FormValue};
use crate::jet::Jet;
use crate::{two_pi_i_pow, Error, MaxTracker, Report, TWO_PI_I};
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::sync::Arc;

/// A form-valued component, evaluated in the coordinate of the last
/// index of its tuple.
pub type Comp = Arc<dyn Fn(&Jet) -> FormValue + Send + Sync>;

pub type FormLayer = BTreeMap<Tuple, Comp>;

/// Total-degree-n cochain of ℤ(p)_D. Layer 0 holds integers k meaning
/// (2πi)^p·k at Čech degree n; layer r ≥ 1 holds forms of degree r−1
/// at Čech degree n−r.
#[derive(Clone)]
pub struct DeligneCochain {
    pub p: usize,
    pub n: usize,
    pub int: BTreeMap<Tuple, i64>,
    /// forms[r−1] is layer r.
    pub forms: Vec<FormLayer>,
}

impl std::fmt::Debug for DeligneCochain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DeligneCochain")
            .field("p", &self.p)
            .field("n", &self.n)
            .field("int", &self.int)
            .field(
                "form_tuples",
                &self.forms.iter().map(|l| l.len()).collect::<Vec<_>>(),
            )
            .finish()
    }
}

pub fn const_fn(v: C64) -> Comp {
    Arc::new(move |z: &Jet| FormValue::F0(Jet::constant(v, z.order())))
}

impl DeligneCochain {
    pub fn zero(p: usize, n: usize) -> DeligneCochain {
        DeligneCochain {
            p,
            n,
            int: BTreeMap::new(),
            forms: vec![BTreeMap::new(); p],
        }
    }

    /// Čech degree of layer r (None if negative).
    pub fn cech_degree(&self, r: usize) -> Option<usize> {
        self.n.checked_sub(r)
    }

    pub fn layer(&self, r: usize) -> &FormLayer {
        &self.forms[r - 1]
    }

    pub fn add(&self, o: &DeligneCochain) -> DeligneCochain {
        self.add_scaled(o, C64::new(1.0, 0.0), 1)
    }

    /// self + s·o on form layers and self + k·o on the integer layer.
    pub fn add_scaled(&self, o: &DeligneCochain, s: C64, k: i64) -> DeligneCochain {
        assert_eq!((self.p, self.n), (o.p, o.n), "cochain shapes differ");
        let mut out = self.clone();
        for (t, v) in &o.int {
            *out.int.entry(t.clone()).or_insert(0) += k * v;
        }
        out.int.retain(|_, v| *v != 0);
        for (r, layer) in o.forms.iter().enumerate() {
            for (t, c) in layer {
                let c = c.clone();
                let new: Comp = match out.forms[r].get(t) {
                    Some(a) => {
                        let a = a.clone();
                        Arc::new(move |z: &Jet| a(z).add(&c(z).scale(s)))
                    }
                    None => Arc::new(move |z: &Jet| c(z).scale(s)),
                };
                out.forms[r].insert(t.clone(), new);
            }
        }
        out
    }
}

/// Čech coboundary of a form layer of Čech degree q, producing all
/// declared (q+2)-tuples.
pub fn cech_delta_forms(atlas: &Atlas, layer: &FormLayer, q: usize) -> Result<FormLayer, Error> {
    let mut out = FormLayer::new();
    for t in atlas.tuples(q + 2) {
        let mut faces: Vec<(f64, Comp)> = Vec::new();
        for k in 0..=q {
            let f = Nerve::face(t, k);
            if let Some(c) = layer.get(&f) {
                faces.push((if k % 2 == 0 { 1.0 } else { -1.0 }, c.clone()));
            }
        }
        let front: Tuple = t[..=q].to_vec();
        let last = layer.get(&front).cloned();
        let tr = atlas.transition(t[q], t[q + 1])?;
        let sign_last = if (q + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
        if faces.is_empty() && last.is_none() {
            continue;
        }
        let comp: Comp = Arc::new(move |z: &Jet| {
            let mut acc: Option<FormValue> = None;
            for (s, c) in &faces {
                let v = c(z).scale(C64::new(*s, 0.0));
                acc = Some(match acc {
                    None => v,
                    Some(a) => a.add(&v),
                });
            }
            if let Some(c) = &last {
                let v = tr.pull_back(c, z).scale(C64::new(sign_last, 0.0));
                acc = Some(match acc {
                    None => v,
                    Some(a) => a.add(&v),
                });
            }
            acc.unwrap()
        });
        out.insert(t.clone(), comp);
    }
    Ok(out)
}

/// Čech coboundary of an integer cochain of degree q.
pub fn cech_delta_int(atlas: &Atlas, c: &BTreeMap<Tuple, i64>, q: usize) -> BTreeMap<Tuple, i64> {
    let mut out = BTreeMap::new();
    for t in atlas.tuples(q + 2) {
        let mut s = 0i64;
        for k in 0..=q + 1 {
            let f = Nerve::face(t, k);
            if let Some(v) = c.get(&f) {
                s += if k % 2 == 0 { *v } else { -*v };
            }
        }
        if s != 0 {
            out.insert(t.clone(), s);
        }
    }
    out
}

/// Total differential D = d + (−1)^r δ̌ on layer r, with ι on the
/// integer layer. d on the top layer is zero (forms of degree p−1 ≥ 2
/// are top-dimensional on a surface).
pub fn total_d(atlas: &Atlas, phi: &DeligneCochain) -> Result<DeligneCochain, Error> {
    let p = phi.p;
    let n = phi.n + 1;
    let mut out = DeligneCochain::zero(p, n);
    // integer layer: δ̌ of the integer layer
    out.int = cech_delta_int(atlas, &phi.int, phi.n);
    for r in 1..=p {
        let Some(q) = n.checked_sub(r) else { continue };
        let mut layer = FormLayer::new();
        // d (or ι) from layer r−1 at Čech degree q
        if r == 1 {
            let scale = two_pi_i_pow(p as i32);
            for (t, k) in &phi.int {
                if t.len() == q + 1 {
                    layer.insert(t.clone(), const_fn(scale * (*k as f64)));
                }
            }
        } else {
            for (t, c) in phi.layer(r - 1) {
                if t.len() == q + 1 {
                    let c = c.clone();
                    layer.insert(t.clone(), Arc::new(move |z: &Jet| d(&c(z))) as Comp);
                }
            }
        }
        // (−1)^r δ̌ from layer r at Čech degree q−1
        if q >= 1 {
            let src = phi.layer(r);
            if !src.is_empty() {
                let dl = cech_delta_forms(atlas, src, q - 1)?;
                let s = if r % 2 == 0 { 1.0 } else { -1.0 };
                for (t, c) in dl {
                    let new: Comp = match layer.get(&t) {
                        Some(a) => {
                            let a = a.clone();
                            Arc::new(move |z: &Jet| a(z).add(&c(z).scale(C64::new(s, 0.0))))
                        }
                        None => Arc::new(move |z: &Jet| c(z).scale(C64::new(s, 0.0))),
                    };
                    layer.insert(t, new);
                }
            }
        }
        out.forms[r - 1] = layer;
    }
    Ok(out)
}

/// Max residual of every form component at the region samples, jets of
/// the given order; integer layer residual is the max |k|.
pub fn residuals(
    atlas: &Atlas,
    phi: &DeligneCochain,
    order: usize,
) -> (Vec<(usize, MaxTracker)>, i64) {
    let mut out = Vec::new();
    for r in 1..=phi.p {
        let mut m = MaxTracker::default();
        for (t, c) in phi.layer(r) {
            let last = *t.last().unwrap();
            for z in atlas.samples_in(t, last) {
                let v = c(&Jet::var(z, order)).norm0();
                m.push(v, || format!("layer {r} tuple {t:?} at {z}"));
            }
        }
        out.push((r, m));
    }
    let imax = phi.int.values().map(|v| v.abs()).max().unwrap_or(0);
    (out, imax)
}

/// A degree-3 cocycle of ℤ(3)_D: Ω = (ω_i, a_ij, f_ijk, m_ijkl).
#[derive(Clone, Debug)]
pub struct DeligneCocycle3(pub DeligneCochain);

impl DeligneCocycle3 {
    pub fn new(
        omega: FormLayer,
        a: FormLayer,
        f: FormLayer,
        m: BTreeMap<Tuple, i64>,
    ) -> DeligneCocycle3 {
        DeligneCocycle3(DeligneCochain {
            p: 3,
            n: 3,
            int: m,
            forms: vec![f, a, omega],
        })
    }
    pub fn omega(&self) -> &FormLayer {
        &self.0.forms[2]
    }
    pub fn a(&self) -> &FormLayer {
        &self.0.forms[1]
    }
    pub fn f(&self) -> &FormLayer {
        &self.0.forms[0]
    }
    pub fn m(&self) -> &BTreeMap<Tuple, i64> {
        &self.0.int
    }
}

/// Checks the four relations of a degree-3 cocycle through DΩ = 0.
pub fn verify_cocycle(atlas: &Atlas, omega: &DeligneCocycle3, tol: f64) -> Result<Vec<Report>, Error> {
    let dd = total_d(atlas, &omega.0)?;
    let (forms, imax) = residuals(atlas, &dd, 2);
    let names = [
        "δ̌f = m (functions on quadruples)",
        "δ̌a = −df (1-forms on triples)",
        "δ̌ω = da (2-forms on pairs)",
    ];
    let mut out: Vec<Report> = forms
        .into_iter()
        .map(|(r, m)| m.report(names[r - 1], tol))
        .collect();
    out.push(Report::new(
        "δ̌m = 0 (exact integers)",
        imax as f64,
        0.0,
        format!("max |δ̌m| = {imax}"),
    ));
    out.reverse();
    Ok(out)
}

/// Deligne cup product combined with the Čech front/back-face product:
/// (a∪b)_{i0..i_{m+n}} = (−1)^{m·s} a_{i0..im} ∪ b_{im..i_{m+n}}, with
/// x∪y = x·y for Deligne degree 0 of x, x∧dy for y of top degree, and
/// 0 otherwise. s is the Deligne degree of y.
pub fn cup(atlas: &Atlas, a: &DeligneCochain, b: &DeligneCochain) -> Result<DeligneCochain, Error> {
    let p = a.p + b.p;
    let n = a.n + b.n;
    let mut out = DeligneCochain::zero(p, n);
    let tuples: Vec<Tuple> = atlas
        .regions
        .keys()
        .filter(|t| t.len() <= n + 1)
        .cloned()
        .collect();
    enum Part {
        Int(i64),
        Form(Comp),
    }
    let part = |c: &DeligneCochain, r: usize, t: &[usize]| -> Option<Part> {
        if r == 0 {
            c.int.get(t).map(|v| Part::Int(*v))
        } else {
            c.layer(r).get(t).map(|f| Part::Form(f.clone()))
        }
    };
    for r in 0..=a.p {
        let Some(m) = a.n.checked_sub(r) else { continue };
        for s in 0..=b.p {
            let Some(nn) = b.n.checked_sub(s) else { continue };
            // target Deligne degree
            let target = if r == 0 {
                s
            } else if s == b.p {
                r + s
            } else {
                continue;
            };
            if target > p {
                continue;
            }
            let sign = if (m * s) % 2 == 0 { 1.0 } else { -1.0 };
            for t in tuples.iter().filter(|t| t.len() == m + nn + 1) {
                let front = &t[..=m];
                let back = &t[m..];
                let (Some(x), Some(y)) = (part(a, r, front), part(b, s, back)) else {
                    continue;
                };
                let tr = atlas.transition(t[m], *t.last().unwrap())?;
                match (x, y) {
                    (Part::Int(x), Part::Int(y)) => {
                        *out.int.entry(t.clone()).or_insert(0) += (sign as i64) * x * y;
                    }
                    (Part::Int(x), Part::Form(g)) => {
                        let sc = two_pi_i_pow(a.p as i32) * (x as f64) * sign;
                        let comp: Comp = Arc::new(move |z: &Jet| g(z).scale(sc));
                        add_comp(&mut out.forms[target - 1], t.clone(), comp);
                    }
                    (Part::Form(_), Part::Int(_)) => {
                        return Err(Error::Relation(
                            "cup with an integer second factor of positive degree".into(),
                        ));
                    }
                    (Part::Form(f), Part::Form(g)) => {
                        let comp: Comp = Arc::new(move |z: &Jet| {
                            let fx = tr.pull_back(&f, z);
                            let dy = d(&g(z));
                            wedge(&fx, &dy).scale(C64::new(sign, 0.0))
                        });
                        add_comp(&mut out.forms[target - 1], t.clone(), comp);
                    }
                }
            }
        }
    }
    out.int.retain(|_, v| *v != 0);
    Ok(out)
}

fn add_comp(layer: &mut FormLayer, t: Tuple, c: Comp) {
    let new: Comp = match layer.get(&t) {
        Some(a) => {
            let a = a.clone();
            Arc::new(move |z: &Jet| a(z).add(&c(z)))
        }
        None => c,
    };
    layer.insert(t, new);
}

/// Wedge product of forms (jets truncated to the smaller order).
pub fn wedge(a: &FormValue, b: &FormValue) -> FormValue {
    match (a, b) {
        (FormValue::F0(f), other) | (other, FormValue::F0(f)) => other.mul_fn(f),
        (FormValue::F1(a1, a2), FormValue::F1(b1, b2)) => FormValue::F2(*a1 * *b2 - *a2 * *b1),
        _ => FormValue::F2(Jet::real(0.0, a.order().min(b.order()))),
    }
}

/// A smooth line bundle cocycle (f_ij, m_ijk) with δ̌f = 2πi·m.
#[derive(Clone)]
pub struct LineBundleCocycle {
    pub f: FormLayer,
    pub m: BTreeMap<Tuple, i64>,
}

impl LineBundleCocycle {
    pub fn as_cochain(&self) -> DeligneCochain {
        DeligneCochain {
            p: 1,
            n: 2,
            int: self.m.clone(),
            forms: vec![self.f.clone()],
        }
    }

    /// Max |δ̌f − 2πi m| over triple samples.
    pub fn relation_residual(&self, atlas: &Atlas) -> Result<f64, Error> {
        let df = cech_delta_forms(atlas, &self.f, 1)?;
        let mut worst = 0.0f64;
        for t in atlas.tuples(3) {
            let last = t[2];
            let m = *self.m.get(t).unwrap_or(&0) as f64;
            for z in atlas.samples_in(t, last) {
                let v = df
                    .get(t)
                    .map(|c| c(&Jet::var(z, 1)).as_f0().value())
                    .unwrap_or_default();
                worst = worst.max((v - TWO_PI_I * m).norm());
            }
        }
        Ok(worst)
    }
}

/// The tame symbol (L, L′] as a degree-4 cocycle of ℤ(2)_D:
/// (−f_ij df′_jk, 2πi m_ijk f′_kl, m_ijk m′_klp).
pub fn tame_symbol(
    atlas: &Atlas,
    l: &LineBundleCocycle,
    lp: &LineBundleCocycle,
    tol: f64,
) -> Result<DeligneCochain, Error> {
    for (name, x) in [("L", l), ("L′", lp)] {
        let r = x.relation_residual(atlas)?;
        if r > tol {
            return Err(Error::Relation(format!("{name}: |δ̌f − m| = {r:e}")));
        }
    }
    let mut out = DeligneCochain::zero(2, 4);
    for t in atlas.tuples(3) {
        let (i, j, k) = (t[0], t[1], t[2]);
        let (Some(f), Some(g)) = (l.f.get(&vec![i, j]).cloned(), lp.f.get(&vec![j, k]).cloned())
        else {
            continue;
        };
        let tr = atlas.transition(j, k)?;
        let comp: Comp = Arc::new(move |z: &Jet| {
            let fx = tr.pull_back(&f, z).as_f0();
            let (a, b) = d(&g(z)).as_f1();
            let fx = fx.truncate(a.order());
            FormValue::F1(-(fx * a), -(fx * b))
        });
        out.forms[1].insert(t.clone(), comp);
    }
    for t in atlas.tuples(4) {
        let m = *l.m.get(&t[..3]).unwrap_or(&0);
        if m == 0 {
            continue;
        }
        if let Some(g) = lp.f.get(&t[2..]).cloned() {
            let sc = TWO_PI_I * m as f64;
            out.forms[0].insert(t.clone(), Arc::new(move |z: &Jet| g(z).scale(sc)));
        }
    }
    for t in atlas.tuples(5) {
        let v = l.m.get(&t[..3]).unwrap_or(&0) * lp.m.get(&t[2..]).unwrap_or(&0);
        if v != 0 {
            out.int.insert(t.clone(), v);
        }
    }
    Ok(out)
}

/// Multiplicative cocycle Ψ = (ω/(2πi)², −a/(2πi)², exp(f/(2πi)²)).
#[derive(Clone)]
pub struct MultiplicativeCocycle {
    pub omega: FormLayer,
    pub a: FormLayer,
    pub g: FormLayer,
}

pub fn exp_map(omega: &DeligneCocycle3) -> MultiplicativeCocycle {
    let s = two_pi_i_pow(2).inv();
    let scale = |l: &FormLayer, c: C64| -> FormLayer {
        l.iter()
            .map(|(t, f)| {
                let f = f.clone();
                (t.clone(), Arc::new(move |z: &Jet| f(z).scale(c)) as Comp)
            })
            .collect()
    };
    let g = omega
        .f()
        .iter()
        .map(|(t, f)| {
            let f = f.clone();
            (
                t.clone(),
                Arc::new(move |z: &Jet| FormValue::F0((f(z).as_f0() * s).exp())) as Comp,
            )
        })
        .collect();
    MultiplicativeCocycle {
        omega: scale(omega.omega(), s),
        a: scale(omega.a(), -s),
        g,
    }
}

/// Random smooth cochain with polynomial components of total degree ≤ 2
/// in (Z, Z̄) and integer entries in [−3, 3]; used for algebraic checks.
pub fn random_cochain(atlas: &Atlas, p: usize, n: usize, rng: &mut impl rand::Rng) -> DeligneCochain {
    let mut out = DeligneCochain::zero(p, n);
    fn poly(rng: &mut impl rand::Rng) -> [C64; 6] {
        std::array::from_fn(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }
    let eval = |c: &[C64; 6], z: &Jet| -> Jet {
        let zb = z.conj();
        let one = Jet::constant(C64::new(1.0, 0.0), z.order());
        one * c[0] + *z * c[1] + zb * c[2] + (*z * *z) * c[3] + (*z * zb) * c[4] + (zb * zb) * c[5]
    };
    for t in atlas.tuples(n + 1) {
        out.int.insert(t.clone(), rng.gen_range(-3..=3));
    }
    for r in 1..=p {
        let Some(q) = n.checked_sub(r) else { continue };
        let deg = r - 1;
        if deg > 2 {
            continue;
        }
        for t in atlas.tuples(q + 1) {
            let a = poly(rng);
            let b = poly(rng);
            let comp: Comp = Arc::new(move |z: &Jet| match deg {
                0 => FormValue::F0(eval(&a, z)),
                1 => FormValue::F1(eval(&a, z), eval(&b, z)),
                _ => FormValue::F2(eval(&a, z)),
            });
            out.forms[r - 1].insert(t.clone(), comp);
        }
    }
    out.int.retain(|_, v| *v != 0);
    out
}

/// Max residual of the difference of two cochains of equal shape.
pub fn distance(atlas: &Atlas, a: &DeligneCochain, b: &DeligneCochain, order: usize) -> (f64, i64) {
    let diff = a.add_scaled(b, C64::new(-1.0, 0.0), -1);
    let (forms, imax) = residuals(atlas, &diff, order);
    (forms.iter().map(|(_, m)| m.value).fold(0.0, f64::max), imax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::sphere::build_sphere_caps;

    #[test]
    fn constant_zero_cochain_has_zero_coboundary() {
        let s = build_sphere_caps().unwrap();
        let a = &s.atlas;
        let layer: FormLayer = (0..a.n_charts())
            .map(|i| (vec![i], const_fn(C64::new(1.0, 0.0))))
            .collect();
        let dl = cech_delta_forms(a, &layer, 0).unwrap();
        for (t, c) in dl {
            let z = a.regions[&t].seed;
            assert!(c(&Jet::var(z, 1)).norm0() < 1e-14);
        }
    }

    #[test]
    fn log_derivative_coboundary_is_chern_cocycle() {
        let s = build_sphere_caps().unwrap();
        let a = Arc::new(s.atlas);
        let mut layer = FormLayer::new();
        for t in a.tuples(2) {
            let (i, j) = (t[0], t[1]);
            let aa = a.clone();
            layer.insert(
                t.clone(),
                Arc::new(move |z: &Jet| FormValue::F0(aa.log_deriv(i, j, z))) as Comp,
            );
        }
        let c = a.chern_cocycle().unwrap();
        let dl = cech_delta_forms(&a, &layer, 1).unwrap();
        for (t, f) in dl {
            let z = a.regions[&t].seed;
            let v = f(&Jet::var(z, 1)).as_f0().value();
            assert!((v - TWO_PI_I * c[&t] as f64).norm() < 1e-10);
        }
    }

    #[test]
    fn total_differential_squares_to_zero() {
        use rand::SeedableRng;
        let s = build_sphere_caps().unwrap();
        let a = &s.atlas;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (p, n) in [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2)] {
            let x = random_cochain(a, p, n, &mut rng);
            let dd = total_d(a, &total_d(a, &x).unwrap()).unwrap();
            let (forms, imax) = residuals(a, &dd, 3);
            assert_eq!(imax, 0);
            for (r, m) in forms {
                assert!(m.value < 1e-10, "p={p} n={n} layer {r}: {} at {}", m.value, m.at);
            }
        }
    }

    #[test]
    fn cup_satisfies_leibniz_rule() {
        use rand::SeedableRng;
        let s = build_sphere_caps().unwrap();
        let a = &s.atlas;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for (p1, n1, p2, n2) in [(1, 1, 1, 1), (1, 0, 1, 1), (1, 1, 1, 0), (1, 2, 1, 1), (1, 1, 2, 1), (2, 1, 1, 1)] {
            let x = random_cochain(a, p1, n1, &mut rng);
            let y = random_cochain(a, p2, n2, &mut rng);
            let lhs = total_d(a, &cup(a, &x, &y).unwrap()).unwrap();
            let r1 = cup(a, &total_d(a, &x).unwrap(), &y).unwrap();
            let r2 = cup(a, &x, &total_d(a, &y).unwrap()).unwrap();
            let sg = if n1 % 2 == 0 { 1 } else { -1 };
            let rhs = r1.add_scaled(&r2, C64::new(sg as f64, 0.0), sg);
            let (f, i) = distance(a, &lhs, &rhs, 3);
            assert!(f < 1e-10 && i == 0, "({p1},{n1})∪({p2},{n2}): forms {f}, ints {i}");
        }
    }
}
