//! Deck-group cochains on the upper half-plane: the right-to-left group
//! coboundary, rotation-number Euler cocycles, the 4g-gon fundamental
//! cycle and the translated Lagrangian cocycle for f = id.

use crate::atlas::HoloMap;
use crate::fields::{d, FormValue, Geometry, QuadratureRule};
use crate::jet::Jet;
use crate::scenario::star::{regular_octagon, Octagon};
use crate::{two_pi_i_pow, Error, MaxTracker, Report, TWO_PI_I};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

/// Element of PSL₂(ℝ) stored as a unit-determinant matrix with the
/// sign fixed by c > 0, or c = 0 and d > 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Psl(pub [[f64; 2]; 2]);

/// Entries below this are treated as zero when fixing the sign.
const SIGN_EPS: f64 = 1e-9;

impl Psl {
    pub fn new(m: [[f64; 2]; 2]) -> Psl {
        let [[a, b], [c, d]] = m;
        let det = a * d - b * c;
        let s = det.abs().sqrt();
        let flip = if c.abs() > SIGN_EPS { c < 0.0 } else { d < 0.0 };
        let k = if flip { -1.0 / s } else { 1.0 / s };
        Psl([[a * k, b * k], [c * k, d * k]])
    }

    pub fn identity() -> Psl {
        Psl([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn mul(&self, o: &Psl) -> Psl {
        let (a, b) = (self.0, o.0);
        Psl::new([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }

    pub fn inv(&self) -> Psl {
        let [[a, b], [c, d]] = self.0;
        Psl::new([[d, -b], [-c, a]])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.trace().abs() > 2.0
    }

    /// Distance to `o` as PSL elements (sup norm of the entries).
    pub fn dist(&self, o: &Psl) -> f64 {
        let mut p = 0.0f64;
        let mut m = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                p = p.max((self.0[r][c] - o.0[r][c]).abs());
                m = m.max((self.0[r][c] + o.0[r][c]).abs());
            }
        }
        p.min(m)
    }

    fn cz_d(&self, z: C64) -> C64 {
        z * self.0[1][0] + self.0[1][1]
    }

    pub fn as_holomap(&self) -> HoloMap {
        let r = |x: f64| C64::new(x, 0.0);
        let [[a, b], [c, d]] = self.0;
        HoloMap::mobius([r(a), r(b), r(c), r(d)])
    }

    /// Real representative of a complex Möbius map preserving ℍ.
    pub fn from_complex(m: [C64; 4]) -> Result<Psl, Error> {
        let det = m[0] * m[3] - m[1] * m[2];
        let s = det.sqrt();
        let mut e: Vec<C64> = m.iter().map(|x| x / s).collect();
        // a residual unit phase is removed using the largest entry
        let big = *e.iter().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap();
        let ph = big / big.norm();
        for x in &mut e {
            *x /= ph;
        }
        let im = e.iter().map(|x| x.im.abs()).fold(0.0, f64::max);
        if im > 1e-9 {
            return Err(Error::Relation(format!("Möbius map is not real (imaginary part {im:e})")));
        }
        Ok(Psl::new([[e[0].re, e[1].re], [e[2].re, e[3].re]]))
    }
}

/// (az + b)/(cz + d).
pub fn mobius(g: &Psl, z: C64) -> C64 {
    let [[a, b], _] = g.0;
    (z * a + b) / g.cz_d(z)
}

/// 1/(cz + d)².
pub fn mobius_deriv(g: &Psl, z: C64) -> C64 {
    let w = g.cz_d(z);
    1.0 / (w * w)
}

/// w(γ)(z) = arg(cz + d), principal value. On ℍ, cz + d stays in an
/// open half-plane (or on a ray when c = 0), so this branch is
/// continuous in z.
pub fn rotation_number(g: &Psl, z: C64) -> f64 {
    g.cz_d(z).arg()
}

/// log γ′ = −2 log(cz + d) with the principal branch, as a jet.
pub fn log_deriv(g: &Psl, z: &Jet) -> Jet {
    let [_, [c, dd]] = g.0;
    let w = z.scale(C64::new(c, 0.0)).add_const(C64::new(dd, 0.0));
    w.ln_with(w.value().ln()).scale(C64::new(-2.0, 0.0))
}

pub fn log_deriv_value(g: &Psl, z: C64) -> C64 {
    -2.0 * g.cz_d(z).ln()
}

/// c_{γ1,γ2}(z) = −2(w(γ2) − w(γ1γ2) + w(γ1)∘γ2)/(2π), unrounded.
pub fn euler_cocycle_raw(g1: &Psl, g2: &Psl, z: C64) -> f64 {
    let g12 = g1.mul(g2);
    -2.0 * (rotation_number(g2, z) - rotation_number(&g12, z) + rotation_number(g1, mobius(g2, z)))
        / (2.0 * PI)
}

/// The integer c_{γ1,γ2}, checked for integrality and constancy over
/// the sample points.
pub fn euler_cocycle(g1: &Psl, g2: &Psl, samples: &[C64]) -> Result<i64, Error> {
    let mut val = None;
    for z in samples {
        let x = euler_cocycle_raw(g1, g2, *z);
        let n = x.round();
        if (x - n).abs() > 1e-9 {
            return Err(Error::Numerical(format!("c_(γ1,γ2)({z}) = {x} is not an integer")));
        }
        if *val.get_or_insert(n as i64) != n as i64 {
            return Err(Error::Numerical(format!("c_(γ1,γ2) not constant in z (at {z})")));
        }
    }
    Ok(val.unwrap_or(0))
}

/// Finitely generated Fuchsian group with relator word.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FuchsianGroup {
    pub genus: usize,
    pub names: Vec<String>,
    pub generators: Vec<Psl>,
    /// Relator as (generator index, inverted).
    pub relator: Vec<(usize, bool)>,
}

impl FuchsianGroup {
    /// Parses a word such as "a1 b1 A1 B1"; upper case denotes inverses.
    pub fn parse_word(&self, w: &str) -> Result<Vec<(usize, bool)>, Error> {
        w.split_whitespace()
            .map(|tok| {
                let lower = tok.to_lowercase();
                let inv = tok != lower;
                self.names
                    .iter()
                    .position(|n| *n == lower)
                    .map(|i| (i, inv))
                    .ok_or_else(|| Error::Config {
                        path: "group.relator".into(),
                        msg: format!("unknown generator `{tok}`"),
                    })
            })
            .collect()
    }

    pub fn eval(&self, word: &[(usize, bool)]) -> Psl {
        word.iter().fold(Psl::identity(), |acc, (i, inv)| {
            let g = self.generators[*i];
            acc.mul(&if *inv { g.inv() } else { g })
        })
    }

    /// Relator = ±1 to 1e−10 and every generator hyperbolic.
    pub fn verify(&self, tol: f64) -> Vec<Report> {
        let r = self.eval(&self.relator).dist(&Psl::identity());
        let bad: Vec<&String> = self
            .names
            .iter()
            .zip(&self.generators)
            .filter(|(_, g)| !g.is_hyperbolic())
            .map(|(n, _)| n)
            .collect();
        vec![
            Report::new("relator = ±1", r, tol, String::new()),
            Report::flag("generators hyperbolic", bad.is_empty(), format!("{bad:?}")),
        ]
    }

    /// Random word of the given length in generators and inverses.
    pub fn random_element(&self, rng: &mut impl rand::Rng, len: usize) -> Psl {
        let w: Vec<(usize, bool)> = (0..len)
            .map(|_| (rng.gen_range(0..self.generators.len()), rng.gen_bool(0.5)))
            .collect();
        self.eval(&w)
    }
}

/// Cayley map w ↦ i(1 + w)/(1 − w) from the disk to ℍ.
pub fn cayley() -> HoloMap {
    let i = C64::new(0.0, 1.0);
    HoloMap::mobius([i, i, C64::new(-1.0, 0.0), C64::new(1.0, 0.0)])
}

/// The regular octagon group in ℍ with generators a1, b1, a2, b2
/// pairing sides (2→0), (3→1), (6→4), (7→5).
pub fn octagon_group() -> Result<(FuchsianGroup, Octagon), Error> {
    let oct = regular_octagon();
    let c = cayley();
    let ci = c.inverse();
    let mut gens = Vec::new();
    for (_, a) in &oct.pairings {
        let m = c.compose(a).and_then(|x| x.compose(&ci)).ok_or_else(|| {
            Error::Relation("side pairing is not Möbius".into())
        })?;
        let HoloMap::Mobius(e) = m else {
            return Err(Error::Relation("side pairing is not Möbius".into()));
        };
        gens.push(Psl::from_complex(e)?);
    }
    let mut g = FuchsianGroup {
        genus: 2,
        names: vec!["a1".into(), "b1".into(), "a2".into(), "b2".into()],
        generators: gens,
        relator: Vec::new(),
    };
    g.relator = g.parse_word(OCTAGON_RELATOR)?;
    Ok((g, oct))
}

/// Relator of the side pairings of `octagon_group`.
pub const OCTAGON_RELATOR: &str = "a1 B1 A1 b1 a2 B2 A2 b2";

/// Registry of points and group elements, identified up to 1e−9.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Registry {
    pub points: Vec<C64>,
    pub elems: Vec<Psl>,
}

const MATCH_TOL: f64 = 1e-9;

impl Registry {
    pub fn point(&mut self, z: C64) -> usize {
        if let Some(k) = self.points.iter().position(|p| (p - z).norm() < MATCH_TOL) {
            return k;
        }
        self.points.push(z);
        self.points.len() - 1
    }

    pub fn elem(&mut self, g: &Psl) -> usize {
        if let Some(k) = self.elems.iter().position(|p| p.dist(g) < MATCH_TOL) {
            return k;
        }
        self.elems.push(*g);
        self.elems.len() - 1
    }
}

/// Chain in S_•(ℍ) ⊗ B_•(Γ), with alternating singular simplices:
/// terms (point ids, element ids) ↦ coefficient.
/// One term c·([points] ⊗ [elements]) of a group chain, by registry index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupChainTerm {
    pub points: Vec<usize>,
    pub elems: Vec<usize>,
    pub coef: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(into = "Vec<GroupChainTerm>")]
pub struct GroupChain {
    pub terms: BTreeMap<(Vec<usize>, Vec<usize>), i64>,
}

impl From<GroupChain> for Vec<GroupChainTerm> {
    fn from(c: GroupChain) -> Self {
        c.terms
            .into_iter()
            .map(|((points, elems), coef)| GroupChainTerm { points, elems, coef })
            .collect()
    }
}

impl GroupChain {
    /// Adds c·σ⊗[g] in the alternating quotient: vertices are sorted with
    /// the permutation sign and degenerate simplices vanish.
    pub fn add_term(&mut self, mut s: Vec<usize>, g: Vec<usize>, mut c: i64) {
        for i in 0..s.len() {
            for j in 0..s.len() - 1 - i {
                if s[j] > s[j + 1] {
                    s.swap(j, j + 1);
                    c = -c;
                }
            }
        }
        if s.windows(2).any(|w| w[0] == w[1]) {
            return;
        }
        let e = self.terms.entry((s, g)).or_insert(0);
        *e += c;
        if *e == 0 {
            self.terms.retain(|_, v| *v != 0);
        }
    }

    pub fn add_scaled(&self, o: &GroupChain, k: i64) -> GroupChain {
        let mut out = self.clone();
        for ((s, g), c) in &o.terms {
            out.add_term(s.clone(), g.clone(), k * c);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Singular boundary.
    pub fn boundary_prime(&self) -> GroupChain {
        let mut out = GroupChain::default();
        for ((s, g), c) in &self.terms {
            if s.len() < 2 {
                continue;
            }
            for k in 0..s.len() {
                let mut f = s.clone();
                f.remove(k);
                out.add_term(f, g.clone(), if k % 2 == 0 { *c } else { -c });
            }
        }
        out
    }

    /// Bar boundary dual to the right-to-left coboundary:
    /// σ⊗[g2|…|gq] + Σ(−1)^i σ⊗[…|g_i g_{i+1}|…] + (−1)^q g_q σ⊗[g1|…|g_{q−1}].
    pub fn boundary_second(&self, reg: &mut Registry) -> GroupChain {
        let mut out = GroupChain::default();
        for ((s, g), c) in &self.terms {
            let q = g.len();
            if q == 0 {
                continue;
            }
            out.add_term(s.clone(), g[1..].to_vec(), *c);
            for i in 1..q {
                let prod = reg.elems[g[i - 1]].mul(&reg.elems[g[i]]);
                let id = reg.elem(&prod);
                let mut w = g[..i - 1].to_vec();
                w.push(id);
                w.extend_from_slice(&g[i + 1..]);
                out.add_term(s.clone(), w, if i % 2 == 1 { -c } else { *c });
            }
            let gq = reg.elems[g[q - 1]];
            let moved: Vec<usize> = s.iter().map(|p| reg.point(mobius(&gq, reg.points[*p]))).collect();
            out.add_term(moved, g[..q - 1].to_vec(), if q % 2 == 1 { -c } else { *c });
        }
        out
    }
}

/// The total cycle F + Σ1 − Σ2 of a 4g-gon fundamental domain.
#[derive(Clone, Debug, Serialize)]
pub struct PolygonCycle {
    pub reg: Registry,
    /// Polygon vertex ids, counterclockwise.
    pub vertices: Vec<usize>,
    pub apex: C64,
    pub f: GroupChain,
    pub sigma1: GroupChain,
    pub sigma2: GroupChain,
}

/// Fan apex of the polygon cycle.
#[derive(Clone, Copy, Debug)]
pub enum FanApex {
    /// An interior point of ℍ.
    Interior(C64),
    /// The polygon vertex with this index.
    Vertex(usize),
}

/// Builds F as a fan, Σ1 from the side pairings and Σ2 by solving the
/// descent equation ∂′Σ1 = ∂″Σ2 along vertex cycles.
pub fn build_polygon_cycle(
    group: &FuchsianGroup,
    vertices_h: &[C64],
    apex: FanApex,
) -> Result<PolygonCycle, Error> {
    let mut reg = Registry::default();
    let nv = vertices_h.len();
    let vs: Vec<usize> = vertices_h.iter().map(|z| reg.point(*z)).collect();
    let mut f = GroupChain::default();
    let apex_z = match apex {
        FanApex::Interior(z) => {
            let a = reg.point(z);
            for k in 0..nv {
                f.add_term(vec![a, vs[k], vs[(k + 1) % nv]], vec![], 1);
            }
            z
        }
        FanApex::Vertex(v) => {
            for k in 1..nv - 1 {
                let (p, q) = ((v + k) % nv, (v + k + 1) % nv);
                f.add_term(vec![vs[v], vs[p], vs[q]], vec![], 1);
            }
            vertices_h[v]
        }
    };
    // Σ1: for each side pair (s, s′) with γ(s′) = −s, the term s′⊗[γ].
    let mut sigma1 = GroupChain::default();
    let mut paired = vec![false; nv];
    let mut gens = Vec::new();
    for g in &group.generators {
        gens.push(*g);
        gens.push(g.inv());
    }
    for k in 0..nv {
        if paired[k] {
            continue;
        }
        let (a, b) = (vertices_h[k], vertices_h[(k + 1) % nv]);
        let mut found = false;
        'search: for l in 0..nv {
            if l == k || paired[l] {
                continue;
            }
            let (p, q) = (vertices_h[l], vertices_h[(l + 1) % nv]);
            for g in &gens {
                if (mobius(g, p) - b).norm() < 1e-9 && (mobius(g, q) - a).norm() < 1e-9 {
                    let id = reg.elem(g);
                    sigma1.add_term(vec![vs[(l + 1) % nv], vs[l]], vec![id], -1);
                    paired[k] = true;
                    paired[l] = true;
                    found = true;
                    break 'search;
                }
            }
        }
        if !found {
            return Err(Error::Relation(format!("side {k} has no pairing")));
        }
    }
    // ∂″Σ1 must equal ∂′F (boundary of the polygon).
    let d1 = f.boundary_prime().add_scaled(&sigma1.boundary_second(&mut reg), -1);
    if !d1.is_zero() {
        return Err(Error::Relation(format!(
            "side pairing does not close the polygon ({} residual terms)",
            d1.terms.len()
        )));
    }
    // Σ2: move every (h v0)⊗[γ] to v0 using ∂″(v0⊗[γ|h]) and absorb
    // the remaining identity terms with v0⊗[1|1].
    let target = sigma1.boundary_prime();
    let v0 = vs[0];
    let mut sigma2 = GroupChain::default();
    let mut rest = GroupChain::default();
    let id1 = reg.elem(&Psl::identity());
    for ((s, g), c) in &target.terms {
        let v = s[0];
        if v == v0 {
            rest.add_term(s.clone(), g.clone(), *c);
            continue;
        }
        let h = vertex_transport(&reg, &gens, reg.points[v0], reg.points[v])?;
        let hid = reg.elem(&h);
        sigma2.add_term(vec![v0], vec![g[0], hid], *c);
        let gh = reg.elems[g[0]].mul(&h);
        let ghid = reg.elem(&gh);
        rest.add_term(vec![v0], vec![ghid], *c);
        rest.add_term(vec![v0], vec![hid], -c);
    }
    for ((s, g), c) in rest.terms.clone() {
        if g == vec![id1] && s == vec![v0] {
            sigma2.add_term(vec![v0], vec![id1, id1], c);
            rest.add_term(s, g, -c);
        }
    }
    if !rest.is_zero() {
        return Err(Error::Relation(format!(
            "descent ∂′Σ1 = ∂″Σ2 unsolvable: {} residual terms",
            rest.terms.len()
        )));
    }
    let d2 = target.add_scaled(&sigma2.boundary_second(&mut reg), -1);
    if !d2.is_zero() {
        return Err(Error::Relation(format!("descent check failed ({} terms)", d2.terms.len())));
    }
    Ok(PolygonCycle {
        reg,
        vertices: vs,
        apex: apex_z,
        f,
        sigma1,
        sigma2,
    })
}

/// Group element h with h(v0) = v, searched over words of length ≤ 4.
fn vertex_transport(reg: &Registry, gens: &[Psl], v0: C64, v: C64) -> Result<Psl, Error> {
    let _ = reg;
    let mut layer = vec![Psl::identity()];
    for _ in 0..4 {
        let mut next = Vec::new();
        for w in &layer {
            for g in gens {
                let h = g.mul(w);
                if (mobius(&h, v0) - v).norm() < 1e-9 {
                    return Ok(h);
                }
                next.push(h);
            }
        }
        layer = next;
    }
    Err(Error::Relation(format!("vertex {v} is not in the orbit of {v0}")))
}

impl PolygonCycle {
    /// Exact chain checks ∂′F = ∂″Σ1, ∂′Σ1 = ∂″Σ2, ∂′Σ2 = 0, ∂″F = 0.
    pub fn verify(&self) -> Vec<Report> {
        let mut reg = self.reg.clone();
        let d1 = self.f.boundary_prime().add_scaled(&self.sigma1.boundary_second(&mut reg), -1);
        let d2 = self.sigma1.boundary_prime().add_scaled(&self.sigma2.boundary_second(&mut reg), -1);
        let d3 = self.sigma2.boundary_prime();
        let d4 = self.f.boundary_second(&mut reg);
        let n = |c: &GroupChain| format!("{} residual terms", c.terms.len());
        vec![
            Report::flag("∂′F = ∂″Σ1", d1.is_zero(), n(&d1)),
            Report::flag("∂′Σ1 = ∂″Σ2", d2.is_zero(), n(&d2)),
            Report::flag("∂′Σ2 = 0", d3.is_zero(), n(&d3)),
            Report::flag("∂″F = 0", d4.is_zero(), n(&d4)),
        ]
    }

    /// Hyperbolic area of F, each fan triangle realized with geodesic
    /// sides in the disk model after moving its first vertex to 0.
    pub fn hyperbolic_area(&self, rule: &QuadratureRule) -> f64 {
        let ci = cayley().inverse();
        let density = |z: &Jet| {
            let w = z.value();
            let mut j = Jet::real(0.0, z.order());
            j.set_coef(0, 0, C64::new(0.0, 2.0 / (1.0 - w.norm_sqr()).powi(2)));
            FormValue::F2(j)
        };
        let mut total = 0.0;
        for ((s, _), c) in &self.f.terms {
            let [a, p, q] = [0, 1, 2].map(|k| ci.apply(self.reg.points[s[k]]));
            let one = C64::new(1.0, 0.0);
            let to0 = HoloMap::mobius([one, -a, -a.conj(), one]);
            let (p, q) = (to0.apply(p), to0.apply(q));
            let from_p = HoloMap::mobius([one, p, p.conj(), one]);
            let qq = from_p.inverse().apply(q);
            let geom = Geometry::Cone {
                apex: C64::new(0.0, 0.0),
                base_a: C64::new(0.0, 0.0),
                base_b: qq,
                base_map: Some(&from_p),
            };
            total += *c as f64 * crate::fields::integrate(&density, &geom, rule).re;
        }
        total
    }

    /// Integer pairing −⟨c, Σ2⟩ of a ℤ-valued 2-cochain.
    pub fn pair_sigma2(&self, c: &dyn Fn(&Psl, &Psl, C64) -> Result<i64, Error>) -> Result<i64, Error> {
        let mut acc = 0i64;
        for ((s, g), k) in &self.sigma2.terms {
            let z = self.reg.points[s[0]];
            acc -= k * c(&self.reg.elems[g[0]], &self.reg.elems[g[1]], z)?;
        }
        Ok(acc)
    }
}

/// Euler number −⟨c, Σ2⟩ of the rotation-number cocycle.
pub fn euler_number(cycle: &PolygonCycle) -> Result<i64, Error> {
    cycle.pair_sigma2(&|g1, g2, z| euler_cocycle(g1, g2, &[z]))
}

/// Interior point of a geodesic polygon in ℍ: the vertex average in the
/// Klein model, where the polygon is Euclidean-convex.
pub fn polygon_centre_h(vertices_h: &[C64]) -> C64 {
    let c = cayley();
    let ci = c.inverse();
    let mut k = C64::new(0.0, 0.0);
    for v in vertices_h {
        let p = ci.apply(*v);
        k += p * (2.0 / (1.0 + p.norm_sqr()));
    }
    k /= vertices_h.len() as f64;
    let p = k / (1.0 + (1.0 - k.norm_sqr()).sqrt());
    c.apply(p)
}

/// Octagon vertices in ℍ, counterclockwise.
pub fn octagon_vertices_h(oct: &Octagon) -> Vec<C64> {
    let c = cayley();
    oct.vertices.iter().map(|v| c.apply(*v)).collect()
}

/// Group q-cochain with form values: φ(γ1, …, γq; z).
pub type GroupCochain = Arc<dyn Fn(&[Psl], &Jet) -> FormValue + Send + Sync>;

/// Right-to-left coboundary of a (q−1)-cochain, evaluated on q elements.
pub fn group_delta(phi: &GroupCochain) -> GroupCochain {
    let phi = phi.clone();
    Arc::new(move |g: &[Psl], z: &Jet| {
        let q = g.len();
        let mut out = phi(&g[1..], z);
        for i in 1..q {
            let mut w = g[..i - 1].to_vec();
            w.push(g[i - 1].mul(&g[i]));
            w.extend_from_slice(&g[i + 1..]);
            let t = phi(&w, z);
            out = if i % 2 == 1 { out.sub(&t) } else { out.add(&t) };
        }
        let head = g[..q - 1].to_vec();
        let p = phi.clone();
        let form: crate::fields::FormField = Arc::new(move |x: &Jet| p(&head, x));
        let last = g[q - 1].as_holomap().pull_back(&form, z);
        if q % 2 == 1 {
            out.sub(&last)
        } else {
            out.add(&last)
        }
    })
}

/// Coboundary of an integer cochain (the pullback acts trivially).
pub fn group_delta_int(m: &dyn Fn(&[Psl]) -> i64, g: &[Psl]) -> i64 {
    let q = g.len();
    let mut out = m(&g[1..]);
    for i in 1..q {
        let mut w = g[..i - 1].to_vec();
        w.push(g[i - 1].mul(&g[i]));
        w.extend_from_slice(&g[i + 1..]);
        out += if i % 2 == 1 { -m(&w) } else { m(&w) };
    }
    out + if q % 2 == 1 { -m(&g[..q - 1]) } else { m(&g[..q - 1]) }
}

/// Translated Lagrangian cocycle for f = id, μ = 0 with identical
/// trivializations on both sides: ω = 0, θ_γ = log γ′ d log γ′,
/// Θ_{γ1,γ2} = −(log γ1′∘γ2) log γ2′ + c_{γ1,γ2} log(γ1γ2)′ and
/// m = c_{γ1,γ2γ3} c_{γ2,γ3} − c_{γ1γ2,γ3} c_{γ1,γ2}.
pub struct TranslatedLagrangian {
    pub omega: GroupCochain,
    pub theta: GroupCochain,
    pub big_theta: GroupCochain,
}

fn c_int(g1: &Psl, g2: &Psl) -> i64 {
    euler_cocycle_raw(g1, g2, C64::new(0.0, 1.0)).round() as i64
}

impl TranslatedLagrangian {
    pub fn identity() -> TranslatedLagrangian {
        let omega: GroupCochain = Arc::new(|_, z: &Jet| FormValue::F2(Jet::real(0.0, z.order())));
        let theta: GroupCochain = Arc::new(|g: &[Psl], z: &Jet| {
            let n = z.order();
            let l = log_deriv(&g[0], &Jet::var(z.value(), n + 1));
            let dl = d(&FormValue::F0(l));
            dl.mul_fn(&l.truncate(n))
        });
        let big_theta: GroupCochain = Arc::new(|g: &[Psl], z: &Jet| {
            let (g1, g2) = (&g[0], &g[1]);
            let v = Jet::var(z.value(), z.order());
            let a = log_deriv(g1, &mobius_jet(g2, &v));
            let b = log_deriv(g2, &v);
            let c = log_deriv(&g1.mul(g2), &v);
            FormValue::F0(c.scale(TWO_PI_I * c_int(g1, g2) as f64) - a * b)
        });
        TranslatedLagrangian {
            omega,
            theta,
            big_theta,
        }
    }

    pub fn m(g: &[Psl]) -> i64 {
        let (g1, g2, g3) = (&g[0], &g[1], &g[2]);
        c_int(g1, &g2.mul(g3)) * c_int(g2, g3) - c_int(&g1.mul(g2), g3) * c_int(g1, g2)
    }

    /// δω = dθ, δθ = dΘ, δΘ = (2πi)² m and δm = 0 on random words of
    /// length ≤ 2 at random points of ℍ. The δΘ residual is relative to
    /// the sum of the four face terms: longer words push γz towards ℝ,
    /// where cz + d cancels and the logarithms lose digits.
    pub fn verify(&self, group: &FuchsianGroup, rng: &mut impl rand::Rng, trials: usize, tol: f64) -> Vec<Report> {
        let mut r1 = MaxTracker::default();
        let mut r2 = MaxTracker::default();
        let mut r3 = MaxTracker::default();
        let mut r4 = 0i64;
        let dom = group_delta(&self.omega);
        let dth = group_delta(&self.theta);
        let dbt = group_delta(&self.big_theta);
        let p2 = two_pi_i_pow(2);
        for _ in 0..trials {
            let g: Vec<Psl> = (0..4)
                .map(|_| {
                    let len = rng.gen_range(1..=2);
                    group.random_element(rng, len)
                })
                .collect();
            let z0 = C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.5..1.5));
            let z = Jet::var(z0, 1);
            let t = self.theta.clone();
            let a = dom(&g[..1], &z).sub(&d(&t(&g[..1], &Jet::var(z0, 2))).truncate(1));
            r1.push(a.norm0(), || format!("at {z0}"));
            let b = dth(&g[..2], &z).sub(&d(&(self.big_theta)(&g[..2], &Jet::var(z0, 2))).truncate(1));
            r2.push(b.norm0(), || format!("at {z0}"));
            let m = TranslatedLagrangian::m(&g[..3]) as f64;
            let c = dbt(&g[..3], &z).as_f0().value() - p2 * m;
            let bt = &self.big_theta;
            let faces = [
                bt(&g[1..3], &z),
                bt(&[g[0].mul(&g[1]), g[2]], &z),
                bt(&[g[0], g[1].mul(&g[2])], &z),
                bt(&g[..2], &z),
            ];
            let scale: f64 = faces.iter().map(|f| f.as_f0().value().norm()).sum();
            r3.push(c.norm() / scale.max(1.0), || format!("at {z0}"));
            r4 = r4.max(group_delta_int(&TranslatedLagrangian::m, &g).abs());
        }
        vec![
            r1.report("δω = dθ", tol),
            r2.report("δθ = dΘ", tol),
            r3.report("δΘ = (2πi)² m (relative)", tol),
            Report::flag("δm = 0", r4 == 0, format!("max |δm| = {r4}")),
        ]
    }
}

/// γ applied to a jet.
pub fn mobius_jet(g: &Psl, z: &Jet) -> Jet {
    g.as_holomap().apply_jet(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(17)
    }

    #[test]
    fn octagon_group_satisfies_relator() {
        let (g, _) = octagon_group().unwrap();
        for r in g.verify(1e-10) {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn mobius_chain_rule() {
        let (g, _) = octagon_group().unwrap();
        let mut r = rng();
        for _ in 0..10 {
            let (a, b) = (g.random_element(&mut r, 2), g.random_element(&mut r, 2));
            let z = C64::new(0.2, 0.9);
            let lhs = mobius_deriv(&a.mul(&b), z);
            let rhs = mobius_deriv(&a, mobius(&b, z)) * mobius_deriv(&b, z);
            assert!((lhs - rhs).norm() < 1e-9 * rhs.norm());
            assert!((mobius(&Psl::identity(), z) - z).norm() == 0.0);
        }
    }

    #[test]
    fn euler_cocycle_is_an_integer_cocycle() {
        let (g, _) = octagon_group().unwrap();
        let mut r = rng();
        let samples = [C64::new(0.0, 1.0), C64::new(-0.7, 0.3), C64::new(1.3, 2.0)];
        for _ in 0..20 {
            let e: Vec<Psl> = (0..3).map(|_| g.random_element(&mut r, 3)).collect();
            let c = |a: &Psl, b: &Psl| euler_cocycle(a, b, &samples).unwrap();
            let dc = c(&e[1], &e[2]) - c(&e[0].mul(&e[1]), &e[2]) + c(&e[0], &e[1].mul(&e[2])) - c(&e[0], &e[1]);
            assert_eq!(dc, 0);
            assert_eq!(c(&Psl::identity(), &Psl::identity()), 0);
            assert_eq!(c(&e[0], &e[0]), c(&e[0], &e[0]));
        }
    }

    #[test]
    fn genus_two_euler_number() {
        let (g, oct) = octagon_group().unwrap();
        let vh = octagon_vertices_h(&oct);
        let centre = cayley().apply(C64::new(0.0, 0.0));
        let a = build_polygon_cycle(&g, &vh, FanApex::Interior(centre)).unwrap();
        for r in a.verify() {
            assert!(r.pass, "{r:?}");
        }
        assert_eq!(euler_number(&a).unwrap(), -2);
        assert!((polygon_centre_h(&vh) - centre).norm() < 1e-12);
        let b = build_polygon_cycle(&g, &vh, FanApex::Vertex(3)).unwrap();
        assert_eq!(euler_number(&b).unwrap(), -2);
        let area = a.hyperbolic_area(&QuadratureRule::new(32, 32));
        assert!((area - 4.0 * PI).abs() < 1e-8, "{area}");
    }

    #[test]
    fn log_derivative_coboundary_is_the_euler_cocycle() {
        let (g, _) = octagon_group().unwrap();
        let mut r = rng();
        let l: GroupCochain = Arc::new(|g: &[Psl], z: &Jet| FormValue::F0(log_deriv(&g[0], z)));
        let dl = group_delta(&l);
        for _ in 0..10 {
            let e: Vec<Psl> = (0..2).map(|_| g.random_element(&mut r, 3)).collect();
            let z = C64::new(0.3, 0.8);
            let v = dl(&e, &Jet::var(z, 1));
            let c = euler_cocycle(&e[0], &e[1], &[z]).unwrap();
            assert!((v.as_f0().value() - TWO_PI_I * c as f64).norm() < 1e-9);
            assert!(v.as_f0().coef(1, 0).norm() < 1e-9);
        }
    }

    #[test]
    fn translated_identity_lagrangian_is_a_cocycle() {
        let (g, _) = octagon_group().unwrap();
        let lag = TranslatedLagrangian::identity();
        for r in lag.verify(&g, &mut rng(), 20, 1e-8) {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn group_delta_squares_to_zero() {
        let (g, _) = octagon_group().unwrap();
        let mut r = rng();
        let coeffs: Vec<C64> = (0..4).map(|k| C64::new(0.3 * k as f64 - 0.4, 0.2 + 0.1 * k as f64)).collect();
        // a 1-cochain with bounded coefficients depending on the element
        let phi: GroupCochain = Arc::new(move |g: &[Psl], z: &Jet| {
            let m = g[0].0;
            let k = |x: f64| 1.0 / (1.0 + x * x);
            let w = z.scale(coeffs[0] * k(m[0][1])).add_const(coeffs[1] * k(m[1][0])) * z.conj().scale(coeffs[2]);
            FormValue::F0(w + (*z * *z).scale(coeffs[3] * k(m[0][0] + m[1][1])))
        });
        let dd = group_delta(&group_delta(&phi));
        for _ in 0..10 {
            let e: Vec<Psl> = (0..3).map(|_| g.random_element(&mut r, 2)).collect();
            let v = dd(&e, &Jet::var(C64::new(0.1, 0.7), 2));
            assert!(v.norm0() < 1e-10, "{}", v.norm0());
        }
    }

    #[test]
    fn invariant_cochain_has_zero_coboundary() {
        let (g, _) = octagon_group().unwrap();
        let one: GroupCochain = Arc::new(|_, z: &Jet| FormValue::F0(Jet::real(1.0, z.order())));
        let d0 = group_delta(&one);
        let e = [g.generators[1].mul(&g.generators[2])];
        assert!(d0(&e, &Jet::var(C64::new(0.4, 1.1), 1)).norm0() < 1e-15);
    }

    #[test]
    fn hyperbolic_generator_fixes_its_axis_endpoints() {
        let (g, _) = octagon_group().unwrap();
        for h in &g.generators {
            let [[a, _], [c, dd]] = h.0;
            let disc = ((a + dd).powi(2) - 4.0).sqrt();
            for s in [-1.0, 1.0] {
                let x = C64::new((a - dd + s * disc) / (2.0 * c), 0.0);
                assert!((mobius(h, x) - x).norm() < 1e-9);
            }
            // a point on the axis stays on the axis (the semicircle over the fixed points)
            let (x1, x2) = ((a - dd - disc) / (2.0 * c), (a - dd + disc) / (2.0 * c));
            let (m, rad) = ((x1 + x2) / 2.0, (x2 - x1).abs() / 2.0);
            let p = C64::new(m, 0.0) + C64::from_polar(rad, 1.0);
            assert!(((mobius(h, p) - m).norm() - rad).abs() < 1e-9);
        }
    }

    #[test]
    fn euler_cocycle_on_powers_and_translations() {
        let (g, _) = octagon_group().unwrap();
        let samples: Vec<C64> = (0..6).map(|k| C64::new(-1.5 + 0.6 * k as f64, 0.2 + 0.3 * k as f64)).collect();
        for h in &g.generators {
            for p in 1..4 {
                let hp = (1..p).fold(*h, |acc, _| acc.mul(h));
                assert!(euler_cocycle(&hp, &hp, &samples).is_ok());
                assert!(euler_cocycle(&hp.inv(), &hp, &samples).is_ok());
            }
        }
        let t = |x: f64| Psl::new([[1.0, x], [0.0, 1.0]]);
        for (x, y) in [(1.0, 0.5), (-2.0, 3.0), (0.25, -0.25)] {
            assert_eq!(euler_cocycle(&t(x), &t(y), &samples).unwrap(), 0);
        }
    }

    #[test]
    fn euler_number_flips_with_orientation() {
        let (g, oct) = octagon_group().unwrap();
        let mut a = build_polygon_cycle(&g, &octagon_vertices_h(&oct), FanApex::Vertex(0)).unwrap();
        a.sigma2 = GroupChain::default().add_scaled(&a.sigma2, -1);
        assert_eq!(euler_number(&a).unwrap(), 2);
    }
}
