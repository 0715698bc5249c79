//! The double complex of singular chains on the nerve, its two boundary
//! operators, the degree shift and the star-construction fundamental
//! cycle.

use crate::atlas::{Atlas, Tuple};
use crate::{Error, Report};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Exact key of a complex point (bit pattern of both parts).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pt(u64, u64);

impl Pt {
    pub fn new(z: C64) -> Pt {
        // normalize -0.0 so equal points compare equal
        Pt((z.re + 0.0).to_bits(), (z.im + 0.0).to_bits())
    }
    pub fn z(&self) -> C64 {
        C64::new(f64::from_bits(self.0), f64::from_bits(self.1))
    }
}

/// A singular simplex with label-exact geometry.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Simplex {
    /// Vertices are the seed points v_τ of a nested chain of tuples.
    Seed(Vec<Tuple>),
    /// Affine simplex spanned by points of one chart.
    Affine { chart: usize, pts: Vec<Pt> },
}

impl Simplex {
    pub fn dim(&self) -> usize {
        match self {
            Simplex::Seed(v) => v.len() - 1,
            Simplex::Affine { pts, .. } => pts.len() - 1,
        }
    }

    /// k-th face (vertex k omitted).
    pub fn face(&self, k: usize) -> Simplex {
        match self {
            Simplex::Seed(v) => {
                let mut w = v.clone();
                w.remove(k);
                Simplex::Seed(w)
            }
            Simplex::Affine { chart, pts } => {
                let mut w = pts.clone();
                w.remove(k);
                Simplex::Affine {
                    chart: *chart,
                    pts: w,
                }
            }
        }
    }

    /// Canonical form and orientation sign; 0 for degenerate simplices.
    fn normalize(self) -> (Simplex, i64) {
        match self {
            Simplex::Seed(v) => {
                let degenerate = v.windows(2).any(|w| w[0] == w[1]);
                (Simplex::Seed(v), if degenerate { 0 } else { 1 })
            }
            Simplex::Affine { chart, mut pts } => {
                let mut sign = 1;
                for i in 0..pts.len() {
                    for j in 0..pts.len() - 1 - i {
                        if pts[j] > pts[j + 1] {
                            pts.swap(j, j + 1);
                            sign = -sign;
                        }
                    }
                }
                if pts.windows(2).any(|w| w[0] == w[1]) {
                    sign = 0;
                }
                (Simplex::Affine { chart, pts }, sign)
            }
        }
    }
}

/// One term c·(simplex ⊗ tuple) of a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainTerm {
    pub simplex: Simplex,
    pub tuple: Tuple,
    pub coef: i64,
}

/// Finite integer combination of (simplex, tuple) generators.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<ChainTerm>", from = "Vec<ChainTerm>")]
pub struct Chain {
    pub terms: BTreeMap<(Simplex, Tuple), i64>,
}

impl Chain {
    pub fn new() -> Chain {
        Chain::default()
    }

    pub fn single(s: Simplex, t: Tuple, c: i64) -> Chain {
        let mut ch = Chain::new();
        ch.add_term(s, t, c);
        ch
    }

    /// Adds c·(s ⊗ t). Tuples must be strictly increasing; degenerate
    /// tuples or simplices contribute nothing.
    pub fn add_term(&mut self, s: Simplex, t: Tuple, c: i64) {
        if c == 0 || t.windows(2).any(|w| w[0] >= w[1]) {
            return;
        }
        let (s, sign) = s.normalize();
        if sign == 0 {
            return;
        }
        let key = (s, t);
        let e = self.terms.entry(key.clone()).or_insert(0);
        *e += sign * c;
        if *e == 0 {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, o: &Chain) -> Chain {
        self.add_scaled(o, 1)
    }

    pub fn sub(&self, o: &Chain) -> Chain {
        self.add_scaled(o, -1)
    }

    pub fn add_scaled(&self, o: &Chain, s: i64) -> Chain {
        let mut out = self.clone();
        for ((sx, t), c) in &o.terms {
            out.add_term(sx.clone(), t.clone(), s * c);
        }
        out
    }

    pub fn scale(&self, s: i64) -> Chain {
        Chain::new().add_scaled(self, s)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Component of bidegree (p, q).
    pub fn part(&self, p: usize, q: usize) -> Chain {
        let mut out = Chain::new();
        for ((s, t), c) in &self.terms {
            if s.dim() == p && t.len() == q + 1 {
                out.add_term(s.clone(), t.clone(), *c);
            }
        }
        out
    }

    /// Singular boundary ∂′, tuple unchanged.
    pub fn boundary_prime(&self) -> Chain {
        let mut out = Chain::new();
        for ((s, t), c) in &self.terms {
            if s.dim() == 0 {
                continue;
            }
            for k in 0..=s.dim() {
                let sign = if k % 2 == 0 { 1 } else { -1 };
                out.add_term(s.face(k), t.clone(), sign * c);
            }
        }
        out
    }

    /// Nerve boundary ∂″ = Σ (−1)^j (j-th index omitted); zero on q = 0.
    pub fn boundary_second(&self) -> Chain {
        let mut out = Chain::new();
        for ((s, t), c) in &self.terms {
            if t.len() < 2 {
                continue;
            }
            for j in 0..t.len() {
                let sign = if j % 2 == 0 { 1 } else { -1 };
                let mut f = t.clone();
                f.remove(j);
                out.add_term(s.clone(), f, sign * c);
            }
        }
        out
    }

    /// Total boundary ∂ = ∂′ + (−1)^p ∂″ on each (p, q) component.
    pub fn total_boundary(&self) -> Chain {
        let mut out = self.boundary_prime();
        for ((s, t), c) in &self.terms {
            let sign = if s.dim() % 2 == 0 { 1 } else { -1 };
            let single = Chain::single(s.clone(), t.clone(), sign * c);
            out = out.add(&single.boundary_second());
        }
        out
    }

    /// Differential of the shifted complex, ∂′ − (−1)^p ∂″, so that
    /// shift∘∂ = shifted_boundary∘shift.
    pub fn shifted_boundary(&self) -> Chain {
        let mut out = self.boundary_prime();
        for ((s, t), c) in &self.terms {
            let sign = if s.dim() % 2 == 0 { -1 } else { 1 };
            let single = Chain::single(s.clone(), t.clone(), sign * c);
            out = out.add(&single.boundary_second());
        }
        out
    }

    /// Degree shift: each (p, q) component is multiplied by (−1)^q.
    pub fn shift(&self) -> Chain {
        let mut out = Chain::new();
        for ((s, t), c) in &self.terms {
            let sign = if (t.len() - 1) % 2 == 0 { 1 } else { -1 };
            out.add_term(s.clone(), t.clone(), sign * c);
        }
        out
    }

    /// First augmentation on (p, 0) chains: forget the tuple.
    pub fn augment(&self) -> BTreeMap<Simplex, i64> {
        let mut out: BTreeMap<Simplex, i64> = BTreeMap::new();
        for ((s, t), c) in &self.terms {
            if t.len() == 1 {
                *out.entry(s.clone()).or_insert(0) += c;
            }
        }
        out.retain(|_, c| *c != 0);
        out
    }

    /// Second augmentation on (0, q) chains: forget the point.
    pub fn augment_second(&self) -> BTreeMap<Tuple, i64> {
        let mut out: BTreeMap<Tuple, i64> = BTreeMap::new();
        for ((s, t), c) in &self.terms {
            if s.dim() == 0 {
                *out.entry(t.clone()).or_insert(0) += c;
            }
        }
        out.retain(|_, c| *c != 0);
        out
    }
}

impl From<Chain> for Vec<ChainTerm> {
    fn from(c: Chain) -> Self {
        c.terms
            .into_iter()
            .map(|((simplex, tuple), coef)| ChainTerm { simplex, tuple, coef })
            .collect()
    }
}

impl From<Vec<ChainTerm>> for Chain {
    fn from(v: Vec<ChainTerm>) -> Self {
        let mut c = Chain::new();
        for t in v {
            c.add_term(t.simplex, t.tuple, t.coef);
        }
        c
    }
}

/// Boundary of a plain singular chain (tuple already forgotten).
pub fn boundary_plain(c: &BTreeMap<Simplex, i64>) -> BTreeMap<Simplex, i64> {
    let mut ch = Chain::new();
    for (s, k) in c {
        ch.add_term(s.clone(), vec![0], *k);
    }
    ch.boundary_prime().augment()
}

/// Geometry of a realized simplex.
#[derive(Clone, Debug)]
pub enum Realized {
    Point {
        chart: usize,
        z: C64,
    },
    /// Straight segment in `chart`.
    Segment {
        chart: usize,
        a: C64,
        b: C64,
    },
    /// Cone in `chart` from `apex` over the straight segment a→b of
    /// `base_chart`, carried over by the transition.
    Triangle {
        chart: usize,
        apex: C64,
        base_chart: usize,
        a: C64,
        b: C64,
    },
}

/// Realizes a simplex: seed paths are straight in the chart of the
/// smallest index of their first tuple.
pub fn realize(atlas: &Atlas, s: &Simplex) -> Result<Realized, Error> {
    match s {
        Simplex::Seed(v) => {
            for t in v {
                if !atlas.regions.contains_key(t) {
                    return Err(Error::MissingSeed { tuple: t.clone() });
                }
            }
            let r = v[0][0];
            match v.len() {
                1 => Ok(Realized::Point {
                    chart: r,
                    z: atlas.seed_in(&v[0], r),
                }),
                2 => Ok(Realized::Segment {
                    chart: r,
                    a: atlas.seed_in(&v[0], r),
                    b: atlas.seed_in(&v[1], r),
                }),
                3 => {
                    let sc = v[1][0];
                    Ok(Realized::Triangle {
                        chart: r,
                        apex: atlas.seed_in(&v[0], r),
                        base_chart: sc,
                        a: atlas.seed_in(&v[1], sc),
                        b: atlas.seed_in(&v[2], sc),
                    })
                }
                _ => Err(Error::Numerical("no geometry above dimension 2".into())),
            }
        }
        Simplex::Affine { chart, pts } => match pts.len() {
            1 => Ok(Realized::Point {
                chart: *chart,
                z: pts[0].z(),
            }),
            2 => Ok(Realized::Segment {
                chart: *chart,
                a: pts[0].z(),
                b: pts[1].z(),
            }),
            3 => Ok(Realized::Triangle {
                chart: *chart,
                apex: pts[0].z(),
                base_chart: *chart,
                a: pts[1].z(),
                b: pts[2].z(),
            }),
            _ => Err(Error::Numerical("no geometry above dimension 2".into())),
        },
    }
}

/// Σ = Σ0 + Σ1 − Σ2 with orientation signs ε_ijk.
#[derive(Clone, Debug, Serialize)]
pub struct FundamentalCycle {
    pub sigma0: Chain,
    pub sigma1: Chain,
    pub sigma2: Chain,
    pub eps: BTreeMap<Tuple, i32>,
}

fn seed(v: &[&Tuple]) -> Simplex {
    Simplex::Seed(v.iter().map(|t| t.to_vec()).collect())
}

/// Orientation sign of the triangle (v_i, v_ij, v_ijk) in chart k.
pub fn orientation(atlas: &Atlas, t: &Tuple) -> Result<i32, Error> {
    let (i, j, k) = (t[0], t[1], t[2]);
    for s in [vec![i], vec![i, j], t.clone()] {
        if !atlas.regions.contains_key(&s) {
            return Err(Error::MissingSeed { tuple: s });
        }
    }
    let vi = atlas.seed_in(&[i], k);
    let vij = atlas.seed_in(&[i, j], k);
    let vijk = atlas.seed_in(t, k);
    let a = vij - vi;
    let b = vijk - vi;
    let cross = a.re * b.im - a.im * b.re;
    let scale = a.norm() * b.norm();
    if !(cross.abs() > 1e-9 * scale) {
        return Err(Error::Degenerate { tuple: t.clone() });
    }
    Ok(if cross > 0.0 { 1 } else { -1 })
}

impl FundamentalCycle {
    /// Star construction over the atlas's cycle triples.
    pub fn build(atlas: &Atlas) -> Result<FundamentalCycle, Error> {
        let mut eps = BTreeMap::new();
        for t in &atlas.cycle_triples {
            eps.insert(t.clone(), orientation(atlas, t)?);
        }
        FundamentalCycle::build_with_signs(atlas, eps)
    }

    pub fn build_with_signs(
        atlas: &Atlas,
        eps: BTreeMap<Tuple, i32>,
    ) -> Result<FundamentalCycle, Error> {
        let mut s0 = Chain::new();
        let mut s1 = Chain::new();
        let mut s2 = Chain::new();
        for (t, e) in &eps {
            let e = *e as i64;
            let (i, j, k) = (t[0], t[1], t[2]);
            let (ti, tj, tk) = (vec![i], vec![j], vec![k]);
            let (tij, tik, tjk) = (vec![i, j], vec![i, k], vec![j, k]);
            for s in [&ti, &tj, &tk, &tij, &tik, &tjk, t] {
                if !atlas.regions.contains_key(s) {
                    return Err(Error::MissingSeed { tuple: s.clone() });
                }
            }
            s0.add_term(seed(&[&ti, &tij, t]), ti.clone(), e);
            s0.add_term(seed(&[&ti, &tik, t]), ti.clone(), -e);
            s0.add_term(seed(&[&tj, &tij, t]), tj.clone(), -e);
            s0.add_term(seed(&[&tj, &tjk, t]), tj.clone(), e);
            s0.add_term(seed(&[&tk, &tik, t]), tk.clone(), e);
            s0.add_term(seed(&[&tk, &tjk, t]), tk.clone(), -e);
            s1.add_term(seed(&[&tik, t]), tik.clone(), e);
            s1.add_term(seed(&[&tij, t]), tij.clone(), -e);
            s1.add_term(seed(&[&tjk, t]), tjk.clone(), -e);
            s2.add_term(seed(&[t]), t.clone(), -e);
        }
        Ok(FundamentalCycle {
            sigma0: s0,
            sigma1: s1,
            sigma2: s2,
            eps,
        })
    }

    /// Σ0 + Σ1 − Σ2.
    pub fn total(&self) -> Chain {
        self.sigma0.add(&self.sigma1).sub(&self.sigma2)
    }

    /// ′Σ = (Σ0, −Σ1, −Σ2).
    pub fn shifted(&self) -> Chain {
        self.total().shift()
    }

    /// Exact checks of the descent equations and of ∂Σ = 0.
    pub fn verify(&self) -> Vec<Report> {
        let d1 = self.sigma0.boundary_prime().sub(&self.sigma1.boundary_second());
        let d2 = self.sigma1.boundary_prime().sub(&self.sigma2.boundary_second());
        let d3 = self.sigma2.boundary_prime();
        let d4 = self.sigma0.boundary_second();
        let tot = self.total().total_boundary();
        let aug = self.total().part(0, 2).augment_second();
        let expect: BTreeMap<Tuple, i64> = self
            .eps
            .iter()
            .map(|(t, e)| (t.clone(), *e as i64))
            .collect();
        let sh = self.shifted().shifted_boundary();
        vec![
            Report::flag("∂′Σ0 = ∂″Σ1", d1.is_zero(), format!("{} residual terms", d1.len())),
            Report::flag("∂′Σ1 = ∂″Σ2", d2.is_zero(), format!("{} residual terms", d2.len())),
            Report::flag("∂′Σ2 = 0", d3.is_zero(), format!("{} residual terms", d3.len())),
            Report::flag("∂″Σ0 = 0", d4.is_zero(), format!("{} residual terms", d4.len())),
            Report::flag("∂Σ = 0", tot.is_zero(), format!("{} residual terms", tot.len())),
            Report::flag(
                "second augmentation = Σ ε Δ_ijk",
                aug == expect,
                format!("{} triples", expect.len()),
            ),
            Report::flag(
                "shifted cycle closed",
                sh.is_zero(),
                format!("{} residual terms", sh.len()),
            ),
            Report::flag(
                "first augmentation boundary-free",
                boundary_plain(&self.sigma0.augment()).is_empty(),
                String::new(),
            ),
        ]
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn pt(a: f64, b: f64) -> Pt {
        Pt::new(C64::new(a, b))
    }

    #[test]
    fn triangle_boundary_has_three_edges() {
        let s = Simplex::Affine {
            chart: 0,
            pts: vec![pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0)],
        };
        let c = Chain::single(s, vec![0], 1);
        let b = c.boundary_prime();
        assert_eq!(b.len(), 3);
        assert!(b.boundary_prime().is_zero());
    }

    #[test]
    fn pair_boundary_second_pattern() {
        let s = Simplex::Affine {
            chart: 1,
            pts: vec![pt(0.0, 0.0)],
        };
        let c = Chain::single(s.clone(), vec![0, 1], 1);
        let b = c.boundary_second();
        assert_eq!(b.terms.get(&(s.clone(), vec![1])), Some(&1));
        assert_eq!(b.terms.get(&(s, vec![0])), Some(&-1));
    }

    #[test]
    fn affine_normalization_tracks_parity() {
        let mut c = Chain::new();
        c.add_term(
            Simplex::Affine {
                chart: 0,
                pts: vec![pt(0.0, 0.0), pt(1.0, 0.0)],
            },
            vec![0],
            1,
        );
        c.add_term(
            Simplex::Affine {
                chart: 0,
                pts: vec![pt(1.0, 0.0), pt(0.0, 0.0)],
            },
            vec![0],
            1,
        );
        assert!(c.is_zero());
    }

    #[test]
    fn chain_round_trips_through_json() {
        let mut c = Chain::new();
        c.add_term(Simplex::Affine { chart: 2, pts: vec![pt(0.1, -0.3), pt(1.0, 0.5)] }, vec![1, 2], -3);
        c.add_term(Simplex::Seed(vec![vec![0], vec![0, 1]]), vec![0, 1], 2);
        let s = serde_json::to_string(&c).unwrap();
        let back: Chain = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn shift_of_zero_is_zero() {
        assert!(Chain::new().shift().is_zero());
    }
}
