//! Atlases of holomorphic charts, transition maps with branch-resolved
//! logarithmic derivatives, intersection combinatorics and the nerve.

use crate::fields::{pullback_value, FormField, FormValue, PointMap};
use crate::jet::Jet;
use crate::{Error, Report, TWO_PI_I};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

pub type Tuple = Vec<usize>;

/// Holomorphic coordinate change z_ij, mapping chart-j coordinates to
/// chart-i coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum HoloMap {
    /// (a z + b)/(c z + d)
    Mobius([C64; 4]),
    Exp,
    /// Principal log plus 2πi·k.
    Log(i64),
}

impl HoloMap {
    pub fn identity() -> HoloMap {
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        HoloMap::Mobius([o, z, z, o])
    }

    pub fn translation(t: C64) -> HoloMap {
        HoloMap::Mobius([C64::new(1.0, 0.0), t, C64::new(0.0, 0.0), C64::new(1.0, 0.0)])
    }

    /// Möbius map normalized to unit determinant.
    pub fn mobius(m: [C64; 4]) -> HoloMap {
        let det = m[0] * m[3] - m[1] * m[2];
        let s = det.sqrt().inv();
        HoloMap::Mobius([m[0] * s, m[1] * s, m[2] * s, m[3] * s])
    }

    pub fn apply(&self, z: C64) -> C64 {
        match self {
            HoloMap::Mobius(m) => (m[0] * z + m[1]) / (m[2] * z + m[3]),
            HoloMap::Exp => z.exp(),
            HoloMap::Log(k) => z.ln() + TWO_PI_I * (*k as f64),
        }
    }

    pub fn deriv(&self, z: C64) -> C64 {
        match self {
            HoloMap::Mobius(m) => {
                let den = m[2] * z + m[3];
                (m[0] * m[3] - m[1] * m[2]) / (den * den)
            }
            HoloMap::Exp => z.exp(),
            HoloMap::Log(_) => z.inv(),
        }
    }

    pub fn apply_jet(&self, z: &Jet) -> Jet {
        match self {
            HoloMap::Mobius(m) => {
                let num = z.scale(m[0]).add_const(m[1]);
                let den = z.scale(m[2]).add_const(m[3]);
                num * den.recip()
            }
            HoloMap::Exp => z.exp(),
            HoloMap::Log(k) => z.ln().add_const(TWO_PI_I * (*k as f64)),
        }
    }

    pub fn deriv_jet(&self, z: &Jet) -> Jet {
        match self {
            HoloMap::Mobius(m) => {
                let den = z.scale(m[2]).add_const(m[3]);
                let r = den.recip();
                (r * r).scale(m[0] * m[3] - m[1] * m[2])
            }
            HoloMap::Exp => z.exp(),
            HoloMap::Log(_) => z.recip(),
        }
    }

    /// z″/z′ as a jet.
    pub fn ratio_jet(&self, z: &Jet) -> Jet {
        match self {
            HoloMap::Mobius(m) => {
                let den = z.scale(m[2]).add_const(m[3]);
                den.recip().scale(-2.0 * m[2])
            }
            HoloMap::Exp => Jet::real(1.0, z.order()),
            HoloMap::Log(_) => -z.recip(),
        }
    }

    /// Pullback of a chart form by this map, at the coordinate jet `z`.
    pub fn pull_back(&self, form: &FormField, z: &Jet) -> FormValue {
        let w = self.apply_jet(z);
        let v = form(&Jet::var(w.value(), z.order())).compose_jet(&w);
        pullback_value(&v, &self.deriv_jet(z))
    }

    pub fn inverse(&self) -> HoloMap {
        match self {
            HoloMap::Mobius(m) => HoloMap::Mobius([m[3], -m[1], -m[2], m[0]]),
            HoloMap::Exp => HoloMap::Log(0),
            HoloMap::Log(_) => HoloMap::Exp,
        }
    }

    /// self ∘ other for Möbius maps.
    pub fn compose(&self, other: &HoloMap) -> Option<HoloMap> {
        match (self, other) {
            (HoloMap::Mobius(a), HoloMap::Mobius(b)) => Some(HoloMap::Mobius([
                a[0] * b[0] + a[1] * b[2],
                a[0] * b[1] + a[1] * b[3],
                a[2] * b[0] + a[3] * b[2],
                a[2] * b[1] + a[3] * b[3],
            ])),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HoloMap::Mobius(_) => "mobius",
            HoloMap::Exp => "exp",
            HoloMap::Log(_) => "log",
        }
    }
}

impl PointMap for HoloMap {
    fn apply(&self, z: C64) -> C64 {
        HoloMap::apply(self, z)
    }
    fn deriv(&self, z: C64) -> C64 {
        HoloMap::deriv(self, z)
    }
}

/// Continues log g from `from` (where it equals `log_from`) to `to` along
/// the straight segment, subdividing until each step turns the argument
/// by less than π/4.
pub fn track_log(g: &dyn Fn(C64) -> C64, from: C64, log_from: C64, to: C64) -> C64 {
    const PIECES: usize = 8;
    let mut l = log_from;
    let mut gp = g(from);
    let mut p = from;
    for s in 1..=PIECES {
        let q = from + (to - from) * (s as f64 / PIECES as f64);
        let (lq, gq) = track_step(g, p, gp, l, q, 0);
        l = lq;
        gp = gq;
        p = q;
    }
    l
}

fn track_step(
    g: &dyn Fn(C64) -> C64,
    p: C64,
    gp: C64,
    lp: C64,
    q: C64,
    depth: u32,
) -> (C64, C64) {
    let gq = g(q);
    let delta = (gq / gp).ln();
    if delta.im.abs() < PI / 4.0 || depth > 48 {
        return (lp + delta, gq);
    }
    let m = (p + q) * 0.5;
    let (lm, gm) = track_step(g, p, gp, lp, m, depth + 1);
    track_step(g, m, gm, lm, q, depth + 1)
}

#[derive(Clone, Debug, Serialize)]
pub struct Chart {
    pub id: usize,
    pub label: String,
    /// Polygonal coordinate region.
    pub domain: Vec<C64>,
}

/// Declared region of a nonempty intersection, in the coordinates of its
/// last chart.
#[derive(Clone, Debug, Serialize)]
pub struct Region {
    pub polygon: Vec<C64>,
    pub seed: C64,
    pub samples: Vec<C64>,
}

impl Region {
    /// Region with default seed (vertex centroid) and radial samples.
    pub fn from_polygon(polygon: Vec<C64>) -> Region {
        let seed = polygon.iter().sum::<C64>() / polygon.len() as f64;
        Region::with_seed(polygon, seed)
    }

    pub fn with_seed(polygon: Vec<C64>, seed: C64) -> Region {
        let mut samples = vec![seed];
        let n = polygon.len();
        let stride = n.div_ceil(12).max(1);
        for k in (0..n).step_by(stride) {
            let v = polygon[k];
            samples.push(seed + (v - seed) * 0.4);
            samples.push(seed + (v - seed) * 0.75);
            let mid = (v + polygon[(k + stride).min(n) % n]) * 0.5;
            samples.push(seed + (mid - seed) * 0.6);
        }
        Region {
            polygon,
            seed,
            samples,
        }
    }
}

/// Charts, transitions, declared intersections and log-branch choices.
#[derive(Clone, Debug)]
pub struct Atlas {
    pub name: String,
    pub charts: Vec<Chart>,
    trans: BTreeMap<(usize, usize), HoloMap>,
    pub regions: BTreeMap<Tuple, Region>,
    /// Tuples of length up to this value have been enumerated.
    pub listed_depth: usize,
    /// Triples whose signed sum is the 2-cycle of the cover.
    pub cycle_triples: Vec<Tuple>,
    /// Integer shifts k_ij of log z′_ij.
    log_shift: BTreeMap<(usize, usize), i64>,
    base_log: BTreeMap<(usize, usize), (C64, C64)>,
}

impl Atlas {
    /// Builds an atlas. `trans` must contain z_ij for every ordered pair
    /// of distinct charts sharing a declared tuple.
    pub fn new(
        name: &str,
        charts: Vec<Chart>,
        trans: BTreeMap<(usize, usize), HoloMap>,
        regions: BTreeMap<Tuple, Region>,
        listed_depth: usize,
        cycle_triples: Option<Vec<Tuple>>,
    ) -> Result<Atlas, Error> {
        for (k, c) in charts.iter().enumerate() {
            if c.id != k {
                return Err(Error::Config {
                    path: format!("charts[{k}].id"),
                    msg: "chart ids must be 0..n in order".into(),
                });
            }
        }
        for t in regions.keys() {
            if t.windows(2).any(|w| w[0] >= w[1]) || t.iter().any(|&i| i >= charts.len()) {
                return Err(Error::Config {
                    path: format!("intersections{t:?}"),
                    msg: "tuples must be strictly increasing chart ids".into(),
                });
            }
            for m in 0..t.len() {
                if t.len() > 1 {
                    let mut f = t.clone();
                    f.remove(m);
                    if !regions.contains_key(&f) {
                        return Err(Error::Config {
                            path: format!("intersections{t:?}"),
                            msg: format!("face {f:?} not declared"),
                        });
                    }
                }
            }
            for &i in t {
                for &j in t {
                    if i != j && !trans.contains_key(&(i, j)) {
                        return Err(Error::MissingTransition(i, j));
                    }
                }
            }
        }
        let cycle_triples = cycle_triples.unwrap_or_else(|| {
            regions.keys().filter(|t| t.len() == 3).cloned().collect()
        });
        let mut atlas = Atlas {
            name: name.to_string(),
            charts,
            trans,
            regions,
            listed_depth,
            cycle_triples,
            log_shift: BTreeMap::new(),
            base_log: BTreeMap::new(),
        };
        atlas.refresh_base_logs();
        Ok(atlas)
    }

    fn refresh_base_logs(&mut self) {
        let mut base = BTreeMap::new();
        for t in self.regions.keys().filter(|t| t.len() == 2) {
            for (i, j) in [(t[0], t[1]), (t[1], t[0])] {
                let b = self.seed_in(t, j);
                let z = self.trans[&(i, j)].deriv(b);
                let k = *self.log_shift.get(&(i, j)).unwrap_or(&0);
                base.insert((i, j), (b, z.ln() + TWO_PI_I * k as f64));
            }
        }
        self.base_log = base;
    }

    /// Same atlas with log z′_ij shifted by 2πi·k_ij.
    pub fn with_log_shifts(&self, shifts: &BTreeMap<(usize, usize), i64>) -> Atlas {
        let mut a = self.clone();
        for (key, k) in shifts {
            *a.log_shift.entry(*key).or_insert(0) += k;
        }
        a.refresh_base_logs();
        a
    }

    pub fn log_shift(&self, i: usize, j: usize) -> i64 {
        *self.log_shift.get(&(i, j)).unwrap_or(&0)
    }

    pub fn n_charts(&self) -> usize {
        self.charts.len()
    }

    pub fn transition(&self, i: usize, j: usize) -> Result<HoloMap, Error> {
        if i == j {
            return Ok(HoloMap::identity());
        }
        self.trans
            .get(&(i, j))
            .cloned()
            .ok_or(Error::MissingTransition(i, j))
    }

    /// Borrowing access for hot paths; panics on undeclared pairs.
    pub fn tr(&self, i: usize, j: usize) -> &HoloMap {
        static ID: std::sync::OnceLock<HoloMap> = std::sync::OnceLock::new();
        if i == j {
            return ID.get_or_init(HoloMap::identity);
        }
        self.trans
            .get(&(i, j))
            .unwrap_or_else(|| panic!("no transition z_{i}{j}"))
    }

    pub fn transitions(&self) -> &BTreeMap<(usize, usize), HoloMap> {
        &self.trans
    }

    /// Replaces one transition (used for negative controls).
    pub fn with_transition(&self, i: usize, j: usize, map: HoloMap) -> Atlas {
        let mut a = self.clone();
        a.trans.insert((i, j), map);
        a.refresh_base_logs();
        a
    }

    /// Maps a point from chart `from` to chart `to`.
    pub fn map_point(&self, to: usize, from: usize, z: C64) -> C64 {
        self.tr(to, from).apply(z)
    }

    /// Seed of a tuple expressed in chart `c`.
    pub fn seed_in(&self, t: &[usize], c: usize) -> C64 {
        let r = &self.regions[t];
        self.map_point(c, *t.last().unwrap(), r.seed)
    }

    pub fn tuples(&self, len: usize) -> impl Iterator<Item = &Tuple> {
        self.regions.keys().filter(move |t| t.len() == len)
    }

    /// Branch-resolved log z′_ij as a jet in chart-j coordinates.
    pub fn log_deriv(&self, i: usize, j: usize, z: &Jet) -> Jet {
        if i == j {
            return Jet::real(0.0, z.order());
        }
        let t = self.tr(i, j);
        let l0 = self.log_deriv_value(i, j, z.value());
        t.deriv_jet(z).ln_with(l0)
    }

    pub fn log_deriv_value(&self, i: usize, j: usize, z: C64) -> C64 {
        if i == j {
            return C64::new(0.0, 0.0);
        }
        let t = self.tr(i, j);
        let (b, lb) = self.base_log[&(i, j)];
        track_log(&|w| t.deriv(w), b, lb, z)
    }

    /// z″_ij/z′_ij as a jet in chart-j coordinates.
    pub fn ratio(&self, i: usize, j: usize, z: &Jet) -> Jet {
        if i == j {
            return Jet::real(0.0, z.order());
        }
        self.tr(i, j).ratio_jet(z)
    }

    /// Samples of a tuple's region in chart `c` coordinates.
    pub fn samples_in(&self, t: &[usize], c: usize) -> Vec<C64> {
        let last = *t.last().unwrap();
        self.regions[t]
            .samples
            .iter()
            .map(|z| self.map_point(c, last, *z))
            .collect()
    }

    pub fn build_nerve(&self, max_q: usize) -> Result<Nerve, Error> {
        if max_q + 1 > self.listed_depth {
            return Err(Error::MissingIntersection { order: max_q + 1 });
        }
        let levels = (0..=max_q)
            .map(|q| self.tuples(q + 1).cloned().collect())
            .collect();
        Ok(Nerve { levels })
    }

    /// Max |z_ik − z_ij∘z_jk| over samples of every ordered triple.
    pub fn verify_transitions(&self, tol: f64) -> Report {
        let mut worst = 0.0f64;
        let mut detail = String::new();
        for t in self.tuples(3) {
            for (i, j, k) in permutations3(t) {
                for z in self.samples_in(t, k) {
                    let a = self.tr(i, k).apply(z);
                    let b = self.tr(i, j).apply(self.tr(j, k).apply(z));
                    let r = (a - b).norm();
                    if !r.is_finite() || r > worst {
                        worst = if r.is_finite() { r } else { f64::INFINITY };
                        detail = format!("triple ({i},{j},{k}) at {z}");
                    }
                }
            }
        }
        Report::new("transition cocycle", worst, tol, detail)
    }

    /// Integer Chern cocycle c_ijk = δ̌(log z′)_ijk / 2πi.
    pub fn chern_cocycle(&self) -> Result<BTreeMap<Tuple, i64>, Error> {
        let mut out = BTreeMap::new();
        for t in self.tuples(3) {
            let (i, j, k) = (t[0], t[1], t[2]);
            let mut val: Option<i64> = None;
            for z in self.samples_in(t, k) {
                let s = self.log_deriv_value(j, k, z) - self.log_deriv_value(i, k, z)
                    + self.log_deriv_value(i, j, self.tr(j, k).apply(z));
                let x = s / TWO_PI_I;
                let n = x.re.round();
                let res = (x - C64::new(n, 0.0)).norm();
                if res > 1e-6 {
                    return Err(Error::BranchInconsistency {
                        tuple: t.clone(),
                        residual: res,
                    });
                }
                match val {
                    None => val = Some(n as i64),
                    Some(v) if v != n as i64 => {
                        return Err(Error::BranchInconsistency {
                            tuple: t.clone(),
                            residual: (v as f64 - n).abs(),
                        })
                    }
                    _ => {}
                }
            }
            out.insert(t.clone(), val.unwrap_or(0));
        }
        Ok(out)
    }

    /// Signed sum Σ ε_ijk c_ijk over the cover's 2-cycle.
    pub fn chern_number(&self, eps: &BTreeMap<Tuple, i32>) -> Result<i64, Error> {
        let c = self.chern_cocycle()?;
        Ok(eps.iter().map(|(t, e)| *e as i64 * c[t]).sum())
    }

    /// Schwarzian {z_i, z_j} in chart-j coordinates.
    pub fn schwarzian(&self, i: usize, j: usize, z: &Jet) -> Jet {
        let r = self.ratio_raised(i, j, z);
        r.dz() - (r * r).truncate(r.order() - 1) * 0.5
    }

    fn ratio_raised(&self, i: usize, j: usize, z: &Jet) -> Jet {
        let n = z.order() + 1;
        let mut zz = Jet::var(z.value(), n);
        for d in 1..=z.order() {
            for b in 0..=d {
                zz.set_coef(d - b, b, z.coef(d - b, b));
            }
        }
        self.ratio(i, j, &zz)
    }

    /// Checks {z_i, z_j} = h_j − (h_i∘z_ij)(z′_ij)² on pair samples.
    pub fn verify_projective_connection(
        &self,
        h: &dyn Fn(usize, &Jet) -> Jet,
        tol: f64,
    ) -> Report {
        let mut worst = 0.0f64;
        let mut detail = String::new();
        for t in self.tuples(2) {
            for (i, j) in [(t[0], t[1]), (t[1], t[0])] {
                for z in self.samples_in(t, j) {
                    let zj = Jet::var(z, 1);
                    let s = self.schwarzian(i, j, &zj).value();
                    let tr = self.tr(i, j);
                    let w = tr.apply_jet(&zj);
                    let dz = tr.deriv(z);
                    let rhs = h(j, &zj).value() - h(i, &w).value() * dz * dz;
                    let r = (s - rhs).norm();
                    if r > worst {
                        worst = r;
                        detail = format!("pair ({i},{j}) at {z}");
                    }
                }
            }
        }
        Report::new("projective connection", worst, tol, detail)
    }
}

fn permutations3(t: &[usize]) -> Vec<(usize, usize, usize)> {
    let (a, b, c) = (t[0], t[1], t[2]);
    vec![
        (a, b, c),
        (a, c, b),
        (b, a, c),
        (b, c, a),
        (c, a, b),
        (c, b, a),
    ]
}

/// Nerve of the cover: ordered tuples per level.
#[derive(Clone, Debug, Serialize)]
pub struct Nerve {
    pub levels: Vec<Vec<Tuple>>,
}

impl Nerve {
    /// Face map d_k: omit the k-th index.
    pub fn face(t: &[usize], k: usize) -> Tuple {
        let mut f = t.to_vec();
        f.remove(k);
        f
    }

    pub fn counts(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.len()).collect()
    }

    /// Checks d_k d_l = d_{l−1} d_k for k < l on every tuple.
    pub fn check_simplicial_identities(&self) -> bool {
        self.levels.iter().flatten().all(|t| {
            let q = t.len();
            (0..q).all(|l| {
                (0..l).all(|k| {
                    Nerve::face(&Nerve::face(t, l), k) == Nerve::face(&Nerve::face(t, k), l - 1)
                })
            })
        })
    }

    pub fn contains(&self, t: &[usize]) -> bool {
        !t.is_empty()
            && t.len() <= self.levels.len()
            && self.levels[t.len() - 1].iter().any(|s| s == t)
    }
}

/// A per-chart scalar field evaluated on jets.
pub type ChartFn = Arc<dyn Fn(usize, &Jet) -> Jet + Send + Sync>;

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn track_log_follows_winding() {
        // log z along a path around the origin picks up 2πi
        let g = |z: C64| z;
        let mut l = C64::new(0.0, 0.0);
        let pts = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0), c(1.0, 0.0)];
        for w in pts.windows(2) {
            l = track_log(&g, w[0], l, w[1]);
        }
        assert!((l - TWO_PI_I).norm() < 1e-12);
    }

    #[test]
    fn mobius_schwarzian_vanishes() {
        let m = HoloMap::mobius([c(1.0, 0.2), c(0.3, 0.0), c(0.5, -0.1), c(2.0, 0.0)]);
        let z = Jet::var(c(0.1, 0.3), 4);
        let r = {
            let mut zz = Jet::var(z.value(), 5);
            zz.set_coef(1, 0, c(1.0, 0.0));
            m.ratio_jet(&zz)
        };
        let s = r.dz() - (r * r).truncate(3) * 0.5;
        assert!(s.max_abs() < 1e-12);
    }

    #[test]
    fn mobius_derivatives_match_jets() {
        let m = HoloMap::mobius([c(1.0, 0.2), c(0.3, 0.0), c(0.5, -0.1), c(2.0, 0.0)]);
        let z = Jet::var(c(0.1, 0.3), 4);
        let w = m.apply_jet(&z);
        let dw = m.deriv_jet(&z);
        assert!((w.dz() - dw.truncate(3)).max_abs() < 1e-12);
        let ratio = m.ratio_jet(&z);
        assert!((dw.dz() * dw.recip().truncate(3) - ratio.truncate(3)).max_abs() < 1e-12);
        let inv = m.inverse();
        assert!((inv.apply(m.apply(c(0.4, 0.1))) - c(0.4, 0.1)).norm() < 1e-14);
    }
}
