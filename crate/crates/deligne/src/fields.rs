//! Chart-local differential forms, exterior derivative, pullback along
//! holomorphic maps and quadrature over singular simplices.

use crate::jet::Jet;
use num_complex::Complex64 as C64;
use std::sync::Arc;

/// A form evaluated at a jet point: `F0(g)`, `F1(A, B)` = A dz + B dz̄,
/// `F2(C)` = C dz∧dz̄.
#[derive(Clone, Copy, Debug)]
pub enum FormValue {
    F0(Jet),
    F1(Jet, Jet),
    F2(Jet),
}

impl FormValue {
    pub fn degree(&self) -> usize {
        match self {
            FormValue::F0(_) => 0,
            FormValue::F1(..) => 1,
            FormValue::F2(_) => 2,
        }
    }

    pub fn order(&self) -> usize {
        match self {
            FormValue::F0(g) | FormValue::F2(g) => g.order(),
            FormValue::F1(a, b) => a.order().min(b.order()),
        }
    }

    pub fn zero(deg: usize, n: usize) -> FormValue {
        let z = Jet::real(0.0, n);
        match deg {
            0 => FormValue::F0(z),
            1 => FormValue::F1(z, z),
            2 => FormValue::F2(z),
            _ => panic!("form degree {deg} exceeds surface dimension"),
        }
    }

    pub fn add(&self, o: &FormValue) -> FormValue {
        match (self, o) {
            (FormValue::F0(a), FormValue::F0(b)) => FormValue::F0(*a + *b),
            (FormValue::F1(a, b), FormValue::F1(c, d)) => FormValue::F1(*a + *c, *b + *d),
            (FormValue::F2(a), FormValue::F2(b)) => FormValue::F2(*a + *b),
            _ => panic!("adding forms of different degree"),
        }
    }

    pub fn scale(&self, s: C64) -> FormValue {
        match self {
            FormValue::F0(a) => FormValue::F0(a.scale(s)),
            FormValue::F1(a, b) => FormValue::F1(a.scale(s), b.scale(s)),
            FormValue::F2(a) => FormValue::F2(a.scale(s)),
        }
    }

    pub fn sub(&self, o: &FormValue) -> FormValue {
        self.add(&o.scale(C64::new(-1.0, 0.0)))
    }

    /// Multiplication by a function jet.
    pub fn mul_fn(&self, g: &Jet) -> FormValue {
        match self {
            FormValue::F0(a) => FormValue::F0(*a * *g),
            FormValue::F1(a, b) => FormValue::F1(*a * *g, *b * *g),
            FormValue::F2(a) => FormValue::F2(*a * *g),
        }
    }

    /// Composes every coefficient with the jet W (see `Jet::compose_jet`).
    pub fn compose_jet(&self, w: &Jet) -> FormValue {
        match self {
            FormValue::F0(a) => FormValue::F0(a.compose_jet(w)),
            FormValue::F1(a, b) => FormValue::F1(a.compose_jet(w), b.compose_jet(w)),
            FormValue::F2(a) => FormValue::F2(a.compose_jet(w)),
        }
    }

    pub fn truncate(&self, n: usize) -> FormValue {
        match self {
            FormValue::F0(a) => FormValue::F0(a.truncate(n)),
            FormValue::F1(a, b) => FormValue::F1(a.truncate(n), b.truncate(n)),
            FormValue::F2(a) => FormValue::F2(a.truncate(n)),
        }
    }

    /// Largest absolute value among the zeroth-order coefficients.
    pub fn norm0(&self) -> f64 {
        match self {
            FormValue::F0(a) | FormValue::F2(a) => a.value().norm(),
            FormValue::F1(a, b) => a.value().norm().max(b.value().norm()),
        }
    }

    pub fn as_f0(&self) -> Jet {
        match self {
            FormValue::F0(a) => *a,
            _ => panic!("expected a function"),
        }
    }

    pub fn as_f1(&self) -> (Jet, Jet) {
        match self {
            FormValue::F1(a, b) => (*a, *b),
            _ => panic!("expected a 1-form"),
        }
    }

    pub fn as_f2(&self) -> Jet {
        match self {
            FormValue::F2(a) => *a,
            _ => panic!("expected a 2-form"),
        }
    }
}

/// Exterior derivative. Lowers the jet order by one.
pub fn d(w: &FormValue) -> FormValue {
    match w {
        FormValue::F0(g) => FormValue::F1(g.dz(), g.dzbar()),
        FormValue::F1(a, b) => FormValue::F2(b.dz() - a.dzbar()),
        FormValue::F2(_) => panic!("d of a top-degree form on a surface"),
    }
}

/// Wedge product of two 1-forms.
pub fn wedge11(a: (Jet, Jet), b: (Jet, Jet)) -> Jet {
    a.0 * b.1 - a.1 * b.0
}

/// Pulls back a form evaluated at W = T(Z) to the Z-coordinate, given
/// the holomorphic derivative jet T′(Z).
pub fn pullback_value(w: &FormValue, tprime: &Jet) -> FormValue {
    match w {
        FormValue::F0(g) => FormValue::F0(*g),
        FormValue::F1(a, b) => FormValue::F1(*a * *tprime, *b * tprime.conj()),
        FormValue::F2(c) => FormValue::F2(*c * *tprime * tprime.conj()),
    }
}

/// A chart-local form field. It is only ever evaluated at coordinate
/// jets `Jet::var(z0, n)`; pullbacks go through `HoloMap::pull_back`.
pub type FormField = Arc<dyn Fn(&Jet) -> FormValue + Send + Sync>;

/// Gauss–Legendre rule on [0, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> GaussLegendre {
        assert!(n >= 1);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            nodes.push(0.5 * (1.0 - x));
            weights.push(1.0 / ((1.0 - x * x) * dp * dp));
        }
        GaussLegendre { nodes, weights }
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature orders: `segment` Gauss–Legendre points on paths and a
/// `triangle` × `triangle` collapsed tensor rule on 2-simplices.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub segment: GaussLegendre,
    pub triangle: GaussLegendre,
    /// Jet order of the coordinate handed to integrands.
    pub jet_order: usize,
}

impl QuadratureRule {
    pub fn new(triangle_order: usize, segment_order: usize) -> QuadratureRule {
        QuadratureRule {
            segment: GaussLegendre::new(segment_order),
            triangle: GaussLegendre::new(triangle_order),
            jet_order: 2,
        }
    }

    /// Nodes and weights of the collapsed rule on the reference
    /// triangle {(s, t): s, t ≥ 0, s + t ≤ 1}.
    pub fn triangle_nodes(&self) -> Vec<(f64, f64, f64)> {
        let g = &self.triangle;
        let mut out = Vec::new();
        for (r, wr) in g.nodes.iter().zip(&g.weights) {
            for (u, wu) in g.nodes.iter().zip(&g.weights) {
                out.push((r * (1.0 - u), r * u, wr * wu * r));
            }
        }
        out
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::new(16, 16)
    }
}

/// A holomorphic change of coordinates applied to a parameter point.
pub trait PointMap: Send + Sync {
    fn apply(&self, z: C64) -> C64;
    fn deriv(&self, z: C64) -> C64;
}

/// Parameterized geometry of a singular simplex in one chart.
pub enum Geometry<'a> {
    Point(C64),
    /// Straight segment from `a` to `b` in a source chart, followed by
    /// an optional map into the integration chart.
    Segment {
        a: C64,
        b: C64,
        map: Option<&'a dyn PointMap>,
    },
    /// Cone from `apex` over a base segment (possibly mapped).
    Cone {
        apex: C64,
        base_a: C64,
        base_b: C64,
        base_map: Option<&'a dyn PointMap>,
    },
}

fn path_point(a: C64, b: C64, map: Option<&dyn PointMap>, u: f64) -> (C64, C64) {
    let p = a + (b - a) * u;
    match map {
        None => (p, b - a),
        Some(m) => (m.apply(p), m.deriv(p) * (b - a)),
    }
}

/// Integrates a form over a simplex. `form` evaluates in the
/// coordinates of the geometry at jets of order `rule.jet_order`.
pub fn integrate(
    form: &dyn Fn(&Jet) -> FormValue,
    geom: &Geometry,
    rule: &QuadratureRule,
) -> C64 {
    match geom {
        Geometry::Point(z) => form(&Jet::var(*z, rule.jet_order)).as_f0().value(),
        Geometry::Segment { a, b, map } => {
            let g = &rule.segment;
            let mut acc = C64::new(0.0, 0.0);
            for (u, w) in g.nodes.iter().zip(&g.weights) {
                let (z, dz) = path_point(*a, *b, *map, *u);
                let (fa, fb) = form(&Jet::var(z, rule.jet_order)).as_f1();
                acc += (fa.value() * dz + fb.value() * dz.conj()) * *w;
            }
            acc
        }
        Geometry::Cone {
            apex,
            base_a,
            base_b,
            base_map,
        } => {
            let g = &rule.triangle;
            let mut acc = C64::new(0.0, 0.0);
            for (u, wu) in g.nodes.iter().zip(&g.weights) {
                let (gam, dgam) = path_point(*base_a, *base_b, *base_map, *u);
                for (r, wr) in g.nodes.iter().zip(&g.weights) {
                    let z = apex + (gam - apex) * *r;
                    let zr = gam - apex;
                    let zu = dgam * *r;
                    let c = form(&Jet::var(z, rule.jet_order)).as_f2().value();
                    let jac = zr * zu.conj() - zu * zr.conj();
                    acc += c * jac * (wr * wu);
                }
            }
            acc
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let g = GaussLegendre::new(8);
        let s: f64 = g.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
        let m: f64 = g
            .nodes
            .iter()
            .zip(&g.weights)
            .map(|(x, w)| w * x.powi(15))
            .sum();
        assert!((m - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn dz_wedge_dzbar_over_unit_square() {
        let rule = QuadratureRule::default();
        let f = |z: &Jet| FormValue::F2(Jet::real(1.0, z.order()));
        let t1 = Geometry::Cone {
            apex: c(0.0, 0.0),
            base_a: c(1.0, 0.0),
            base_b: c(1.0, 1.0),
            base_map: None,
        };
        let t2 = Geometry::Cone {
            apex: c(0.0, 0.0),
            base_a: c(1.0, 1.0),
            base_b: c(0.0, 1.0),
            base_map: None,
        };
        let total = integrate(&f, &t1, &rule) + integrate(&f, &t2, &rule);
        assert!((total - c(0.0, -2.0)).norm() < 1e-14);
    }

    #[test]
    fn dz_over_segment() {
        let rule = QuadratureRule::default();
        let f = |z: &Jet| FormValue::F1(Jet::real(1.0, z.order()), Jet::real(0.0, z.order()));
        let a = c(0.2, -0.1);
        let b = c(-0.4, 0.9);
        let v = integrate(&f, &Geometry::Segment { a, b, map: None }, &rule);
        assert!((v - (b - a)).norm() < 1e-14);
    }

    #[test]
    fn d_squared_vanishes() {
        let z = Jet::var(c(0.3, 0.2), 4);
        let g = (z * z.conj()).exp() * z;
        let dd = d(&d(&FormValue::F0(g)));
        assert!(dd.as_f2().max_abs() < 1e-12);
    }

    #[test]
    fn d_of_z_zbar() {
        let z0 = c(0.5, -0.25);
        let z = Jet::var(z0, 2);
        let (a, b) = d(&FormValue::F0(z * z.conj())).as_f1();
        assert!((a.value() - z0.conj()).norm() < 1e-15);
        assert!((b.value() - z0).norm() < 1e-15);
    }
}
