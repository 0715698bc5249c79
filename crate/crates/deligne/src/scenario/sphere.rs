//! The Riemann sphere covered by eight spherical caps of radius 60°
//! centred at the face centres of the octahedron, with stereographic
//! charts.

use crate::atlas::{Atlas, Chart, HoloMap, Region, Tuple};
use crate::jet::Jet;
use crate::Error;
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;

pub type V3 = [f64; 3];

pub const CAP_RADIUS_DEG: f64 = 60.0;
const CAP_POLYGON: usize = 96;

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn crossv(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(a: V3) -> V3 {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

pub type M3 = [[f64; 3]; 3];

pub fn mat_vec(m: &M3, v: V3) -> V3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

pub fn transpose(m: &M3) -> M3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

/// Rotation taking unit vector `a` to unit vector `b` (Rodrigues).
fn rotation_to(a: V3, b: V3) -> M3 {
    let v = crossv(a, b);
    let c = dot(a, b);
    let s2 = dot(v, v);
    let mut r = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    if s2 < 1e-30 {
        return r;
    }
    let k = [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]];
    let f = (1.0 - c) / s2;
    for i in 0..3 {
        for j in 0..3 {
            let mut kk = 0.0;
            for l in 0..3 {
                kk += k[i][l] * k[l][j];
            }
            r[i][j] += k[i][j] + f * kk;
        }
    }
    r
}

/// Stereographic projection from the north pole.
pub fn stereo(x: V3) -> C64 {
    C64::new(x[0], x[1]) / (1.0 - x[2])
}

pub fn inv_stereo(z: C64) -> V3 {
    let r2 = z.norm_sqr();
    [2.0 * z.re / (1.0 + r2), 2.0 * z.im / (1.0 + r2), (r2 - 1.0) / (r2 + 1.0)]
}

/// Jet versions: a point of the sphere as three real-valued jets.
pub fn inv_stereo_jet(z: &Jet) -> [Jet; 3] {
    let zb = z.conj();
    let r2 = *z * zb;
    let den = r2.add_const(C64::new(1.0, 0.0)).recip();
    [
        (*z + zb) * den,
        (*z - zb) * den * C64::new(0.0, -1.0),
        r2.add_const(C64::new(-1.0, 0.0)) * den,
    ]
}

pub fn stereo_jet(x: &[Jet; 3]) -> Jet {
    let num = x[0] + x[1] * C64::new(0.0, 1.0);
    num * (-x[2]).add_const(C64::new(1.0, 0.0)).recip()
}

pub fn rotate_jet(m: &M3, x: &[Jet; 3]) -> [Jet; 3] {
    let row = |r: [f64; 3]| x[0] * r[0] + x[1] * r[1] + x[2] * r[2];
    [row(m[0]), row(m[1]), row(m[2])]
}

/// Möbius map through three point pairs.
pub fn mobius_from_points(src: [C64; 3], dst: [C64; 3]) -> HoloMap {
    let to_std = |z: [C64; 3]| {
        // z1 → 0, z2 → 1, z3 → ∞
        let a = z[1] - z[2];
        let c = z[1] - z[0];
        HoloMap::Mobius([a, -z[0] * a, c, -z[2] * c])
    };
    let m1 = to_std(src);
    let m2 = to_std(dst);
    let m = m2.inverse().compose(&m1).unwrap();
    match m {
        HoloMap::Mobius(c) => HoloMap::mobius(c),
        other => other,
    }
}

/// The octahedral cap cover.
pub struct SphereCaps {
    pub centres: Vec<V3>,
    /// R_A sends the centre of cap A to the south pole.
    pub rot: Vec<M3>,
    pub atlas: Atlas,
    /// Chart-to-global-coordinate maps (global = stereographic of the
    /// unrotated sphere).
    pub to_global: Vec<HoloMap>,
}

impl SphereCaps {
    pub fn chart_point(&self, a: usize, x: V3) -> C64 {
        stereo(mat_vec(&self.rot[a], x))
    }

    pub fn sphere_point(&self, a: usize, z: C64) -> V3 {
        mat_vec(&transpose(&self.rot[a]), inv_stereo(z))
    }
}

fn polygon_area(p: &[C64]) -> f64 {
    let n = p.len();
    (0..n)
        .map(|k| {
            let a = p[k];
            let b = p[(k + 1) % n];
            a.re * b.im - a.im * b.re
        })
        .sum::<f64>()
        * 0.5
}

/// Sutherland–Hodgman clip of `subject` by the convex ccw polygon `clip`.
fn clip_polygon(subject: &[C64], clip: &[C64]) -> Vec<C64> {
    let mut out = subject.to_vec();
    let n = clip.len();
    let inside = |a: C64, b: C64, p: C64| {
        let e = b - a;
        let q = p - a;
        e.re * q.im - e.im * q.re >= 0.0
    };
    for k in 0..n {
        if out.is_empty() {
            break;
        }
        let a = clip[k];
        let b = clip[(k + 1) % n];
        let input = std::mem::take(&mut out);
        let m = input.len();
        for i in 0..m {
            let p = input[i];
            let q = input[(i + 1) % m];
            let pin = inside(a, b, p);
            let qin = inside(a, b, q);
            if pin {
                out.push(p);
            }
            if pin != qin {
                let e = b - a;
                let d = q - p;
                let denom = e.re * d.im - e.im * d.re;
                if denom.abs() > 1e-300 {
                    let w = a - p;
                    let t = (e.re * w.im - e.im * w.re) / denom;
                    out.push(p + d * t);
                }
            }
        }
    }
    out
}

fn centroid(p: &[C64]) -> C64 {
    let n = p.len();
    let mut a = 0.0;
    let mut c = C64::new(0.0, 0.0);
    for k in 0..n {
        let p0 = p[k];
        let p1 = p[(k + 1) % n];
        let cr = p0.re * p1.im - p1.re * p0.im;
        a += cr;
        c += (p0 + p1) * cr;
    }
    c / (3.0 * a)
}

pub fn build_sphere_caps() -> Result<SphereCaps, Error> {
    let s = 1.0 / 3f64.sqrt();
    let mut centres = Vec::new();
    for a in [1.0, -1.0] {
        for b in [1.0, -1.0] {
            for c in [1.0, -1.0] {
                centres.push([a * s, b * s, c * s]);
            }
        }
    }
    let south = [0.0, 0.0, -1.0];
    let rot: Vec<M3> = centres.iter().map(|c| rotation_to(*c, south)).collect();
    let n = centres.len();
    let radius = CAP_RADIUS_DEG.to_radians();

    let chart_point = |a: usize, x: V3| stereo(mat_vec(&rot[a], x));
    let sphere_point = |a: usize, z: C64| mat_vec(&transpose(&rot[a]), inv_stereo(z));

    // cap boundary polygons in every chart
    let cap_boundary = |k: usize, chart: usize| -> Vec<C64> {
        let c = centres[k];
        let helper = if c[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let u = normalize(crossv(c, helper));
        let v = crossv(c, u);
        let mut pts: Vec<C64> = (0..CAP_POLYGON)
            .map(|m| {
                let phi = 2.0 * std::f64::consts::PI * m as f64 / CAP_POLYGON as f64;
                let x = [
                    c[0] * radius.cos() + (u[0] * phi.cos() + v[0] * phi.sin()) * radius.sin(),
                    c[1] * radius.cos() + (u[1] * phi.cos() + v[1] * phi.sin()) * radius.sin(),
                    c[2] * radius.cos() + (u[2] * phi.cos() + v[2] * phi.sin()) * radius.sin(),
                ];
                chart_point(chart, x)
            })
            .collect();
        if polygon_area(&pts) < 0.0 {
            pts.reverse();
        }
        pts
    };

    let mut trans = BTreeMap::new();
    let probe = [C64::new(0.05, 0.0), C64::new(-0.1, 0.08), C64::new(0.02, -0.12)];
    let fit = |a: usize, b: usize| {
        let dst = probe.map(|z| chart_point(a, sphere_point(b, z)));
        mobius_from_points(probe, dst)
    };

    let mut regions: BTreeMap<Tuple, Region> = BTreeMap::new();
    let mut subsets: Vec<Tuple> = (0..n).map(|i| vec![i]).collect();
    let mut level = subsets.clone();
    while !level.is_empty() {
        let mut next = Vec::new();
        for t in &level {
            let last = *t.last().unwrap();
            // a cap containing the projection pole of the last chart is
            // the exterior of its image circle; such caps miss that chart
            let pole = centres[last].map(|x| -x);
            if t.iter().any(|&k| dot(centres[k], pole) > radius.cos()) {
                continue;
            }
            let mut poly = cap_boundary(t[0], last);
            for &k in &t[1..] {
                poly = clip_polygon(&poly, &cap_boundary(k, last));
            }
            if poly.len() >= 3 && polygon_area(&poly) > 1e-4 {
                let seed = centroid(&poly);
                regions.insert(t.clone(), Region::with_seed(poly, seed));
                for j in last + 1..n {
                    let mut u = t.clone();
                    u.push(j);
                    next.push(u);
                }
            }
        }
        subsets.extend(next.iter().cloned());
        level = next;
    }
    for t in regions.keys().filter(|t| t.len() == 2) {
        trans.insert((t[0], t[1]), fit(t[0], t[1]));
        trans.insert((t[1], t[0]), fit(t[1], t[0]));
    }

    // cycle triples: at each octahedron vertex split the square of four
    // caps along the diagonal through the smallest index
    let mut cycle = Vec::new();
    for axis in 0..3 {
        for sgn in [1.0, -1.0] {
            let mut e = [0.0; 3];
            e[axis] = sgn;
            let around: Vec<usize> = (0..n).filter(|&k| dot(centres[k], e) > 0.0).collect();
            let a = *around.iter().min().unwrap();
            let opposite = *around
                .iter()
                .find(|&&k| k != a && dot(centres[k], centres[a]) < 0.0)
                .unwrap();
            for &b in around.iter().filter(|&&k| k != a && k != opposite) {
                let mut t = vec![a, opposite, b];
                t.sort();
                cycle.push(t);
            }
        }
    }
    cycle.sort();

    let charts = (0..n)
        .map(|a| Chart {
            id: a,
            label: format!("cap{a}"),
            domain: regions[&vec![a]].polygon.clone(),
        })
        .collect();
    let to_global = (0..n)
        .map(|a| {
            let dst = probe.map(|z| stereo(sphere_point(a, z)));
            mobius_from_points(probe, dst)
        })
        .collect();
    let atlas = Atlas::new("sphere", charts, trans, regions, 5, Some(cycle))?;
    Ok(SphereCaps {
        centres,
        rot,
        atlas,
        to_global,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_cover_counts() {
        let s = build_sphere_caps().unwrap();
        let a = &s.atlas;
        assert_eq!(a.tuples(1).count(), 8);
        assert_eq!(a.tuples(2).count(), 24);
        assert_eq!(a.tuples(3).count(), 24);
        assert_eq!(a.tuples(4).count(), 6);
        assert_eq!(a.tuples(5).count(), 0);
        assert_eq!(a.cycle_triples.len(), 12);
    }

    #[test]
    fn stereo_roundtrip() {
        let z = C64::new(0.3, -0.7);
        assert!((stereo(inv_stereo(z)) - z).norm() < 1e-14);
    }

    #[test]
    fn fitted_transitions_match_geometry() {
        let s = build_sphere_caps().unwrap();
        for ((a, b), m) in s.atlas.transitions() {
            let z = s.atlas.seed_in(&{
                let mut t = vec![*a, *b];
                t.sort();
                t
            }, *b);
            let direct = s.chart_point(*a, s.sphere_point(*b, z));
            assert!((m.apply(z) - direct).norm() < 1e-12);
        }
    }
}
