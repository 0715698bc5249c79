//! Star covers of the barycentric subdivision of a developed
//! triangulated surface: charts are subdivision vertices, pairs are
//! subdivision edges, triples are subdivision triangles.

use crate::atlas::{Atlas, Chart, HoloMap, Region, Tuple};
use crate::Error;
use num_complex::Complex64 as C64;
use std::collections::{BTreeMap, VecDeque};

/// Geometry of the model plane carrying the development.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    Euclidean,
    /// Poincaré disk.
    Disk,
}

impl Model {
    pub fn midpoint(&self, p: C64, q: C64) -> C64 {
        match self {
            Model::Euclidean => (p + q) * 0.5,
            Model::Disk => {
                let t = disk_normalizer(p);
                let qq = t.apply(q);
                let r = qq.norm();
                if r < 1e-300 {
                    return p;
                }
                let m = qq / r * (r.atanh() * 0.5).tanh();
                t.inverse().apply(m)
            }
        }
    }

    /// Chart normalization sending p to 0.
    pub fn normalizer(&self, p: C64) -> HoloMap {
        match self {
            Model::Euclidean => HoloMap::translation(-p),
            Model::Disk => disk_normalizer(p),
        }
    }
}

/// Disk automorphism z ↦ (z − p)/(1 − p̄ z).
pub fn disk_normalizer(p: C64) -> HoloMap {
    let one = C64::new(1.0, 0.0);
    HoloMap::mobius([one, -p, -p.conj(), one])
}

/// A triangulated fundamental domain with its deck generators.
pub struct Development {
    pub name: String,
    pub model: Model,
    /// Counterclockwise triangles of the base triangulation, as lift points.
    pub triangles: Vec<[C64; 3]>,
    /// Deck transformations identifying boundary lift points (inverses
    /// included).
    pub generators: Vec<HoloMap>,
}

/// Output of the star-cover construction.
pub struct StarCover {
    pub atlas: Atlas,
    /// Lift point of each chart's vertex.
    pub lifts: Vec<C64>,
    /// Map from the model plane to chart coordinates, per subdivision
    /// triangle and vertex class.
    pub chart_maps: Vec<(Tuple, Vec<HoloMap>)>,
}

fn compose(a: &HoloMap, b: &HoloMap) -> HoloMap {
    a.compose(b).expect("Möbius composition")
}

fn find_point(points: &[C64], q: C64, tol: f64) -> Option<usize> {
    points.iter().position(|p| (p - q).norm() < tol)
}

fn add_point(points: &mut Vec<C64>, q: C64, tol: f64) -> usize {
    match find_point(points, q, tol) {
        Some(i) => i,
        None => {
            points.push(q);
            points.len() - 1
        }
    }
}

fn same_map(a: &HoloMap, b: &HoloMap, tol: f64) -> bool {
    let probes = [C64::new(0.0, 0.0), C64::new(0.1, 0.05), C64::new(-0.07, 0.12)];
    probes
        .iter()
        .all(|z| (a.apply(*z) - b.apply(*z)).norm() < tol)
}

/// Builds the barycentric star cover of a development.
pub fn build_star_cover(dev: &Development) -> Result<StarCover, Error> {
    let tol = 1e-9;
    // barycentric subdivision, vertex order (base vertex, edge mid, centroid)
    let mut points: Vec<C64> = Vec::new();
    for t in &dev.triangles {
        for p in t {
            add_point(&mut points, *p, tol);
        }
    }
    let mut small: Vec<[usize; 3]> = Vec::new();
    let mut mids = Vec::new();
    for t in &dev.triangles {
        for k in 0..3 {
            mids.push(dev.model.midpoint(t[k], t[(k + 1) % 3]));
        }
    }
    for m in &mids {
        add_point(&mut points, *m, tol);
    }
    for t in &dev.triangles {
        let g = (t[0] + t[1] + t[2]) / 3.0;
        let gi = add_point(&mut points, g, tol);
        for k in 0..3 {
            let a = find_point(&points, t[k], tol).unwrap();
            let b = find_point(&points, t[(k + 1) % 3], tol).unwrap();
            let m = find_point(&points, dev.model.midpoint(t[k], t[(k + 1) % 3]), tol).unwrap();
            small.push([a, m, gi]);
            small.push([m, b, gi]);
        }
    }

    // classes of lift points under the deck generators
    let n = points.len();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (pi, p) in points.iter().enumerate() {
        for (gi, g) in dev.generators.iter().enumerate() {
            if let Some(qi) = find_point(&points, g.apply(*p), 1e-8) {
                if qi != pi {
                    adj[pi].push((qi, gi));
                }
            }
        }
    }
    let mut class = vec![usize::MAX; n];
    let mut elem: Vec<HoloMap> = vec![HoloMap::identity(); n];
    let mut canon: Vec<usize> = Vec::new();
    for start in 0..n {
        if class[start] != usize::MAX {
            continue;
        }
        let c = canon.len();
        canon.push(start);
        class[start] = c;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for &(q, g) in &adj[p] {
                if class[q] == usize::MAX {
                    class[q] = c;
                    elem[q] = compose(&dev.generators[g], &elem[p]);
                    queue.push_back(q);
                }
            }
        }
    }
    let nc = canon.len();
    let norm: Vec<HoloMap> = canon.iter().map(|&p| dev.model.normalizer(points[p])).collect();

    // chart coordinate maps per small triangle
    let mut trans: BTreeMap<(usize, usize), HoloMap> = BTreeMap::new();
    let mut tri_pts: BTreeMap<Tuple, (Vec<usize>, Vec<Vec<C64>>)> = BTreeMap::new();
    let mut chart_maps = Vec::new();
    for s in &small {
        let cls: Vec<usize> = s.iter().map(|&p| class[p]).collect();
        if cls[0] == cls[1] || cls[1] == cls[2] || cls[0] == cls[2] {
            return Err(Error::Config {
                path: format!("{}.triangulation", dev.name),
                msg: "subdivision is not simplicial".into(),
            });
        }
        let maps: Vec<HoloMap> = (0..3)
            .map(|k| compose(&norm[cls[k]], &elem[s[k]].inverse()))
            .collect();
        for a in 0..3 {
            for b in 0..3 {
                if a == b {
                    continue;
                }
                let t = compose(&maps[a], &maps[b].inverse());
                match trans.get(&(cls[a], cls[b])) {
                    Some(old) if !same_map(old, &t, 1e-8) => {
                        return Err(Error::Config {
                            path: format!("{}.transitions", dev.name),
                            msg: format!("inconsistent transition {}→{}", cls[b], cls[a]),
                        })
                    }
                    Some(_) => {}
                    None => {
                        trans.insert((cls[a], cls[b]), t);
                    }
                }
            }
        }
        // vertex positions in each of the three charts
        let pos: Vec<Vec<C64>> = maps
            .iter()
            .map(|m| s.iter().map(|&p| m.apply(points[p])).collect())
            .collect();
        let mut key = cls.clone();
        key.sort();
        if tri_pts.contains_key(&key) {
            return Err(Error::Config {
                path: format!("{}.triangulation", dev.name),
                msg: format!("two triangles share the vertex set {key:?}"),
            });
        }
        tri_pts.insert(key.clone(), (cls.clone(), pos));
        chart_maps.push((key, maps));
    }

    // regions
    let mut regions: BTreeMap<Tuple, Region> = BTreeMap::new();
    for x in 0..nc {
        let mut link: Vec<C64> = Vec::new();
        for (cls, pos) in tri_pts.values() {
            if let Some(ax) = cls.iter().position(|&c| c == x) {
                for (k, _) in cls.iter().enumerate() {
                    if k != ax {
                        add_point(&mut link, pos[ax][k], 1e-8);
                    }
                }
            }
        }
        link.sort_by(|a, b| a.arg().partial_cmp(&b.arg()).unwrap());
        regions.insert(vec![x], Region::with_seed(link, C64::new(0.0, 0.0)));
    }
    let mut pair_pts: BTreeMap<Tuple, Vec<C64>> = BTreeMap::new();
    for (cls, pos) in tri_pts.values() {
        for a in 0..3 {
            for b in 0..3 {
                if cls[a] < cls[b] {
                    let y = b;
                    let e = pair_pts.entry(vec![cls[a], cls[b]]).or_default();
                    for k in 0..3 {
                        add_point(e, pos[y][k], 1e-8);
                    }
                }
            }
        }
    }
    for (t, mut pts) in pair_pts {
        let (x, y) = (t[0], t[1]);
        let (cls, pos) = tri_pts
            .values()
            .find(|(c, _)| c.contains(&x) && c.contains(&y))
            .unwrap();
        let iy = cls.iter().position(|&c| c == y).unwrap();
        let ix = cls.iter().position(|&c| c == x).unwrap();
        let mid = (pos[iy][ix] + pos[iy][iy]) * 0.5;
        pts.sort_by(|a, b| (a - mid).arg().partial_cmp(&(b - mid).arg()).unwrap());
        regions.insert(t, Region::with_seed(pts, mid));
    }
    for (key, (cls, pos)) in &tri_pts {
        let z = key[2];
        let iz = cls.iter().position(|&c| c == z).unwrap();
        let mut poly = pos[iz].clone();
        let area = cross(poly[1] - poly[0], poly[2] - poly[0]);
        if area < 0.0 {
            poly.swap(1, 2);
        }
        regions.insert(key.clone(), Region::from_polygon(poly));
    }

    let charts = (0..nc)
        .map(|x| Chart {
            id: x,
            label: format!("{}:{}", dev.name, x),
            domain: regions[&vec![x]].polygon.clone(),
        })
        .collect();
    let lifts = canon.iter().map(|&p| points[p]).collect();
    let atlas = Atlas::new(&dev.name, charts, trans, regions, 5, None)?;
    Ok(StarCover {
        atlas,
        lifts,
        chart_maps,
    })
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Unit-square torus ℂ/ℤ[i] triangulated by a fan of eight triangles.
pub fn torus_development() -> Development {
    let c = |x: f64, y: f64| C64::new(x, y);
    let centre = c(0.5, 0.5);
    let b = [
        c(0.0, 0.0),
        c(0.5, 0.0),
        c(1.0, 0.0),
        c(1.0, 0.5),
        c(1.0, 1.0),
        c(0.5, 1.0),
        c(0.0, 1.0),
        c(0.0, 0.5),
    ];
    let triangles = (0..8).map(|k| [centre, b[k], b[(k + 1) % 8]]).collect();
    let generators = vec![
        HoloMap::translation(c(1.0, 0.0)),
        HoloMap::translation(c(-1.0, 0.0)),
        HoloMap::translation(c(0.0, 1.0)),
        HoloMap::translation(c(0.0, -1.0)),
    ];
    Development {
        name: "torus".into(),
        model: Model::Euclidean,
        triangles,
        generators,
    }
}

/// Regular hyperbolic octagon with interior angles π/4 in the disk and
/// its side pairings (side k+2 onto side k, k ∈ {0, 1, 4, 5}).
pub struct Octagon {
    pub vertices: Vec<C64>,
    pub side_mids: Vec<C64>,
    /// Pairing maps A_k for k ∈ {0, 1, 4, 5}.
    pub pairings: Vec<(usize, HoloMap)>,
    pub inradius: f64,
}

pub fn regular_octagon() -> Octagon {
    use std::f64::consts::PI;
    let r_in = (1.0 / (PI / 8.0).tan()).acosh();
    let cosh_r = 3.0 + 2.0 * 2f64.sqrt();
    let rv = (cosh_r.acosh() / 2.0).tanh();
    let rm = (r_in / 2.0).tanh();
    let theta = |k: usize| k as f64 * PI / 4.0;
    let vertices = (0..8)
        .map(|k| C64::from_polar(rv, theta(k) - PI / 8.0))
        .collect();
    let side_mids = (0..8).map(|k| C64::from_polar(rm, theta(k))).collect();
    let rot = |a: f64| {
        let e = C64::from_polar(1.0, a / 2.0);
        HoloMap::Mobius([e, C64::new(0.0, 0.0), C64::new(0.0, 0.0), e.conj()])
    };
    let t = (r_in).tanh();
    let s = 1.0 / (1.0 - t * t).sqrt();
    let tr = HoloMap::Mobius([
        C64::new(s, 0.0),
        C64::new(t * s, 0.0),
        C64::new(t * s, 0.0),
        C64::new(s, 0.0),
    ]);
    let pairings = [0usize, 1, 4, 5]
        .iter()
        .map(|&k| {
            let a = compose(&compose(&rot(theta(k)), &tr), &rot(PI - theta(k + 2)));
            (k, a)
        })
        .collect();
    Octagon {
        vertices,
        side_mids,
        pairings,
        inradius: r_in,
    }
}

/// Genus-2 surface as the regular octagon triangulated by a fan of 16
/// triangles through vertices and side midpoints.
pub fn octagon_development() -> Development {
    let oct = regular_octagon();
    let mut boundary = Vec::new();
    for k in 0..8 {
        boundary.push(oct.vertices[k]);
        boundary.push(oct.side_mids[k]);
    }
    let centre = C64::new(0.0, 0.0);
    let triangles = (0..16)
        .map(|k| [centre, boundary[k], boundary[(k + 1) % 16]])
        .collect();
    let mut generators = Vec::new();
    for (_, a) in &oct.pairings {
        generators.push(a.clone());
        generators.push(a.inverse());
    }
    Development {
        name: "genus2_octagon".into(),
        model: Model::Disk,
        triangles,
        generators,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn octagon_pairings_map_sides() {
        let oct = regular_octagon();
        for (k, a) in &oct.pairings {
            let m = a.apply(oct.side_mids[k + 2]);
            assert!((m - oct.side_mids[*k]).norm() < 1e-12, "side {k}");
            // endpoints are exchanged (orientation reversed)
            let v0 = a.apply(oct.vertices[k + 2]);
            assert!((v0 - oct.vertices[k + 1]).norm() < 1e-12, "vertex {k}");
        }
    }

    #[test]
    fn torus_cover_counts() {
        let sc = build_star_cover(&torus_development()).unwrap();
        let a = &sc.atlas;
        assert_eq!(a.n_charts(), 24);
        assert_eq!(a.tuples(2).count(), 72);
        assert_eq!(a.tuples(3).count(), 48);
        assert_eq!(a.tuples(4).count(), 0);
    }

    #[test]
    fn octagon_cover_counts() {
        let sc = build_star_cover(&octagon_development()).unwrap();
        let a = &sc.atlas;
        assert_eq!(a.n_charts(), 46);
        assert_eq!(a.tuples(2).count(), 144);
        assert_eq!(a.tuples(3).count(), 96);
    }
}
