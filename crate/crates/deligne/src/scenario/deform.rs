//! Deformation families with closed-form maps: affine torus maps with a
//! periodic perturbation, and a smooth flow on the sphere.

use super::sphere::{inv_stereo_jet, rotate_jet, stereo_jet, transpose, SphereCaps, M3};
use super::star::{build_star_cover, Development, Model, StarCover};
use crate::atlas::{Atlas, ChartFn, HoloMap};
use crate::jet::Jet;
use crate::polyakov::DeformationData;
use crate::{Error, TWO_PI_I};
use num_complex::Complex64 as C64;
use std::sync::Arc;

/// Σ c·exp(2πi(a x + b y)) on ℂ/ℤ[i].
#[derive(Clone, Debug, Default, serde::Serialize, serde::Deserialize)]
pub struct TrigPoly {
    pub terms: Vec<(i32, i32, C64)>,
}

impl TrigPoly {
    pub fn eval(&self, z: &Jet) -> Jet {
        let zb = z.conj();
        let x = (*z + zb).scale(C64::new(0.5, 0.0));
        let y = (*z - zb).scale(C64::new(0.0, -0.5));
        let mut out = Jet::real(0.0, z.order());
        for (a, b, c) in &self.terms {
            let ph = (x.scale(C64::new(*a as f64, 0.0)) + y.scale(C64::new(*b as f64, 0.0))).scale(TWO_PI_I);
            out = out + ph.exp().scale(*c);
        }
        out
    }

    /// Random polynomial with modes |a|, |b| ≤ 2 and coefficients of size ≤ amp.
    pub fn random(rng: &mut impl rand::Rng, terms: usize, amp: f64) -> TrigPoly {
        TrigPoly {
            terms: (0..terms)
                .map(|_| {
                    (
                        rng.gen_range(-2..=2),
                        rng.gen_range(-2..=2),
                        C64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)),
                    )
                })
                .collect(),
        }
    }
}

fn affine(mu: C64) -> impl Fn(C64) -> C64 {
    move |z| z + mu * z.conj()
}

/// Image of a Euclidean development under z ↦ z + μ z̄.
pub fn affine_development(dev: &Development, mu: C64) -> Result<Development, Error> {
    if !matches!(dev.model, Model::Euclidean) {
        return Err(Error::Config {
            path: format!("{}.deformation", dev.name),
            msg: "affine deformation needs a Euclidean development".into(),
        });
    }
    let a = affine(mu);
    let mut generators = Vec::new();
    for g in &dev.generators {
        let t = g.apply(C64::new(0.0, 0.0));
        generators.push(HoloMap::translation(a(t)));
    }
    Ok(Development {
        name: format!("{}~", dev.name),
        model: Model::Euclidean,
        triangles: dev.triangles.iter().map(|t| t.map(&a)).collect(),
        generators,
    })
}

/// Torus deformations f_t = z + μ z̄ + t·w(z) with X̃ = ℂ/A(ℤ[i]).
pub struct TorusFamily {
    pub base: Arc<Atlas>,
    pub tilde: Arc<Atlas>,
    pub lifts: Vec<C64>,
    pub mu: C64,
}

impl TorusFamily {
    pub fn new(dev: &Development, mu: C64) -> Result<TorusFamily, Error> {
        let base: StarCover = build_star_cover(dev)?;
        let tilde = build_star_cover(&affine_development(dev, mu)?)?;
        let a = affine(mu);
        for (k, (p, q)) in base.lifts.iter().zip(&tilde.lifts).enumerate() {
            if (a(*p) - q).norm() > 1e-12 {
                return Err(Error::Config {
                    path: format!("{}.deformation", dev.name),
                    msg: format!("deformed cover does not match chart {k}"),
                });
            }
        }
        Ok(TorusFamily {
            base: Arc::new(base.atlas),
            tilde: Arc::new(tilde.atlas),
            lifts: base.lifts,
            mu,
        })
    }

    pub fn deformation(&self, t: f64, w: &TrigPoly) -> DeformationData {
        let mu = self.mu;
        let lifts = self.lifts.clone();
        let w = w.clone();
        let f: ChartFn = Arc::new(move |i, z: &Jet| {
            let base = *z + z.conj().scale(mu);
            if t == 0.0 || w.terms.is_empty() {
                return base;
            }
            base + w.eval(&z.add_const(lifts[i])).scale(C64::new(t, 0.0))
        });
        DeformationData::new(self.base.clone(), self.tilde.clone(), f, "torus affine")
    }

    /// v = δf/∂f for the family at t = 0 (∂f = 1 for the affine map).
    pub fn v_field(&self, w: &TrigPoly) -> ChartFn {
        let lifts = self.lifts.clone();
        let w = w.clone();
        Arc::new(move |i, z: &Jet| w.eval(&z.add_const(lifts[i])))
    }
}

/// Constant quadratic differential h on every chart.
pub fn constant_h(h: C64) -> ChartFn {
    Arc::new(move |_, z: &Jet| Jet::constant(h, z.order()))
}

fn m3_jet(m: &M3, x: &[Jet; 3]) -> [Jet; 3] {
    rotate_jet(m, x)
}

fn dot3(a: &[Jet; 3], b: &[Jet; 3]) -> Jet {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Sphere maps F_t(x) = (x + tV(x))/|x + tV(x)| with the tangent field
/// V(x) = Ax − (x·Ax)x, read through the cap charts (X̃ = X).
pub struct SphereFlow {
    pub caps: Arc<SphereCaps>,
    pub atlas: Arc<Atlas>,
    pub a: M3,
}

/// Default flow generator: a traceless symmetric part plus a rotation.
pub const DEFAULT_FLOW: M3 = [[0.30, 0.15, -0.05], [0.25, -0.10, 0.20], [0.05, 0.30, -0.20]];

impl SphereFlow {
    pub fn new(caps: SphereCaps, a: M3) -> SphereFlow {
        let caps = Arc::new(caps);
        // the atlas is shared with the caps through a clone
        let atlas = Arc::new(caps.atlas.clone());
        SphereFlow { caps, atlas, a }
    }

    fn field(a: &M3, x: &[Jet; 3]) -> [Jet; 3] {
        let ax = m3_jet(a, x);
        let s = dot3(x, &ax);
        [ax[0] - s * x[0], ax[1] - s * x[1], ax[2] - s * x[2]]
    }

    pub fn deformation(&self, t: f64) -> DeformationData {
        let caps = self.caps.clone();
        let a = self.a;
        let f: ChartFn = Arc::new(move |i, z: &Jet| {
            if t == 0.0 {
                return *z;
            }
            let r = caps.rot[i];
            let x = rotate_jet(&transpose(&r), &inv_stereo_jet(z));
            let v = SphereFlow::field(&a, &x);
            let y = [
                x[0] + v[0].scale(C64::new(t, 0.0)),
                x[1] + v[1].scale(C64::new(t, 0.0)),
                x[2] + v[2].scale(C64::new(t, 0.0)),
            ];
            let inv = dot3(&y, &y).powf(-0.5);
            let y = [y[0] * inv, y[1] * inv, y[2] * inv];
            stereo_jet(&rotate_jet(&r, &y))
        });
        DeformationData::new(self.atlas.clone(), self.atlas.clone(), f, "sphere flow")
    }

    /// v = ∂_t f_t at t = 0 (f_0 = id): the chart image of V.
    pub fn v_field(&self) -> ChartFn {
        let caps = self.caps.clone();
        let a = self.a;
        Arc::new(move |i, z: &Jet| {
            let r = caps.rot[i];
            let x = rotate_jet(&transpose(&r), &inv_stereo_jet(z));
            let y = rotate_jet(&r, &x);
            let u = rotate_jet(&r, &SphereFlow::field(&a, &x));
            let den = (-y[2]).add_const(C64::new(1.0, 0.0)).recip();
            let num = y[0] + y[1] * C64::new(0.0, 1.0);
            let dnum = u[0] + u[1] * C64::new(0.0, 1.0);
            dnum * den + num * u[2] * den * den
        })
    }
}

/// h = Z̄²/(1+|Z|²)⁴ in the global stereographic coordinate, carried to
/// each cap chart as a quadratic differential (it has the same form in
/// W = 1/Z, used when |Z| > 1).
pub fn sphere_h(caps: &SphereCaps) -> ChartFn {
    let maps = caps.to_global.clone();
    Arc::new(move |i, z: &Jet| {
        let g = &maps[i];
        let n = z.order();
        let zz = g.apply_jet(z);
        let gp = g.deriv_jet(z);
        let form = |u: &Jet| {
            let ub = u.conj();
            let den = (*u * ub).add_const(C64::new(1.0, 0.0)).powi(4).recip();
            ub * ub * den
        };
        let out = if zz.value().norm() <= 1.0 {
            form(&zz) * gp * gp
        } else {
            let w = zz.recip();
            let wp = -(gp * w * w);
            form(&w) * wp * wp
        };
        out.truncate(n)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::sphere::build_sphere_caps;
    use crate::scenario::star::torus_development;

    #[test]
    fn torus_family_is_equivariant() {
        let fam = TorusFamily::new(&torus_development(), C64::new(0.2, 0.1)).unwrap();
        let w = TrigPoly {
            terms: vec![(1, 0, C64::new(0.05, 0.0)), (0, -1, C64::new(0.0, 0.03))],
        };
        let d = fam.deformation(0.3, &w);
        for r in d.verify(1e-12) {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn sphere_flow_is_equivariant() {
        let flow = SphereFlow::new(build_sphere_caps().unwrap(), DEFAULT_FLOW);
        let d = flow.deformation(0.2);
        for r in d.verify(1e-11) {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn sphere_h_is_a_quadratic_differential() {
        let caps = build_sphere_caps().unwrap();
        let h = sphere_h(&caps);
        let r = caps.atlas.verify_projective_connection(&*h, 1e-12);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn sphere_v_field_matches_flow_derivative() {
        let flow = SphereFlow::new(build_sphere_caps().unwrap(), DEFAULT_FLOW);
        let v = flow.v_field();
        let e = 1e-5;
        let (fp, fm) = (flow.deformation(e), flow.deformation(-e));
        for i in 0..flow.atlas.n_charts() {
            let z = C64::new(0.1, -0.2);
            let fd = (fp.f_value(i, z) - fm.f_value(i, z)) / (2.0 * e);
            let ex = v(i, &Jet::var(z, 0)).value();
            assert!((fd - ex).norm() < 1e-8, "{fd} {ex}");
        }
    }
}
