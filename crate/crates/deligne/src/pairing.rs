//! Pairing of Deligne cochains with total chains of the Čech–singular
//! double complex, and the resulting action functional.

use crate::atlas::{Atlas, HoloMap, Tuple};
use crate::cech_deligne::{Comp, DeligneCocycle3, FormLayer, MultiplicativeCocycle};
use crate::chains::{realize, Chain, Realized, Simplex};
use crate::fields::{integrate, Geometry, QuadratureRule};
use crate::jet::Jet;
use crate::{two_pi_i_pow, Error};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

/// ∫ of the component for tuple `t` over the realized simplex `s`.
pub fn integrate_component(
    atlas: &Atlas,
    comp: &Comp,
    t: &Tuple,
    s: &Simplex,
    rule: &QuadratureRule,
) -> Result<C64, Error> {
    let geom = realize(atlas, s)?;
    let chart = match &geom {
        Realized::Point { chart, .. }
        | Realized::Segment { chart, .. }
        | Realized::Triangle { chart, .. } => *chart,
    };
    let l = *t.last().unwrap();
    let tr: Option<HoloMap> = if l == chart {
        None
    } else {
        Some(atlas.transition(l, chart)?)
    };
    let form = |z: &Jet| match &tr {
        None => comp(z),
        Some(m) => m.pull_back(comp, z),
    };
    let base;
    let g = match geom {
        Realized::Point { z, .. } => Geometry::Point(z),
        Realized::Segment { a, b, .. } => Geometry::Segment { a, b, map: None },
        Realized::Triangle {
            chart,
            apex,
            base_chart,
            a,
            b,
        } => {
            let map = if base_chart == chart {
                None
            } else {
                base = atlas.transition(chart, base_chart)?;
                Some(&base as &dyn crate::fields::PointMap)
            };
            Geometry::Cone {
                apex,
                base_a: a,
                base_b: b,
                base_map: map,
            }
        }
    };
    Ok(integrate(&form, &g, rule))
}

/// Σ coef·∫ over the terms of `chain` whose tuple length is `len`.
pub fn pair_layer(
    atlas: &Atlas,
    layer: &FormLayer,
    chain: &Chain,
    len: usize,
    rule: &QuadratureRule,
) -> Result<C64, Error> {
    let mut acc = C64::new(0.0, 0.0);
    for ((s, t), c) in &chain.terms {
        if t.len() != len {
            continue;
        }
        let comp = layer
            .get(t)
            .ok_or_else(|| Error::Relation(format!("no component on tuple {t:?}")))?;
        acc += integrate_component(atlas, comp, t, s, rule)? * (*c as f64);
    }
    Ok(acc)
}

/// ⟨Ω, C⟩ = ⟨ω, C0⟩ − ⟨a, C1⟩ + ⟨f, C2⟩ for a total 2-chain C.
pub fn pair_total(
    atlas: &Atlas,
    omega: &DeligneCocycle3,
    c: &Chain,
    rule: &QuadratureRule,
) -> Result<C64, Error> {
    Ok(pair_layer(atlas, omega.omega(), c, 1, rule)?
        - pair_layer(atlas, omega.a(), c, 2, rule)?
        + pair_layer(atlas, omega.f(), c, 3, rule)?)
}

/// Representative of S mod ℤ(3) = (2πi)³ℤ with Im S in (−4π³, 4π³].
pub fn reduce_mod_z3(s: C64) -> C64 {
    let period = 8.0 * PI.powi(3);
    let mut im = s.im.rem_euclid(period);
    if im > period / 2.0 {
        im -= period;
    }
    C64::new(s.re, im)
}

/// exp(⟨Ψ_ω, C0⟩ + ⟨Ψ_a, C1⟩) · Π g(v)^coef over C2.
pub fn pair_multiplicative(
    atlas: &Atlas,
    psi: &MultiplicativeCocycle,
    c: &Chain,
    rule: &QuadratureRule,
) -> Result<C64, Error> {
    let e = pair_layer(atlas, &psi.omega, c, 1, rule)? + pair_layer(atlas, &psi.a, c, 2, rule)?;
    let mut prod = e.exp();
    for ((s, t), k) in &c.terms {
        if t.len() != 3 {
            continue;
        }
        let g = psi
            .g
            .get(t)
            .ok_or_else(|| Error::Relation(format!("no component on tuple {t:?}")))?;
        let v = integrate_component(atlas, g, t, s, rule)?;
        prod *= v.powi(*k as i32);
    }
    Ok(prod)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ActionValue {
    pub s_raw: C64,
    pub s_reduced: C64,
    pub a: C64,
}

/// S = ⟨Ω, Σ⟩ and A = exp(S/(2πi)²).
pub fn action(
    atlas: &Atlas,
    omega: &DeligneCocycle3,
    sigma: &Chain,
    rule: &QuadratureRule,
) -> Result<ActionValue, Error> {
    let s = pair_total(atlas, omega, sigma, rule)?;
    Ok(ActionValue {
        s_raw: s,
        s_reduced: reduce_mod_z3(s),
        a: (s / two_pi_i_pow(2)).exp(),
    })
}

/// Distance between two values of S in ℂ/ℤ(3).
pub fn distance_mod_z3(a: C64, b: C64) -> f64 {
    reduce_mod_z3(a - b).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::FundamentalCycle;
    use crate::fields::FormValue;
    use crate::scenario::{sphere::build_sphere_caps, star};
    use std::sync::Arc;

    fn area_pairing(atlas: &Atlas, density: fn(C64) -> f64) -> f64 {
        let sigma = FundamentalCycle::build(atlas).unwrap();
        let mut layer = FormLayer::new();
        for i in 0..atlas.n_charts() {
            let comp: Comp = Arc::new(move |z: &Jet| {
                let mut j = Jet::real(0.0, z.order());
                j.set_coef(0, 0, C64::new(0.0, 0.5 * density(z.value())));
                FormValue::F2(j)
            });
            layer.insert(vec![i], comp);
        }
        let v = pair_layer(atlas, &layer, &sigma.total(), 1, &QuadratureRule::default()).unwrap();
        assert!(v.im.abs() < 1e-9);
        v.re
    }

    #[test]
    fn torus_area_is_one() {
        let c = star::build_star_cover(&star::torus_development()).unwrap();
        let a = area_pairing(&c.atlas, |_| 1.0);
        assert!((a - 1.0).abs() < 1e-12, "{a}");
    }

    #[test]
    fn sphere_area_is_four_pi() {
        let s = build_sphere_caps().unwrap();
        let a = area_pairing(&s.atlas, |z| 4.0 / (1.0 + z.norm_sqr()).powi(2));
        assert!((a - 4.0 * PI).abs() < 1e-8, "{a}");
    }

    #[test]
    fn genus_two_area_is_four_pi() {
        let c = star::build_star_cover(&star::octagon_development()).unwrap();
        let a = area_pairing(&c.atlas, |z| 4.0 / (1.0 - z.norm_sqr()).powi(2));
        assert!((a - 4.0 * PI).abs() < 1e-8, "{a}");
    }

    #[test]
    fn reduction_is_periodic() {
        let p = two_pi_i_pow(3);
        let s = C64::new(0.3, 1.0);
        assert!(distance_mod_z3(s, s + p * 5.0) < 1e-9);
        assert!(reduce_mod_z3(s + p).im.abs() <= 4.0 * PI.powi(3));
    }

    #[test]
    fn coboundaries_pair_to_integers() {
        use crate::cech_deligne::{random_cochain, total_d};
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let sphere = build_sphere_caps().unwrap().atlas;
        let torus = star::build_star_cover(&star::torus_development()).unwrap().atlas;
        for atlas in [&sphere, &torus] {
            let sigma = FundamentalCycle::build(atlas).unwrap().total();
            for _ in 0..3 {
                let phi = random_cochain(atlas, 3, 2, &mut rng);
                let d = DeligneCocycle3(total_d(atlas, &phi).unwrap());
                let s = pair_total(atlas, &d, &sigma, &QuadratureRule::default()).unwrap();
                assert!(reduce_mod_z3(s).norm() < 1e-8, "{s}");
            }
        }
    }
}
