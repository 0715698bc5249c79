use deligne::cech_deligne::{random_cochain, residuals, total_d};
use deligne::jet::Jet;
use deligne::scenario::annulus::build_annulus;
use deligne::scenario::sphere::build_sphere_caps;
use deligne::suite::random_chain;
use deligne::variation::schwarzian;
use deligne::C64;
use proptest::prelude::*;
use rand::SeedableRng;
use std::sync::OnceLock;

fn sphere() -> &'static deligne::atlas::Atlas {
    static S: OnceLock<deligne::scenario::sphere::SphereCaps> = OnceLock::new();
    &S.get_or_init(|| build_sphere_caps().unwrap()).atlas
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chain_boundaries_square_to_zero(seed in any::<u64>(), terms in 1usize..12) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let c = random_chain(sphere(), &mut rng, terms);
        prop_assert!(c.boundary_prime().boundary_prime().is_zero());
        prop_assert!(c.boundary_second().boundary_second().is_zero());
        prop_assert!(c.total_boundary().total_boundary().is_zero());
    }

    #[test]
    fn deligne_differential_squares_to_zero(seed in any::<u64>(), p in 1usize..=3, n in 1usize..=2) {
        let a = sphere();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = random_cochain(a, p, n, &mut rng);
        let dd = total_d(a, &total_d(a, &x).unwrap()).unwrap();
        let (forms, imax) = residuals(a, &dd, 3);
        prop_assert_eq!(imax, 0);
        for (_, m) in forms {
            prop_assert!(m.value < 1e-10, "{}", m.value);
        }
    }

    #[test]
    fn jet_exp_inverts_log(re in -2.0f64..2.0, im in -2.0f64..2.0, c in 0.1f64..3.0) {
        let z = Jet::var(C64::new(re, im), 4);
        let f = (z * z).add_const(C64::new(c, 0.5));
        let g = f.ln().exp();
        for a in 0..=4 {
            for b in 0..=4 - a {
                prop_assert!(close(g.coef(a, b), f.coef(a, b), 1e-12));
            }
        }
    }

    #[test]
    fn jet_product_rule(re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let z = Jet::var(C64::new(re, im), 4);
        let f = z.sin();
        let g = z.clone().exp() + z.conj() * z;
        let lhs = (f * g).dz();
        let rhs = f.dz() * g.truncate(3) + f.truncate(3) * g.dz();
        for a in 0..=3 {
            for b in 0..=3 - a {
                prop_assert!(close(lhs.coef(a, b), rhs.coef(a, b), 1e-12));
            }
        }
    }

    #[test]
    fn mobius_maps_have_zero_schwarzian(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, x in -1.0f64..1.0, y in -1.0f64..1.0,
    ) {
        let z = Jet::var(C64::new(x, y), 5);
        let num = z * C64::new(a, 1.0) + Jet::constant(C64::new(b, 0.0), 5);
        let den = (z * C64::new(c, 0.0)).add_const(C64::new(3.0, 1.0));
        let s = schwarzian(&(num * den.recip()));
        prop_assert!(s.value().norm() < 1e-9 * (1.0 + s.max_abs()), "{}", s.value());
    }

    #[test]
    fn exponential_has_schwarzian_minus_half(x in -1.0f64..1.0, y in -3.0f64..3.0) {
        let s = schwarzian(&Jet::var(C64::new(x, y), 5).exp());
        prop_assert!(close(s.value(), C64::new(-0.5, 0.0), 1e-12));
    }
}

#[test]
fn annulus_transition_schwarzian_is_minus_half() {
    let a = build_annulus().unwrap();
    let samples = a.samples_in(&[0, 1], 1);
    assert!(!samples.is_empty());
    for z in samples {
        let s = a.schwarzian(0, 1, &Jet::var(z, 1)).value();
        assert!(close(s, C64::new(-0.5, 0.0), 1e-12), "{s} at {z}");
    }
}
