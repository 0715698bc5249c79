//! Truncated bivariate Taylor series in (δz, δz̄).
//!
//! A jet of order `n` stores the Taylor coefficients `c[a,b]` of
//! δz^a δz̄^b for a + b ≤ n. Arithmetic is truncated at the smaller
//! order of the operands; `dz`/`dzbar` lower the order by one.

use num_complex::Complex64 as C64;
use std::ops::{Add, Mul, Neg, Sub};

/// Highest supported order.
pub const MAX_ORDER: usize = 7;
const NC: usize = (MAX_ORDER + 1) * (MAX_ORDER + 2) / 2;

#[inline]
pub const fn idx(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

#[inline]
const fn ncoef(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

#[derive(Clone, Copy, Debug)]
pub struct Jet {
    n: u8,
    c: [C64; NC],
}

impl Jet {
    pub fn constant(v: C64, n: usize) -> Jet {
        assert!(n <= MAX_ORDER, "jet order {n} exceeds {MAX_ORDER}");
        let mut c = [C64::new(0.0, 0.0); NC];
        c[0] = v;
        Jet { n: n as u8, c }
    }

    pub fn real(v: f64, n: usize) -> Jet {
        Jet::constant(C64::new(v, 0.0), n)
    }

    /// The coordinate jet z0 + δz.
    pub fn var(z0: C64, n: usize) -> Jet {
        let mut j = Jet::constant(z0, n);
        if n >= 1 {
            j.c[idx(1, 0)] = C64::new(1.0, 0.0);
        }
        j
    }

    pub fn order(&self) -> usize {
        self.n as usize
    }

    pub fn value(&self) -> C64 {
        self.c[0]
    }

    pub fn coef(&self, a: usize, b: usize) -> C64 {
        if a + b > self.order() {
            C64::new(0.0, 0.0)
        } else {
            self.c[idx(a, b)]
        }
    }

    pub fn set_coef(&mut self, a: usize, b: usize, v: C64) {
        assert!(a + b <= self.order());
        self.c[idx(a, b)] = v;
    }

    /// Copy truncated to order `n` (no-op if already lower).
    pub fn truncate(&self, n: usize) -> Jet {
        let n = n.min(self.order());
        let mut out = Jet::constant(self.c[0], n);
        out.c[..ncoef(n)].copy_from_slice(&self.c[..ncoef(n)]);
        out
    }

    /// Partial derivative in z, as a jet of order n − 1.
    pub fn dz(&self) -> Jet {
        let n = self.order();
        assert!(n >= 1, "cannot differentiate an order-0 jet");
        let mut out = Jet::constant(C64::new(0.0, 0.0), n - 1);
        for d in 0..n {
            for b in 0..=d {
                let a = d - b;
                out.c[idx(a, b)] = self.c[idx(a + 1, b)] * (a as f64 + 1.0);
            }
        }
        out
    }

    /// Partial derivative in z̄, as a jet of order n − 1.
    pub fn dzbar(&self) -> Jet {
        let n = self.order();
        assert!(n >= 1, "cannot differentiate an order-0 jet");
        let mut out = Jet::constant(C64::new(0.0, 0.0), n - 1);
        for d in 0..n {
            for b in 0..=d {
                let a = d - b;
                out.c[idx(a, b)] = self.c[idx(a, b + 1)] * (b as f64 + 1.0);
            }
        }
        out
    }

    /// Complex conjugate function: conj(J)_{a,b} = conj(J_{b,a}).
    pub fn conj(&self) -> Jet {
        let n = self.order();
        let mut out = Jet::constant(C64::new(0.0, 0.0), n);
        for d in 0..=n {
            for b in 0..=d {
                let a = d - b;
                out.c[idx(a, b)] = self.c[idx(b, a)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Jet {
        let mut out = *self;
        for v in out.c[..ncoef(self.order())].iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn add_const(&self, s: C64) -> Jet {
        let mut out = *self;
        out.c[0] += s;
        out
    }

    /// True when every δz̄-dependent coefficient vanishes.
    pub fn is_holomorphic(&self, tol: f64) -> bool {
        let n = self.order();
        (0..=n).all(|d| (1..=d).all(|b| self.c[idx(d - b, b)].norm() <= tol))
    }

    /// Σ g_k (J − J0)^k: composition with a univariate series whose
    /// Taylor coefficients at J0 are `g`.
    pub fn compose_series(&self, g: &[C64]) -> Jet {
        let n = self.order();
        let mut u = *self;
        u.c[0] = C64::new(0.0, 0.0);
        let top = n.min(g.len().saturating_sub(1));
        let mut r = Jet::constant(g[top], n);
        for k in (0..top).rev() {
            r = r * u;
            r.c[0] += g[k];
        }
        r
    }

    /// Substitutes a jet W for the base variable: Σ c_ab (W − W0)^a
    /// (W̄ − W̄0)^b with W0 = W.value(). The order is the smaller of the two.
    pub fn compose_jet(&self, w: &Jet) -> Jet {
        let n = self.order().min(w.order());
        let mut u = w.truncate(n);
        u.c[0] = C64::new(0.0, 0.0);
        let ub = u.conj();
        let mut upow = vec![Jet::real(1.0, n)];
        let mut ubpow = vec![Jet::real(1.0, n)];
        for k in 1..=n {
            upow.push(upow[k - 1] * u);
            ubpow.push(ubpow[k - 1] * ub);
        }
        let mut r = Jet::real(0.0, n);
        for a in 0..=n {
            for b in 0..=(n - a) {
                let c = self.c[idx(a, b)];
                if c != C64::new(0.0, 0.0) {
                    r = r + (upow[a] * ubpow[b]).scale(c);
                }
            }
        }
        r
    }

    pub fn recip(&self) -> Jet {
        let x0 = self.c[0];
        let inv = x0.inv();
        let mut g = Vec::with_capacity(self.order() + 1);
        let mut p = inv;
        for _ in 0..=self.order() {
            g.push(p);
            p = -p * inv;
        }
        self.compose_series(&g)
    }

    pub fn exp(&self) -> Jet {
        let e = self.c[0].exp();
        let mut g = Vec::with_capacity(self.order() + 1);
        let mut f = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                f *= k as f64;
            }
            g.push(e / f);
        }
        self.compose_series(&g)
    }

    /// Logarithm with a caller-supplied value `log0` of log(J0).
    pub fn ln_with(&self, log0: C64) -> Jet {
        let x0 = self.c[0];
        let inv = x0.inv();
        let mut g = Vec::with_capacity(self.order() + 1);
        g.push(log0);
        let mut p = inv;
        for k in 1..=self.order() {
            let s = if k % 2 == 1 { 1.0 } else { -1.0 };
            g.push(p * (s / k as f64));
            p *= inv;
        }
        self.compose_series(&g)
    }

    /// Principal-branch logarithm.
    pub fn ln(&self) -> Jet {
        self.ln_with(self.c[0].ln())
    }

    /// J^α using the principal branch at J0.
    pub fn powf(&self, alpha: f64) -> Jet {
        let x0 = self.c[0];
        let inv = x0.inv();
        let mut g = Vec::with_capacity(self.order() + 1);
        let mut coef = x0.powf(alpha);
        for k in 0..=self.order() {
            g.push(coef);
            coef = coef * inv * ((alpha - k as f64) / (k as f64 + 1.0));
        }
        self.compose_series(&g)
    }

    pub fn powi(&self, k: u32) -> Jet {
        let mut r = Jet::constant(C64::new(1.0, 0.0), self.order());
        for _ in 0..k {
            r = r * *self;
        }
        r
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn sin(&self) -> Jet {
        let i = C64::new(0.0, 1.0);
        let a = self.scale(i).exp();
        let b = self.scale(-i).exp();
        (a - b).scale(C64::new(0.0, -0.5))
    }

    pub fn cos(&self) -> Jet {
        let i = C64::new(0.0, 1.0);
        let a = self.scale(i).exp();
        let b = self.scale(-i).exp();
        (a + b).scale(C64::new(0.5, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.c[..ncoef(self.order())]
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Taylor coefficients in δz of a holomorphic jet (b = 0 column).
    pub fn holo_coeffs(&self) -> Vec<C64> {
        (0..=self.order()).map(|a| self.c[idx(a, 0)]).collect()
    }

    /// Builds a jet from a plain function by central finite differences
    /// in x and y. Accurate to roughly `step²`; only low orders (≤ 2).
    pub fn from_fn_fd(f: &dyn Fn(C64) -> C64, z0: C64, n: usize, step: f64) -> Jet {
        assert!(n <= 2, "finite-difference jets support order ≤ 2");
        let mut out = Jet::constant(f(z0), n);
        if n == 0 {
            return out;
        }
        let h = step;
        let ex = C64::new(h, 0.0);
        let ey = C64::new(0.0, h);
        let fx = (f(z0 + ex) - f(z0 - ex)) / (2.0 * h);
        let fy = (f(z0 + ey) - f(z0 - ey)) / (2.0 * h);
        let i = C64::new(0.0, 1.0);
        out.c[idx(1, 0)] = 0.5 * (fx - i * fy);
        out.c[idx(0, 1)] = 0.5 * (fx + i * fy);
        if n >= 2 {
            let f0 = f(z0);
            let fxx = (f(z0 + ex) - 2.0 * f0 + f(z0 - ex)) / (h * h);
            let fyy = (f(z0 + ey) - 2.0 * f0 + f(z0 - ey)) / (h * h);
            let fxy = (f(z0 + ex + ey) - f(z0 + ex - ey) - f(z0 - ex + ey) + f(z0 - ex - ey))
                / (4.0 * h * h);
            // ∂² = (fxx − 2i fxy − fyy)/4, ∂∂̄ = (fxx + fyy)/4, ∂̄² = (fxx + 2i fxy − fyy)/4
            out.c[idx(2, 0)] = 0.5 * 0.25 * (fxx - 2.0 * i * fxy - fyy);
            out.c[idx(1, 1)] = 0.25 * (fxx + fyy);
            out.c[idx(0, 2)] = 0.5 * 0.25 * (fxx + 2.0 * i * fxy - fyy);
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let n = self.order().min(o.order());
        let mut out = self.truncate(n);
        for k in 0..ncoef(n) {
            out.c[k] += o.c[k];
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        let n = self.order().min(o.order());
        let mut out = self.truncate(n);
        for k in 0..ncoef(n) {
            out.c[k] -= o.c[k];
        }
        out
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let n = self.order().min(o.order());
        let mut out = Jet::constant(C64::new(0.0, 0.0), n);
        for d1 in 0..=n {
            for b1 in 0..=d1 {
                let x = self.c[idx(d1 - b1, b1)];
                if x.re == 0.0 && x.im == 0.0 {
                    continue;
                }
                for d2 in 0..=(n - d1) {
                    for b2 in 0..=d2 {
                        let a = d1 - b1 + d2 - b2;
                        out.c[idx(a, b1 + b2)] += x * o.c[idx(d2 - b2, b2)];
                    }
                }
            }
        }
        out
    }
}

impl Add<C64> for Jet {
    type Output = Jet;
    fn add(self, s: C64) -> Jet {
        self.add_const(s)
    }
}

impl Mul<C64> for Jet {
    type Output = Jet;
    fn mul(self, s: C64) -> Jet {
        self.scale(s)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(C64::new(s, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn product_rule_for_z_zbar() {
        let z0 = c(0.3, -0.7);
        let z = Jet::var(z0, 3);
        let zb = z.conj();
        let p = z * zb;
        assert!((p.dz().value() - z0.conj()).norm() < 1e-15);
        assert!((p.dzbar().value() - z0).norm() < 1e-15);
        assert!((p.dz().dzbar().value() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn recip_exp_log_roundtrip() {
        let z = Jet::var(c(0.4, 0.2), 6);
        let w = z * z.conj() + z;
        let r = w * w.recip();
        assert!((r.value() - c(1.0, 0.0)).norm() < 1e-14);
        assert!(r.add_const(c(-1.0, 0.0)).max_abs() < 1e-12);
        let e = w.ln().exp() - w;
        assert!(e.max_abs() < 1e-12);
    }

    #[test]
    fn holomorphic_derivatives_match_closed_form() {
        // d³/dz³ (1/z) = −6/z⁴
        let z0 = c(1.2, 0.5);
        let j = Jet::var(z0, 4).recip();
        let d3 = j.dz().dz().dz().value();
        assert!((d3 - (-6.0) / z0.powi(4)).norm() < 1e-12);
        assert!(j.is_holomorphic(0.0));
    }

    #[test]
    fn powf_matches_repeated_product() {
        let z = Jet::var(c(2.0, 1.0), 5);
        let a = z.powf(3.0);
        let b = z * z * z;
        assert!((a - b).max_abs() < 1e-11);
    }

    #[test]
    fn mixed_partials_commute() {
        let z = Jet::var(c(0.1, 0.9), 5);
        let f = (z * z.conj() * z).exp() + z.conj().sin();
        let a = f.dz().dzbar();
        let b = f.dzbar().dz();
        assert!((a - b).max_abs() < 1e-13);
    }

    #[test]
    fn fd_jet_agrees_with_exact() {
        let z0 = c(0.3, 0.4);
        let exact = {
            let z = Jet::var(z0, 2);
            z * z * z.conj()
        };
        let fd = Jet::from_fn_fd(&|z: C64| z * z * z.conj(), z0, 2, 1e-4);
        assert!((exact - fd).max_abs() < 1e-6);
    }
}
