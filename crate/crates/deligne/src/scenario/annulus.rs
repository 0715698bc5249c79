//! Two-chart annulus with an exponential transition, used for the
//! Schwarzian and projective-connection checks.

use crate::atlas::{Atlas, Chart, HoloMap, Region};
use crate::Error;
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;

/// Chart 0 carries w, chart 1 carries z with w = e^z on the overlap.
pub fn build_annulus() -> Result<Atlas, Error> {
    let c = |x: f64, y: f64| C64::new(x, y);
    let rect = vec![c(-0.3, -1.0), c(0.3, -1.0), c(0.3, 1.0), c(-0.3, 1.0)];
    let big = vec![c(-0.5, -1.4), c(0.5, -1.4), c(0.5, 1.4), c(-0.5, 1.4)];
    let mut w_poly = Vec::new();
    for k in 0..=16 {
        let y = -1.2 + 2.4 * k as f64 / 16.0;
        w_poly.push(c(0.4, y).exp());
    }
    for k in 0..=16 {
        let y = 1.2 - 2.4 * k as f64 / 16.0;
        w_poly.push(c(-0.4, y).exp());
    }
    let mut regions = BTreeMap::new();
    regions.insert(vec![0], Region::with_seed(w_poly.clone(), c(1.0, 0.0)));
    regions.insert(vec![1], Region::with_seed(big.clone(), c(0.0, 0.0)));
    regions.insert(vec![0, 1], Region::with_seed(rect, c(0.0, 0.0)));
    let mut trans = BTreeMap::new();
    trans.insert((0, 1), HoloMap::Exp);
    trans.insert((1, 0), HoloMap::Log(0));
    let charts = vec![
        Chart {
            id: 0,
            label: "annulus:w".into(),
            domain: w_poly,
        },
        Chart {
            id: 1,
            label: "annulus:log".into(),
            domain: big,
        },
    ];
    Atlas::new("annulus", charts, trans, regions, 5, None)
}
