//! Smooth Deligne cocycles on covered Riemann surfaces, the chiral
//! Polyakov Lagrangian cocycle built by Čech descent, fundamental-class
//! cycles and the action functional.

pub mod atlas;
pub mod cech_deligne;
pub mod chains;
pub mod fields;
pub mod group_cohomology;
pub mod jet;
pub mod pairing;
pub mod polyakov;
pub mod scenario;
pub mod suite;
pub mod variation;

pub use num_complex::Complex64 as C64;
use serde::Serialize;

/// 2πi.
pub const TWO_PI_I: C64 = C64::new(0.0, 2.0 * std::f64::consts::PI);

/// (2πi)^p.
pub fn two_pi_i_pow(p: i32) -> C64 {
    TWO_PI_I.powi(p)
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("intersection data missing for tuples of order {order}")]
    MissingIntersection { order: usize },
    #[error("transition z_{0}{1} not declared")]
    MissingTransition(usize, usize),
    #[error("branch inconsistency on tuple {tuple:?}: residual {residual:e}")]
    BranchInconsistency { tuple: Vec<usize>, residual: f64 },
    #[error("degenerate triangle for tuple {tuple:?}")]
    Degenerate { tuple: Vec<usize> },
    #[error("missing seed for tuple {tuple:?}")]
    MissingSeed { tuple: Vec<usize> },
    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },
    #[error("unknown kind `{kind}` at `{path}`")]
    UnknownKind { path: String, kind: String },
    #[error("input relation violated: {0}")]
    Relation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Outcome of a verification: max residual against a tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub name: String,
    pub pass: bool,
    pub residual: f64,
    pub tol: f64,
    pub detail: String,
}

impl Report {
    pub fn new(name: &str, residual: f64, tol: f64, detail: String) -> Report {
        Report {
            name: name.to_string(),
            pass: residual.is_finite() && residual <= tol,
            residual,
            tol,
            detail,
        }
    }

    /// Boolean check without a numeric residual.
    pub fn flag(name: &str, ok: bool, detail: String) -> Report {
        Report {
            name: name.to_string(),
            pass: ok,
            residual: if ok { 0.0 } else { 1.0 },
            tol: 0.0,
            detail,
        }
    }
}

/// Running maximum with a location description.
#[derive(Clone, Debug, Default)]
pub struct MaxTracker {
    pub value: f64,
    pub at: String,
}

impl MaxTracker {
    pub fn push(&mut self, r: f64, at: impl FnOnce() -> String) {
        if (!r.is_finite() || r > self.value)
            && self.value.is_finite() {
                self.value = if r.is_finite() { r } else { f64::INFINITY };
                self.at = at();
            }
    }

    pub fn report(self, name: &str, tol: f64) -> Report {
        Report::new(name, self.value, tol, self.at)
    }
}
