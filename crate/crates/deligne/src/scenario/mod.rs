//! Built-in scenarios and scenario files.

pub mod annulus;
pub mod deform;
pub mod sphere;
pub mod star;

use crate::atlas::{Atlas, ChartFn};
use crate::chains::FundamentalCycle;
use crate::fields::QuadratureRule;
use crate::group_cohomology::{FuchsianGroup, Psl};
use crate::jet::Jet;
use crate::polyakov::{DeformationData, TameTrivialization};
use crate::variation::{schwarzian, Variation};
use crate::Error;
use deform::{constant_h, sphere_h, SphereFlow, TorusFamily, TrigPoly};
use num_complex::Complex64 as C64;
use serde::Serialize;
use sphere::{build_sphere_caps, SphereCaps, M3};
use std::path::Path;
use std::sync::Arc;
use toml::{Table, Value};

/// Surface and cover of a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AtlasKind {
    /// Square torus ℂ/ℤ[i] with its star cover.
    Torus,
    /// Riemann sphere with 8 spherical caps.
    Sphere,
    /// Genus 2 from the regular hyperbolic octagon, star cover.
    Octagon,
    /// Two-chart annulus with w = e^z (not closed).
    Annulus,
}

#[derive(Clone, Debug, Serialize)]
pub enum DeformationSpec {
    Identity,
    /// f = z + μz̄ + t·w(z) on the torus.
    TorusAffine { mu: C64, perturbation: TrigPoly, t: f64 },
    /// Sphere flow F_t(x) = (x + tV(x))/|x + tV(x)|.
    SphereFlow { flow: M3, t: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub enum HSpec {
    Zero,
    Constant(C64),
    /// One constant per chart.
    PerChart(Vec<C64>),
    /// Z̄²/(1+|Z|²)⁴ dZ² on the sphere.
    SphereBump,
    /// offset + trigonometric polynomial on the torus.
    Trig { offset: C64, poly: TrigPoly },
    /// {f, z} + H(∂f)², critical for the configured deformation.
    OnShell { big_h: C64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupSpec {
    pub names: Vec<String>,
    pub generators: Vec<[[f64; 2]; 2]>,
    pub relator: String,
    /// Polygon vertices in ℍ, counterclockwise.
    pub vertices: Vec<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub algebra: f64,
    pub forms: f64,
    pub closed_form: f64,
    pub gauge: f64,
    pub torsor: f64,
    pub pairing: f64,
    pub variation: f64,
    pub el: f64,
    pub operators: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebra: 1e-10,
            forms: 1e-8,
            closed_form: 1e-8,
            gauge: 1e-10,
            torsor: 1e-8,
            pairing: 1e-8,
            variation: 1e-4,
            el: 1e-10,
            operators: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub atlas: AtlasKind,
    pub deformation: DeformationSpec,
    pub h: HSpec,
    /// Finite-difference base step of the variation check, if enabled.
    pub variation_step: Option<f64>,
    pub group: Option<GroupSpec>,
    pub tol: Tolerances,
    pub quad_triangle: usize,
    pub quad_segment: usize,
}

/// Typed access to a TOML table with key paths in errors.
struct Tbl<'a> {
    path: String,
    t: &'a Table,
}

impl<'a> Tbl<'a> {
    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{}", self.path, k)
        }
    }

    fn err(&self, k: &str, msg: impl Into<String>) -> Error {
        Error::Config { path: self.key(k), msg: msg.into() }
    }

    fn sub(&self, k: &str) -> Result<Option<Tbl<'a>>, Error> {
        match self.t.get(k) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Tbl { path: self.key(k), t })),
            Some(_) => Err(self.err(k, "expected a table")),
        }
    }

    fn f64_or(&self, k: &str, d: f64) -> Result<f64, Error> {
        match self.t.get(k) {
            None => Ok(d),
            Some(v) => num(v).ok_or_else(|| self.err(k, "expected a number")),
        }
    }

    fn usize_or(&self, k: &str, d: usize) -> Result<usize, Error> {
        match self.t.get(k) {
            None => Ok(d),
            Some(Value::Integer(i)) if *i > 0 => Ok(*i as usize),
            Some(_) => Err(self.err(k, "expected a positive integer")),
        }
    }

    fn str(&self, k: &str) -> Result<&'a str, Error> {
        match self.t.get(k) {
            Some(Value::String(s)) => Ok(s),
            Some(_) => Err(self.err(k, "expected a string")),
            None => Err(self.err(k, "missing key")),
        }
    }

    fn complex_or(&self, k: &str, d: C64) -> Result<C64, Error> {
        match self.t.get(k) {
            None => Ok(d),
            Some(v) => complex(v).ok_or_else(|| self.err(k, "expected a number or [re, im]")),
        }
    }

    fn array(&self, k: &str) -> Result<Option<&'a Vec<Value>>, Error> {
        match self.t.get(k) {
            None => Ok(None),
            Some(Value::Array(a)) => Ok(Some(a)),
            Some(_) => Err(self.err(k, "expected an array")),
        }
    }

    /// Terms [a, b, re, im] of a trigonometric polynomial.
    fn trig(&self, k: &str) -> Result<TrigPoly, Error> {
        let mut terms = Vec::new();
        for (n, v) in self.array(k)?.into_iter().flatten().enumerate() {
            let bad = || self.err(&format!("{k}[{n}]"), "expected [a, b, re, im] with integer modes");
            let Value::Array(a) = v else { return Err(bad()) };
            if a.len() != 4 {
                return Err(bad());
            }
            let (Value::Integer(p), Value::Integer(q)) = (&a[0], &a[1]) else { return Err(bad()) };
            let (re, im) = (num(&a[2]).ok_or_else(bad)?, num(&a[3]).ok_or_else(bad)?);
            terms.push((*p as i32, *q as i32, C64::new(re, im)));
        }
        Ok(TrigPoly { terms })
    }

    fn matrix<const R: usize, const C: usize>(&self, v: &Value, k: &str) -> Result<[[f64; C]; R], Error> {
        let bad = || self.err(k, format!("expected a {R}×{C} numeric matrix"));
        let Value::Array(rows) = v else { return Err(bad()) };
        if rows.len() != R {
            return Err(bad());
        }
        let mut out = [[0.0; C]; R];
        for (r, row) in rows.iter().enumerate() {
            let Value::Array(cols) = row else { return Err(bad()) };
            if cols.len() != C {
                return Err(bad());
            }
            for (c, x) in cols.iter().enumerate() {
                out[r][c] = num(x).ok_or_else(bad)?;
            }
        }
        Ok(out)
    }
}

fn num(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn complex(v: &Value) -> Option<C64> {
    match v {
        Value::Array(a) if a.len() == 2 => Some(C64::new(num(&a[0])?, num(&a[1])?)),
        _ => num(v).map(|x| C64::new(x, 0.0)),
    }
}

fn parse_h(h: &Tbl) -> Result<HSpec, Error> {
    Ok(match h.str("kind")? {
        "zero" => HSpec::Zero,
        "constant" => HSpec::Constant(h.complex_or("value", C64::new(0.0, 0.0))?),
        "sphere_bump" => HSpec::SphereBump,
        "per_chart" => {
            let mut vals = Vec::new();
            for (n, v) in h.array("values")?.into_iter().flatten().enumerate() {
                vals.push(complex(v).ok_or_else(|| h.err(&format!("values[{n}]"), "expected a number or [re, im]"))?);
            }
            HSpec::PerChart(vals)
        }
        "trig" => HSpec::Trig {
            offset: h.complex_or("offset", C64::new(0.0, 0.0))?,
            poly: h.trig("terms")?,
        },
        "on_shell" => HSpec::OnShell { big_h: h.complex_or("big_h", C64::new(0.0, 0.0))? },
        k => return Err(Error::UnknownKind { path: h.key("kind"), kind: k.into() }),
    })
}

fn parse_inline(key: &str, text: &str) -> Result<Table, Error> {
    format!("{key} = {text}").parse().map_err(|e: toml::de::Error| Error::Config {
        path: key.into(),
        msg: e.to_string(),
    })
}

impl Scenario {
    /// Replaces h by an inline TOML table, e.g. `{ kind = "constant", value = [2, 1] }`.
    pub fn override_h(&mut self, spec: &str) -> Result<(), Error> {
        let t = parse_inline("h", spec)?;
        let root = Tbl { path: String::new(), t: &t };
        let h = root.sub("h")?.ok_or_else(|| root.err("h", "expected an inline table"))?;
        self.h = parse_h(&h)?;
        self.check_consistency()
    }

    /// Replaces the variation field: trigonometric terms `[[a, b, re, im], ...]`
    /// on the torus, a 3×3 flow matrix on the sphere.
    pub fn override_field(&mut self, spec: &str) -> Result<(), Error> {
        let t = parse_inline("field", spec)?;
        let root = Tbl { path: String::new(), t: &t };
        match &mut self.deformation {
            DeformationSpec::TorusAffine { perturbation, .. } => *perturbation = root.trig("field")?,
            DeformationSpec::SphereFlow { flow, .. } => *flow = root.matrix::<3, 3>(&t["field"], "field")?,
            DeformationSpec::Identity => {
                return Err(Error::Config { path: "field".into(), msg: "the scenario has no deformation family".into() })
            }
        }
        if self.variation_step.is_none() {
            self.variation_step = Some(1e-2);
        }
        Ok(())
    }

    /// Command-line overrides: `tol` replaces every tolerance except the
    /// finite-difference one.
    pub fn apply_overrides(&mut self, tol: Option<f64>, quad_triangle: Option<usize>, quad_segment: Option<usize>) {
        if let Some(t) = tol {
            let v = self.tol.variation;
            self.tol = Tolerances {
                algebra: t,
                forms: t,
                closed_form: t,
                gauge: t,
                torsor: t,
                pairing: t,
                variation: v,
                el: t,
                operators: t,
            };
        }
        if let Some(q) = quad_triangle {
            self.quad_triangle = q.max(1);
        }
        if let Some(q) = quad_segment {
            self.quad_segment = q.max(1);
        }
    }

    pub fn load(path: &Path) -> Result<Scenario, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Scenario::parse(&text).map_err(|e| match e {
            Error::Config { path: p, msg } if p.is_empty() => Error::Config {
                path: path.display().to_string(),
                msg,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Scenario, Error> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
            path: String::new(),
            msg: e.to_string(),
        })?;
        let root = Tbl { path: String::new(), t: &table };
        let name = root.str("name")?.to_string();
        let seed = match table.get("seed") {
            None => 1,
            Some(Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(_) => return Err(root.err("seed", "expected a non-negative integer")),
        };
        let at = root.sub("atlas")?.ok_or_else(|| root.err("atlas", "missing table"))?;
        let atlas = match at.str("kind")? {
            "torus" => AtlasKind::Torus,
            "sphere" => AtlasKind::Sphere,
            "octagon" => AtlasKind::Octagon,
            "annulus" => AtlasKind::Annulus,
            k => return Err(Error::UnknownKind { path: at.key("kind"), kind: k.into() }),
        };
        let deformation = match root.sub("deformation")? {
            None => DeformationSpec::Identity,
            Some(d) => match d.str("kind")? {
                "identity" => DeformationSpec::Identity,
                "torus_affine" => {
                    let mu = d.complex_or("mu", C64::new(0.0, 0.0))?;
                    if mu.norm() > 0.95 {
                        return Err(d.err("mu", "‖μ‖∞ must not exceed 0.95"));
                    }
                    DeformationSpec::TorusAffine {
                        mu,
                        perturbation: d.trig("perturbation")?,
                        t: d.f64_or("t", 0.0)?,
                    }
                }
                "sphere_flow" => {
                    let flow = match d.t.get("flow") {
                        None => deform::DEFAULT_FLOW,
                        Some(v) => d.matrix::<3, 3>(v, "flow")?,
                    };
                    DeformationSpec::SphereFlow { flow, t: d.f64_or("t", 0.0)? }
                }
                k => return Err(Error::UnknownKind { path: d.key("kind"), kind: k.into() }),
            },
        };
        let h = match root.sub("h")? {
            None => HSpec::Zero,
            Some(h) => parse_h(&h)?,
        };
        let variation_step = match root.sub("variation")? {
            None => None,
            Some(v) => Some(v.f64_or("step", 1e-2)?),
        };
        let group = match root.sub("group")? {
            None => None,
            Some(g) => {
                let mut generators = Vec::new();
                for (n, v) in g.array("generators")?.into_iter().flatten().enumerate() {
                    generators.push(g.matrix::<2, 2>(v, &format!("generators[{n}]"))?);
                }
                let mut names = Vec::new();
                for (n, v) in g.array("names")?.into_iter().flatten().enumerate() {
                    match v {
                        Value::String(s) => names.push(s.clone()),
                        _ => return Err(g.err(&format!("names[{n}]"), "expected a string")),
                    }
                }
                if names.len() != generators.len() {
                    return Err(g.err("names", "one name per generator required"));
                }
                let mut vertices = Vec::new();
                for (n, v) in g.array("vertices")?.into_iter().flatten().enumerate() {
                    vertices.push(complex(v).ok_or_else(|| g.err(&format!("vertices[{n}]"), "expected [re, im]"))?);
                }
                Some(GroupSpec { names, generators, relator: g.str("relator")?.to_string(), vertices })
            }
        };
        let mut tol = Tolerances::default();
        if let Some(t) = root.sub("tolerances")? {
            for (k, slot) in [
                ("algebra", &mut tol.algebra),
                ("forms", &mut tol.forms),
                ("closed_form", &mut tol.closed_form),
                ("gauge", &mut tol.gauge),
                ("torsor", &mut tol.torsor),
                ("pairing", &mut tol.pairing),
                ("variation", &mut tol.variation),
                ("el", &mut tol.el),
                ("operators", &mut tol.operators),
            ] {
                *slot = t.f64_or(k, *slot)?;
            }
        }
        let (mut quad_triangle, mut quad_segment) = (16, 16);
        if let Some(q) = root.sub("quadrature")? {
            quad_triangle = q.usize_or("triangle", quad_triangle)?;
            quad_segment = q.usize_or("segment", quad_segment)?;
        }
        let sc = Scenario {
            name,
            seed,
            atlas,
            deformation,
            h,
            variation_step,
            group,
            tol,
            quad_triangle,
            quad_segment,
        };
        sc.check_consistency()?;
        Ok(sc)
    }

    fn check_consistency(&self) -> Result<(), Error> {
        let bad = |path: &str, msg: &str| Err(Error::Config { path: path.into(), msg: msg.into() });
        match (&self.deformation, self.atlas) {
            (DeformationSpec::TorusAffine { .. }, AtlasKind::Torus) => {}
            (DeformationSpec::SphereFlow { .. }, AtlasKind::Sphere) => {}
            (DeformationSpec::Identity, _) => {}
            _ => return bad("deformation.kind", "deformation does not fit the atlas kind"),
        }
        match (&self.h, self.atlas) {
            (HSpec::SphereBump, k) if k != AtlasKind::Sphere => return bad("h.kind", "sphere_bump needs the sphere atlas"),
            (HSpec::Trig { .. } | HSpec::OnShell { .. }, k) if k != AtlasKind::Torus => {
                return bad("h.kind", "periodic h needs the torus atlas")
            }
            _ => {}
        }
        if self.variation_step.is_some() && matches!(self.deformation, DeformationSpec::Identity) {
            return bad("variation", "a variation needs a deformation family");
        }
        Ok(())
    }

    pub fn rule(&self) -> QuadratureRule {
        QuadratureRule::new(self.quad_triangle, self.quad_segment)
    }

    pub fn build(&self) -> Result<Built, Error> {
        let mut caps = None;
        let mut torus = None;
        let mut sphere_flow: Option<Arc<SphereFlow>> = None;
        let atlas: Arc<Atlas> = match self.atlas {
            AtlasKind::Torus => {
                let mu = match &self.deformation {
                    DeformationSpec::TorusAffine { mu, .. } => *mu,
                    _ => C64::new(0.0, 0.0),
                };
                let fam = TorusFamily::new(&star::torus_development(), mu)?;
                let a = fam.base.clone();
                torus = Some(Arc::new(fam));
                a
            }
            AtlasKind::Sphere => {
                let flow = match &self.deformation {
                    DeformationSpec::SphereFlow { flow, .. } => *flow,
                    _ => deform::DEFAULT_FLOW,
                };
                let f = Arc::new(SphereFlow::new(build_sphere_caps()?, flow));
                let a = f.atlas.clone();
                caps = Some(f.caps.clone());
                sphere_flow = Some(f);
                a
            }
            AtlasKind::Octagon => Arc::new(star::build_star_cover(&star::octagon_development())?.atlas),
            AtlasKind::Annulus => Arc::new(annulus::build_annulus()?),
        };
        let (family, base_t, var_f): (FamilyFn, f64, Option<ChartFn>) = match &self.deformation {
            DeformationSpec::Identity => {
                let a = atlas.clone();
                (Arc::new(move |_| DeformationData::identity(a.clone())), 0.0, None)
            }
            DeformationSpec::TorusAffine { perturbation, t, .. } => {
                let fam = torus.clone().unwrap();
                let w = perturbation.clone();
                let vf = fam.v_field(&w);
                (Arc::new(move |s| fam.deformation(s, &w)), *t, Some(vf))
            }
            DeformationSpec::SphereFlow { t, .. } => {
                let f = sphere_flow.clone().unwrap();
                let vf = f.v_field();
                (Arc::new(move |s| f.deformation(s)), *t, Some(vf))
            }
        };
        let defm = Arc::new(family(base_t));
        defm.check_mu()?;
        let h: ChartFn = match &self.h {
            HSpec::Zero => constant_h(C64::new(0.0, 0.0)),
            HSpec::Constant(v) => constant_h(*v),
            HSpec::SphereBump => sphere_h(caps.as_ref().unwrap()),
            HSpec::PerChart(vals) => {
                if vals.len() != atlas.n_charts() {
                    return Err(Error::Config {
                        path: "h.values".into(),
                        msg: format!("{} values for {} charts", vals.len(), atlas.n_charts()),
                    });
                }
                let vals = vals.clone();
                Arc::new(move |i, z: &Jet| Jet::constant(vals[i], z.order()))
            }
            HSpec::Trig { offset, poly } => {
                let lifts = torus.as_ref().unwrap().lifts.clone();
                let (p, o) = (poly.clone(), *offset);
                Arc::new(move |i, z: &Jet| p.eval(&z.add_const(lifts[i])).add_const(o))
            }
            HSpec::OnShell { big_h } => {
                let (d, bh) = (defm.clone(), *big_h);
                Arc::new(move |i, z: &Jet| {
                    let (z0, n) = (z.value(), z.order());
                    let f = d.f_jet(i, z0, n + 3);
                    let fz = f.dz().truncate(n);
                    schwarzian(&f) + (fz * fz).scale(bh)
                })
            }
        };
        Ok(Built {
            scenario: self.clone(),
            atlas,
            closed: self.atlas != AtlasKind::Annulus,
            family,
            base_t,
            var_f,
            defm,
            h,
            caps,
            torus,
        })
    }
}

pub type FamilyFn = Arc<dyn Fn(f64) -> DeformationData + Send + Sync>;

/// A scenario with its atlas, deformation family and fields built.
pub struct Built {
    pub scenario: Scenario,
    pub atlas: Arc<Atlas>,
    pub closed: bool,
    /// Deformation family f_s; the configured deformation is s = base_t.
    pub family: FamilyFn,
    pub base_t: f64,
    /// ∂_s f_s at s = 0, when the scenario has a family.
    pub var_f: Option<ChartFn>,
    pub defm: Arc<DeformationData>,
    pub h: ChartFn,
    pub caps: Option<Arc<SphereCaps>>,
    pub torus: Option<Arc<TorusFamily>>,
}

impl Built {
    pub fn sigma(&self) -> Result<FundamentalCycle, Error> {
        FundamentalCycle::build(&self.atlas)
    }

    pub fn trivializations(&self) -> Result<(Arc<TameTrivialization>, Arc<TameTrivialization>), Error> {
        let t = Arc::new(TameTrivialization::dilogarithm(self.defm.atlas.clone(), 1e-9)?);
        let tt = if Arc::ptr_eq(&self.defm.atlas, &self.defm.tilde) {
            t.clone()
        } else {
            Arc::new(TameTrivialization::dilogarithm(self.defm.tilde.clone(), 1e-9)?)
        };
        Ok((t, tt))
    }

    /// The variation at s = 0 of the family.
    pub fn variation(&self) -> Option<Variation> {
        self.var_f.as_ref().map(|vf| Variation { defm: Arc::new((self.family)(0.0)), var_f: vf.clone() })
    }

    pub fn group(&self) -> Result<Option<FuchsianGroup>, Error> {
        let Some(g) = &self.scenario.group else { return Ok(None) };
        let mut fg = FuchsianGroup {
            genus: g.generators.len() / 2,
            names: g.names.clone(),
            generators: g.generators.iter().map(|m| Psl::new(*m)).collect(),
            relator: Vec::new(),
        };
        fg.relator = fg.parse_word(&g.relator)?;
        Ok(Some(fg))
    }
}

/// Directory of the built-in scenario files.
pub fn builtin_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub const BUILTIN: [&str; 4] = ["torus.toml", "sphere3.toml", "annulus_synthetic.toml", "genus2_octagon.toml"];

pub fn load_builtin() -> Result<Vec<Scenario>, Error> {
    BUILTIN.iter().map(|f| Scenario::load(&builtin_dir().join(f))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_kind_reports_key_path() {
        let e = Scenario::parse("name = \"x\"\n[atlas]\nkind = \"torus\"\n[h]\nkind = \"cubic\"\n").unwrap_err();
        match e {
            Error::UnknownKind { path, kind } => {
                assert_eq!(path, "h.kind");
                assert_eq!(kind, "cubic");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_context() {
        let e = Scenario::parse("name = \"x\"\n[atlas\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn large_mu_is_rejected() {
        let e = Scenario::parse("name = \"x\"\n[atlas]\nkind = \"torus\"\n[deformation]\nkind = \"torus_affine\"\nmu = [0.9, 0.5]\n")
            .unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "deformation.mu"), "{e}");
    }

    #[test]
    fn builtin_scenarios_load() {
        for s in load_builtin().unwrap() {
            let b = s.build().unwrap();
            assert!(b.atlas.n_charts() > 0);
        }
    }
}
