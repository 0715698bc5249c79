//! Command-line entry point: scenario verification, cocycle construction,
//! pairing and the acceptance suite. Prints a JSON report on stdout.

use clap::{Parser, Subcommand};
use deligne::atlas::Tuple;
use deligne::cech_deligne::{Comp, FormLayer};
use deligne::chains::{Chain, FundamentalCycle};
use deligne::fields::FormValue;
use deligne::group_cohomology::{build_polygon_cycle, euler_number, octagon_group, octagon_vertices_h, FanApex};
use deligne::jet::Jet;
use deligne::pairing::action;
use deligne::scenario::{builtin_dir, Built, HSpec, Scenario};
use deligne::suite::{self, Suite};
use deligne::variation::el_residual;
use deligne::{Error, Report};
use num_complex::Complex64 as C64;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "polyakov", version, about = "Deligne cocycles, fundamental cycles and the Polyakov action")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Scenario file (TOML); bare names are looked up among the built-in scenarios.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Replaces every scenario tolerance except the finite-difference one.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Writes the command's artifact (cycle or cocycle) as JSON.
    #[arg(long, global = true)]
    emit: Option<PathBuf>,
    /// Gauss points per direction of the triangle rule.
    #[arg(long = "quad-triangle", global = true)]
    quad_triangle: Option<usize>,
    /// Gauss points of the segment rule.
    #[arg(long = "quad-segment", global = true)]
    quad_segment: Option<usize>,
    /// Seed of all random checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Atlas checks.
    Atlas {
        #[command(subcommand)]
        cmd: AtlasCmd,
    },
    /// Fundamental-class cycles.
    Chains {
        #[command(subcommand)]
        cmd: ChainsCmd,
    },
    /// The Lagrangian cocycle and the action.
    Polyakov {
        #[command(subcommand)]
        cmd: PolyakovCmd,
    },
    /// Pairs an emitted cocycle with an emitted cycle.
    Pair {
        #[arg(long)]
        cocycle: PathBuf,
        #[arg(long)]
        cycle: PathBuf,
    },
    /// Fuchsian group cohomology.
    Fuchsian {
        #[command(subcommand)]
        cmd: FuchsianCmd,
    },
    /// Vertical variations.
    Vary {
        #[command(subcommand)]
        cmd: VaryCmd,
    },
    /// Acceptance criteria, or every check of one scenario with --scenario.
    Suite,
}

#[derive(Subcommand)]
enum AtlasCmd {
    /// Transition cocycle, nerve, projective connection and Chern cocycle.
    Verify,
}

#[derive(Subcommand)]
enum ChainsCmd {
    /// Builds Σ and checks the descent equations.
    Fundamental,
}

#[derive(Subcommand)]
enum PolyakovCmd {
    /// Builds Ω[f] and checks DΩ = 0.
    Build {
        /// Inline TOML table replacing the scenario's h.
        #[arg(long)]
        h: Option<String>,
    },
    /// S mod ℤ(3) and A = exp(S/(2πi)²).
    Action {
        #[arg(long)]
        h: Option<String>,
    },
}

#[derive(Subcommand)]
enum FuchsianCmd {
    /// Euler number of the built-in surface group.
    Euler {
        #[arg(long, default_value_t = 2)]
        genus: usize,
    },
    /// Relator, Euler number and group-side relations of a scenario group.
    Verify,
}

#[derive(Subcommand)]
enum VaryCmd {
    /// Descent data and δS against 2πi∫a.
    Check {
        /// Field override: `[[a, b, re, im], ...]` on the torus, a 3×3 matrix on the sphere.
        #[arg(long)]
        field: Option<String>,
        #[arg(long)]
        h: Option<String>,
    },
    /// Sup-norm of the Euler–Lagrange residual 𝒟_hμ − ∂̄h.
    El {
        #[arg(long)]
        h: Option<String>,
    },
}

/// A command failure: configuration problems exit with 2, others with 1.
enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::UnknownKind { .. } => Failure::Config(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

struct Outcome {
    reports: Vec<Report>,
    result: Value,
}

fn c64(z: C64) -> Value {
    json!([z.re, z.im])
}

fn tuple_map(m: &BTreeMap<Tuple, i64>) -> Value {
    Value::Array(m.iter().filter(|(_, v)| **v != 0).map(|(t, v)| json!({"tuple": t, "value": v})).collect())
}

fn resolve(p: &Path) -> PathBuf {
    if p.exists() {
        return p.to_path_buf();
    }
    let b = builtin_dir().join(p);
    if b.exists() {
        b
    } else {
        p.to_path_buf()
    }
}

impl Cli {
    fn seed(&self, sc: Option<&Scenario>) -> u64 {
        self.seed.or(sc.map(|s| s.seed)).unwrap_or(1)
    }

    fn scenario(&self) -> Result<(PathBuf, Scenario), Failure> {
        let p = self
            .scenario
            .as_ref()
            .ok_or_else(|| Failure::Config("this command needs --scenario <file>".into()))?;
        let path = resolve(p);
        let mut sc = Scenario::load(&path)?;
        sc.apply_overrides(self.tol, self.quad_triangle, self.quad_segment);
        let abs = std::fs::canonicalize(&path).unwrap_or(path);
        Ok((abs, sc))
    }

    fn emit(&self, v: &Value) -> Result<(), Failure> {
        if let Some(p) = &self.emit {
            let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Run(e.to_string()))?;
            std::fs::write(p, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display())))?;
        }
        Ok(())
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.cmd {
        Cmd::Atlas { cmd: AtlasCmd::Verify } => atlas_verify(cli),
        Cmd::Chains { cmd: ChainsCmd::Fundamental } => chains_fundamental(cli),
        Cmd::Polyakov { cmd: PolyakovCmd::Build { h } } => polyakov_build(cli, h.as_deref()),
        Cmd::Polyakov { cmd: PolyakovCmd::Action { h } } => polyakov_action(cli, h.as_deref()),
        Cmd::Pair { cocycle, cycle } => pair(cli, cocycle, cycle),
        Cmd::Fuchsian { cmd: FuchsianCmd::Euler { genus } } => fuchsian_euler(*genus),
        Cmd::Fuchsian { cmd: FuchsianCmd::Verify } => {
            let (_, sc) = cli.scenario()?;
            if sc.group.is_none() {
                return Err(Failure::Config("scenario has no [group] table".into()));
            }
            let b = sc.build()?;
            let mut rng = rand_seeded(cli.seed(Some(&sc)));
            let reports = suite::group_checks(&b, &mut rng, &sc.tol)?;
            Ok(Outcome { reports, result: json!({"genus": sc.group.as_ref().unwrap().generators.len() / 2}) })
        }
        Cmd::Vary { cmd: VaryCmd::Check { field, h } } => {
            let (_, mut sc) = cli.scenario()?;
            if let Some(h) = h {
                sc.override_h(h)?;
            }
            if let Some(f) = field {
                sc.override_field(f)?;
            }
            if sc.variation_step.is_none() {
                return Err(Failure::Config("scenario has no [variation] table".into()));
            }
            let b = sc.build()?;
            let reports = suite::variation_checks(&b, &sc.tol, &sc.rule())?;
            Ok(Outcome { reports, result: json!({"step": sc.variation_step}) })
        }
        Cmd::Vary { cmd: VaryCmd::El { h } } => {
            let (_, mut sc) = cli.scenario()?;
            if let Some(h) = h {
                sc.override_h(h)?;
            }
            let b = sc.build()?;
            let r = el_residual(&b.defm, &b.h);
            let on_shell = matches!(sc.h, HSpec::OnShell { .. }) || is_trivially_on_shell(&b);
            let rep = if on_shell {
                Report::new("EL residual", r, sc.tol.el, String::new())
            } else {
                Report::flag("EL residual", true, format!("{r:e} (h is not declared on-shell)"))
            };
            Ok(Outcome { reports: vec![rep], result: json!({"el_residual": r, "on_shell": on_shell}) })
        }
        Cmd::Suite => suite_cmd(cli),
    }
}

/// Identity maps and constant data on the torus solve the EL equation.
fn is_trivially_on_shell(b: &Built) -> bool {
    use deligne::scenario::DeformationSpec;
    let flat = match &b.scenario.deformation {
        DeformationSpec::Identity => true,
        DeformationSpec::TorusAffine { t, perturbation, .. } => *t == 0.0 || perturbation.terms.is_empty(),
        DeformationSpec::SphereFlow { t, .. } => *t == 0.0,
    };
    flat && matches!(b.scenario.h, HSpec::Zero | HSpec::Constant(_))
}

fn rand_seeded(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

fn atlas_verify(cli: &Cli) -> Result<Outcome, Failure> {
    let (_, sc) = cli.scenario()?;
    let b = sc.build()?;
    let a = &b.atlas;
    let tol = &sc.tol;
    let mut reports = vec![a.verify_transitions(tol.algebra)];
    let nerve = a.build_nerve(3)?;
    reports.push(Report::flag("nerve simplicial identities", nerve.check_simplicial_identities(), String::new()));
    reports.push(a.verify_projective_connection(&*b.h, tol.forms));
    let c = a.chern_cocycle()?;
    let dc = deligne::cech_deligne::cech_delta_int(a, &c, 2);
    reports.push(Report::flag("δ̌c = 0", dc.is_empty(), format!("{} nonzero", dc.len())));
    let mut schwarzian_max = 0.0f64;
    for t in a.tuples(2) {
        for z in a.samples_in(t, t[1]) {
            schwarzian_max = schwarzian_max.max(a.schwarzian(t[0], t[1], &Jet::var(z, 1)).value().norm());
        }
    }
    let mut result = json!({
        "charts": a.n_charts(),
        "tuple_counts": nerve.counts(),
        "max_schwarzian": schwarzian_max,
    });
    if b.closed {
        let sigma = FundamentalCycle::build(a)?;
        result["chern_number"] = json!(a.chern_number(&sigma.eps)?);
    }
    Ok(Outcome { reports, result })
}

fn cycle_json(path: &Path, sc: &Scenario, sigma: &FundamentalCycle) -> Value {
    let eps: Vec<Value> = sigma.eps.iter().map(|(t, e)| json!({"tuple": t, "value": e})).collect();
    json!({
        "schema": 1,
        "kind": "fundamental_cycle",
        "scenario": path,
        "scenario_name": sc.name,
        "sigma0": sigma.sigma0,
        "sigma1": sigma.sigma1,
        "sigma2": sigma.sigma2,
        "eps": eps,
    })
}

fn chains_fundamental(cli: &Cli) -> Result<Outcome, Failure> {
    let (path, sc) = cli.scenario()?;
    let b = sc.build()?;
    if !b.closed {
        return Err(Failure::Config(format!("scenario `{}` is not a closed surface", sc.name)));
    }
    let sigma = b.sigma()?;
    let reports = sigma.verify();
    cli.emit(&cycle_json(&path, &sc, &sigma))?;
    let result = json!({
        "terms": [sigma.sigma0.len(), sigma.sigma1.len(), sigma.sigma2.len()],
        "triples": sigma.eps.len(),
    });
    Ok(Outcome { reports, result })
}

/// Order-0 values of a form component.
fn form_values(v: &FormValue) -> Vec<C64> {
    match v {
        FormValue::F0(a) | FormValue::F2(a) => vec![a.value()],
        FormValue::F1(a, b) => vec![a.value(), b.value()],
    }
}

fn layer_samples(name: &str, b: &Built, layer: &FormLayer) -> Vec<Value> {
    layer
        .iter()
        .map(|(t, c): (&Tuple, &Comp)| {
            let z = b.atlas.regions[t].seed;
            let vals: Vec<Value> = form_values(&c(&Jet::var(z, 1))).into_iter().map(c64).collect();
            json!({"layer": name, "tuple": t, "z": c64(z), "value": vals})
        })
        .collect()
}

fn cocycle_json(path: &Path, sc: &Scenario, b: &Built, cc: &suite::Cocycle) -> Value {
    let co = &cc.lag.cocycle;
    let mut samples = layer_samples("omega", b, co.omega());
    samples.extend(layer_samples("a", b, co.a()));
    samples.extend(layer_samples("f", b, co.f()));
    json!({
        "schema": 1,
        "kind": "lagrangian_cocycle",
        "scenario": path,
        "scenario_name": sc.name,
        "h": sc.h,
        "m": tuple_map(co.m()),
        "ledger": {
            "b": tuple_map(&cc.lag.ledger.b),
            "c": tuple_map(&cc.lag.ledger.c),
            "c_tilde": tuple_map(&cc.lag.ledger.ct),
        },
        "n": tuple_map(&cc.triv.n),
        "n_tilde": tuple_map(&cc.triv_t.n),
        "samples": samples,
    })
}

fn build_with_h(cli: &Cli, h: Option<&str>) -> Result<(PathBuf, Scenario, Built, suite::Cocycle), Failure> {
    let (path, mut sc) = cli.scenario()?;
    if let Some(h) = h {
        sc.override_h(h)?;
    }
    let b = sc.build()?;
    let cc = suite::lagrangian(&b)?;
    Ok((path, sc, b, cc))
}

fn polyakov_build(cli: &Cli, h: Option<&str>) -> Result<Outcome, Failure> {
    let (path, sc, b, cc) = build_with_h(cli, h)?;
    let mut reports = vec![b.atlas.verify_projective_connection(&*b.h, sc.tol.forms)];
    reports.extend(suite::cocycle_checks(&b, &cc, &sc.tol)?);
    cli.emit(&cocycle_json(&path, &sc, &b, &cc))?;
    let result = json!({
        "m_nonzero": cc.lag.m.values().filter(|v| **v != 0).count(),
        "m_residual": cc.lag.m_residual,
    });
    Ok(Outcome { reports, result })
}

fn action_json(av: &deligne::pairing::ActionValue) -> Value {
    json!({
        "S_raw": c64(av.s_raw),
        "S_reduced": c64(av.s_reduced),
        "A_re": av.a.re,
        "A_im": av.a.im,
    })
}

fn polyakov_action(cli: &Cli, h: Option<&str>) -> Result<Outcome, Failure> {
    let (_, sc, b, cc) = build_with_h(cli, h)?;
    if !b.closed {
        return Err(Failure::Config(format!("scenario `{}` is not a closed surface", sc.name)));
    }
    let av = suite::action_value(&b, &cc, &sc.rule())?;
    let mut reports = vec![Report::new(
        "A = exp(S/(2πi)²)",
        (av.a - (av.s_raw / deligne::two_pi_i_pow(2)).exp()).norm() / av.a.norm(),
        1e-10,
        String::new(),
    )];
    let mut result = action_json(&av);
    if let Some(want) = suite::torus_closed_form(&sc) {
        reports.push(Report::new(
            "S = 8πμ⟨h⟩",
            (av.s_raw - want).norm() / want.norm().max(1e-300),
            sc.tol.closed_form,
            String::new(),
        ));
        result["closed_form"] = c64(want);
    }
    Ok(Outcome { reports, result })
}

fn read_json(p: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
}

fn field<'a>(v: &'a Value, key: &str, file: &Path) -> Result<&'a Value, Failure> {
    v.get(key).ok_or_else(|| Failure::Config(format!("{}: missing key `{key}`", file.display())))
}

fn chain_field(v: &Value, key: &str, file: &Path) -> Result<Chain, Failure> {
    serde_json::from_value(field(v, key, file)?.clone())
        .map_err(|e| Failure::Config(format!("{}: `{key}`: {e}", file.display())))
}

/// Rebuilds the cocycle recorded in `cocycle_file` from its scenario,
/// checks it against the recorded data and pairs it with the recorded cycle.
fn pair(cli: &Cli, cocycle_file: &Path, cycle_file: &Path) -> Result<Outcome, Failure> {
    let co = read_json(cocycle_file)?;
    let cy = read_json(cycle_file)?;
    for (v, kind, f) in [(&co, "lagrangian_cocycle", cocycle_file), (&cy, "fundamental_cycle", cycle_file)] {
        if field(v, "kind", f)? != kind {
            return Err(Failure::Config(format!("{}: expected kind `{kind}`", f.display())));
        }
    }
    let path = PathBuf::from(field(&co, "scenario", cocycle_file)?.as_str().unwrap_or_default());
    let mut sc = Scenario::load(&path)?;
    sc.apply_overrides(cli.tol, cli.quad_triangle, cli.quad_segment);
    sc.h = serde_json::from_value::<HSpecRecord>(field(&co, "h", cocycle_file)?.clone())
        .map_err(|e| Failure::Config(format!("{}: `h`: {e}", cocycle_file.display())))?
        .0;
    let b = sc.build()?;
    let cc = suite::lagrangian(&b)?;
    let fresh = cocycle_json(&path, &sc, &b, &cc);
    let mut reports = vec![Report::flag(
        "integer layers match the cocycle file",
        fresh["m"] == co["m"] && fresh["n"] == co["n"] && fresh["ledger"] == co["ledger"],
        String::new(),
    )];
    let mut worst = 0.0f64;
    let recorded = field(&co, "samples", cocycle_file)?.as_array().cloned().unwrap_or_default();
    let now = fresh["samples"].as_array().cloned().unwrap_or_default();
    let n_match = recorded.len() == now.len();
    for (r, n) in recorded.iter().zip(&now) {
        let vals = |x: &Value| -> Vec<f64> {
            x["value"].as_array().into_iter().flatten().flat_map(|p| p.as_array().cloned().unwrap_or_default()).filter_map(|f| f.as_f64()).collect()
        };
        for (a, c) in vals(r).iter().zip(vals(n)) {
            worst = worst.max((a - c).abs() / a.abs().max(1.0));
        }
    }
    reports.push(Report::flag("sample count matches the cocycle file", n_match, format!("{} samples", recorded.len())));
    reports.push(Report::new("form samples match the cocycle file", worst, 1e-12, String::new()));
    let sigma = chain_field(&cy, "sigma0", cycle_file)?
        .add(&chain_field(&cy, "sigma1", cycle_file)?)
        .sub(&chain_field(&cy, "sigma2", cycle_file)?);
    let bd = sigma.total_boundary();
    reports.push(Report::flag("cycle is closed", bd.is_zero(), format!("{} residual terms", bd.len())));
    let av = action(&b.atlas, &cc.lag.cocycle, &sigma, &sc.rule())?;
    let mut result = action_json(&av);
    result["choices"] = json!({
        "trivialization": "dilogarithm, minimum-norm β",
        "log_branches": "principal at seeds, continued along paths",
        "cycle": cycle_file,
        "cocycle": cocycle_file,
    });
    Ok(Outcome { reports, result })
}

/// HSpec as serialized in cocycle files.
struct HSpecRecord(HSpec);

impl<'de> serde::Deserialize<'de> for HSpecRecord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let v = Value::deserialize(d)?;
        let cx = |x: &Value| -> Option<C64> {
            let a = x.as_array()?;
            Some(C64::new(a.first()?.as_f64()?, a.get(1)?.as_f64()?))
        };
        let bad = || D::Error::custom(format!("unrecognized h record {v}"));
        let h = match &v {
            Value::String(s) if s == "Zero" => HSpec::Zero,
            Value::String(s) if s == "SphereBump" => HSpec::SphereBump,
            Value::Object(m) if m.len() == 1 => {
                let (k, x) = m.iter().next().unwrap();
                match k.as_str() {
                    "Constant" => HSpec::Constant(cx(x).ok_or_else(bad)?),
                    "PerChart" => HSpec::PerChart(x.as_array().ok_or_else(bad)?.iter().map(cx).collect::<Option<_>>().ok_or_else(bad)?),
                    "Trig" => HSpec::Trig {
                        offset: cx(&x["offset"]).ok_or_else(bad)?,
                        poly: serde_json::from_value(x["poly"].clone()).map_err(D::Error::custom)?,
                    },
                    "OnShell" => HSpec::OnShell { big_h: cx(&x["big_h"]).ok_or_else(bad)? },
                    _ => return Err(bad()),
                }
            }
            _ => return Err(bad()),
        };
        Ok(HSpecRecord(h))
    }
}

fn fuchsian_euler(genus: usize) -> Result<Outcome, Failure> {
    if genus != 2 {
        return Err(Failure::Config(format!("genus {genus}: only the genus-2 octagon group is built in")));
    }
    let (g, oct) = octagon_group()?;
    let mut reports = g.verify(1e-10);
    let cyc = build_polygon_cycle(&g, &octagon_vertices_h(&oct), FanApex::Vertex(0))?;
    reports.extend(cyc.verify());
    let e = euler_number(&cyc)?;
    let chi = 2 - 2 * genus as i64;
    reports.push(Report::flag("Euler number = 2 − 2g", e == chi, format!("{e}")));
    Ok(Outcome { reports, result: json!({"genus": genus, "euler_number": e}) })
}

fn suite_cmd(cli: &Cli) -> Result<Outcome, Failure> {
    if cli.scenario.is_some() {
        let (_, sc) = cli.scenario()?;
        let seed = cli.seed(Some(&sc));
        let b = sc.build()?;
        let reports = suite::scenario_checks(&b, seed);
        let mut result = json!({"scenario": sc.name});
        if b.closed {
            if let Ok(cc) = suite::lagrangian(&b) {
                if let Ok(av) = suite::action_value(&b, &cc, &sc.rule()) {
                    result["action"] = action_json(&av);
                }
            }
            if let Some(want) = suite::torus_closed_form(&sc) {
                result["closed_form_8_pi_mu_h"] = c64(want);
            }
        }
        return Ok(Outcome { reports, result });
    }
    let mut s = Suite::builtin(cli.seed(None))?;
    if let (Some(t), Some(q)) = (cli.quad_triangle, cli.quad_segment) {
        s.rule = deligne::fields::QuadratureRule::new(t, q);
    }
    let criteria = s.run_all();
    let summary: Vec<Value> = criteria
        .iter()
        .map(|c| json!({"id": c.id, "title": c.title, "pass": c.pass, "seconds": c.seconds}))
        .collect();
    let reports = criteria
        .into_iter()
        .flat_map(|c| {
            let id = c.id;
            c.reports.into_iter().map(move |mut r| {
                r.name = format!("[{id}] {}", r.name);
                r
            })
        })
        .collect();
    Ok(Outcome { reports, result: json!({"criteria": summary}) })
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Atlas { .. } => "atlas verify",
        Cmd::Chains { .. } => "chains fundamental",
        Cmd::Polyakov { cmd: PolyakovCmd::Build { .. } } => "polyakov build",
        Cmd::Polyakov { cmd: PolyakovCmd::Action { .. } } => "polyakov action",
        Cmd::Pair { .. } => "pair",
        Cmd::Fuchsian { cmd: FuchsianCmd::Euler { .. } } => "fuchsian euler",
        Cmd::Fuchsian { cmd: FuchsianCmd::Verify } => "fuchsian verify",
        Cmd::Vary { cmd: VaryCmd::Check { .. } } => "vary check",
        Cmd::Vary { cmd: VaryCmd::El { .. } } => "vary el",
        Cmd::Suite => "suite",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = command_name(&cli.cmd);
    let (report, code) = match run(&cli) {
        Ok(out) => {
            let pass = out.reports.iter().all(|r| r.pass);
            (
                json!({
                    "schema": 1,
                    "command": command,
                    "pass": pass,
                    "result": out.result,
                    "reports": out.reports,
                }),
                if pass { 0 } else { 1 },
            )
        }
        Err(Failure::Config(msg)) => (json!({"schema": 1, "command": command, "pass": false, "error": msg}), 2),
        Err(Failure::Run(msg)) => (json!({"schema": 1, "command": command, "pass": false, "error": msg}), 1),
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    let _ = writeln!(std::io::stdout(), "{text}");
    ExitCode::from(code)
}
