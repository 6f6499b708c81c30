//! Command implementations behind the `nilcyc` binary. Every command returns
//! a report (JSON or SVG text); `main` only parses flags and writes output.

pub mod sysfile;

use std::path::PathBuf;

use nilcyc_core::bifurc::{unfold_cycles, BifurcError, UnfoldConfig};
use nilcyc_core::bigfloat::{default_precision, BigFloat};
use nilcyc_core::centers::{
    certify_center, condition_membership, CenterError, ConditionId, Evidence, SpotCheckConfig, SurdParams,
    ALL_CONDITIONS, ROOT,
};
use nilcyc_core::exactalg::{resultant, AlgError, MPoly, Rational};
use nilcyc_core::lyapunov::{displacement_coeffs, LyapError, LyapunovReport};
use nilcyc_core::nilclass::{classify_point, NilError};
use nilcyc_core::portrait::{render_portrait, seed_grid, FilippovSystem, PortraitConfig, PortraitError};
use nilcyc_core::sysmodel::{build_z2_cubic, unfolded_system, ModelError, SwitchingSystem, Z2CubicParams, Z2_PARAM_NAMES};
use num_traits::{Signed as _, Zero};
use serde_json::{json, Value};

use sysfile::SystemSpec;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{file}:{line}:{column}: {message}")]
    Parse { file: String, line: usize, column: usize, message: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse { .. } => 2,
            CliError::Precondition(_) => 3,
            CliError::Inconclusive(_) => 4,
        }
    }
}

impl From<LyapError> for CliError {
    fn from(e: LyapError) -> Self {
        match e {
            LyapError::NoConvergence(_) => CliError::Inconclusive(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<NilError> for CliError {
    fn from(e: NilError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<AlgError> for CliError {
    fn from(e: AlgError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<CenterError> for CliError {
    fn from(e: CenterError) -> Self {
        match e {
            CenterError::Certificate(..) => CliError::Inconclusive(e.to_string()),
            CenterError::Lyapunov(l) => l.into(),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<BifurcError> for CliError {
    fn from(e: BifurcError) -> Self {
        match e {
            BifurcError::OrderTooLow(_) => CliError::Inconclusive(e.to_string()),
            BifurcError::Center(c) => c.into(),
            BifurcError::Lyapunov(l) => l.into(),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<PortraitError> for CliError {
    fn from(e: PortraitError) -> Self {
        match e {
            PortraitError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

pub enum Report {
    Json(Value),
    Svg(String),
}

impl Report {
    /// Final text, newline terminated.
    pub fn render(&self) -> String {
        match self {
            Report::Json(v) => {
                let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
                s.push('\n');
                s
            }
            Report::Svg(s) => s.clone(),
        }
    }
}

pub fn read_file(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn load_system(path: &PathBuf) -> Result<SystemSpec, CliError> {
    sysfile::parse_system(&path.display().to_string(), &read_file(path)?)
}

/// Shared numeric settings.
#[derive(Clone, Debug)]
pub struct Numerics {
    pub order: usize,
    pub precision: u32,
    pub eps: Vec<Rational>,
}

impl Numerics {
    pub fn new(order: usize, precision: Option<u32>, eps: Vec<Rational>) -> Result<Self, CliError> {
        if order == 0 {
            return Err(CliError::Precondition("--order must be positive".into()));
        }
        let precision = precision.unwrap_or_else(default_precision);
        if precision < 32 {
            return Err(CliError::Precondition(format!("--precision must be at least 32 bits, got {precision}")));
        }
        for (i, e) in eps.iter().enumerate() {
            if !e.is_positive() {
                return Err(CliError::Precondition(format!("eps samples must be positive, got {e}")));
            }
            if eps[..i].contains(e) {
                return Err(CliError::Precondition(format!("eps sample {e} repeated")));
            }
        }
        Ok(Numerics { order, precision, eps })
    }

    fn digits(&self) -> usize {
        BigFloat::decimal_digits(self.precision).min(40)
    }
}

fn bf(x: &BigFloat, digits: usize) -> String {
    x.to_sci_string(digits)
}

fn opt_str<T: ToString>(v: &Option<T>) -> Value {
    v.as_ref().map_or(Value::Null, |x| Value::String(x.to_string()))
}

fn rational_params(params: &SurdParams, what: &str) -> Result<Z2CubicParams, CliError> {
    if params.is_rational() {
        Ok(params.rational.clone())
    } else {
        Err(CliError::Precondition(format!("{what} needs rational coefficients")))
    }
}

fn unperturbed(spec: &SystemSpec, what: &str) -> Result<(), CliError> {
    match spec {
        SystemSpec::Z2 { perturbation, .. } if !perturbation.is_zero() => {
            Err(CliError::Precondition(format!("[perturbation] is only used by lyapunov, not {what}")))
        }
        _ => Ok(()),
    }
}

fn parameter_json(params: &SurdParams) -> Value {
    let mut m = serde_json::Map::new();
    for n in Z2_PARAM_NAMES {
        m.insert(n.to_string(), Value::String(params.value_string(n)));
    }
    Value::Object(m)
}

pub fn classify(spec: &SystemSpec, point: (Rational, Rational), order: usize) -> Result<Report, CliError> {
    unperturbed(spec, "classify")?;
    let sys = match spec {
        SystemSpec::Z2 { params, .. } => build_z2_cubic(&rational_params(params, "classify")?),
        SystemSpec::Raw(s) => s.clone(),
    };
    let halves = classify_point(&sys, (&point.0, &point.1), order)?;
    let halves: Vec<Value> = halves
        .iter()
        .map(|h| {
            let c = &h.class;
            json!({
                "half": h.half.to_string(),
                "kind": c.kind.to_string(),
                "multiplicity": c.multiplicity,
                "m": c.m,
                "n": c.n,
                "f_m": opt_str(&c.f_m),
                "g_n": opt_str(&c.g_n),
                "delta": opt_str(&c.delta),
            })
        })
        .collect();
    Ok(Report::Json(json!({
        "command": "classify",
        "point": [point.0.to_string(), point.1.to_string()],
        "order": order,
        "halves": halves,
    })))
}

fn lyapunov_json(r: &LyapunovReport, digits: usize) -> Value {
    let vanishing: Vec<bool> = r.v.iter().zip(&r.tolerance).map(|(v, t)| v.abs() <= *t).collect();
    json!({
        "eps": opt_str(&r.eps),
        "v": r.v.iter().map(|x| bf(x, digits)).collect::<Vec<_>>(),
        "tolerance": r.tolerance.iter().map(|x| bf(x, 3)).collect::<Vec<_>>(),
        "all_vanish": vanishing.iter().all(|&b| b),
        "vanishing": vanishing,
    })
}

/// Displacement coefficients. `[z2cubic]` systems are unfolded at `(1, 0)`
/// once per eps sample; raw systems are used as given at the origin.
pub fn lyapunov(spec: &SystemSpec, num: &Numerics, delta: &Rational) -> Result<Report, CliError> {
    let digits = num.digits();
    let mut reports = Vec::new();
    match spec {
        SystemSpec::Z2 { params, perturbation } => {
            let p = rational_params(params, "lyapunov")?;
            if num.eps.is_empty() {
                return Err(CliError::Precondition("[z2cubic] systems need at least one --eps".into()));
            }
            for e in &num.eps {
                let sys = unfolded_system(&p, perturbation, e, delta)?;
                let mut r = displacement_coeffs(&sys, num.order, num.precision)?;
                r.eps = Some(e.clone());
                reports.push(lyapunov_json(&r, digits));
            }
        }
        SystemSpec::Raw(sys) => {
            if !num.eps.is_empty() || !delta.is_zero() {
                return Err(CliError::Precondition("--eps and --delta apply to [z2cubic] systems only".into()));
            }
            reports.push(lyapunov_json(&displacement_coeffs(sys, num.order, num.precision)?, digits));
        }
    }
    Ok(Report::Json(json!({
        "command": "lyapunov",
        "order": num.order,
        "precision_bits": num.precision,
        "reports": reports,
    })))
}

fn evidence_json(e: &Evidence, params: &SurdParams) -> Value {
    let root = format!("sqrt({})", params.radicand);
    let show = |p: &MPoly| p.to_string().replace(ROOT, &root);
    match e {
        Evidence::Hamiltonians { upper, lower } => {
            json!({"kind": "Hamiltonians", "upper": show(upper), "lower": show(lower)})
        }
        Evidence::Reversibility => json!({"kind": "Reversibility"}),
        Evidence::InverseIntegratingFactor { factor, form } => {
            json!({"kind": "InverseIntegratingFactor", "factor": show(factor), "form": format!("{form:?}")})
        }
        Evidence::Numeric { scaling_invariant } => json!({"kind": "Numeric", "scaling_invariant": scaling_invariant}),
    }
}

/// Certifies a bi-center; without `condition` the first one the parameters
/// satisfy is used.
pub fn center_verify(spec: &SystemSpec, condition: Option<ConditionId>, num: &Numerics) -> Result<Report, CliError> {
    unperturbed(spec, "center-verify")?;
    let SystemSpec::Z2 { params, .. } = spec else {
        return Err(CliError::Precondition("center-verify needs a [z2cubic] system".into()));
    };
    let id = match condition {
        Some(id) => id,
        None => ALL_CONDITIONS
            .into_iter()
            .find(|&id| condition_membership(params, id).holds)
            .ok_or_else(|| CliError::Precondition("parameters satisfy none of the center conditions".into()))?,
    };
    let membership = condition_membership(params, id);
    if !membership.holds {
        return Err(CliError::Precondition(format!(
            "parameters do not satisfy condition {id}: {}",
            membership.violated.join("; ")
        )));
    }
    let mut cfg = SpotCheckConfig { order: num.order, precision: num.precision, ..Default::default() };
    if !num.eps.is_empty() {
        cfg.eps_samples = num.eps.clone();
    }
    let cert = certify_center(params, id, &cfg)?;
    let samples: Vec<Value> = cert
        .spotcheck
        .reports
        .iter()
        .map(|(e, r)| json!({"eps": e.to_string(), "max_abs": bf(&r.max_abs(), 6)}))
        .collect();
    Ok(Report::Json(json!({
        "command": "center-verify",
        "condition": id.to_string(),
        "parameters": parameter_json(params),
        "route": format!("{:?}", cert.route),
        "evidence": evidence_json(&cert.evidence, params),
        "spotcheck": {
            "monodromic": cert.spotcheck.monodromic,
            "passed": cert.spotcheck.passed,
            "max_abs": bf(&cert.spotcheck.max_abs, 6),
            "threshold": bf(&cert.spotcheck.threshold, 3),
            "order": num.order,
            "precision_bits": num.precision,
            "samples": samples,
        },
    })))
}

/// The two sixth-order factors whose resultant in `p02` is a pure power of `b21`.
pub fn demo_polynomials(name: &str) -> Option<(MPoly, MPoly, &'static str)> {
    match name {
        "v6" => Some((
            "(7*b21^2 + 40*b21*p02 - 80*p02^2)*(29*b21^2 - 40*b21*p02 + 80*p02^2)".parse().ok()?,
            "551*b21^2 + 1544*b21*p02 - 3088*p02^2".parse().ok()?,
            "p02",
        )),
        _ => None,
    }
}

pub fn resultant_demo(a: &MPoly, b: &MPoly, var: &str) -> Result<Report, CliError> {
    let r = resultant(a, b, var)?;
    Ok(Report::Json(json!({
        "command": "resultant-demo",
        "a": a.to_string(),
        "b": b.to_string(),
        "variable": var,
        "resultant": r.to_string(),
    })))
}

pub fn unfold(
    spec: &SystemSpec,
    condition: Option<ConditionId>,
    schedule: &[nilcyc_core::bifurc::Stage],
    num: &Numerics,
    rho_max: &Rational,
) -> Result<Report, CliError> {
    unperturbed(spec, "unfold")?;
    let SystemSpec::Z2 { params, .. } = spec else {
        return Err(CliError::Precondition("unfold needs a [z2cubic] system".into()));
    };
    let center = rational_params(params, "unfold")?;
    let id = match condition {
        Some(id) => id,
        None => ALL_CONDITIONS
            .into_iter()
            .find(|&id| condition_membership(params, id).holds)
            .ok_or_else(|| CliError::Precondition("parameters satisfy none of the center conditions".into()))?,
    };
    let eps = match num.eps.as_slice() {
        [] => Rational::new(1.into(), 10.into()),
        [e] => e.clone(),
        _ => return Err(CliError::Precondition("unfold takes a single --eps".into())),
    };
    if !rho_max.is_positive() {
        return Err(CliError::Precondition("--rho-max must be positive".into()));
    }
    let cfg = UnfoldConfig { eps: eps.clone(), order: num.order, precision: num.precision, rho_max: rho_max.clone() };
    let cert = unfold_cycles(&center, id, schedule, &cfg)?;
    let mut v = serde_json::to_value(&cert).expect("certificate serializes");
    if let Value::Object(m) = &mut v {
        m.insert("command".into(), json!("unfold"));
        m.insert("condition".into(), json!(id.to_string()));
        m.insert("eps".into(), json!(eps.to_string()));
        m.insert("rho_max".into(), json!(rho_max.to_string()));
    }
    Ok(Report::Json(v))
}

#[derive(Clone, Debug)]
pub struct PortraitArgs {
    pub window: [f64; 4],
    pub seeds: Option<Vec<(f64, f64)>>,
    pub grid: usize,
    pub tol: f64,
    pub t_end: f64,
}

pub fn portrait(spec: &SystemSpec, args: &PortraitArgs) -> Result<Report, CliError> {
    unperturbed(spec, "portrait")?;
    let sys: SwitchingSystem = match spec {
        SystemSpec::Z2 { params, .. } => build_z2_cubic(&params.approximate(128)),
        SystemSpec::Raw(s) => s.clone(),
    };
    if !(args.tol > 0.0) || !(args.t_end > 0.0) {
        return Err(CliError::Precondition("--tol and --t-end must be positive".into()));
    }
    let fs = FilippovSystem::new(&sys)?;
    let mut cfg = PortraitConfig::new(args.window);
    cfg.tol = args.tol;
    cfg.t_end = args.t_end;
    let seeds = args.seeds.clone().unwrap_or_else(|| seed_grid(args.window, args.grid));
    Ok(Report::Svg(render_portrait(&fs, &seeds, &cfg)?))
}

/// `"x0,x1,y0,y1"`.
pub fn parse_window(text: &str) -> Result<[f64; 4], CliError> {
    let bad = || CliError::Parse {
        file: "--window".into(),
        line: 1,
        column: 1,
        message: format!("expected x0,x1,y0,y1, got {text:?}"),
    };
    let v: Vec<f64> = text.split(',').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let w: [f64; 4] = v.try_into().map_err(|_| bad())?;
    if !(w[1] > w[0] && w[3] > w[2]) {
        return Err(CliError::Precondition(format!("empty window {text:?}")));
    }
    Ok(w)
}
