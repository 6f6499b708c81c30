//! TOML system files and perturbation schedules.
//!
//! ```toml
//! [z2cubic]
//! a21 = "-1"
//! b21 = "3/10*sqrt(5)"
//!
//! [perturbation]        # optional, lyapunov only
//! p02 = "1/2"
//! ```
//!
//! or a raw switching system:
//!
//! ```toml
//! [upper]
//! P = "-y + x^2"
//! Q = "x"
//! [lower]
//! P = "-y"
//! Q = "x"
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nilcyc_core::bifurc::Stage;
use nilcyc_core::centers::{parse_surd, CenterError, SurdParams};
use nilcyc_core::exactalg::{parse_rational, MPoly, Rational};
use nilcyc_core::sysmodel::{Perturbation, PlanarField, SwitchingSystem, PERTURBATION_NAMES, Z2_PARAM_NAMES};
use num_traits::Zero;
use serde::Deserialize;
use toml::Spanned;

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum SystemSpec {
    Z2 { params: SurdParams, perturbation: Perturbation },
    Raw(SwitchingSystem),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    z2cubic: Option<BTreeMap<String, Spanned<String>>>,
    perturbation: Option<BTreeMap<String, Spanned<String>>>,
    upper: Option<RawField>,
    lower: Option<RawField>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    #[serde(rename = "P", alias = "p")]
    p: Spanned<String>,
    #[serde(rename = "Q", alias = "q")]
    q: Spanned<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    stage: Vec<BTreeMap<String, Spanned<String>>>,
}

/// 1-based line and column of byte `offset` in `text`.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

struct Source<'a> {
    name: &'a str,
    text: &'a str,
}

impl Source<'_> {
    fn error_at(&self, offset: usize, message: impl Into<String>) -> CliError {
        let (line, column) = line_col(self.text, offset);
        CliError::Parse { file: self.name.to_string(), line, column, message: message.into() }
    }

    /// Error inside a string value; `column` is 1-based within the string.
    fn error_in(&self, value: &Spanned<String>, column: usize, message: impl Into<String>) -> CliError {
        // skip the opening quote
        self.error_at(value.span().start + 1 + column.saturating_sub(1), message)
    }

    fn toml_error(&self, e: toml::de::Error) -> CliError {
        let offset = e.span().map_or(0, |s| s.start);
        self.error_at(offset, e.message().trim().to_string())
    }

    fn poly(&self, value: &Spanned<String>) -> Result<MPoly, CliError> {
        value.get_ref().parse::<MPoly>().map_err(|e| self.error_in(value, e.column, e.message))
    }

    fn rational(&self, value: &Spanned<String>) -> Result<Rational, CliError> {
        let text = value.get_ref();
        let lead = text.len() - text.trim_start().len();
        parse_rational(text.trim())
            .map_err(|e| self.error_in(value, e.column + lead, format!("malformed rational: {}", e.message)))
    }
}

pub fn parse_system(name: &str, text: &str) -> Result<SystemSpec, CliError> {
    let src = Source { name, text };
    let raw: RawFile = toml::from_str(text).map_err(|e| src.toml_error(e))?;
    match (raw.z2cubic, raw.upper, raw.lower) {
        (Some(z2), None, None) => {
            let mut pairs = Vec::new();
            for (k, v) in &z2 {
                if !Z2_PARAM_NAMES.contains(&k.as_str()) {
                    return Err(src.error_at(v.span().start, format!("unknown parameter `{k}`")));
                }
                parse_surd(v.get_ref()).map_err(|e| src.error_in(v, 1, surd_message(e)))?;
                pairs.push((k.as_str(), v.get_ref().as_str()));
            }
            let params = SurdParams::parse_pairs(&pairs).map_err(|e| src.error_at(0, surd_message(e)))?;
            let mut perturbation = Perturbation::default();
            for (k, v) in raw.perturbation.iter().flatten() {
                let slot = perturbation
                    .get_mut(k)
                    .ok_or_else(|| src.error_at(v.span().start, format!("unknown perturbation `{k}`")))?;
                *slot = src.rational(v)?;
            }
            Ok(SystemSpec::Z2 { params, perturbation })
        }
        (None, Some(up), Some(lo)) => {
            if raw.perturbation.is_some() {
                return Err(src.error_at(0, "[perturbation] applies to [z2cubic] systems only"));
            }
            let upper = PlanarField::new(src.poly(&up.p)?, src.poly(&up.q)?);
            let lower = PlanarField::new(src.poly(&lo.p)?, src.poly(&lo.q)?);
            Ok(SystemSpec::Raw(SwitchingSystem { upper, lower }))
        }
        _ => Err(src.error_at(0, "expected either a [z2cubic] table or both [upper] and [lower]")),
    }
}

fn surd_message(e: CenterError) -> String {
    match e {
        CenterError::BadValue(v, m) => format!("bad value {v:?}: {m}"),
        other => other.to_string(),
    }
}

/// Writes `spec` in the file format; parsing the result gives `spec` back.
pub fn to_toml(spec: &SystemSpec) -> String {
    let mut out = String::new();
    match spec {
        SystemSpec::Z2 { params, perturbation } => {
            out.push_str("[z2cubic]\n");
            for n in Z2_PARAM_NAMES {
                let (a, b) = (params.rational.get(n).unwrap(), params.radical.get(n).unwrap());
                if !a.is_zero() || !b.is_zero() {
                    let _ = writeln!(out, "{n} = \"{}\"", params.value_string(n));
                }
            }
            let mut pert = perturbation.clone();
            let entries: Vec<(&str, Rational)> = PERTURBATION_NAMES
                .iter()
                .map(|&n| (n, pert.get_mut(n).unwrap().clone()))
                .filter(|(_, v)| !v.is_zero())
                .collect();
            if !entries.is_empty() {
                out.push_str("\n[perturbation]\n");
                for (n, v) in entries {
                    let _ = writeln!(out, "{n} = \"{v}\"");
                }
            }
        }
        SystemSpec::Raw(sys) => {
            for (name, f) in [("upper", &sys.upper), ("lower", &sys.lower)] {
                let _ = writeln!(out, "[{name}]\nP = \"{}\"\nQ = \"{}\"", f.p, f.q);
                if name == "upper" {
                    out.push('\n');
                }
            }
        }
    }
    out
}

/// `[[stage]]` tables of `name = "increment"` pairs.
pub fn parse_schedule(name: &str, text: &str) -> Result<Vec<Stage>, CliError> {
    let src = Source { name, text };
    let raw: RawSchedule = toml::from_str(text).map_err(|e| src.toml_error(e))?;
    raw.stage
        .iter()
        .map(|table| {
            let increments = table
                .iter()
                .map(|(k, v)| Ok((k.clone(), src.rational(v)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(Stage { increments })
        })
        .collect()
}

/// `"a,b"` into two rationals.
pub fn parse_point(text: &str) -> Result<(Rational, Rational), CliError> {
    let bad = |m: String| CliError::Parse { file: "--point".into(), line: 1, column: 1, message: m };
    let parts: Vec<&str> = text.split(',').collect();
    let [x, y] = parts.as_slice() else {
        return Err(bad(format!("expected x,y, got {text:?}")));
    };
    let r = |s: &str| parse_rational(s.trim()).map_err(|e| bad(format!("malformed rational {s:?}: {}", e.message)));
    Ok((r(x)?, r(y)?))
}

/// Seed file: one `x, y` (or `x y`) pair per line, `#` comments.
pub fn parse_seeds(name: &str, text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let nums: Vec<Result<f64, _>> =
            body.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(str::parse).collect();
        match nums.as_slice() {
            [Ok(x), Ok(y)] => out.push((*x, *y)),
            _ => {
                return Err(CliError::Parse {
                    file: name.to_string(),
                    line: i + 1,
                    column: 1,
                    message: format!("expected two numbers, got {body:?}"),
                })
            }
        }
    }
    Ok(out)
}
