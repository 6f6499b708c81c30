//! Bi-center conditions at `(+-1, 0)` of the Z2-equivariant cubic switching
//! family: exact membership, a sufficiency certificate per condition, and a
//! numeric spot check of the displacement coefficients on the unfolded
//! family.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::bigfloat::{default_precision, BigFloat};
use crate::exactalg::{int, rat, sqrt_rational_approx, MPoly, Rational};
use crate::lyapunov::{displacement_coeffs, LyapError, LyapunovReport};
use crate::nilclass::{monodromic_candidate, NilError};
use crate::sysmodel::{
    check_center_symmetry, hamiltonian_of, inverse_integrating_factor_residual, shift_to_origin,
    unfolded_system, z2_cubic_symbolic, ModelError, Perturbation, PlanarField, SwitchingSystem,
    Z2CubicParams, Z2_PARAM_NAMES,
};

/// Symbol standing for `sqrt(radicand)` inside exact computations.
pub const ROOT: &str = "sqrt_radicand";

#[derive(Debug, thiserror::Error)]
pub enum CenterError {
    #[error("parameters do not satisfy condition {0}: {1}")]
    NotMember(ConditionId, String),
    #[error("condition {0}: certificate failed: {1}")]
    Certificate(ConditionId, String),
    #[error("negative radicand {0}")]
    NegativeRadicand(String),
    #[error("bad value {0:?}: {1}")]
    BadValue(String, String),
    #[error(transparent)]
    Lyapunov(#[from] LyapError),
    #[error(transparent)]
    Nilpotent(#[from] NilError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ConditionId {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

pub const ALL_CONDITIONS: [ConditionId; 6] = [
    ConditionId::I,
    ConditionId::II,
    ConditionId::III,
    ConditionId::IV,
    ConditionId::V,
    ConditionId::VI,
];

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for ConditionId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ALL_CONDITIONS
            .iter()
            .copied()
            .find(|c| c.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown condition {s:?} (expected I..VI)"))
    }
}

/// A single constraint on the eight family parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    Zero(MPoly),
    Positive(MPoly),
    Negative(MPoly),
    /// Holds when every constraint of at least one branch holds.
    AnyOf(Vec<Vec<Constraint>>),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Zero(p) => write!(f, "{p} = 0"),
            Constraint::Positive(p) => write!(f, "{p} > 0"),
            Constraint::Negative(p) => write!(f, "{p} < 0"),
            Constraint::AnyOf(branches) => {
                let parts: Vec<String> = branches
                    .iter()
                    .map(|b| {
                        b.iter()
                            .map(|c| c.to_string())
                            .collect::<Vec<_>>()
                            .join(" and ")
                    })
                    .collect();
                write!(f, "either ({})", parts.join(") or ("))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CenterCondition {
    pub id: ConditionId,
    pub constraints: Vec<Constraint>,
}

fn p(s: &str) -> MPoly {
    s.parse().expect("static polynomial")
}

fn zeros(list: &[&str]) -> Vec<Constraint> {
    list.iter().map(|s| Constraint::Zero(p(s))).collect()
}

pub fn condition(id: ConditionId) -> CenterCondition {
    use Constraint::*;
    let constraints = match id {
        ConditionId::I => {
            let mut c = zeros(&["a02 + a12", "a21 + b12", "a12 + 3*b03", "b02", "b21"]);
            c.push(Positive(p("a12")));
            c.push(Negative(p("a03 + 2*a21^2")));
            c
        }
        ConditionId::II => {
            let mut c = zeros(&["a02", "a12", "b02", "b03", "b21"]);
            c.push(Negative(p("2*a03 + (b12 - a21)^2")));
            c
        }
        ConditionId::III => {
            let mut c = zeros(&[
                "a02",
                "a12",
                "b02",
                "a21 + b12",
                "3*b03 + 2*a21*b21",
                "9*(a03 + 2*a21^2)^2 + 8*a21*b21^2*(3*a03 + 2*a21^2)",
            ]);
            c.push(Negative(p("a03 + 2*a21^2")));
            c
        }
        ConditionId::IV => {
            let mut c = zeros(&[
                "a02",
                "a12",
                "b02",
                "8*a21 + 3*b21^2",
                "16*a03 - 3*b21^2*(4*b12 + b21^2)",
                "8*b03 - b21*(8*b12 - b21^2)",
            ]);
            // b12 strictly between -(9 +- 4 sqrt 3) b21^2 / 8
            c.push(Negative(p("64*b12^2 + 144*b12*b21^2 + 33*b21^4")));
            c
        }
        ConditionId::V => {
            let mut c = zeros(&["a12", "b02", "b03", "b21"]);
            c.push(Negative(p("a02")));
            c
        }
        ConditionId::VI => {
            let mut c = zeros(&["a21 + b12", "a12 + 3*b03", "b02", "b21"]);
            // a02 + |a12| < 0, or a02 = a12 < 0
            c.push(AnyOf(vec![
                vec![Negative(p("a02 + a12")), Negative(p("a02 - a12"))],
                vec![Zero(p("a02 - a12")), Negative(p("a12"))],
            ]));
            c
        }
    };
    CenterCondition { id, constraints }
}

/// Family parameters in `Q(sqrt(radicand))`: each value is
/// `rational + radical * sqrt(radicand)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SurdParams {
    pub radicand: Rational,
    pub rational: Z2CubicParams,
    pub radical: Z2CubicParams,
}

impl From<Z2CubicParams> for SurdParams {
    fn from(p: Z2CubicParams) -> Self {
        SurdParams {
            radicand: Rational::zero(),
            rational: p,
            radical: Z2CubicParams::default(),
        }
    }
}

/// Parses `p`, `q*sqrt(s)` or `p + q*sqrt(s)` (any order, `sqrt` may appear
/// once per term). Returns `(p, q, s)`.
pub fn parse_surd(text: &str) -> Result<(Rational, Rational, Option<Rational>), CenterError> {
    let bad = |m: &str| CenterError::BadValue(text.to_string(), m.to_string());
    let mut rest = text.to_string();
    let mut radicand: Option<Rational> = None;
    while let Some(start) = rest.find("sqrt(") {
        let close = rest[start..]
            .find(')')
            .ok_or_else(|| bad("unclosed sqrt("))?
            + start;
        let inner = crate::exactalg::parse_rational(rest[start + 5..close].trim())
            .map_err(|e| bad(&e.message))?;
        if inner.is_negative() {
            return Err(bad("negative radicand"));
        }
        if radicand.as_ref().is_some_and(|r| *r != inner) {
            return Err(bad("mixed radicands"));
        }
        radicand = Some(inner);
        rest.replace_range(start..=close, ROOT);
    }
    let poly: MPoly = rest
        .parse()
        .map_err(|e: crate::exactalg::ParseError| bad(&e.message))?;
    if poly.used_vars().iter().any(|v| v != ROOT) || poly.degree_in(ROOT).unwrap_or(0) > 1 {
        return Err(bad("expected a + b*sqrt(s)"));
    }
    let cs = poly.coeffs_in(ROOT);
    let a = cs[0].constant_value().unwrap_or_else(Rational::zero);
    let b = cs
        .get(1)
        .and_then(|c| c.constant_value())
        .unwrap_or_else(Rational::zero);
    Ok((a, b, radicand))
}

impl SurdParams {
    pub fn new(
        radicand: Rational,
        rational: Z2CubicParams,
        radical: Z2CubicParams,
    ) -> Result<Self, CenterError> {
        if radicand.is_negative() {
            return Err(CenterError::NegativeRadicand(radicand.to_string()));
        }
        Ok(SurdParams {
            radicand,
            rational,
            radical,
        })
    }

    /// Builds from `(name, text)` pairs understood by [`parse_surd`].
    pub fn parse_pairs(pairs: &[(&str, &str)]) -> Result<Self, CenterError> {
        let mut out = SurdParams::from(Z2CubicParams::default());
        let mut radicand: Option<Rational> = None;
        for (name, text) in pairs {
            let (a, b, s) = parse_surd(text)?;
            if let Some(s) = s {
                if radicand.as_ref().is_some_and(|r| *r != s) {
                    return Err(CenterError::BadValue(
                        text.to_string(),
                        "mixed radicands".into(),
                    ));
                }
                radicand = Some(s);
            }
            *out.rational.get_mut(name).ok_or_else(|| {
                CenterError::BadValue(name.to_string(), "unknown parameter".into())
            })? = a;
            *out.radical.get_mut(name).unwrap() = b;
        }
        out.radicand = radicand.unwrap_or_else(Rational::zero);
        Ok(out)
    }

    pub fn is_rational(&self) -> bool {
        self.radicand.is_zero()
            || Z2_PARAM_NAMES
                .iter()
                .all(|n| self.radical.get(n).unwrap().is_zero())
    }

    /// Each parameter as `a + b * ROOT`.
    pub fn symbolic_assignments(&self) -> Vec<(&'static str, MPoly)> {
        let root = MPoly::var(ROOT);
        Z2_PARAM_NAMES
            .iter()
            .map(|n| {
                let a = MPoly::constant(self.rational.get(n).unwrap().clone());
                let b = self.radical.get(n).unwrap();
                let v = if b.is_zero() || self.radicand.is_zero() {
                    a
                } else {
                    &a + &root.scale(b)
                };
                (*n, v)
            })
            .collect()
    }

    /// Replaces `ROOT^2` by the radicand.
    pub fn reduce(&self, poly: &MPoly) -> MPoly {
        if poly.var_index(ROOT).is_none() {
            return poly.clone();
        }
        let root = MPoly::var(ROOT);
        let mut acc = MPoly::zero();
        let mut even_power = Rational::one();
        for (k, c) in poly.coeffs_in(ROOT).into_iter().enumerate() {
            if k > 0 && k % 2 == 0 {
                even_power = &even_power * &self.radicand;
            }
            let term = c.scale(&even_power);
            acc = if k % 2 == 1 {
                &acc + &(&term * &root)
            } else {
                &acc + &term
            };
        }
        acc
    }

    /// Evaluates a polynomial in the family parameters to `(a, b)` with value
    /// `a + b sqrt(radicand)`.
    pub fn eval(&self, poly: &MPoly) -> (Rational, Rational) {
        let v = self.reduce(&poly.subs_many(&self.symbolic_assignments()));
        let cs = v.coeffs_in(ROOT);
        let a = cs[0].constant_value().expect("fully substituted");
        let b = cs
            .get(1)
            .map(|c| c.constant_value().expect("fully substituted"))
            .unwrap_or_else(Rational::zero);
        (a, b)
    }

    /// Exact sign of `a + b sqrt(radicand)`.
    pub fn sign(&self, a: &Rational, b: &Rational) -> i32 {
        let sg = |r: &Rational| {
            if r.is_positive() {
                1
            } else if r.is_negative() {
                -1
            } else {
                0
            }
        };
        if b.is_zero() || self.radicand.is_zero() {
            return sg(a);
        }
        let (sa, sb) = (sg(a), sg(b));
        if sa == 0 || sa == sb {
            return sb;
        }
        let lhs = a * a;
        let rhs = &(b * b) * &self.radicand;
        if lhs > rhs {
            sa
        } else if lhs < rhs {
            sb
        } else {
            0
        }
    }

    /// Rational approximation with absolute error below `2^-bits` per unit
    /// of each radical coefficient.
    pub fn approximate(&self, bits: u32) -> Z2CubicParams {
        if self.is_rational() {
            return self.rational.clone();
        }
        let root = sqrt_rational_approx(&self.radicand, bits);
        let mut out = self.rational.clone();
        for n in Z2_PARAM_NAMES {
            let b = self.radical.get(n).unwrap();
            let slot = out.get_mut(n).unwrap();
            *slot = &*slot + &(b * &root);
        }
        out
    }

    /// The switching system with coefficients in `Q[ROOT]`.
    pub fn system(&self) -> SwitchingSystem {
        let vals = self.symbolic_assignments();
        z2_cubic_symbolic().map(|q| q.subs_many(&vals))
    }

    pub fn value_string(&self, name: &str) -> String {
        let a = self.rational.get(name).unwrap();
        let b = self.radical.get(name).unwrap();
        if b.is_zero() || self.radicand.is_zero() {
            a.to_string()
        } else if a.is_zero() {
            format!("{b}*sqrt({})", self.radicand)
        } else {
            format!("{a} + {b}*sqrt({})", self.radicand)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Membership {
    pub holds: bool,
    pub violated: Vec<String>,
}

fn constraint_holds(c: &Constraint, params: &SurdParams) -> bool {
    let sign = |q: &MPoly| {
        let (a, b) = params.eval(q);
        params.sign(&a, &b)
    };
    match c {
        Constraint::Zero(q) => sign(q) == 0,
        Constraint::Positive(q) => sign(q) > 0,
        Constraint::Negative(q) => sign(q) < 0,
        Constraint::AnyOf(branches) => branches
            .iter()
            .any(|b| b.iter().all(|c| constraint_holds(c, params))),
    }
}

pub fn condition_membership(params: &SurdParams, id: ConditionId) -> Membership {
    let violated: Vec<String> = condition(id)
        .constraints
        .iter()
        .filter(|c| !constraint_holds(c, params))
        .map(|c| c.to_string())
        .collect();
    Membership {
        holds: violated.is_empty(),
        violated,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Route {
    HamiltonianMatch,
    SwitchingSymmetry,
    InverseIntegratingFactor,
    NumericSpotCheckOnly,
}

/// How the integrating-factor identity held.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IdentityForm {
    /// Zero as a polynomial in the free parameters.
    Identical,
    /// Zero only after using the quadratic relation on `b21`.
    ModuloRelation,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Evidence {
    /// Hamiltonians of the shifted halves; they agree on `y = 0`.
    Hamiltonians { upper: MPoly, lower: MPoly },
    /// `(x, y, t) -> (x, -y, -t)` maps the upper field of the shifted
    /// system onto the lower one.
    Reversibility,
    /// `I(x, y)` for the unshifted (smooth) field.
    InverseIntegratingFactor { factor: MPoly, form: IdentityForm },
    /// The scaling `(x, y, t) -> (x, r y, r t)` maps the condition to
    /// itself, so the center can be normalized; the center itself is only
    /// checked numerically.
    Numeric { scaling_invariant: bool },
}

#[derive(Clone, Debug)]
pub struct SpotCheckConfig {
    pub eps_samples: Vec<Rational>,
    pub order: usize,
    pub precision: u32,
}

impl Default for SpotCheckConfig {
    fn default() -> Self {
        SpotCheckConfig {
            eps_samples: vec![rat(1, 10), rat(1, 16)],
            order: 8,
            precision: default_precision(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpotCheck {
    pub monodromic: bool,
    pub perturbation: Perturbation,
    pub reports: Vec<(Rational, LyapunovReport)>,
    pub max_abs: BigFloat,
    pub threshold: BigFloat,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct CenterCertificate {
    pub id: ConditionId,
    pub route: Route,
    pub evidence: Evidence,
    pub spotcheck: SpotCheck,
}

/// Threshold for "vanishing" displacement coefficients: `10^-(2/5 digits)`,
/// i.e. `1e-30` at 256 bits.
pub fn spotcheck_threshold(prec: u32) -> BigFloat {
    let digits = BigFloat::decimal_digits(prec) * 2 / 5;
    let ten = BigFloat::from_i64(10, prec);
    &BigFloat::one(prec) / &ten.pow_u(digits as u32)
}

/// Runs the displacement coefficients of the unfolded family (no trace
/// term) at each sample `eps`.
pub fn necessity_spotcheck(
    params: &Z2CubicParams,
    pert: &Perturbation,
    cfg: &SpotCheckConfig,
) -> Result<SpotCheck, CenterError> {
    let monodromic = monodromic_candidate(params)?;
    let prec = cfg.precision;
    let mut reports = Vec::new();
    let mut max_abs = BigFloat::zero(prec);
    for e in &cfg.eps_samples {
        let sys = unfolded_system(params, pert, e, &Rational::zero())?;
        let r = displacement_coeffs(&sys, cfg.order, prec)?;
        let m = r.max_abs();
        if m > max_abs {
            max_abs = m;
        }
        reports.push((e.clone(), r));
    }
    let threshold = spotcheck_threshold(prec);
    let passed = max_abs < threshold;
    Ok(SpotCheck {
        monodromic,
        perturbation: pert.clone(),
        reports,
        max_abs,
        threshold,
        passed,
    })
}

/// Perturbation under which the unfolded family stays a center for a member
/// of condition `id`. Zero works whenever the center comes from a
/// Hamiltonian or a reversibility; conditions III and IV need the values
/// that close their elimination branches.
pub fn certifying_perturbation(id: ConditionId, params: &Z2CubicParams) -> Perturbation {
    let one = Rational::one();
    match id {
        ConditionId::III => {
            let (a21, a03, b21) = (&params.a21, &params.a03, &params.b21);
            let b21sq = b21 * b21;
            let s = a03 + &(&int(2) * &(a21 * a21));
            let q02 = &(&(&(&int(3) * a03) + &(&int(6) * &(a21 * a21)))
                + &(&(&int(4) * a21) * &b21sq))
                / &(&int(3) * &s);
            let q03 = &(&rat(2, 3) * b21) * &(&one + &q02);
            let p03 = &(&(&(&int(8) * &b21sq) + &(&int(18) * a21)) * &(&one + &q02))
                / &(&(&int(12) * &q02) - &int(3));
            Perturbation {
                p21: -one,
                p03,
                q02: q02.clone(),
                q12: q02,
                q03,
                ..Default::default()
            }
        }
        ConditionId::IV => {
            let p12 = -(&params.b21 / &int(2));
            Perturbation {
                p21: -one,
                p02: p12.clone(),
                p03: &int(3) * &(&p12 * &p12),
                p12,
                q03: &params.b21 / &int(2),
                ..Default::default()
            }
        }
        _ => Perturbation::default(),
    }
}

fn unit_point() -> (Rational, Rational) {
    (Rational::one(), Rational::zero())
}

/// Closed-form inverse integrating factor for the smooth system of condition
/// III, in the unshifted coordinates.
pub fn condition_three_factor() -> MPoly {
    p("3*(9*a03 + 2*a21^2)*(x^2 + 2*b21*x*y - 2*a21*y^2) \
       - (3*a03 - 2*a21^2)*(3*x^4 + 6*b21*x^3*y - 12*a21*x^2*y^2 - 4*a21*b21*x*y^3 - 6*a03*y^4)")
}

/// Condition III field in the free parameters `a21, a03, b21`.
fn condition_three_field() -> PlanarField {
    let vals = [
        ("a02", MPoly::zero()),
        ("a12", MPoly::zero()),
        ("b02", MPoly::zero()),
        ("b12", -&MPoly::var("a21")),
        ("b03", p("-2/3*a21*b21")),
    ];
    z2_cubic_symbolic().upper.map(|q| q.subs_many(&vals))
}

/// Checks the condition III identity over the free parameters. Returns the
/// form in which it holds, or `None` if it fails even after reducing with
/// `b21^2 = -9 (a03 + 2 a21^2)^2 / (8 a21 (3 a03 + 2 a21^2))`.
pub fn condition_three_identity() -> Option<IdentityForm> {
    let field = condition_three_field();
    let res = inverse_integrating_factor_residual(
        &field,
        &condition_three_factor().with_vars(&["x", "y"]),
    );
    if res.is_zero() {
        return Some(IdentityForm::Identical);
    }
    // Clear denominators: b21^(2j) -> N^j D^(J-j), times D^J overall.
    let num = p("-9*(a03 + 2*a21^2)^2");
    let den = p("8*a21*(3*a03 + 2*a21^2)");
    let cs = res.coeffs_in("b21");
    let top = (cs.len() - 1) / 2;
    let b21 = MPoly::var("b21");
    let mut acc = MPoly::zero();
    for (k, c) in cs.iter().enumerate() {
        let j = k / 2;
        let mut t = &(c * &num.pow(j as u32)) * &den.pow((top - j) as u32);
        if k % 2 == 1 {
            t = &t * &b21;
        }
        acc = &acc + &t;
    }
    acc.is_zero().then_some(IdentityForm::ModuloRelation)
}

/// `(x, y, t) -> (x, r y, r t)` acts on the family by weights
/// `a21:2, a02:3, a12:3, a03:4, b21:1, b02:2, b12:2, b03:3`; checks that this
/// is exact for symbolic `r > 0` and that every constraint of condition IV
/// is weighted-homogeneous (so the condition is invariant).
pub fn condition_four_scaling_invariant() -> bool {
    let r = MPoly::var("r");
    let weights = [
        ("a21", 2),
        ("a02", 3),
        ("a12", 3),
        ("a03", 4),
        ("b21", 1),
        ("b02", 2),
        ("b12", 2),
        ("b03", 3),
    ];
    let scaled: Vec<(&str, MPoly)> = weights
        .iter()
        .map(|(n, w)| (*n, &MPoly::var(n) * &r.pow(*w)))
        .collect();
    let fam = z2_cubic_symbolic();
    let y_r = &MPoly::var("y") * &r;
    for f in [&fam.upper, &fam.lower] {
        // dX/dT = r P(X, rY), dY/dT = Q(X, rY) must equal the field with scaled parameters
        if &f.p.subs("y", &y_r) * &r != f.p.subs_many(&scaled)
            || f.q.subs("y", &y_r) != f.q.subs_many(&scaled)
        {
            return false;
        }
    }
    let homogeneous = |q: &MPoly| {
        let s = q.subs_many(&scaled);
        let cs = s.coeffs_in("r");
        cs.iter().filter(|c| !c.is_zero()).count() <= 1
    };
    condition(ConditionId::IV)
        .constraints
        .iter()
        .all(|c| match c {
            Constraint::Zero(q) | Constraint::Negative(q) | Constraint::Positive(q) => {
                homogeneous(q)
            }
            Constraint::AnyOf(_) => false,
        })
}

/// The exact part of a certificate. Condition IV has none beyond the
/// scaling check and relies on [`certify_center`]'s spot check.
pub fn exact_certificate(
    params: &SurdParams,
    id: ConditionId,
) -> Result<(Route, Evidence), CenterError> {
    let m = condition_membership(params, id);
    if !m.holds {
        return Err(CenterError::NotMember(id, m.violated.join("; ")));
    }
    let fail = |msg: String| CenterError::Certificate(id, msg);
    let (x0, y0) = unit_point();
    let (route, evidence) = match id {
        ConditionId::I | ConditionId::VI => {
            let shifted = shift_to_origin(&params.system(), (&x0, &y0))?;
            let hu =
                hamiltonian_of(&shifted.upper).map_err(|e| fail(format!("upper half: {e}")))?;
            let hl =
                hamiltonian_of(&shifted.lower).map_err(|e| fail(format!("lower half: {e}")))?;
            let zero_y = MPoly::zero();
            let du = params.reduce(&hu.subs("y", &zero_y));
            let dl = params.reduce(&hl.subs("y", &zero_y));
            if du != dl {
                return Err(fail(format!("H+(x,0) = {du} differs from H-(x,0) = {dl}")));
            }
            (
                Route::HamiltonianMatch,
                Evidence::Hamiltonians {
                    upper: hu,
                    lower: hl,
                },
            )
        }
        ConditionId::II | ConditionId::V => {
            let shifted = shift_to_origin(&params.system(), (&x0, &y0))?;
            if !check_center_symmetry(&shifted) {
                return Err(fail("upper and lower fields are not mirror images".into()));
            }
            (Route::SwitchingSymmetry, Evidence::Reversibility)
        }
        ConditionId::III => {
            let sys = params.system();
            let factor =
                params.reduce(&condition_three_factor().subs_many(&params.symbolic_assignments()));
            let res = params.reduce(&inverse_integrating_factor_residual(&sys.upper, &factor));
            if !res.is_zero() {
                return Err(fail(format!("integrating-factor residual {res}")));
            }
            if sys.upper != sys.lower {
                return Err(fail("halves differ".into()));
            }
            let form = condition_three_identity()
                .ok_or_else(|| fail("parametric identity fails".into()))?;
            (
                Route::InverseIntegratingFactor,
                Evidence::InverseIntegratingFactor { factor, form },
            )
        }
        ConditionId::IV => (
            Route::NumericSpotCheckOnly,
            Evidence::Numeric {
                scaling_invariant: condition_four_scaling_invariant(),
            },
        ),
    };
    Ok((route, evidence))
}

/// Exact sufficiency certificate plus the numeric spot check.
pub fn certify_center(
    params: &SurdParams,
    id: ConditionId,
    cfg: &SpotCheckConfig,
) -> Result<CenterCertificate, CenterError> {
    let (route, evidence) = exact_certificate(params, id)?;
    let approx = params.approximate(2 * cfg.precision + 64);
    let pert = certifying_perturbation(id, &approx);
    let spotcheck = necessity_spotcheck(&approx, &pert, cfg)?;
    if route == Route::NumericSpotCheckOnly && !spotcheck.passed {
        return Err(CenterError::Certificate(
            id,
            format!(
                "max |V_k| = {} is not below {}",
                spotcheck.max_abs.to_sci_string(6),
                spotcheck.threshold.to_sci_string(2)
            ),
        ));
    }
    Ok(CenterCertificate {
        id,
        route,
        evidence,
        spotcheck,
    })
}
