//! Limit cycles near a certified center: sliding segments on `y = 0`, the
//! extra crossing cycle created by a constant term, finite-difference
//! independence Jacobians and sequential-perturbation brackets.

use std::error::Error;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::bigfloat::BigFloat;
use crate::centers::{exact_certificate, CenterError, ConditionId, SurdParams};
use crate::exactalg::{best_rational, int, rat, MPoly, Rational};
use crate::lyapunov::{displacement_coeffs, polar_transition, LyapError, LyapunovReport};
use crate::sysmodel::{
    unfolded_system, ModelError, Perturbation, PlanarField, SwitchingSystem, Z2CubicParams,
};

#[derive(Debug, thiserror::Error)]
pub enum BifurcError {
    #[error("g+(x,0) or g-(x,0) vanishes identically")]
    ManifoldDegenerate,
    #[error("field still contains parameters {0:?}")]
    Symbolic(Vec<String>),
    #[error("unknown parameter {0:?}")]
    UnknownParameter(String),
    #[error("all displacement coefficients up to order {0} vanish; raise the series order")]
    OrderTooLow(usize),
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Center(#[from] CenterError),
    #[error(transparent)]
    Lyapunov(#[from] LyapError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("family evaluation failed: {0}")]
    Family(String),
}

// ---------------------------------------------------------------------------
// univariate exact roots

fn univariate(p: &MPoly, var: &str) -> Result<Vec<Rational>, BifurcError> {
    let others: Vec<String> = p.used_vars().into_iter().filter(|v| v != var).collect();
    if !others.is_empty() {
        return Err(BifurcError::Symbolic(others));
    }
    let mut c: Vec<Rational> = p.coeffs_in(var).iter().map(|c| c.constant_term()).collect();
    while c.len() > 1 && c.last().unwrap().is_zero() {
        c.pop();
    }
    Ok(c)
}

fn horner(c: &[Rational], x: &Rational) -> Rational {
    c.iter()
        .rev()
        .fold(Rational::zero(), |acc, a| &(&acc * x) + a)
}

fn derivative(c: &[Rational]) -> Vec<Rational> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, a)| a * &int(k as i64))
        .collect()
}

fn rem(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db && !r.is_empty() {
        let lead = r.last().unwrap() / b.last().unwrap();
        let shift = r.len() - 1 - db;
        for (i, bi) in b.iter().enumerate() {
            r[shift + i] = &r[shift + i] - &(&lead * bi);
        }
        r.pop();
        while r.last().is_some_and(|t| t.is_zero()) {
            r.pop();
        }
    }
    r
}

fn sturm_chain(c: &[Rational]) -> Vec<Vec<Rational>> {
    let mut chain = vec![c.to_vec(), derivative(c)];
    loop {
        let n = chain.len();
        if chain[n - 1].is_empty() || chain[n - 1].len() == 1 {
            break;
        }
        let r: Vec<Rational> = rem(&chain[n - 2], &chain[n - 1])
            .iter()
            .map(|t| -t)
            .collect();
        if r.is_empty() {
            break;
        }
        chain.push(r);
    }
    chain
}

fn sign_changes(chain: &[Vec<Rational>], x: &Rational) -> usize {
    let signs: Vec<bool> = chain
        .iter()
        .filter(|p| !p.is_empty())
        .map(|p| horner(p, x))
        .filter(|v| !v.is_zero())
        .map(|v| v.is_positive())
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// A real root known exactly or as an isolating interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Exact(Rational),
    Interval(Rational, Rational),
}

impl Endpoint {
    pub fn approx(&self) -> Rational {
        match self {
            Endpoint::Exact(r) => r.clone(),
            Endpoint::Interval(a, b) => (a + b) / int(2),
        }
    }
}

/// Distinct real roots in `[-w, w]`, each exact when it is a rational with
/// denominator below `2^64`.
fn real_roots(c: &[Rational], w: &Rational) -> Vec<Endpoint> {
    if c.len() <= 1 {
        return Vec::new();
    }
    let chain = sturm_chain(c);
    let count = |a: &Rational, b: &Rational| sign_changes(&chain, a) - sign_changes(&chain, b);
    let mut out = Vec::new();
    // intervals (a, b]; nudge the left end so a root at -w is included
    let mut stack = vec![(-w - &rat(1, 1 << 30), w.clone())];
    while let Some((a, b)) = stack.pop() {
        let n = count(&a, &b);
        if n == 0 {
            continue;
        }
        if n == 1 {
            out.push(refine_root(c, &chain, a, b));
            continue;
        }
        let m = (&a + &b) / int(2);
        stack.push((m.clone(), b));
        stack.push((a, m));
    }
    out.sort_by_key(|e| e.approx());
    out
}

fn refine_root(
    c: &[Rational],
    chain: &[Vec<Rational>],
    mut a: Rational,
    mut b: Rational,
) -> Endpoint {
    if horner(c, &b).is_zero() {
        return Endpoint::Exact(b);
    }
    let max_den = BigInt::one() << 64usize;
    for _ in 0..300 {
        let m = (&a + &b) / int(2);
        let guess = best_rational(&m, &max_den);
        if guess > a && guess <= b && horner(c, &guess).is_zero() {
            return Endpoint::Exact(guess);
        }
        if horner(c, &m).is_zero() {
            return Endpoint::Exact(m);
        }
        if sign_changes(chain, &a) - sign_changes(chain, &m) == 1 {
            b = m;
        } else {
            a = m;
        }
        if &b - &a < Rational::new(BigInt::one(), BigInt::one() << 140usize) {
            break;
        }
    }
    Endpoint::Interval(a, b)
}

// ---------------------------------------------------------------------------
// sliding segments

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// Both halves point toward `y = 0`.
    Sliding,
    /// Both halves point away from `y = 0`.
    Escaping,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlidingSegment {
    /// Ordered left to right.
    pub endpoints: (Endpoint, Endpoint),
    pub regime: Regime,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SlidingResult {
    Segment(SlidingSegment),
    /// The roots of `g+(x,0)` and `g-(x,0)` closest to the origin coincide.
    Point(Endpoint),
    /// One of `g+(x,0)`, `g-(x,0)` has no root in the window.
    Empty,
}

/// Sliding (or escaping) segment bounded by the roots of `g+(x,0)` and
/// `g-(x,0)` closest to the origin within `|x| <= window`.
pub fn sliding_segment(
    sys: &SwitchingSystem,
    window: &Rational,
) -> Result<SlidingResult, BifurcError> {
    let on_axis = |f: &PlanarField| univariate(&f.q.subs("y", &MPoly::zero()), "x");
    let gu = on_axis(&sys.upper)?;
    let gl = on_axis(&sys.lower)?;
    if gu.iter().all(|c| c.is_zero()) || gl.iter().all(|c| c.is_zero()) {
        return Err(BifurcError::ManifoldDegenerate);
    }
    let nearest = |c: &[Rational]| {
        real_roots(c, window)
            .into_iter()
            .min_by_key(|e| e.approx().abs())
    };
    let (Some(ru), Some(rl)) = (nearest(&gu), nearest(&gl)) else {
        return Ok(SlidingResult::Empty);
    };
    if ru.approx() == rl.approx() {
        return Ok(SlidingResult::Point(ru));
    }
    let (left, right) = if ru.approx() < rl.approx() {
        (ru, rl)
    } else {
        (rl, ru)
    };
    let mid = (&left.approx() + &right.approx()) / int(2);
    let (su, sl) = (horner(&gu, &mid), horner(&gl, &mid));
    let regime = if su.is_negative() && sl.is_positive() {
        Regime::Sliding
    } else if su.is_positive() && sl.is_negative() {
        Regime::Escaping
    } else {
        return Err(BifurcError::Precondition(format!(
            "g+ and g- have the same sign between the roots {} and {}",
            left.approx(),
            right.approx()
        )));
    };
    Ok(SlidingResult::Segment(SlidingSegment {
        endpoints: (left, right),
        regime,
    }))
}

// ---------------------------------------------------------------------------
// reduced perturbed family with a constant term

/// Parameters of the reduced perturbed family around `(1, 0)` built from
/// condition VI, after removing redundant perturbations. Lower-case
/// (unscaled) coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReducedParams {
    pub a21: Rational,
    pub a02: Rational,
    pub a03: Rational,
    pub b03: Rational,
    pub p212: Rational,
    pub q022: Rational,
    pub q032: Rational,
    pub q212: Rational,
}

pub const REDUCED_NAMES: [&str; 8] = ["a21", "a02", "a03", "b03", "p212", "q022", "q032", "q212"];

impl ReducedParams {
    pub fn get_mut(&mut self, name: &str) -> Option<&mut Rational> {
        Some(match name {
            "a21" => &mut self.a21,
            "a02" => &mut self.a02,
            "a03" => &mut self.a03,
            "b03" => &mut self.b03,
            "p212" => &mut self.p212,
            "q022" => &mut self.q022,
            "q032" => &mut self.q032,
            "q212" => &mut self.q212,
            _ => return None,
        })
    }

    fn assignments(&self) -> Vec<(&'static str, Rational)> {
        vec![
            ("a21", self.a21.clone()),
            ("a02", self.a02.clone()),
            ("a03", self.a03.clone()),
            ("b03", self.b03.clone()),
            ("p212", self.p212.clone()),
            ("q022", self.q022.clone()),
            ("q032", self.q032.clone()),
            ("q212", self.q212.clone()),
        ]
    }

    /// Converts eps-free (capital) coefficients to lower-case ones:
    /// `a21 = e^2 A21, a02 = e^3 A02, b03 = e^3 B03, a03 = e^4 A03,
    /// q032 = e Q032, p212 = P212, q022 = Q022, q212 = Q212 / e`.
    pub fn from_scaled(caps: &ReducedParams, eps: &Rational) -> ReducedParams {
        let e = |k: i32| eps.pow(k);
        ReducedParams {
            a21: &caps.a21 * &e(2),
            a02: &caps.a02 * &e(3),
            a03: &caps.a03 * &e(4),
            b03: &caps.b03 * &e(3),
            p212: caps.p212.clone(),
            q022: caps.q022.clone(),
            q032: &caps.q032 * eps,
            q212: &caps.q212 / eps,
        }
    }
}

fn reduced_template() -> SwitchingSystem {
    let p = |s: &str| s.parse::<MPoly>().expect("static template");
    let p_common = "-y + d1*(x + 3/2*e^3*x^2 + 1/2*e^6*x^3) + 2*e*(a21 + e^2*p212)*x*y \
                    + e^4*(a21 + e^2*p212)*x^2*y - 3*e^3*b03*x*y^2 + e^2*a03*y^3";
    let q_common =
        "d1*y + 3/2*e^3*x^2 + 2*e^4*q212*x*y + 1/2*e^6*x^3 + e^7*q212*x^2*y - e^4*a21*x*y^2 \
                    + e^3*(b03 + e^2*q032)*y^3";
    let upper = PlanarField::new(
        &p(p_common) + &p("(a02 - 3*b03)*y^2"),
        &p(q_common) + &p("x - 1/2*b*e^3*(x + e^3*x^2) - e*(a21 - e^2*q022)*y^2"),
    );
    let lower = PlanarField::new(
        &p(p_common) - &p("(a02 + 3*b03)*y^2"),
        &p(q_common) + &p("x + b + 1/2*b*e^3*(3*x + e^3*x^2) - e*(a21 + e^2*q022)*y^2"),
    );
    SwitchingSystem { upper, lower }
}

/// The reduced perturbed family with trace `delta1` and constant term `b` in
/// the lower `y'` equation. Its origin carries the point `(1, 0)`.
pub fn reduced_family(
    params: &ReducedParams,
    eps: &Rational,
    delta1: &Rational,
    b: &Rational,
) -> SwitchingSystem {
    let mut vals = params.assignments();
    vals.extend([("e", eps.clone()), ("d1", delta1.clone()), ("b", b.clone())]);
    reduced_template().subs_params(&vals)
}

/// Same family in eps-free coefficients.
pub fn scaled_family(
    caps: &ReducedParams,
    eps: &Rational,
    delta1: &Rational,
    b: &Rational,
) -> SwitchingSystem {
    reduced_family(&ReducedParams::from_scaled(caps, eps), eps, delta1, b)
}

// ---------------------------------------------------------------------------
// pseudo-Hopf cycle

#[derive(Clone, Debug)]
pub struct PseudoHopfCycle {
    /// Radii on the positive `x`-axis where the displacement changes sign.
    pub lo: BigFloat,
    pub hi: BigFloat,
    pub d_lo: BigFloat,
    pub d_hi: BigFloat,
    /// Signs at both ends reproduced with twice the precision.
    pub confirmed: bool,
    pub method: Method,
}

#[derive(Clone, Debug)]
pub struct PseudoHopfSearch {
    pub cycle: Option<PseudoHopfCycle>,
    /// `(rho, d(rho))` samples of the scan, in increasing `rho`.
    pub samples: Vec<(BigFloat, BigFloat)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    SeriesEvaluation,
    DirectReturnMap,
}

/// `d(rho) = (upper map)(rho) - (inverse lower map)(rho)`, both by direct
/// integration of the full fields.
pub fn direct_displacement(
    sys: &SwitchingSystem,
    rho: &BigFloat,
    prec: u32,
) -> Result<BigFloat, LyapError> {
    let pi = BigFloat::pi(prec + 32);
    let two_pi = pi.mul_2exp(1);
    let zero = BigFloat::zero(prec + 32);
    let up = polar_transition(&sys.upper, rho, &zero, &pi, prec)?;
    let lo = polar_transition(&sys.lower, rho, &two_pi, &pi, prec)?;
    Ok(&up - &lo)
}

fn rational_to_bf(r: &Rational, prec: u32) -> BigFloat {
    BigFloat::from_rational(r, prec)
}

/// Scans `rho` geometrically (ratio `sqrt 2`) from `2|b|` up to `2^12 |b|`
/// (capped at `rho_cap`) until the direct displacement changes sign, then
/// narrows the bracket by Illinois regula falsi.
pub fn pseudo_hopf_cycle<F>(
    family: F,
    b: &Rational,
    rho_cap: &Rational,
    prec: u32,
) -> Result<PseudoHopfSearch, BifurcError>
where
    F: Fn(&Rational) -> SwitchingSystem,
{
    if b.is_zero() {
        return Ok(PseudoHopfSearch {
            cycle: None,
            samples: Vec::new(),
        });
    }
    let sys = family(b);
    let w = prec + 32;
    let cap = rational_to_bf(rho_cap, w);
    let ratio = BigFloat::from_rational(&rat(2, 1), w).sqrt();
    let mut rho = rational_to_bf(&b.abs(), w).mul_2exp(1);
    let mut samples: Vec<(BigFloat, BigFloat)> = Vec::new();
    let mut found = None;
    for _ in 0..25 {
        if rho > cap {
            break;
        }
        // too close to the segment the orbit may not turn around the origin
        if let Ok(d) = direct_displacement(&sys, &rho, prec) {
            if let Some((_, prev)) = samples.last() {
                if prev.signum() * d.signum() < 0 {
                    found = Some(samples.len() - 1);
                }
            }
            samples.push((rho.clone(), d));
            if found.is_some() {
                break;
            }
        }
        rho = &rho * &ratio;
    }
    let Some(i) = found else {
        return Ok(PseudoHopfSearch {
            cycle: None,
            samples,
        });
    };
    let (mut lo, mut d_lo) = samples[i].clone();
    let (mut hi, mut d_hi) = samples[i + 1].clone();
    let tol = hi.mul_2exp(-40);
    // working values; one side is halved when the same end moves twice
    let (mut fl, mut fh) = (d_lo.clone(), d_hi.clone());
    let mut last = 0i32;
    for _ in 0..40 {
        if &hi - &lo < tol {
            break;
        }
        let mid = &lo - &(&(&fl * &(&hi - &lo)) / &(&fh - &fl));
        let dm = direct_displacement(&sys, &mid, prec)?;
        if dm.signum() == 0 {
            break;
        }
        if dm.signum() == d_lo.signum() {
            lo = mid;
            fl = dm.clone();
            d_lo = dm;
            if last == 1 {
                fh = fh.mul_2exp(-1);
            }
            last = 1;
        } else {
            hi = mid;
            fh = dm.clone();
            d_hi = dm;
            if last == -1 {
                fl = fl.mul_2exp(-1);
            }
            last = -1;
        }
    }
    let (c_lo, c_hi) = rayon::join(
        || direct_displacement(&sys, &lo.with_prec(2 * prec + 32), 2 * prec),
        || direct_displacement(&sys, &hi.with_prec(2 * prec + 32), 2 * prec),
    );
    let confirmed = c_lo?.signum() == d_lo.signum() && c_hi?.signum() == d_hi.signum();
    Ok(PseudoHopfSearch {
        cycle: Some(PseudoHopfCycle {
            lo,
            hi,
            d_lo,
            d_hi,
            confirmed,
            method: Method::DirectReturnMap,
        }),
        samples,
    })
}

// ---------------------------------------------------------------------------
// independence Jacobian

#[derive(Clone, Debug)]
pub struct JacobianReport {
    pub matrix: Vec<Vec<BigFloat>>,
    pub determinant: BigFloat,
    pub error_estimate: BigFloat,
    /// The error estimate exceeds `|det|`.
    pub inconclusive: bool,
    pub step: Rational,
}

pub fn determinant(mut a: Vec<Vec<BigFloat>>) -> BigFloat {
    let n = a.len();
    let prec = a
        .first()
        .and_then(|r| r.first())
        .map(|x| x.prec())
        .unwrap_or(64);
    let mut det = BigFloat::one(prec);
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        if a[piv][k].is_zero() {
            return BigFloat::zero(prec);
        }
        if piv != k {
            a.swap(piv, k);
            det = -&det;
        }
        det = &det * &a[k][k];
        for i in k + 1..n {
            let f = &a[i][k] / &a[k][k];
            for j in k..n {
                let t = &f * &a[k][j];
                a[i][j] = &a[i][j] - &t;
            }
        }
    }
    det
}

/// Default step `scale * 2^-(prec/4)`, rounded to a dyadic rational.
pub fn default_fd_step(scale: &Rational, prec: u32) -> Rational {
    scale * &Rational::new(BigInt::one(), BigInt::one() << (prec as usize / 4))
}

/// Central-difference Jacobian of `vmap` at `point` with one Richardson
/// level (steps `h` and `h/2`). `vmap` returns the selected `V`s.
pub fn independence_jacobian<F>(
    vmap: F,
    point: &[Rational],
    step: &Rational,
    prec: u32,
) -> Result<JacobianReport, BifurcError>
where
    F: Fn(&[Rational]) -> Result<Vec<BigFloat>, Box<dyn Error + Send + Sync>> + Sync,
{
    let n = point.len();
    let jac = |h: &Rational| -> Result<Vec<Vec<BigFloat>>, BifurcError> {
        let cols: Vec<Result<Vec<BigFloat>, BifurcError>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut plus = point.to_vec();
                let mut minus = point.to_vec();
                plus[j] = &plus[j] + h;
                minus[j] = &minus[j] - h;
                let vp = vmap(&plus).map_err(|e| BifurcError::Family(e.to_string()))?;
                let vm = vmap(&minus).map_err(|e| BifurcError::Family(e.to_string()))?;
                if vp.len() != n || vm.len() != n {
                    return Err(BifurcError::Precondition(format!(
                        "expected {n} values, got {}",
                        vp.len()
                    )));
                }
                let two_h = rational_to_bf(&(h * &int(2)), prec);
                Ok(vp.iter().zip(&vm).map(|(a, b)| &(a - b) / &two_h).collect())
            })
            .collect();
        let cols: Vec<Vec<BigFloat>> = cols.into_iter().collect::<Result<_, _>>()?;
        Ok((0..n)
            .map(|i| (0..n).map(|j| cols[j][i].clone()).collect())
            .collect())
    };
    let j1 = jac(step)?;
    let j2 = jac(&(step / &int(2)))?;
    let three = BigFloat::from_i64(3, prec);
    let four = BigFloat::from_i64(4, prec);
    let rich: Vec<Vec<BigFloat>> = j1
        .iter()
        .zip(&j2)
        .map(|(r1, r2)| {
            r1.iter()
                .zip(r2)
                .map(|(a, b)| &(&(&four * b) - a) / &three)
                .collect()
        })
        .collect();
    let det = determinant(rich.clone());
    let error_estimate = (&det - &determinant(j2)).abs();
    let inconclusive = error_estimate >= det.abs();
    Ok(JacobianReport {
        matrix: rich,
        determinant: det,
        error_estimate,
        inconclusive,
        step: step.clone(),
    })
}

/// `V_{i}` for the requested 1-based indices, from the displacement series
/// of `family(params)`.
pub fn selected_constants<G>(
    family: &G,
    params: &[Rational],
    indices: &[usize],
    prec: u32,
) -> Result<Vec<BigFloat>, Box<dyn Error + Send + Sync>>
where
    G: Fn(&[Rational]) -> SwitchingSystem,
{
    let order = indices.iter().copied().max().unwrap_or(1);
    let r = displacement_coeffs(&family(params), order, prec)?;
    Ok(indices.iter().map(|&k| r.get(k).clone()).collect())
}

// ---------------------------------------------------------------------------
// sequential perturbation

/// One stage of a schedule: increments applied together.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub increments: Vec<(String, Rational)>,
}

#[derive(Clone, Debug)]
pub struct UnfoldConfig {
    pub eps: Rational,
    pub order: usize,
    pub precision: u32,
    /// Right end of the search window `(0, rho_max]`.
    pub rho_max: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct Bracket {
    pub lo: String,
    pub hi: String,
    /// Signs at both ends reproduced with twice the precision.
    pub stable: bool,
    #[serde(skip)]
    pub lo_value: BigFloat,
    #[serde(skip)]
    pub hi_value: BigFloat,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub stage: usize,
    /// `V_1..V_K` after the stage, coefficients below tolerance set to zero.
    pub v: Vec<String>,
    pub sign_alternations: usize,
    pub brackets: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleCertificate {
    pub brackets: Vec<Bracket>,
    pub count: usize,
    pub method: Method,
    /// Counts are certified at this series order.
    pub order: usize,
    pub precision_bits: u32,
    pub stages: Vec<StageReport>,
}

/// Unfolded-family state: family parameters, perturbation and trace.
#[derive(Clone, Debug, PartialEq)]
pub struct UnfoldState {
    pub params: Z2CubicParams,
    pub pert: Perturbation,
    pub delta: Rational,
}

impl UnfoldState {
    pub fn apply(&mut self, stage: &Stage) -> Result<(), BifurcError> {
        for (name, inc) in &stage.increments {
            let slot = if name == "delta" {
                &mut self.delta
            } else if let Some(s) = self.params.get_mut(name) {
                s
            } else if let Some(s) = self.pert.get_mut(name) {
                s
            } else {
                return Err(BifurcError::UnknownParameter(name.clone()));
            };
            *slot = &*slot + inc;
        }
        Ok(())
    }

    pub fn system(&self, eps: &Rational) -> Result<SwitchingSystem, BifurcError> {
        Ok(unfolded_system(&self.params, &self.pert, eps, &self.delta)?)
    }
}

/// `V_k` with entries below the report's tolerance replaced by zero.
fn cleaned(r: &LyapunovReport) -> Vec<BigFloat> {
    r.v.iter()
        .zip(&r.tolerance)
        .map(|(v, t)| {
            if v.abs() <= *t {
                BigFloat::zero(v.prec())
            } else {
                v.clone()
            }
        })
        .collect()
}

fn truncated(v: &[BigFloat], rho: &BigFloat) -> BigFloat {
    v.iter()
        .rev()
        .fold(BigFloat::zero(rho.prec()), |acc, c| &(&acc + c) * rho)
}

fn alternations(v: &[BigFloat]) -> usize {
    let s: Vec<i32> = v.iter().map(|x| x.signum()).filter(|&s| s != 0).collect();
    s.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Sign-change brackets of `sum V_k rho^k` on a geometric grid over
/// `(rho_max 2^-80, rho_max]`, eight points per octave, each bisected.
fn series_brackets(v: &[BigFloat], rho_max: &Rational, prec: u32) -> Vec<(BigFloat, BigFloat)> {
    if v.iter().all(|c| c.is_zero()) {
        return Vec::new();
    }
    let w = prec + 32;
    let root = BigFloat::from_rational(&rat(1, 2), w).sqrt().sqrt().sqrt();
    let mut grid = vec![rational_to_bf(rho_max, w)];
    for _ in 0..(80 * 8) {
        let next = grid.last().unwrap() * &root;
        grid.push(next);
    }
    grid.reverse();
    let vals: Vec<BigFloat> = grid.iter().map(|r| truncated(v, r)).collect();
    let mut out = Vec::new();
    for i in 0..grid.len() - 1 {
        let (s0, s1) = (vals[i].signum(), vals[i + 1].signum());
        if s0 * s1 < 0 {
            let (mut lo, mut hi) = (grid[i].clone(), grid[i + 1].clone());
            for _ in 0..60 {
                let mid = (&lo + &hi).mul_2exp(-1);
                let sm = truncated(v, &mid).signum();
                if sm == 0 {
                    break;
                }
                if sm == s0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push((lo, hi));
        }
    }
    out
}

/// Applies `schedule` stage by stage to the unfolded family of a certified
/// center and brackets the positive zeros of the truncated displacement.
pub fn unfold_cycles(
    center: &Z2CubicParams,
    id: ConditionId,
    schedule: &[Stage],
    cfg: &UnfoldConfig,
) -> Result<CycleCertificate, BifurcError> {
    exact_certificate(&SurdParams::from(center.clone()), id)?;
    if cfg.order < 1 {
        return Err(BifurcError::Precondition(
            "series order must be positive".into(),
        ));
    }
    let mut state = UnfoldState {
        params: center.clone(),
        pert: Perturbation::default(),
        delta: Rational::zero(),
    };
    let mut stages = Vec::new();
    let mut v = Vec::new();
    for (i, st) in schedule.iter().enumerate() {
        state.apply(st)?;
        let r = displacement_coeffs(&state.system(&cfg.eps)?, cfg.order, cfg.precision)?;
        v = cleaned(&r);
        let n = series_brackets(&v, &cfg.rho_max, cfg.precision).len();
        stages.push(StageReport {
            stage: i + 1,
            v: v.iter().map(|x| x.to_sci_string(20)).collect(),
            sign_alternations: alternations(&v),
            brackets: n,
        });
    }
    if !schedule.is_empty() && v.iter().all(|c| c.is_zero()) {
        return Err(BifurcError::OrderTooLow(cfg.order));
    }
    let raw = series_brackets(&v, &cfg.rho_max, cfg.precision);
    let brackets = if raw.is_empty() {
        Vec::new()
    } else {
        let hi_prec = 2 * cfg.precision;
        let r2 = displacement_coeffs(&state.system(&cfg.eps)?, cfg.order, hi_prec)?;
        let v2 = cleaned(&r2);
        raw.into_iter()
            .map(|(lo, hi)| {
                let a = truncated(&v, &lo).signum();
                let b = truncated(&v, &hi).signum();
                let lo2 = lo.with_prec(hi_prec + 32);
                let hi2 = hi.with_prec(hi_prec + 32);
                let stable = truncated(&v2, &lo2).signum() == a
                    && truncated(&v2, &hi2).signum() == b
                    && a * b < 0;
                Bracket {
                    lo: lo.to_sci_string(30),
                    hi: hi.to_sci_string(30),
                    stable,
                    lo_value: lo,
                    hi_value: hi,
                }
            })
            .collect()
    };
    Ok(CycleCertificate {
        count: brackets.len(),
        brackets,
        method: Method::SeriesEvaluation,
        order: cfg.order,
        precision_bits: cfg.precision,
        stages,
    })
}
