//! Planar polynomial fields, switching systems across `y = 0`, and the
//! Z2-equivariant cubic family with its shift, unfolding and rescaling.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::exactalg::{AlgError, MPoly, Rational};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("point ({0}, {1}) is not on the switching line y = 0")]
    PointOffManifold(String, String),
    #[error("scaling parameter must be nonzero")]
    ZeroEpsilon,
    #[error("field is not divergence free")]
    NotHamiltonian,
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error(transparent)]
    Alg(#[from] AlgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Half {
    Upper,
    Lower,
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Half::Upper => "upper",
            Half::Lower => "lower",
        })
    }
}

/// `x' = P(x, y)`, `y' = Q(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarField {
    pub p: MPoly,
    pub q: MPoly,
}

fn xy() -> [&'static str; 2] {
    ["x", "y"]
}

impl PlanarField {
    pub fn new(p: MPoly, q: MPoly) -> Self {
        PlanarField {
            p: p.with_vars(&xy()),
            q: q.with_vars(&xy()),
        }
    }

    pub fn parse(p: &str, q: &str) -> Result<Self, crate::exactalg::ParseError> {
        Ok(Self::new(p.parse()?, q.parse()?))
    }

    /// Names other than `x` and `y` that still occur.
    pub fn parameters(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .p
            .used_vars()
            .into_iter()
            .chain(self.q.used_vars())
            .filter(|v| v != "x" && v != "y")
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn is_numeric(&self) -> bool {
        self.parameters().is_empty()
    }

    pub fn map(&self, f: impl Fn(&MPoly) -> MPoly) -> Self {
        Self::new(f(&self.p), f(&self.q))
    }

    pub fn subs_params(&self, values: &[(&str, Rational)]) -> Self {
        self.map(|p| p.subs_rational(values))
    }

    pub fn divergence(&self) -> MPoly {
        &self.p.derivative("x").unwrap() + &self.q.derivative("y").unwrap()
    }

    pub fn eval_f64(&self, x: f64, y: f64) -> (f64, f64) {
        (eval_poly_f64(&self.p, x, y), eval_poly_f64(&self.q, x, y))
    }
}

/// Evaluates a polynomial in `x`, `y` with rational coefficients in f64.
pub fn eval_poly_f64(p: &MPoly, x: f64, y: f64) -> f64 {
    let ix = p.var_index("x");
    let iy = p.var_index("y");
    let mut acc = 0.0;
    for (e, c) in p.terms() {
        let mut t = rational_to_f64(c);
        if let Some(i) = ix {
            t *= x.powi(e[i] as i32);
        }
        if let Some(i) = iy {
            t *= y.powi(e[i] as i32);
        }
        acc += t;
    }
    acc
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Two fields glued along `y = 0`: `upper` for `y > 0`, `lower` for `y < 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchingSystem {
    pub upper: PlanarField,
    pub lower: PlanarField,
}

impl SwitchingSystem {
    pub fn half(&self, h: Half) -> &PlanarField {
        match h {
            Half::Upper => &self.upper,
            Half::Lower => &self.lower,
        }
    }

    pub fn map(&self, f: impl Fn(&MPoly) -> MPoly + Copy) -> Self {
        SwitchingSystem {
            upper: self.upper.map(f),
            lower: self.lower.map(f),
        }
    }

    pub fn subs_params(&self, values: &[(&str, Rational)]) -> Self {
        self.map(|p| p.subs_rational(values))
    }

    pub fn parameters(&self) -> Vec<String> {
        let mut v = self.upper.parameters();
        v.extend(self.lower.parameters());
        v.sort();
        v.dedup();
        v
    }

    pub fn is_numeric(&self) -> bool {
        self.parameters().is_empty()
    }

    /// Adds `d*x` to both `x'` and `d*y` to both `y'`.
    pub fn with_linear_trace(&self, d: &Rational) -> Self {
        let dx = MPoly::var("x").scale(d);
        let dy = MPoly::var("y").scale(d);
        self.add_to_both(&dx, &dy)
    }

    fn add_to_both(&self, dp: &MPoly, dq: &MPoly) -> Self {
        SwitchingSystem {
            upper: PlanarField::new(&self.upper.p + dp, &self.upper.q + dq),
            lower: PlanarField::new(&self.lower.p + dp, &self.lower.q + dq),
        }
    }
}

pub const Z2_PARAM_NAMES: [&str; 8] = ["a02", "a12", "a21", "a03", "b02", "b12", "b21", "b03"];

/// Coefficients of the Z2-equivariant cubic family.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Z2CubicParams {
    pub a02: Rational,
    pub a12: Rational,
    pub a21: Rational,
    pub a03: Rational,
    pub b02: Rational,
    pub b12: Rational,
    pub b21: Rational,
    pub b03: Rational,
}

impl Z2CubicParams {
    /// Builds from `(name, value)` pairs; unnamed coefficients are zero.
    pub fn from_pairs(pairs: &[(&str, Rational)]) -> Result<Self, ModelError> {
        let mut p = Self::default();
        for (k, v) in pairs {
            *p.get_mut(k)
                .ok_or_else(|| ModelError::UnknownParameter(k.to_string()))? = v.clone();
        }
        Ok(p)
    }

    /// Like [`from_pairs`](Self::from_pairs) with small-integer fractions `(name, num, den)`.
    pub fn from_ratios(pairs: &[(&str, i64, i64)]) -> Self {
        let v: Vec<(&str, Rational)> = pairs
            .iter()
            .map(|&(k, n, d)| (k, crate::exactalg::rat(n, d)))
            .collect();
        Self::from_pairs(&v).expect("known parameter names")
    }

    pub fn get(&self, name: &str) -> Option<&Rational> {
        Some(match name {
            "a02" => &self.a02,
            "a12" => &self.a12,
            "a21" => &self.a21,
            "a03" => &self.a03,
            "b02" => &self.b02,
            "b12" => &self.b12,
            "b21" => &self.b21,
            "b03" => &self.b03,
            _ => return None,
        })
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Rational> {
        Some(match name {
            "a02" => &mut self.a02,
            "a12" => &mut self.a12,
            "a21" => &mut self.a21,
            "a03" => &mut self.a03,
            "b02" => &mut self.b02,
            "b12" => &mut self.b12,
            "b21" => &mut self.b21,
            "b03" => &mut self.b03,
            _ => return None,
        })
    }

    pub fn assignments(&self) -> Vec<(&'static str, Rational)> {
        Z2_PARAM_NAMES
            .iter()
            .map(|&n| (n, self.get(n).unwrap().clone()))
            .collect()
    }
}

/// The family with symbolic coefficients named as in [`Z2_PARAM_NAMES`].
pub fn z2_cubic_symbolic() -> SwitchingSystem {
    let upper = PlanarField::parse(
        "-a21*y + a02*y^2 + a21*x^2*y + a12*x*y^2 + a03*y^3",
        "-1/2*x - b21*y + b02*y^2 + 1/2*x^3 + b21*x^2*y + b12*x*y^2 + b03*y^3",
    )
    .expect("static polynomial");
    let lower = PlanarField::parse(
        "-a21*y - a02*y^2 + a21*x^2*y + a12*x*y^2 + a03*y^3",
        "-1/2*x - b21*y - b02*y^2 + 1/2*x^3 + b21*x^2*y + b12*x*y^2 + b03*y^3",
    )
    .expect("static polynomial");
    SwitchingSystem { upper, lower }
}

/// The Z2-equivariant cubic switching system for concrete coefficients.
pub fn build_z2_cubic(params: &Z2CubicParams) -> SwitchingSystem {
    let vals = params.assignments();
    z2_cubic_symbolic().subs_params(&vals)
}

/// Translates `point` to the origin. Only points on `y = 0` keep the
/// switching line in place.
pub fn shift_to_origin(
    sys: &SwitchingSystem,
    point: (&Rational, &Rational),
) -> Result<SwitchingSystem, ModelError> {
    if !point.1.is_zero() {
        return Err(ModelError::PointOffManifold(
            point.0.to_string(),
            point.1.to_string(),
        ));
    }
    let nx = &MPoly::var("x") + &MPoly::constant(point.0.clone());
    Ok(sys.map(|p| p.subs("x", &nx)))
}

/// Substitutes `(x, y, t) -> (eps^3 x, eps^2 y, t/eps)`:
/// the new `x'` is `P(eps^3 x, eps^2 y) / eps^4` and the new `y'` is
/// `Q(eps^3 x, eps^2 y) / eps^3`. `eps` may be symbolic.
pub fn scale_epsilon(sys: &SwitchingSystem, eps: &MPoly) -> Result<SwitchingSystem, ModelError> {
    if eps.is_zero() {
        return Err(ModelError::ZeroEpsilon);
    }
    let sx = &eps.pow(3) * &MPoly::var("x");
    let sy = &eps.pow(2) * &MPoly::var("y");
    let e3 = eps.pow(3);
    let e4 = eps.pow(4);
    let f = |field: &PlanarField| -> Result<PlanarField, ModelError> {
        let p = field.p.subs_many(&[("x", sx.clone()), ("y", sy.clone())]);
        let q = field.q.subs_many(&[("x", sx.clone()), ("y", sy.clone())]);
        let p = p.div_exact(&e4).ok_or(AlgError::DivisionNotExact)?;
        let q = q.div_exact(&e3).ok_or(AlgError::DivisionNotExact)?;
        Ok(PlanarField::new(p, q))
    };
    Ok(SwitchingSystem {
        upper: f(&sys.upper)?,
        lower: f(&sys.lower)?,
    })
}

/// Perturbation coefficients of the unfolded family near `(1, 0)`, given for
/// the upper half. The lower half uses the Z2-compatible values
/// (`y^2` coefficients `2*p12 - p02` and `2*q12 - q02`, the rest equal).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Perturbation {
    pub p21: Rational,
    pub p02: Rational,
    pub p12: Rational,
    pub p03: Rational,
    pub q02: Rational,
    pub q12: Rational,
    pub q03: Rational,
}

pub const PERTURBATION_NAMES: [&str; 7] = ["p21", "p02", "p12", "p03", "q02", "q12", "q03"];

impl Perturbation {
    pub fn get_mut(&mut self, name: &str) -> Option<&mut Rational> {
        Some(match name {
            "p21" => &mut self.p21,
            "p02" => &mut self.p02,
            "p12" => &mut self.p12,
            "p03" => &mut self.p03,
            "q02" => &mut self.q02,
            "q12" => &mut self.q12,
            "q03" => &mut self.q03,
            _ => return None,
        })
    }

    pub fn is_zero(&self) -> bool {
        [
            &self.p21, &self.p02, &self.p12, &self.p03, &self.q02, &self.q12, &self.q03,
        ]
        .iter()
        .all(|v| v.is_zero())
    }

    fn symbolic_terms() -> (PlanarField, PlanarField) {
        let up = PlanarField::parse(
            "p21*(2*x*y + x^2*y) + p02*y^2 + p12*x*y^2 + p03*y^3",
            "q02*y^2 + q12*x*y^2 + q03*y^3",
        )
        .expect("static polynomial");
        let lo = PlanarField::parse(
            "p21*(2*x*y + x^2*y) + (2*p12 - p02)*y^2 + p12*x*y^2 + p03*y^3",
            "(2*q12 - q02)*y^2 + q12*x*y^2 + q03*y^3",
        )
        .expect("static polynomial");
        (up, lo)
    }

    fn assignments(&self) -> Vec<(&'static str, Rational)> {
        vec![
            ("p21", self.p21.clone()),
            ("p02", self.p02.clone()),
            ("p12", self.p12.clone()),
            ("p03", self.p03.clone()),
            ("q02", self.q02.clone()),
            ("q12", self.q12.clone()),
            ("q03", self.q03.clone()),
        ]
    }
}

/// Shifted family at `(1, 0)` with the unfolding `-eps^2 y` in `x'`, the
/// perturbation `eps^2 G` and the rescaling by `eps`, all symbolic
/// (parameters, perturbation names and `eps`).
pub fn unfolded_family_symbolic() -> SwitchingSystem {
    let base =
        shift_to_origin(&z2_cubic_symbolic(), (&Rational::one(), &Rational::zero())).unwrap();
    let eps = MPoly::var("eps");
    let e2 = eps.pow(2);
    let unf = &(-&e2) * &MPoly::var("y");
    let (gu, gl) = Perturbation::symbolic_terms();
    let upper = PlanarField::new(
        &(&base.upper.p + &unf) + &(&e2 * &gu.p),
        &base.upper.q + &(&e2 * &gu.q),
    );
    let lower = PlanarField::new(
        &(&base.lower.p + &unf) + &(&e2 * &gl.p),
        &base.lower.q + &(&e2 * &gl.q),
    );
    scale_epsilon(&SwitchingSystem { upper, lower }, &eps).expect("symbolic eps is nonzero")
}

/// Concrete member of the unfolded family at `eps`, with linear trace `delta`
/// added after rescaling. The origin has linear part `(delta x - y, x + delta y)`.
pub fn unfolded_system(
    params: &Z2CubicParams,
    pert: &Perturbation,
    eps: &Rational,
    delta: &Rational,
) -> Result<SwitchingSystem, ModelError> {
    if eps.is_zero() {
        return Err(ModelError::ZeroEpsilon);
    }
    let base = shift_to_origin(
        &build_z2_cubic(params),
        (&Rational::one(), &Rational::zero()),
    )?;
    let e2 = eps * eps;
    let unf = MPoly::var("y").scale(&-e2.clone());
    let (gu, gl) = Perturbation::symbolic_terms();
    let pv = pert.assignments();
    let gu = gu.subs_params(&pv);
    let gl = gl.subs_params(&pv);
    let upper = PlanarField::new(
        &(&base.upper.p + &unf) + &gu.p.scale(&e2),
        &base.upper.q + &gu.q.scale(&e2),
    );
    let lower = PlanarField::new(
        &(&base.lower.p + &unf) + &gl.p.scale(&e2),
        &base.lower.q + &gl.q.scale(&e2),
    );
    let scaled = scale_epsilon(
        &SwitchingSystem { upper, lower },
        &MPoly::constant(eps.clone()),
    )?;
    Ok(if delta.is_zero() {
        scaled
    } else {
        scaled.with_linear_trace(delta)
    })
}

/// `H` with `x' = dH/dy`, `y' = -dH/dx` and `H(0, 0) = 0`.
pub fn hamiltonian_of(field: &PlanarField) -> Result<MPoly, ModelError> {
    if !field.divergence().is_zero() {
        return Err(ModelError::NotHamiltonian);
    }
    let h = field.p.integrate("y");
    let rest = &(-&field.q) - &h.derivative("x")?;
    let h = &h + &rest.integrate("x");
    let c = MPoly::constant(h.constant_term());
    Ok((&h - &c).with_vars(&xy()))
}

/// True when `(x, y, t) -> (x, -y, -t)` carries the upper field onto the lower
/// one, i.e. `P-(x, y) = -P+(x, -y)` and `Q-(x, y) = Q+(x, -y)`.
pub fn check_center_symmetry(sys: &SwitchingSystem) -> bool {
    let my = -&MPoly::var("y");
    let pr = -&sys.upper.p.subs("y", &my);
    let qr = sys.upper.q.subs("y", &my);
    pr == sys.lower.p && qr == sys.lower.q
}

/// `P I_x + Q I_y - I div(P, Q)`; zero exactly when `I` is an inverse
/// integrating factor.
pub fn inverse_integrating_factor_residual(field: &PlanarField, i: &MPoly) -> MPoly {
    let i = i.with_vars(&xy());
    let ix = i.derivative("x").unwrap();
    let iy = i.derivative("y").unwrap();
    &(&(&field.p * &ix) + &(&field.q * &iy)) - &(&i * &field.divergence())
}

pub fn verify_inverse_integrating_factor(field: &PlanarField, i: &MPoly) -> bool {
    inverse_integrating_factor_residual(field, i).is_zero()
}
