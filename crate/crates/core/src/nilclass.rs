//! Topological type of a nilpotent singular point `x' = Psi, y' = x + Phi`
//! (no linear terms in `Psi`, `Phi`) from the series `F(y) = Psi(f(y), y)`
//! and `G(y) = (Psi_x + Phi_y)(f(y), y)`, where `x = f(y)` solves `x + Phi = 0`.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::exactalg::{MPoly, Rational, Series};
use crate::sysmodel::{
    build_z2_cubic, shift_to_origin, Half, PlanarField, SwitchingSystem, Z2CubicParams,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NilError {
    #[error("Phi must have no constant or linear terms")]
    PhiHasLowOrderTerms,
    #[error("the point is not nilpotent in the required form: {0}")]
    NotNilpotentForm(String),
    #[error("leading coefficient depends on parameters: {0}")]
    Parametric(String),
    #[error(transparent)]
    Model(#[from] crate::sysmodel::ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NilKind {
    CenterOrFocus,
    Saddle,
    Cusp,
    SaddleNode,
    Node,
    HyperbolicElliptic,
    NotIsolated,
    /// Every `F` coefficient through the computed order vanished.
    Undetermined,
}

impl fmt::Display for NilKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// `x = f(y)` with `f + Phi(f, y) = O(y^(order+1))`, by fixed-point iteration
/// `x <- -Phi(x, y)`. Coefficients may involve parameters.
pub fn implicit_series(phi: &MPoly, order: usize) -> Result<Series<MPoly>, NilError> {
    let terms = phi.bivariate("x", "y");
    if terms.keys().any(|&(i, j)| i + j < 2) {
        return Err(NilError::PhiHasLowOrderTerms);
    }
    let mut f = Series::zero_like(&MPoly::zero(), order);
    for _ in 0..order {
        f = compose_xy(&terms, &f, order).neg();
    }
    Ok(f)
}

/// `sum c_ij f(y)^i y^j` truncated at `order`.
fn compose_xy(
    terms: &std::collections::BTreeMap<(u32, u32), MPoly>,
    f: &Series<MPoly>,
    order: usize,
) -> Series<MPoly> {
    let max_i = terms.keys().map(|&(i, _)| i).max().unwrap_or(0);
    let mut powers = vec![Series::constant(MPoly::one(), order)];
    for k in 1..=max_i as usize {
        let next = powers[k - 1].mul(f);
        powers.push(next);
    }
    let mut acc = Series::zero_like(&MPoly::zero(), order);
    for (&(i, j), c) in terms {
        let p = &powers[i as usize];
        for k in 0..=order {
            let target = k + j as usize;
            if target > order {
                break;
            }
            if p.coeffs[k].is_zero() {
                continue;
            }
            acc.coeffs[target] = &acc.coeffs[target] + &(&p.coeffs[k] * c);
        }
    }
    acc
}

/// The `F`/`G` data of a nilpotent point.
#[derive(Clone, Debug)]
pub struct NilpotentData {
    pub f_series: Series<MPoly>,
    pub g_series: Series<MPoly>,
    /// Order of the first nonzero `F` coefficient.
    pub m: Option<usize>,
    /// Order of the first nonzero `G` coefficient.
    pub n: Option<usize>,
    /// `4(n+1) f_m + g_n^2` when both exist.
    pub delta: Option<MPoly>,
    pub psi_is_zero: bool,
}

impl NilpotentData {
    pub fn f_coeff(&self, k: usize) -> MPoly {
        self.f_series.coeff(k)
    }
    pub fn g_coeff(&self, k: usize) -> MPoly {
        self.g_series.coeff(k)
    }
}

pub fn fg_data(psi: &MPoly, phi: &MPoly, order: usize) -> Result<NilpotentData, NilError> {
    let f = implicit_series(phi, order)?;
    let psi_xy = psi.with_vars(&["x", "y"]);
    let phi_xy = phi.with_vars(&["x", "y"]);
    let big_f = compose_xy(&psi_xy.bivariate("x", "y"), &f, order);
    let div = &psi_xy.derivative("x").unwrap() + &phi_xy.derivative("y").unwrap();
    let big_g = compose_xy(&div.bivariate("x", "y"), &f, order);
    let m = big_f.valuation();
    let n = big_g.valuation();
    let delta = match (m, n) {
        (Some(m), Some(n)) => {
            let fm = &big_f.coeffs[m];
            let gn = &big_g.coeffs[n];
            Some(&fm.scale(&Rational::from_integer((4 * (n + 1)).into())) + &(gn * gn))
        }
        _ => None,
    };
    Ok(NilpotentData {
        f_series: big_f,
        g_series: big_g,
        m,
        n,
        delta,
        psi_is_zero: psi.is_zero(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NilpotentClass {
    pub kind: NilKind,
    /// Multiplicity of the point (`m`); absent when not determined.
    pub multiplicity: Option<usize>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub f_m: Option<Rational>,
    pub g_n: Option<Rational>,
    pub delta: Option<Rational>,
}

fn numeric(p: &MPoly) -> Result<Rational, NilError> {
    p.constant_value()
        .ok_or_else(|| NilError::Parametric(p.to_string()))
}

/// Applies the classification tables to numeric data.
pub fn classify(data: &NilpotentData) -> Result<NilpotentClass, NilError> {
    let Some(m) = data.m else {
        let kind = if data.psi_is_zero {
            NilKind::NotIsolated
        } else {
            NilKind::Undetermined
        };
        return Ok(NilpotentClass {
            kind,
            multiplicity: None,
            m: None,
            n: None,
            f_m: None,
            g_n: None,
            delta: None,
        });
    };
    let fm = numeric(&data.f_series.coeffs[m])?;
    let gn = match data.n {
        Some(n) => Some(numeric(&data.g_series.coeffs[n])?),
        None => None,
    };
    let delta = match &data.delta {
        Some(d) => Some(numeric(d)?),
        None => None,
    };
    let odd = m % 2 == 1;
    let k = m / 2;
    let kind = match data.n {
        None => {
            if odd {
                if fm.is_negative() {
                    NilKind::CenterOrFocus
                } else {
                    NilKind::Saddle
                }
            } else {
                NilKind::Cusp
            }
        }
        Some(n) => {
            if odd {
                if fm.is_positive() {
                    NilKind::Saddle
                } else {
                    let d = delta.clone().unwrap();
                    if k > n || (k == n && !d.is_negative()) {
                        if n % 2 == 1 {
                            NilKind::HyperbolicElliptic
                        } else {
                            NilKind::Node
                        }
                    } else {
                        NilKind::CenterOrFocus
                    }
                }
            } else if k > n {
                NilKind::SaddleNode
            } else {
                NilKind::Cusp
            }
        }
    };
    Ok(NilpotentClass {
        kind,
        multiplicity: Some(m),
        m: Some(m),
        n: data.n,
        f_m: Some(fm),
        g_n: gn,
        delta,
    })
}

/// Splits a field with a nilpotent origin into `(Psi, Phi)`. The linear part
/// must be `(0, c x)` with `c != 0`; time is rescaled by `1/c`.
pub fn nilpotent_form(field: &PlanarField) -> Result<(MPoly, MPoly), NilError> {
    let bp = field.p.bivariate("x", "y");
    let bq = field.q.bivariate("x", "y");
    let get = |b: &std::collections::BTreeMap<(u32, u32), MPoly>, k: (u32, u32)| {
        b.get(&k).cloned().unwrap_or_default()
    };
    for k in [(0, 0), (1, 0), (0, 1)] {
        if !get(&bp, k).is_zero() {
            return Err(NilError::NotNilpotentForm(format!(
                "x' has a term of degree < 2: {}",
                field.p
            )));
        }
    }
    if !get(&bq, (0, 0)).is_zero() || !get(&bq, (0, 1)).is_zero() {
        return Err(NilError::NotNilpotentForm(format!(
            "y' has a constant or y term: {}",
            field.q
        )));
    }
    let c = get(&bq, (1, 0))
        .constant_value()
        .filter(|c| !c.is_zero())
        .ok_or_else(|| NilError::NotNilpotentForm("y' has no nonzero numeric x term".into()))?;
    let inv = c.recip();
    let psi = field.p.scale(&inv);
    let phi = &field.q.scale(&inv) - &MPoly::var("x");
    Ok((psi, phi))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HalfClassification {
    pub half: Half,
    pub class: NilpotentClass,
}

/// Classifies both halves of `sys` at `point` (which must lie on `y = 0`).
pub fn classify_point(
    sys: &SwitchingSystem,
    point: (&Rational, &Rational),
    order: usize,
) -> Result<Vec<HalfClassification>, NilError> {
    let shifted = shift_to_origin(sys, point)?;
    let mut out = Vec::new();
    for half in [Half::Upper, Half::Lower] {
        let (psi, phi) = nilpotent_form(shifted.half(half))?;
        let data = fg_data(&psi, &phi, order)?;
        out.push(HalfClassification {
            half,
            class: classify(&data)?,
        });
    }
    Ok(out)
}

pub const MAX_MULTIPLICITY: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Multiplicity {
    Finite(usize),
    NotIsolated,
}

/// Multiplicity of `(1, 0)` in one half of the family. All `F` coefficients
/// vanishing through order six means a common factor, i.e. the point is not
/// isolated.
pub fn multiplicity_of_family(
    params: &Z2CubicParams,
    half: Half,
) -> Result<Multiplicity, NilError> {
    let shifted = shift_to_origin(
        &build_z2_cubic(params),
        (&Rational::one(), &Rational::zero()),
    )?;
    let (psi, phi) = nilpotent_form(shifted.half(half))?;
    let data = fg_data(&psi, &phi, 2 * MAX_MULTIPLICITY)?;
    Ok(match data.m {
        Some(m) if m <= MAX_MULTIPLICITY => Multiplicity::Finite(m),
        _ => Multiplicity::NotIsolated,
    })
}

/// Whether `(1, 0)` can be monodromic for the switching system: each half is
/// a center/focus or a cusp, and the cusp orientation lets orbits turn around.
///
/// Third-order case (upper `f_2 = 0`): needs `a12 >= 0`.
/// Second-order case (upper `f_2 < 0`): needs `a02 = a12 < 0` or `a02 + |a12| < 0`.
pub fn monodromic_candidate(params: &Z2CubicParams) -> Result<bool, NilError> {
    let sys = build_z2_cubic(params);
    let cls = classify_point(&sys, (&Rational::one(), &Rational::zero()), 8)?;
    let ok_kind = |k: NilKind| matches!(k, NilKind::CenterOrFocus | NilKind::Cusp);
    if !cls.iter().all(|c| ok_kind(c.class.kind)) {
        return Ok(false);
    }
    let upper = &cls[0].class;
    let f2 = &params.a02 + &params.a12;
    Ok(match upper.m {
        Some(3) if f2.is_zero() => !params.a12.is_negative(),
        Some(2) if f2.is_negative() => {
            let a02 = &params.a02;
            let a12 = &params.a12;
            (a02 == a12 && a12.is_negative()) || (a02 + a12.abs()).is_negative()
        }
        _ => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::{int, rat};

    #[test]
    fn implicit_series_example() {
        let phi: MPoly = "3/2 x^2 + 1/2 x^3 + y^2".parse().unwrap();
        let f = implicit_series(&phi, 5).unwrap();
        let want = [int(0), int(0), int(-1), int(0), rat(-3, 2), int(0)];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(f.coeffs[k], MPoly::constant(w.clone()), "coefficient {k}");
        }
        assert!(implicit_series(&"y + x^2".parse().unwrap(), 4).is_err());
    }

    #[test]
    fn sign_tables() {
        let mk = |m: usize, fm: i64, n: Option<(usize, i64)>| {
            let mut f = Series::zero_like(&MPoly::zero(), 10);
            f.coeffs[m] = MPoly::constant(int(fm));
            let mut g = Series::zero_like(&MPoly::zero(), 10);
            if let Some((n, gn)) = n {
                g.coeffs[n] = MPoly::constant(int(gn));
            }
            let delta = n.map(|(n, gn)| MPoly::constant(int(4 * (n as i64 + 1) * fm + gn * gn)));
            NilpotentData {
                f_series: f,
                g_series: g,
                m: Some(m),
                n: n.map(|p| p.0),
                delta,
                psi_is_zero: false,
            }
        };
        let k = |d: NilpotentData| classify(&d).unwrap().kind;
        assert_eq!(k(mk(3, -1, None)), NilKind::CenterOrFocus);
        assert_eq!(k(mk(3, 1, None)), NilKind::Saddle);
        assert_eq!(k(mk(2, 1, None)), NilKind::Cusp);
        assert_eq!(k(mk(3, 1, Some((1, 1)))), NilKind::Saddle);
        // m = 3 (k = 1), n = 1, delta = 8 f + g^2
        assert_eq!(k(mk(3, -1, Some((1, 2)))), NilKind::CenterOrFocus);
        assert_eq!(k(mk(3, -1, Some((1, 3)))), NilKind::HyperbolicElliptic);
        assert_eq!(k(mk(5, -1, Some((1, 3)))), NilKind::HyperbolicElliptic);
        assert_eq!(k(mk(5, -1, Some((2, 3)))), NilKind::CenterOrFocus);
        assert_eq!(k(mk(5, -1, Some((2, 4)))), NilKind::Node);
        assert_eq!(k(mk(4, -1, Some((1, 1)))), NilKind::SaddleNode);
        assert_eq!(k(mk(4, -1, Some((2, 1)))), NilKind::Cusp);
    }

    #[test]
    fn zero_psi_is_not_isolated() {
        let d = fg_data(&MPoly::zero(), &"x^2".parse().unwrap(), 6).unwrap();
        assert_eq!(classify(&d).unwrap().kind, NilKind::NotIsolated);
    }
}
