//! Exact arithmetic: rationals, sparse multivariate polynomials over Q,
//! truncated power series and Sylvester resultants.

mod mpoly;
mod parse;
mod resultant;
mod series;

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

pub use mpoly::MPoly;
pub use parse::{parse_poly, parse_rational};
pub use resultant::{resultant, sylvester_matrix};
pub use series::{series_compose_invert, Series};

/// Exact arbitrary-precision fraction, always in lowest terms.
pub type Rational = num_rational::BigRational;

/// Shorthand for `n/d`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.line, self.column, self.message
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AlgError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("no value supplied for variable `{0}`")]
    MissingValue(String),
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("series is not invertible: {0}")]
    NotInvertible(String),
    #[error("polynomial division is not exact")]
    DivisionNotExact,
}

/// Coefficient ring for series and elimination.
///
/// Values such as floats of a given precision cannot produce a zero out of
/// nothing, so constants are built from an existing element.
pub trait Ring: Clone + fmt::Debug {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn is_zero_r(&self) -> bool;
    fn add_r(&self, o: &Self) -> Self;
    fn sub_r(&self, o: &Self) -> Self;
    fn mul_r(&self, o: &Self) -> Self;
    fn neg_r(&self) -> Self;
}

pub trait Field: Ring {
    fn inv_r(&self) -> Option<Self>;
}

impl Ring for Rational {
    fn zero_like(&self) -> Self {
        Rational::zero()
    }
    fn one_like(&self) -> Self {
        Rational::one()
    }
    fn is_zero_r(&self) -> bool {
        self.is_zero()
    }
    fn add_r(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_r(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_r(&self, o: &Self) -> Self {
        self * o
    }
    fn neg_r(&self) -> Self {
        -self
    }
}

impl Field for Rational {
    fn inv_r(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.recip())
        }
    }
}

impl Ring for crate::bigfloat::BigFloat {
    fn zero_like(&self) -> Self {
        Self::zero(self.prec())
    }
    fn one_like(&self) -> Self {
        Self::one(self.prec())
    }
    fn is_zero_r(&self) -> bool {
        self.is_zero()
    }
    fn add_r(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_r(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_r(&self, o: &Self) -> Self {
        self * o
    }
    fn neg_r(&self) -> Self {
        -self
    }
}

impl Field for crate::bigfloat::BigFloat {
    fn inv_r(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(&Self::one(self.prec()) / self)
        }
    }
}

/// Evaluates `p` at the given values. Variables absent from `assign`
/// must not occur in `p`.
pub fn poly_eval(p: &MPoly, assign: &[(&str, Rational)]) -> Result<Rational, AlgError> {
    p.eval(assign)
}

pub fn poly_derivative(p: &MPoly, var: &str) -> Result<MPoly, AlgError> {
    p.derivative(var)
}

/// Best rational approximation with denominator at most `max_den`
/// (continued fractions).
pub fn best_rational(x: &Rational, max_den: &BigInt) -> Rational {
    use num_integer::Integer;
    let (mut p0, mut q0, mut p1, mut q1) =
        (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let mut num = x.numer().clone();
    let mut den = x.denom().clone();
    loop {
        let (a, r) = num.div_mod_floor(&den);
        let q2 = &q0 + &a * &q1;
        if &q2 > max_den {
            break;
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        if r.is_zero() {
            break;
        }
        num = std::mem::replace(&mut den, r);
    }
    Rational::new(p1, q1)
}

/// Rational within `2^-bits` of `sqrt(s)` for `s >= 0`.
pub fn sqrt_rational_approx(s: &Rational, bits: u32) -> Rational {
    use num_traits::Signed;
    assert!(!s.is_negative(), "square root of a negative rational");
    let scale = BigInt::one() << (2 * bits as usize + 4);
    let scaled = (s * Rational::from_integer(scale)).floor().to_integer();
    let root = scaled.sqrt();
    Rational::new(root, BigInt::one() << (bits as usize + 2))
}

/// Exact square root when `s` is the square of a rational.
pub fn exact_sqrt(s: &Rational) -> Option<Rational> {
    use num_traits::Signed;
    if s.is_negative() {
        return None;
    }
    let n = s.numer().sqrt();
    let d = s.denom().sqrt();
    if &(&n * &n) == s.numer() && &(&d * &d) == s.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}
