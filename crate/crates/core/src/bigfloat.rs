//! Binary floating point with a caller-chosen mantissa width.
//!
//! A value is `mant * 2^exp` where a nonzero `mant` always carries exactly
//! `prec` significant bits. Every operation rounds to nearest, ties to even,
//! at the larger precision of its operands.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::exactalg::Rational;

/// Environment variable that overrides [`DEFAULT_PRECISION_BITS`].
pub const PRECISION_ENV: &str = "NILCYC_PRECISION_BITS";
pub const DEFAULT_PRECISION_BITS: u32 = 256;

/// Working precision: `NILCYC_PRECISION_BITS` if set and valid, else 256.
pub fn default_precision() -> u32 {
    std::env::var(PRECISION_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<u32>().ok())
        .filter(|&p| p >= 16)
        .unwrap_or(DEFAULT_PRECISION_BITS)
}

#[derive(Clone, Debug)]
pub struct BigFloat {
    mant: BigInt,
    exp: i64,
    prec: u32,
}

fn round_mag(mag: BigUint, exp: i64, prec: u32, sticky_in: bool) -> (BigUint, i64) {
    let bits = mag.bits();
    let prec64 = prec as u64;
    if bits == 0 {
        return (mag, 0);
    }
    if bits > prec64 {
        let sh = bits - prec64;
        let half = mag.bit(sh - 1);
        let sticky = sticky_in || mag.trailing_zeros().map(|tz| tz < sh - 1).unwrap_or(false);
        let mut q = mag >> sh;
        let mut e = exp + sh as i64;
        if half && (sticky || q.bit(0)) {
            q += 1u32;
            if q.bits() > prec64 {
                q >>= 1;
                e += 1;
            }
        }
        (q, e)
    } else if bits < prec64 {
        let sh = prec64 - bits;
        (mag << sh, exp - sh as i64)
    } else {
        (mag, exp)
    }
}

impl BigFloat {
    fn make(mant: BigInt, exp: i64, prec: u32, sticky: bool) -> Self {
        let (sign, mag) = mant.into_parts();
        let (m, e) = round_mag(mag, exp, prec, sticky);
        if m.is_zero() {
            return BigFloat::zero(prec);
        }
        BigFloat {
            mant: BigInt::from_biguint(sign, m),
            exp: e,
            prec,
        }
    }

    pub fn zero(prec: u32) -> Self {
        BigFloat {
            mant: BigInt::zero(),
            exp: 0,
            prec,
        }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        Self::make(BigInt::from(v), 0, prec, false)
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> Self {
        Self::make(v.clone(), 0, prec, false)
    }

    pub fn from_f64(v: f64, prec: u32) -> Self {
        if v == 0.0 || !v.is_finite() {
            return Self::zero(prec);
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let e = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if e == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), e - 1075)
        };
        Self::make(BigInt::from(m) * sign, e, prec, false)
    }

    pub fn from_rational(r: &Rational, prec: u32) -> Self {
        let num = r.numer();
        let den = r.denom();
        if num.is_zero() {
            return Self::zero(prec);
        }
        let shift = prec as u64 + den.bits() + 2;
        let scaled = num.abs() << shift;
        let (q, rem) = scaled.div_rem(den);
        let q = if num.is_negative() { -q } else { q };
        Self::make(q, -(shift as i64), prec, !rem.is_zero())
    }

    /// `v * 2^e`, exact up to rounding at `prec`.
    pub fn from_bigint_exp(v: BigInt, e: i64, prec: u32) -> Self {
        Self::make(v, e, prec, false)
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        Self::make(self.mant.clone(), self.exp, prec, false)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn abs(&self) -> Self {
        BigFloat {
            mant: self.mant.abs(),
            exp: self.exp,
            prec: self.prec,
        }
    }

    /// Position of the leading bit: `2^(top-1) <= |x| < 2^top`. Zero gives `i64::MIN`.
    pub fn top(&self) -> i64 {
        if self.is_zero() {
            i64::MIN
        } else {
            self.exp + self.mant.bits() as i64
        }
    }

    pub fn mul_2exp(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        BigFloat {
            mant: self.mant.clone(),
            exp: self.exp + k,
            prec: self.prec,
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let b = self.mant.bits() as i64;
        let keep = 60.min(b);
        let m = (&self.mant >> (b - keep) as usize).to_f64().unwrap_or(0.0);
        let e = self.exp + b - keep;
        if e > 2000 {
            return if m > 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
        }
        if e < -2200 {
            return 0.0;
        }
        m * 2f64.powi(e as i32)
    }

    /// Exact value as a rational.
    pub fn to_rational(&self) -> Rational {
        if self.exp >= 0 {
            Rational::from_integer(&self.mant << self.exp as usize)
        } else {
            Rational::new(self.mant.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }

    fn exact_cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.signum(), other.signum());
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        let (ta, tb) = (self.top(), other.top());
        if ta != tb {
            let mag = ta.cmp(&tb);
            return if sa > 0 { mag } else { mag.reverse() };
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as usize;
        let b = &other.mant << (other.exp - e) as usize;
        a.cmp(&b)
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "square root of a negative value");
        if self.is_zero() {
            return self.clone();
        }
        let p = self.prec as i64;
        let mag = self.mant.magnitude().clone();
        let mut s = (2 * p + 4 - mag.bits() as i64).max(0);
        if (self.exp - s).rem_euclid(2) != 0 {
            s += 1;
        }
        let m2 = mag << s as usize;
        let r = m2.sqrt();
        let sticky = &r * &r != m2;
        Self::make(
            BigInt::from_biguint(Sign::Plus, r),
            (self.exp - s) / 2,
            self.prec,
            sticky,
        )
    }

    pub fn pow_u(&self, n: u32) -> Self {
        let mut acc = Self::one(self.prec);
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    /// Fixed-point image `round(x * 2^w)`.
    fn to_fixed(&self, w: u32) -> BigInt {
        let sh = self.exp + w as i64;
        if sh >= 0 {
            &self.mant << sh as usize
        } else {
            let d = (-sh) as usize;
            let half = BigInt::one() << (d - 1);
            if self.mant.is_negative() {
                -((-&self.mant + half) >> d)
            } else {
                (&self.mant + half) >> d
            }
        }
    }

    pub fn pi(prec: u32) -> Self {
        static CACHE: OnceLock<Mutex<HashMap<u32, BigFloat>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(v) = cache.lock().unwrap().get(&prec) {
            return v.clone();
        }
        let w = prec + 64;
        let one = BigInt::one() << w as usize;
        let atan_inv = |n: u32| -> BigInt {
            // arctan(1/n) = sum (-1)^k / ((2k+1) n^(2k+1))
            let n2 = BigInt::from(n * n);
            let mut power = &one / BigInt::from(n);
            let mut sum = BigInt::zero();
            let mut k = 0u32;
            while !power.is_zero() {
                let term = &power / BigInt::from(2 * k + 1);
                if k.is_multiple_of(2) {
                    sum += term;
                } else {
                    sum -= term;
                }
                power = &power / &n2;
                k += 1;
            }
            sum
        };
        let fixed = atan_inv(5) * 16 - atan_inv(239) * 4;
        let v = Self::make(fixed, -(w as i64), prec, false);
        cache.lock().unwrap().insert(prec, v.clone());
        v
    }

    pub fn exp(&self) -> Self {
        let prec = self.prec;
        if self.is_zero() {
            return Self::one(prec);
        }
        let s = (self.top() + 12).max(0) as u32;
        let w = prec + s + 64;
        let r = self.mul_2exp(-(s as i64)).with_prec(w).to_fixed(w);
        let one = BigInt::one() << w as usize;
        let mut sum = one.clone();
        let mut term = one;
        let mut k = 1u32;
        loop {
            term = (&term * &r) >> w as usize;
            term /= BigInt::from(k);
            if term.is_zero() {
                break;
            }
            sum += &term;
            k += 1;
        }
        for _ in 0..s {
            sum = (&sum * &sum) >> w as usize;
        }
        Self::make(sum, -(w as i64), prec, false)
    }

    /// `(sin x, cos x)`.
    pub fn sin_cos(&self) -> (Self, Self) {
        let prec = self.prec;
        if self.is_zero() {
            return (Self::zero(prec), Self::one(prec));
        }
        let extra = (self.top().max(0) as u32) + 64;
        let w = prec + extra;
        let half_pi = Self::pi(w).mul_2exp(-1);
        let x = self.with_prec(w);
        let k = (&x / &half_pi).round_to_bigint();
        let r = &x - &(&half_pi * &Self::from_bigint(&k, w));
        let rf = r.to_fixed(w);
        let one = BigInt::one() << w as usize;
        let r2 = (&rf * &rf) >> w as usize;
        // sin: r - r^3/3! + ...; cos: 1 - r^2/2! + ...
        let mut s = rf.clone();
        let mut term = rf;
        let mut n = 1u32;
        loop {
            term = -((&term * &r2) >> w as usize) / BigInt::from((n + 1) * (n + 2));
            if term.is_zero() {
                break;
            }
            s += &term;
            n += 2;
        }
        let mut c = one.clone();
        let mut term = one;
        let mut n = 0u32;
        loop {
            term = -((&term * &r2) >> w as usize) / BigInt::from((n + 1) * (n + 2));
            if term.is_zero() {
                break;
            }
            c += &term;
            n += 2;
        }
        let q = k.mod_floor(&BigInt::from(4)).to_u32().unwrap();
        let (s, c) = match q {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        };
        (
            Self::make(s, -(w as i64), prec, false),
            Self::make(c, -(w as i64), prec, false),
        )
    }

    /// Nearest integer, ties away from zero.
    pub fn round_to_bigint(&self) -> BigInt {
        if self.exp >= 0 {
            return &self.mant << self.exp as usize;
        }
        let d = (-self.exp) as usize;
        let half = BigInt::one() << (d - 1);
        let mag = (self.mant.abs() + half) >> d;
        if self.mant.is_negative() {
            -mag
        } else {
            mag
        }
    }

    /// Natural logarithm of a positive value (Newton on `exp`).
    pub fn ln(&self) -> Self {
        assert!(self.signum() > 0, "logarithm of a non-positive value");
        let prec = self.prec;
        let w = prec + 32;
        let x = self.with_prec(w);
        // x = m * 2^t with m in [1/2, 1): ln x = ln m + t ln 2
        let t = x.top();
        let m = x.mul_2exp(-t);
        let ln2 = Self::ln2(w);
        let mut y = Self::from_f64(m.to_f64().ln(), w);
        let mut bits = 50u32;
        loop {
            let e = y.exp();
            y = &(&y + &(&m / &e)) - &Self::one(w);
            if bits > w {
                break;
            }
            bits *= 2;
        }
        let e = y.exp();
        y = &(&y + &(&m / &e)) - &Self::one(w);
        (&y + &(&ln2 * &Self::from_i64(t, w))).with_prec(prec)
    }

    fn ln2(prec: u32) -> Self {
        // ln 2 = 2 atanh(1/3) = 2 sum 1/((2k+1) 3^(2k+1))
        let w = prec + 64;
        let one = BigInt::one() << w as usize;
        let mut power = &one / BigInt::from(3);
        let nine = BigInt::from(9);
        let mut sum = BigInt::zero();
        let mut k = 0u32;
        while !power.is_zero() {
            sum += &power / BigInt::from(2 * k + 1);
            power = &power / &nine;
            k += 1;
        }
        Self::make(sum * 2, -(w as i64), prec, false)
    }

    /// Scientific notation with `digits` significant digits, e.g. `-1.2500e-3`.
    pub fn to_sci_string(&self, digits: usize) -> String {
        let digits = digits.max(1);
        if self.is_zero() {
            return format!("0.{}e0", "0".repeat(digits - 1));
        }
        let neg = self.is_negative();
        let mag = self.mant.abs();
        let log10 = (self.top() as f64 - 1.0) * std::f64::consts::LOG10_2;
        let mut e10 = log10.floor() as i64;
        let mut q;
        loop {
            let k = digits as i64 - 1 - e10;
            let mut num = mag.clone();
            let mut den = BigInt::one();
            if self.exp >= 0 {
                num <<= self.exp as usize;
            } else {
                den <<= (-self.exp) as usize;
            }
            let ten = BigInt::from(10);
            if k >= 0 {
                num *= num_traits::pow(ten, k as usize);
            } else {
                den *= num_traits::pow(ten, (-k) as usize);
            }
            let (qq, rem) = num.div_rem(&den);
            q = if rem * 2 >= den { qq + 1 } else { qq };
            let s = q.to_string();
            if s.len() > digits {
                e10 += 1;
                continue;
            }
            if s.len() < digits {
                e10 -= 1;
                continue;
            }
            break;
        }
        let s = q.to_string();
        let (head, tail) = s.split_at(1);
        let sign = if neg { "-" } else { "" };
        if tail.is_empty() {
            format!("{sign}{head}e{e10}")
        } else {
            format!("{sign}{head}.{tail}e{e10}")
        }
    }

    /// Decimal digits carried by `prec` bits.
    pub fn decimal_digits(prec: u32) -> usize {
        ((prec as f64) * std::f64::consts::LOG10_2).floor() as usize
    }

    pub fn max(a: &Self, b: &Self) -> Self {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }
}

impl PartialEq for BigFloat {
    fn eq(&self, other: &Self) -> bool {
        self.exact_cmp(other) == Ordering::Equal
    }
}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.exact_cmp(other))
    }
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci_string(Self::decimal_digits(self.prec)))
    }
}

impl<'a> Add<&'a BigFloat> for &'a BigFloat {
    type Output = BigFloat;
    fn add(self, rhs: &BigFloat) -> BigFloat {
        let prec = self.prec.max(rhs.prec);
        if rhs.is_zero() {
            return self.with_prec(prec);
        }
        if self.is_zero() {
            return rhs.with_prec(prec);
        }
        let gap = prec as i64 + 4;
        if self.top() - rhs.top() > gap {
            return self.with_prec(prec);
        }
        if rhs.top() - self.top() > gap {
            return rhs.with_prec(prec);
        }
        let e = self.exp.min(rhs.exp);
        let a = &self.mant << (self.exp - e) as usize;
        let b = &rhs.mant << (rhs.exp - e) as usize;
        BigFloat::make(a + b, e, prec, false)
    }
}

impl<'a> Sub<&'a BigFloat> for &'a BigFloat {
    type Output = BigFloat;
    fn sub(self, rhs: &BigFloat) -> BigFloat {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a BigFloat> for &'a BigFloat {
    type Output = BigFloat;
    fn mul(self, rhs: &BigFloat) -> BigFloat {
        let prec = self.prec.max(rhs.prec);
        if self.is_zero() || rhs.is_zero() {
            return BigFloat::zero(prec);
        }
        BigFloat::make(&self.mant * &rhs.mant, self.exp + rhs.exp, prec, false)
    }
}

impl<'a> Div<&'a BigFloat> for &'a BigFloat {
    type Output = BigFloat;
    fn div(self, rhs: &BigFloat) -> BigFloat {
        let prec = self.prec.max(rhs.prec);
        assert!(!rhs.is_zero(), "division by zero");
        if self.is_zero() {
            return BigFloat::zero(prec);
        }
        let shift = prec as u64 + rhs.mant.bits() + 2;
        let (q, rem) = (&self.mant << shift as usize).div_rem(&rhs.mant);
        BigFloat::make(q, self.exp - rhs.exp - shift as i64, prec, !rem.is_zero())
    }
}

impl Neg for &BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        BigFloat {
            mant: -&self.mant,
            exp: self.exp,
            prec: self.prec,
        }
    }
}

impl Neg for BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        BigFloat {
            mant: -self.mant,
            exp: self.exp,
            prec: self.prec,
        }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<BigFloat> for BigFloat {
            type Output = BigFloat;
            fn $m(self, rhs: BigFloat) -> BigFloat { (&self).$m(&rhs) }
        }
        impl<'a> $tr<&'a BigFloat> for BigFloat {
            type Output = BigFloat;
            fn $m(self, rhs: &BigFloat) -> BigFloat { (&self).$m(rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul, Div div);
