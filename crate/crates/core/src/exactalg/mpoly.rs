use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use super::{AlgError, ParseError, Rational, Ring};

/// Sparse polynomial over Q in named variables.
///
/// Variable names are kept sorted, so two polynomials built from the same
/// names share exponent layouts. Terms with zero coefficient are never stored.
#[derive(Clone, Debug, Default)]
pub struct MPoly {
    vars: Vec<String>,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl MPoly {
    pub fn zero() -> Self {
        MPoly::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        MPoly {
            vars: Vec::new(),
            terms,
        }
    }

    pub fn var(name: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![1], Rational::one());
        MPoly {
            vars: vec![name.to_string()],
            terms,
        }
    }

    /// Builds from `(coefficient, [(var, power)])` pairs.
    pub fn from_monomials(monos: &[(Rational, Vec<(&str, u32)>)]) -> Self {
        let mut acc = MPoly::zero();
        for (c, m) in monos {
            let mut t = MPoly::constant(c.clone());
            for (v, k) in m {
                t = &t * &MPoly::var(v).pow(*k);
            }
            acc = &acc + &t;
        }
        acc
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, Rational> {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when the polynomial has no term of positive degree.
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k == 0))
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if self.is_constant() {
            Some(self.constant_term())
        } else {
            None
        }
    }

    pub fn constant_term(&self) -> Rational {
        let z = vec![0; self.vars.len()];
        self.terms.get(&z).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.binary_search_by(|v| v.as_str().cmp(name)).ok()
    }

    /// Names that occur with a positive exponent.
    pub fn used_vars(&self) -> Vec<String> {
        (0..self.vars.len())
            .filter(|&i| self.terms.keys().any(|e| e[i] > 0))
            .map(|i| self.vars[i].clone())
            .collect()
    }

    /// Re-expresses over `new_vars` (sorted, a superset of the used variables).
    fn reindexed(&self, new_vars: &[String]) -> BTreeMap<Vec<u32>, Rational> {
        let map: Vec<Option<usize>> = self
            .vars
            .iter()
            .map(|v| new_vars.binary_search(v).ok())
            .collect();
        let mut out = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut ne = vec![0u32; new_vars.len()];
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    ne[map[i].expect("variable dropped while reindexing")] = k;
                }
            }
            out.insert(ne, c.clone());
        }
        out
    }

    pub fn with_vars(&self, extra: &[&str]) -> Self {
        let mut vars = self.vars.clone();
        for v in extra {
            if let Err(pos) = vars.binary_search_by(|x| x.as_str().cmp(v)) {
                vars.insert(pos, v.to_string());
            }
        }
        let terms = self.reindexed(&vars);
        MPoly { vars, terms }
    }

    /// Drops variables that do not occur.
    pub fn trimmed(&self) -> Self {
        let used = self.used_vars();
        let terms = self.reindexed(&used);
        MPoly { vars: used, terms }
    }

    fn merged_vars(&self, other: &Self) -> Vec<String> {
        let mut vars = self.vars.clone();
        for v in &other.vars {
            if let Err(pos) = vars.binary_search(v) {
                vars.insert(pos, v.clone());
            }
        }
        vars
    }

    fn from_parts(vars: Vec<String>, terms: BTreeMap<Vec<u32>, Rational>) -> Self {
        MPoly { vars, terms }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return MPoly {
                vars: self.vars.clone(),
                terms: BTreeMap::new(),
            };
        }
        let terms = self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect();
        MPoly {
            vars: self.vars.clone(),
            terms,
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc =
            MPoly::one().with_vars(&self.vars.iter().map(|s| s.as_str()).collect::<Vec<_>>());
        let mut base = self.clone();
        let mut n = k;
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn degree_in(&self, var: &str) -> Option<u32> {
        let i = self.var_index(var);
        self.terms
            .keys()
            .map(|e| i.map(|i| e[i]).unwrap_or(0))
            .max()
    }

    pub fn derivative(&self, var: &str) -> Result<MPoly, AlgError> {
        let i = self
            .var_index(var)
            .ok_or_else(|| AlgError::UnknownVariable(var.to_string()))?;
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut ne = e.clone();
                ne[i] -= 1;
                terms.insert(ne, c * Rational::from_integer(e[i].into()));
            }
        }
        Ok(MPoly {
            vars: self.vars.clone(),
            terms,
        })
    }

    /// Antiderivative in `var` with zero constant of integration.
    pub fn integrate(&self, var: &str) -> MPoly {
        let p = self.with_vars(&[var]);
        let i = p.var_index(var).unwrap();
        let mut terms = BTreeMap::new();
        for (e, c) in &p.terms {
            let mut ne = e.clone();
            ne[i] += 1;
            let k = ne[i];
            terms.insert(ne, c / Rational::from_integer(k.into()));
        }
        MPoly {
            vars: p.vars,
            terms,
        }
    }

    pub fn eval(&self, assign: &[(&str, Rational)]) -> Result<Rational, AlgError> {
        let mut vals: Vec<Option<&Rational>> = vec![None; self.vars.len()];
        for (name, v) in assign {
            if let Some(i) = self.var_index(name) {
                vals[i] = Some(v);
            }
        }
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    let v = vals[i].ok_or_else(|| AlgError::MissingValue(self.vars[i].clone()))?;
                    t *= num_traits::pow(v.clone(), k as usize);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Coefficients of `var^0, var^1, ...`; `var` is removed from the result.
    pub fn coeffs_in(&self, var: &str) -> Vec<MPoly> {
        let Some(i) = self.var_index(var) else {
            return vec![self.clone()];
        };
        let mut rest = self.vars.clone();
        rest.remove(i);
        let deg = self.degree_in(var).unwrap_or(0) as usize;
        let mut out: Vec<BTreeMap<Vec<u32>, Rational>> = vec![BTreeMap::new(); deg + 1];
        for (e, c) in &self.terms {
            let mut ne = e.clone();
            let k = ne.remove(i) as usize;
            out[k].insert(ne, c.clone());
        }
        out.into_iter()
            .map(|t| MPoly::from_parts(rest.clone(), t))
            .collect()
    }

    /// Substitutes `value` for `var`.
    pub fn subs(&self, var: &str, value: &MPoly) -> MPoly {
        if self.var_index(var).is_none() {
            return self.clone();
        }
        let cs = self.coeffs_in(var);
        let mut acc = MPoly::zero();
        for c in cs.iter().rev() {
            acc = &(&acc * value) + c;
        }
        acc
    }

    pub fn subs_many(&self, values: &[(&str, MPoly)]) -> MPoly {
        // Simultaneous substitution: rename first so values may mention replaced names.
        let mut p = self.clone();
        let tmp: Vec<String> = (0..values.len()).map(|i| format!("__subs{i}")).collect();
        for ((name, _), t) in values.iter().zip(&tmp) {
            p = p.subs(name, &MPoly::var(t));
        }
        for ((_, v), t) in values.iter().zip(&tmp) {
            p = p.subs(t, v);
        }
        p
    }

    pub fn subs_rational(&self, values: &[(&str, Rational)]) -> MPoly {
        let vs: Vec<(&str, MPoly)> = values
            .iter()
            .map(|(n, v)| (*n, MPoly::constant(v.clone())))
            .collect();
        self.subs_many(&vs)
    }

    fn leading(&self) -> Option<(&Vec<u32>, &Rational)> {
        self.terms.iter().next_back()
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &MPoly) -> Option<MPoly> {
        if d.is_zero() {
            return None;
        }
        let vars = self.merged_vars(d);
        let dt = MPoly::from_parts(vars.clone(), d.reindexed(&vars));
        let mut r = MPoly::from_parts(vars.clone(), self.reindexed(&vars));
        let (le, lc) = {
            let (e, c) = dt.leading().unwrap();
            (e.clone(), c.clone())
        };
        let mut q = BTreeMap::new();
        while let Some((re, rc)) = r.leading() {
            if re.iter().zip(&le).any(|(a, b)| a < b) {
                return None;
            }
            let qe: Vec<u32> = re.iter().zip(&le).map(|(a, b)| a - b).collect();
            let qc = rc / &lc;
            let mut t = BTreeMap::new();
            t.insert(qe.clone(), qc.clone());
            let tp = MPoly::from_parts(vars.clone(), t);
            r = &r - &(&tp * &dt);
            q.insert(qe, qc);
        }
        Some(MPoly::from_parts(vars, q))
    }

    /// Terms as `((i, j), coefficient)` in variables `x`, `y`; other
    /// variables stay in the coefficient.
    pub fn bivariate(&self, x: &str, y: &str) -> BTreeMap<(u32, u32), MPoly> {
        let mut out: BTreeMap<(u32, u32), MPoly> = BTreeMap::new();
        for (i, cx) in self.coeffs_in(x).into_iter().enumerate() {
            for (j, cxy) in cx.coeffs_in(y).into_iter().enumerate() {
                if !cxy.is_zero() {
                    out.insert((i as u32, j as u32), cxy);
                }
            }
        }
        out
    }
}

impl PartialEq for MPoly {
    fn eq(&self, other: &Self) -> bool {
        let a = self.trimmed();
        let b = other.trimmed();
        a.vars == b.vars && a.terms == b.terms
    }
}

impl Eq for MPoly {}

fn binop(a: &MPoly, b: &MPoly, sign: i8) -> MPoly {
    let vars = a.merged_vars(b);
    let mut terms = if a.vars == vars {
        a.terms.clone()
    } else {
        a.reindexed(&vars)
    };
    let bt = if b.vars == vars {
        b.terms.clone()
    } else {
        b.reindexed(&vars)
    };
    for (e, c) in bt {
        let entry = terms.entry(e);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                if sign > 0 {
                    *o.get_mut() += c;
                } else {
                    *o.get_mut() -= c;
                }
                if o.get().is_zero() {
                    o.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(if sign > 0 { c } else { -c });
            }
        }
    }
    MPoly { vars, terms }
}

impl<'a> Add<&'a MPoly> for &'a MPoly {
    type Output = MPoly;
    fn add(self, rhs: &MPoly) -> MPoly {
        binop(self, rhs, 1)
    }
}

impl<'a> Sub<&'a MPoly> for &'a MPoly {
    type Output = MPoly;
    fn sub(self, rhs: &MPoly) -> MPoly {
        binop(self, rhs, -1)
    }
}

impl<'a> Mul<&'a MPoly> for &'a MPoly {
    type Output = MPoly;
    fn mul(self, rhs: &MPoly) -> MPoly {
        let vars = self.merged_vars(rhs);
        let at = if self.vars == vars {
            self.terms.clone()
        } else {
            self.reindexed(&vars)
        };
        let bt = if rhs.vars == vars {
            rhs.terms.clone()
        } else {
            rhs.reindexed(&vars)
        };
        let mut terms: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for (ea, ca) in &at {
            for (eb, cb) in &bt {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                let c = ca * cb;
                let slot = terms.entry(e).or_insert_with(Rational::zero);
                *slot += c;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        MPoly { vars, terms }
    }
}

impl Neg for &MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        self.scale(&-Rational::one())
    }
}

impl Neg for MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        (&self).neg()
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<MPoly> for MPoly {
            type Output = MPoly;
            fn $m(self, rhs: MPoly) -> MPoly { (&self).$m(&rhs) }
        }
        impl<'a> $tr<&'a MPoly> for MPoly {
            type Output = MPoly;
            fn $m(self, rhs: &MPoly) -> MPoly { (&self).$m(rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Ring for MPoly {
    fn zero_like(&self) -> Self {
        MPoly::zero()
    }
    fn one_like(&self) -> Self {
        MPoly::one()
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

impl fmt::Display for MPoly {
    /// Terms in descending exponent order, e.g. `3/2*x^2*y - y + 1`.
    /// The output parses back to an equal polynomial.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ordered: Vec<(&Vec<u32>, &Rational)> = self.terms.iter().collect();
        ordered.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        for (idx, (e, c)) in ordered.into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mut factors: Vec<String> = Vec::new();
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => factors.push(self.vars[i].clone()),
                    _ => factors.push(format!("{}^{}", self.vars[i], k)),
                }
            }
            if factors.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{}*{}", mag, factors.join("*"))?;
            }
        }
        Ok(())
    }
}

impl FromStr for MPoly {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        super::parse::parse_poly(s)
    }
}
