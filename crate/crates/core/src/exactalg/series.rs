use super::{AlgError, Field, Ring};

/// Power series in one variable truncated after `y^order`.
/// `coeffs[k]` is the coefficient of `y^k`; the vector is never empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Series<T> {
    pub coeffs: Vec<T>,
}

impl<T: Ring> Series<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a series needs at least a constant term"
        );
        Series { coeffs }
    }

    pub fn zero_like(proto: &T, order: usize) -> Self {
        Series {
            coeffs: vec![proto.zero_like(); order + 1],
        }
    }

    /// The series `y` (zero constant, unit linear coefficient).
    pub fn identity(proto: &T, order: usize) -> Self {
        let mut s = Self::zero_like(proto, order);
        if order >= 1 {
            s.coeffs[1] = proto.one_like();
        }
        s
    }

    pub fn constant(c: T, order: usize) -> Self {
        let mut s = Self::zero_like(&c, order);
        s.coeffs[0] = c;
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| self.coeffs[0].zero_like())
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(order + 1, self.coeffs[0].zero_like());
        Series { coeffs: c }
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.order().min(o.order());
        Series {
            coeffs: (0..=n)
                .map(|k| self.coeffs[k].add_r(&o.coeffs[k]))
                .collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.order().min(o.order());
        Series {
            coeffs: (0..=n)
                .map(|k| self.coeffs[k].sub_r(&o.coeffs[k]))
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Series {
            coeffs: self.coeffs.iter().map(|c| c.neg_r()).collect(),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        Series {
            coeffs: self.coeffs.iter().map(|a| a.mul_r(c)).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.order().min(o.order());
        let mut out = vec![self.coeffs[0].zero_like(); n + 1];
        for i in 0..=n {
            if self.coeffs[i].is_zero_r() {
                continue;
            }
            for j in 0..=(n - i) {
                if o.coeffs[j].is_zero_r() {
                    continue;
                }
                out[i + j] = out[i + j].add_r(&self.coeffs[i].mul_r(&o.coeffs[j]));
            }
        }
        Series { coeffs: out }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Series::constant(self.coeffs[0].one_like(), self.order());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// `self(inner(y))`; `inner` must have zero constant term.
    pub fn compose(&self, inner: &Self) -> Self {
        assert!(inner.coeffs[0].is_zero_r(), "inner series must vanish at 0");
        let n = self.order().min(inner.order());
        let inner = inner.truncate(n);
        let mut acc = Series::constant(self.coeffs[n].clone(), n);
        for k in (0..n).rev() {
            acc = acc.mul(&inner);
            acc.coeffs[0] = acc.coeffs[0].add_r(&self.coeffs[k]);
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero_r())
    }

    /// Index of the first nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero_r())
    }
}

impl<T: Field> Series<T> {
    /// Multiplicative inverse; the constant term must be invertible.
    pub fn recip(&self) -> Result<Self, AlgError> {
        let inv0 = self.coeffs[0]
            .inv_r()
            .ok_or_else(|| AlgError::NotInvertible("zero constant term".into()))?;
        let n = self.order();
        let mut out = vec![inv0.clone()];
        for k in 1..=n {
            let mut s = self.coeffs[0].zero_like();
            for j in 1..=k {
                s = s.add_r(&self.coeffs[j].mul_r(&out[k - j]));
            }
            out.push(s.mul_r(&inv0).neg_r());
        }
        Ok(Series { coeffs: out })
    }
}

/// Compositional inverse: `t` with `s(t(y)) = y + O(y^(N+1))`.
pub fn series_compose_invert<T: Field>(s: &Series<T>) -> Result<Series<T>, AlgError> {
    let n = s.order();
    if n == 0 {
        return Err(AlgError::NotInvertible("order 0 series".into()));
    }
    if !s.coeffs[0].is_zero_r() {
        return Err(AlgError::NotInvertible("nonzero constant term".into()));
    }
    let inv1 = s.coeffs[1]
        .inv_r()
        .ok_or_else(|| AlgError::NotInvertible("zero linear term".into()))?;
    let mut t = Series::zero_like(&s.coeffs[0], n);
    t.coeffs[1] = inv1.clone();
    for k in 2..=n {
        let c = s.truncate(k).compose(&t.truncate(k)).coeffs[k].clone();
        t.coeffs[k] = c.mul_r(&inv1).neg_r();
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::{int, Rational};

    fn s(v: &[i64]) -> Series<Rational> {
        Series::new(v.iter().map(|&x| int(x)).collect())
    }

    #[test]
    fn inverse_of_y_plus_y2() {
        let t = series_compose_invert(&s(&[0, 1, 1, 0, 0])).unwrap();
        assert_eq!(t, s(&[0, 1, -1, 2, -5]));
    }

    #[test]
    fn inverse_of_scaled_identity() {
        let t = series_compose_invert(&s(&[0, 4, 0, 0])).unwrap();
        assert_eq!(t.coeffs[1], crate::exactalg::rat(1, 4));
        assert!(t.coeffs[2..].iter().all(|c| *c == int(0)));
    }

    #[test]
    fn non_invertible_inputs() {
        assert!(series_compose_invert(&s(&[1, 1, 0])).is_err());
        assert!(series_compose_invert(&s(&[0, 0, 1])).is_err());
    }

    #[test]
    fn reciprocal() {
        let r = s(&[1, -1, 0, 0]).recip().unwrap();
        assert_eq!(r, s(&[1, 1, 1, 1]));
    }
}
