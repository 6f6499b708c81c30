//! Displacement coefficients of a switching system around a monodromic
//! origin with linear part `(delta x - lambda y, lambda x + delta y)` in each
//! half.
//!
//! In polar coordinates each half gives `dr/dtheta = N(r, theta) / D(r, theta)`.
//! Writing `r = sum v_k(theta) rho^k` turns this into a triangular linear
//! system: `v_k' = (delta/lambda) v_k + F_k(theta, v_1..v_{k-1})`. Each `v_k` is
//! obtained by a single cumulative quadrature over Chebyshev panels, so no
//! time stepping is involved. The half maps are `U(rho) = r(pi)` from
//! `theta = 0` and `L(rho) = r(2 pi)` from `theta = pi`; the displacement is
//! `d(rho) = U(rho) - L^{-1}(rho) = sum V_k rho^k`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{Signed, Zero};

use crate::bigfloat::BigFloat;
use crate::exactalg::{series_compose_invert, MPoly, Rational, Ring, Series};
use crate::sysmodel::{Half, PlanarField, SwitchingSystem};

const GUARD_BITS: u32 = 32;
const MAX_PANELS: usize = 1 << 10;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LyapError {
    #[error("{0} half: field still contains parameters {1:?}")]
    Symbolic(Half, Vec<String>),
    #[error("{0} half: linear part is not of the form (d x - l y, l x + d y): {1}")]
    LinearPartShape(Half, String),
    #[error("{0} half: rotation speed must be positive, got {1}")]
    NonPositiveRotation(Half, String),
    #[error("integration did not reach the requested accuracy with {0} panels")]
    NoConvergence(usize),
    #[error("orbit does not turn monotonically around the origin near theta = {0}")]
    NotMonodromic(String),
    #[error("order must be at least 1")]
    ZeroOrder,
    #[error("linear system for the epsilon fit is singular")]
    SingularFit,
}

/// Chebyshev-Lobatto machinery on `[-1, 1]` for `n` nodes.
struct ChebOps {
    nodes: Vec<BigFloat>,
    /// `integral[j][i]`: weight of `f(x_i)` in `int_{-1}^{x_j} f`.
    integral: Vec<Vec<BigFloat>>,
    /// Rows giving the two highest Chebyshev coefficients.
    tail: [Vec<BigFloat>; 2],
}

fn cheb_ops(n: usize, prec: u32) -> Arc<ChebOps> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Arc<ChebOps>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&(n, prec)) {
        return v.clone();
    }
    let ops = Arc::new(build_cheb_ops(n, prec));
    cache.lock().unwrap().insert((n, prec), ops.clone());
    ops
}

fn build_cheb_ops(n: usize, prec: u32) -> ChebOps {
    let nm1 = n - 1;
    let pi = BigFloat::pi(prec);
    // cos(pi t / (n-1)) for t in 0..2(n-1)
    let period = 2 * nm1;
    let cos_tab: Vec<BigFloat> = (0..period)
        .map(|t| {
            let ang = &pi
                * &(&BigFloat::from_i64(t as i64, prec) / &BigFloat::from_i64(nm1 as i64, prec));
            ang.sin_cos().1
        })
        .collect();
    let cosn = |a: usize, b: usize| -> BigFloat { cos_tab[(a * b) % period].clone() };
    // Ascending nodes x_j = -cos(pi j/(n-1)); T_k(x_j) = (-1)^k cos(pi k j/(n-1)).
    let t_at = |k: usize, j: usize| -> BigFloat {
        let c = cosn(k, j);
        if k % 2 == 1 {
            -c
        } else {
            c
        }
    };
    let nodes: Vec<BigFloat> = (0..n).map(|j| -cosn(1, j)).collect();
    let zero = BigFloat::zero(prec);
    let two_over = &BigFloat::from_i64(2, prec) / &BigFloat::from_i64(nm1 as i64, prec);
    let half = BigFloat::from_f64(0.5, prec);
    // coef[k][i]: weight of f_i in the Chebyshev coefficient c_k
    let mut coef = vec![vec![zero.clone(); n]; n];
    for (k, row) in coef.iter_mut().enumerate() {
        for (i, slot) in row.iter_mut().enumerate() {
            let mut w = &two_over * &t_at(k, i);
            if i == 0 || i == nm1 {
                w = &w * &half;
            }
            if k == 0 || k == nm1 {
                w = &w * &half;
            }
            *slot = w;
        }
    }
    // Integration: b (length n+1) from c.
    let mut integral = vec![vec![zero.clone(); n]; n];
    for i in 0..n {
        let c: Vec<BigFloat> = (0..n).map(|k| coef[k][i].clone()).collect();
        let mut b = vec![zero.clone(); n + 1];
        b[1] = &b[1] + &c[0];
        if n > 1 {
            let q = &c[1] * &BigFloat::from_f64(0.25, prec);
            b[2] = &b[2] + &q;
            b[0] = &b[0] + &q;
        }
        for k in 2..n {
            let up = &c[k] / &BigFloat::from_i64(2 * (k as i64 + 1), prec);
            let dn = &c[k] / &BigFloat::from_i64(2 * (k as i64 - 1), prec);
            b[k + 1] = &b[k + 1] + &up;
            b[k - 1] = &b[k - 1] - &dn;
        }
        // value at x = -1
        let mut at_left = zero.clone();
        for (k, bk) in b.iter().enumerate() {
            at_left = if k % 2 == 0 {
                &at_left + bk
            } else {
                &at_left - bk
            };
        }
        for j in 0..n {
            let mut v = -&at_left;
            for (k, bk) in b.iter().enumerate() {
                v = &v + &(bk * &t_at(k, j));
            }
            integral[j][i] = v;
        }
    }
    let tail = [coef[nm1].clone(), coef[nm1 - 1].clone()];
    ChebOps {
        nodes,
        integral,
        tail,
    }
}

fn nodes_for(prec: u32) -> usize {
    (prec as usize / 4 + 16).max(24)
}

/// Homogeneous parts `P_d`, `Q_d` (d >= 2) as `(coef, i, j)` lists over BigFloat.
type HomParts = Vec<(usize, Vec<(BigFloat, u32, u32)>, Vec<(BigFloat, u32, u32)>)>;

struct PolarData {
    delta: BigFloat,
    lambda: BigFloat,
    parts: HomParts,
    max_deg: usize,
}

fn homogeneous_split(p: &MPoly, prec: u32) -> Vec<(usize, BigFloat, u32, u32)> {
    p.bivariate("x", "y")
        .into_iter()
        .map(|((i, j), c)| {
            let c = c.constant_value().expect("numeric polynomial");
            ((i + j) as usize, BigFloat::from_rational(&c, prec), i, j)
        })
        .collect()
}

fn linear_coeff(p: &MPoly, i: u32, j: u32) -> Rational {
    p.bivariate("x", "y")
        .get(&(i, j))
        .and_then(|c| c.constant_value())
        .unwrap_or_else(Rational::zero)
}

fn polar_data(field: &PlanarField, half: Half, prec: u32) -> Result<PolarData, LyapError> {
    let params = field.parameters();
    if !params.is_empty() {
        return Err(LyapError::Symbolic(half, params));
    }
    let (a, b) = (linear_coeff(&field.p, 1, 0), linear_coeff(&field.p, 0, 1));
    let (c, d) = (linear_coeff(&field.q, 1, 0), linear_coeff(&field.q, 0, 1));
    let c0p = linear_coeff(&field.p, 0, 0);
    let c0q = linear_coeff(&field.q, 0, 0);
    if a != d || b != -c.clone() || !c0p.is_zero() || !c0q.is_zero() {
        return Err(LyapError::LinearPartShape(
            half,
            format!("x' = {a} x + {b} y + ..., y' = {c} x + {d} y + ..."),
        ));
    }
    if !c.is_positive() {
        return Err(LyapError::NonPositiveRotation(half, c.to_string()));
    }
    let sp = homogeneous_split(&field.p, prec);
    let sq = homogeneous_split(&field.q, prec);
    let max_deg = sp.iter().chain(sq.iter()).map(|t| t.0).max().unwrap_or(1);
    let mut parts: HomParts = Vec::new();
    for deg in 2..=max_deg {
        let pp: Vec<_> = sp
            .iter()
            .filter(|t| t.0 == deg)
            .map(|t| (t.1.clone(), t.2, t.3))
            .collect();
        let qq: Vec<_> = sq
            .iter()
            .filter(|t| t.0 == deg)
            .map(|t| (t.1.clone(), t.2, t.3))
            .collect();
        if !pp.is_empty() || !qq.is_empty() {
            parts.push((deg, pp, qq));
        }
    }
    Ok(PolarData {
        delta: BigFloat::from_rational(&a, prec),
        lambda: BigFloat::from_rational(&c, prec),
        parts,
        max_deg,
    })
}

/// Coefficients at `theta` of `r^d` in the numerator (`A_d`) and of
/// `r^(d-1)` in the denominator (`B_d`).
fn angular_coeffs(pd: &PolarData, c: &BigFloat, s: &BigFloat) -> Vec<(usize, BigFloat, BigFloat)> {
    let prec = c.prec();
    let mut cp = vec![BigFloat::one(prec)];
    let mut sp = vec![BigFloat::one(prec)];
    for k in 1..=pd.max_deg {
        cp.push(&cp[k - 1] * c);
        sp.push(&sp[k - 1] * s);
    }
    let ev = |terms: &Vec<(BigFloat, u32, u32)>| -> BigFloat {
        let mut acc = BigFloat::zero(prec);
        for (k, i, j) in terms {
            acc = &acc + &(&(k * &cp[*i as usize]) * &sp[*j as usize]);
        }
        acc
    };
    pd.parts
        .iter()
        .map(|(deg, pp, qq)| {
            let pv = ev(pp);
            let qv = ev(qq);
            let a = &(c * &pv) + &(s * &qv);
            let b = &(c * &qv) - &(s * &pv);
            (*deg, a, b)
        })
        .collect()
}

/// Per-node state for the order-by-order recursion.
struct NodeState {
    ab: Vec<(usize, BigFloat, BigFloat)>,
    /// `pow[d][j]`: coefficient of `rho^j` in `r^d`, `d = 1..=max_deg`.
    pow: Vec<Vec<BigFloat>>,
    /// Coefficients of `1/D`.
    e: Vec<BigFloat>,
    /// Coefficients of `N`.
    num: Vec<BigFloat>,
}

impl NodeState {
    fn new(pd: &PolarData, c: &BigFloat, s: &BigFloat, order: usize) -> Self {
        let prec = c.prec();
        let z = BigFloat::zero(prec);
        let ab = angular_coeffs(pd, c, s);
        let mut e = vec![z.clone(); order + 1];
        e[0] = &BigFloat::one(prec) / &pd.lambda;
        NodeState {
            ab,
            pow: vec![vec![z.clone(); order + 1]; pd.max_deg + 1],
            e,
            num: vec![z; order + 1],
        }
    }

    /// Records `v_j`, then completes every coefficient of index `j` that
    /// depends on `v_1..v_j` only.
    fn push(&mut self, pd: &PolarData, j: usize, vj: &BigFloat) {
        self.pow[1][j] = vj.clone();
        // r^d at index j+1 needs pow[d-1] up to j and v up to j
        let prec = vj.prec();
        let order = self.e.len() - 1;
        let nxt = j + 1;
        if nxt <= order {
            for d in 2..=pd.max_deg {
                let mut acc = BigFloat::zero(prec);
                for i in 1..nxt {
                    let a = &self.pow[1][i];
                    let b = &self.pow[d - 1][nxt - i];
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = &acc + &(a * b);
                }
                self.pow[d][nxt] = acc;
            }
        }
        // N_j = delta v_j + sum A_d pow[d][j]
        let mut nj = &pd.delta * vj;
        for (d, a, _) in &self.ab {
            nj = &nj + &(a * &self.pow[*d][j]);
        }
        self.num[j] = nj;
        // E_j = -(1/lambda) sum_{i=1..j} Dn_i E_{j-i}, Dn_i = sum B_d pow[d-1][i]
        let mut acc = BigFloat::zero(prec);
        for i in 1..=j {
            let mut dn = BigFloat::zero(prec);
            for (d, _, b) in &self.ab {
                dn = &dn + &(b * &self.pow[d - 1][i]);
            }
            acc = &acc + &(&dn * &self.e[j - i]);
        }
        self.e[j] = -(&acc / &pd.lambda);
    }

    /// `F_k`: coefficient `k` of `N/D` without the `(delta/lambda) v_k` part.
    fn forcing(&self, k: usize) -> BigFloat {
        let prec = self.e[0].prec();
        let mut own = BigFloat::zero(prec);
        for (d, a, _) in &self.ab {
            own = &own + &(a * &self.pow[*d][k]);
        }
        let mut acc = &own * &self.e[0];
        for i in 1..k {
            acc = &acc + &(&self.num[i] * &self.e[k - i]);
        }
        acc
    }
}

/// Taylor coefficients of a half return map with error bounds.
#[derive(Clone, Debug)]
pub struct HalfMapSeries {
    pub half: Half,
    /// `coeffs[k-1]` multiplies `rho^k`.
    pub coeffs: Vec<BigFloat>,
    pub errors: Vec<BigFloat>,
    pub panels: usize,
}

/// Coefficients `v_1..v_order` of the map from `theta0` to `theta0 + pi`.
pub fn half_return_map(
    field: &PlanarField,
    half: Half,
    order: usize,
    prec: u32,
) -> Result<HalfMapSeries, LyapError> {
    if order == 0 {
        return Err(LyapError::ZeroOrder);
    }
    let w = prec + GUARD_BITS;
    let pd = polar_data(field, half, w)?;
    let theta0 = match half {
        Half::Upper => BigFloat::zero(w),
        Half::Lower => BigFloat::pi(w),
    };
    let n = nodes_for(prec);
    let ops = cheb_ops(n, w);
    let mut panels = 2usize;
    loop {
        if let Some((coeffs, errors)) = try_panels(&pd, &theta0, order, &ops, panels, prec)? {
            return Ok(HalfMapSeries {
                half,
                coeffs: coeffs.iter().map(|c| c.with_prec(prec)).collect(),
                errors,
                panels,
            });
        }
        panels *= 2;
        if panels > MAX_PANELS {
            return Err(LyapError::NoConvergence(MAX_PANELS));
        }
    }
}

type PanelResult = Option<(Vec<BigFloat>, Vec<BigFloat>)>;

fn try_panels(
    pd: &PolarData,
    theta0: &BigFloat,
    order: usize,
    ops: &ChebOps,
    panels: usize,
    prec: u32,
) -> Result<PanelResult, LyapError> {
    let w = theta0.prec();
    let n = ops.nodes.len();
    let pi = BigFloat::pi(w);
    let width = &pi / &BigFloat::from_i64(panels as i64, w);
    let half_width = width.mul_2exp(-1);
    let rate = &pd.delta / &pd.lambda;
    let growing = !rate.is_zero();
    let target = BigFloat::one(w).mul_2exp(-(prec as i64) - 4);
    let mut err = vec![BigFloat::zero(w); order];
    let mut scale = vec![BigFloat::zero(w); order];
    // w_k at the current panel start
    let mut start = vec![BigFloat::zero(w); order + 1];
    let mut end_v = vec![BigFloat::zero(w); order + 1];
    for p in 0..panels {
        let a = theta0 + &(&width * &BigFloat::from_i64(p as i64, w));
        let mut states = Vec::with_capacity(n);
        let mut growth = Vec::with_capacity(n);
        for x in &ops.nodes {
            let local = &half_width * &(x + &BigFloat::one(w));
            let th = &a + &local;
            let (s, c) = th.sin_cos();
            states.push(NodeState::new(pd, &c, &s, order));
            let g = if growing {
                (&rate * &(&th - theta0)).exp()
            } else {
                BigFloat::one(w)
            };
            growth.push(g);
        }
        // v_1 = exp(rate (theta - theta0))
        for (st, g) in states.iter_mut().zip(&growth) {
            st.push(pd, 1, g);
        }
        end_v[1] = growth[n - 1].clone();
        for k in 2..=order {
            let integrand: Vec<BigFloat> = states
                .iter()
                .zip(&growth)
                .map(|(st, g)| {
                    let f = st.forcing(k);
                    if growing {
                        &f / g
                    } else {
                        f
                    }
                })
                .collect();
            let mut mag = BigFloat::zero(w);
            for f in &integrand {
                let af = f.abs();
                if af > mag {
                    mag = af;
                }
            }
            let mut tail = BigFloat::zero(w);
            for row in &ops.tail {
                let mut t = BigFloat::zero(w);
                for (wi, f) in row.iter().zip(&integrand) {
                    t = &t + &(wi * f);
                }
                tail = &tail + &t.abs();
            }
            let tail = &tail * &width;
            let mag = &mag * &width;
            if tail > &target * &mag {
                return Ok(None);
            }
            err[k - 1] = &err[k - 1] + &tail;
            scale[k - 1] = &scale[k - 1] + &mag;
            for j in 0..n {
                let mut acc = BigFloat::zero(w);
                for (wi, f) in ops.integral[j].iter().zip(&integrand) {
                    acc = &acc + &(wi * f);
                }
                let wk = &start[k] + &(&acc * &half_width);
                let vk = if growing {
                    &wk * &growth[j]
                } else {
                    wk.clone()
                };
                states[j].push(pd, k, &vk);
                if j == n - 1 {
                    end_v[k] = vk;
                    start[k] = wk;
                }
            }
        }
    }
    let coeffs: Vec<BigFloat> = end_v[1..].to_vec();
    let floor_unit = BigFloat::one(w).mul_2exp(-(prec as i64) + 6);
    let errors: Vec<BigFloat> = (0..order)
        .map(|k| {
            let g = growth_bound(&rate, w);
            let base = &(&err[k] * &BigFloat::from_i64(10, w))
                + &(&floor_unit * &(&scale[k] + &coeffs[k].abs()));
            (&base * &g).with_prec(prec)
        })
        .collect();
    Ok(Some((coeffs, errors)))
}

fn growth_bound(rate: &BigFloat, w: u32) -> BigFloat {
    if rate.is_zero() {
        BigFloat::one(w)
    } else {
        (&rate.abs() * &BigFloat::pi(w)).exp()
    }
}

/// Displacement coefficients with per-coefficient error estimates.
#[derive(Clone, Debug)]
pub struct LyapunovReport {
    pub order: usize,
    /// `v[k-1] = V_k`.
    pub v: Vec<BigFloat>,
    pub eps: Option<Rational>,
    pub precision_bits: u32,
    pub tolerance: Vec<BigFloat>,
}

impl LyapunovReport {
    pub fn max_abs(&self) -> BigFloat {
        let mut m = BigFloat::zero(self.precision_bits);
        for v in &self.v {
            if v.abs() > m {
                m = v.abs();
            }
        }
        m
    }

    /// `V_k` (1-based).
    pub fn get(&self, k: usize) -> &BigFloat {
        &self.v[k - 1]
    }
}

pub fn displacement_coeffs(
    sys: &SwitchingSystem,
    order: usize,
    prec: u32,
) -> Result<LyapunovReport, LyapError> {
    let up = half_return_map(&sys.upper, Half::Upper, order, prec)?;
    let lo = half_return_map(&sys.lower, Half::Lower, order, prec)?;
    let w = prec + GUARD_BITS;
    let to_series = |c: &[BigFloat]| {
        let mut v = vec![BigFloat::zero(w)];
        v.extend(c.iter().map(|x| x.with_prec(w)));
        Series::new(v)
    };
    let u = to_series(&up.coeffs);
    let l = to_series(&lo.coeffs);
    let linv = series_compose_invert(&l)
        .map_err(|_| LyapError::NonPositiveRotation(Half::Lower, "0".into()))?;
    let d = u.sub(&linv);
    let mut amp = BigFloat::one(w);
    for c in l.coeffs.iter().chain(linv.coeffs.iter()) {
        if c.abs() > amp {
            amp = c.abs();
        }
    }
    let amp = &amp + &BigFloat::one(w);
    let mut tolerance = Vec::with_capacity(order);
    let mut lo_acc = BigFloat::zero(w);
    let floor_unit = BigFloat::one(w).mul_2exp(-(prec as i64) + 6);
    for k in 1..=order {
        lo_acc = &lo_acc + &lo.errors[k - 1].with_prec(w);
        let mut t = &(&up.errors[k - 1].with_prec(w) + &lo_acc) * &amp.pow_u(k as u32);
        t = &t * &BigFloat::from_i64(16, w);
        t = &t + &(&floor_unit * &(&u.coeffs[k].abs() + &linv.coeffs[k].abs()));
        tolerance.push(t.with_prec(prec));
    }
    Ok(LyapunovReport {
        order,
        v: d.coeffs[1..].iter().map(|c| c.with_prec(prec)).collect(),
        eps: None,
        precision_bits: prec,
        tolerance,
    })
}

/// Fits `V_k(eps) = sum_{j<=degree} c_{k,j} eps^j` through `degree + 1`
/// samples. Returns `coeffs[k-1][j]`.
pub fn epsilon_expansion<F>(
    family: F,
    eps_samples: &[Rational],
    order: usize,
    prec: u32,
) -> Result<Vec<Vec<BigFloat>>, Box<dyn std::error::Error>>
where
    F: Fn(&Rational) -> Result<SwitchingSystem, Box<dyn std::error::Error>>,
{
    let m = eps_samples.len();
    let mut values = Vec::with_capacity(m);
    for e in eps_samples {
        let sys = family(e)?;
        values.push(displacement_coeffs(&sys, order, prec)?.v);
    }
    let w = prec + GUARD_BITS;
    let mat: Vec<Vec<BigFloat>> = eps_samples
        .iter()
        .map(|e| {
            let ef = BigFloat::from_rational(e, w);
            (0..m).map(|j| ef.pow_u(j as u32)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(order);
    for k in 0..order {
        let rhs: Vec<BigFloat> = values.iter().map(|v| v[k].with_prec(w)).collect();
        let sol = solve_linear(mat.clone(), rhs).ok_or(LyapError::SingularFit)?;
        out.push(sol.into_iter().map(|c| c.with_prec(prec)).collect());
    }
    Ok(out)
}

/// Gaussian elimination with partial pivoting.
pub fn solve_linear(mut a: Vec<Vec<BigFloat>>, mut b: Vec<BigFloat>) -> Option<Vec<BigFloat>> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())?;
        if a[piv][k].is_zero() {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = &a[i][k] / &a[k][k];
            for j in k..n {
                let t = &f * &a[k][j];
                a[i][j] = &a[i][j] - &t;
            }
            let t = &f * &b[k];
            b[i] = &b[i] - &t;
        }
    }
    let mut x = vec![b[0].zero_like(); n];
    for k in (0..n).rev() {
        let mut s = b[k].clone();
        for j in k + 1..n {
            s = &s - &(&a[k][j] * &x[j]);
        }
        x[k] = &s / &a[k][k];
    }
    Some(x)
}

/// Scalar polar map of the full field from angle `theta_from` to `theta_to`
/// starting at radius `rho`, integrated directly (no series). Works for any
/// field that turns counterclockwise around the origin along the way.
pub fn polar_transition(
    field: &PlanarField,
    rho: &BigFloat,
    theta_from: &BigFloat,
    theta_to: &BigFloat,
    prec: u32,
) -> Result<BigFloat, LyapError> {
    let params = field.parameters();
    if !params.is_empty() {
        return Err(LyapError::Symbolic(Half::Upper, params));
    }
    let w = prec + GUARD_BITS;
    let terms: Vec<(BigFloat, u32, u32, bool)> = field
        .p
        .bivariate("x", "y")
        .into_iter()
        .map(|((i, j), c)| {
            (
                BigFloat::from_rational(&c.constant_value().unwrap(), w),
                i,
                j,
                true,
            )
        })
        .chain(field.q.bivariate("x", "y").into_iter().map(|((i, j), c)| {
            (
                BigFloat::from_rational(&c.constant_value().unwrap(), w),
                i,
                j,
                false,
            )
        }))
        .collect();
    let max_deg = terms
        .iter()
        .map(|t| (t.1 + t.2) as usize)
        .max()
        .unwrap_or(1);
    let rhs = |c: &BigFloat, s: &BigFloat, r: &BigFloat| -> Result<BigFloat, LyapError> {
        let x = r * c;
        let y = r * s;
        let mut xp = vec![BigFloat::one(w)];
        let mut yp = vec![BigFloat::one(w)];
        for k in 1..=max_deg {
            xp.push(&xp[k - 1] * &x);
            yp.push(&yp[k - 1] * &y);
        }
        let mut pv = BigFloat::zero(w);
        let mut qv = BigFloat::zero(w);
        for (k, i, j, is_p) in &terms {
            let t = &(k * &xp[*i as usize]) * &yp[*j as usize];
            if *is_p {
                pv = &pv + &t;
            } else {
                qv = &qv + &t;
            }
        }
        let den = &(c * &qv) - &(s * &pv);
        if den.signum() <= 0 {
            return Err(LyapError::NotMonodromic(c.to_sci_string(8)));
        }
        Ok(&(r * &(&(c * &pv) + &(s * &qv))) / &den)
    };
    let n = nodes_for(prec).min(48);
    let ops = cheb_ops(n, w);
    let span = theta_to - theta_from;
    let tol = BigFloat::one(w).mul_2exp(-(prec as i64) - 8);
    let mut panels = 8usize;
    'outer: loop {
        let width = &span / &BigFloat::from_i64(panels as i64, w);
        let hw = width.mul_2exp(-1);
        let mut r0 = rho.with_prec(w);
        for p in 0..panels {
            let a = &theta_from.with_prec(w) + &(&width * &BigFloat::from_i64(p as i64, w));
            let trig: Vec<(BigFloat, BigFloat)> = ops
                .nodes
                .iter()
                .map(|x| {
                    let th = &a + &(&hw * &(x + &BigFloat::one(w)));
                    let (s, c) = th.sin_cos();
                    (c, s)
                })
                .collect();
            let mut r = vec![r0.clone(); n];
            let mut converged = false;
            for _ in 0..400 {
                let f: Vec<BigFloat> = trig
                    .iter()
                    .zip(&r)
                    .map(|((c, s), ri)| rhs(c, s, ri))
                    .collect::<Result<_, _>>()?;
                let mut change = BigFloat::zero(w);
                let mut next = Vec::with_capacity(n);
                for j in 0..n {
                    let mut acc = BigFloat::zero(w);
                    for (wi, fi) in ops.integral[j].iter().zip(&f) {
                        acc = &acc + &(wi * fi);
                    }
                    let v = &r0 + &(&acc * &hw);
                    let d = (&v - &r[j]).abs();
                    if d > change {
                        change = d;
                    }
                    next.push(v);
                }
                r = next;
                if change <= &tol * &r0.abs() {
                    converged = true;
                    break;
                }
            }
            if !converged {
                panels *= 2;
                if panels > MAX_PANELS {
                    return Err(LyapError::NoConvergence(MAX_PANELS));
                }
                continue 'outer;
            }
            r0 = r[n - 1].clone();
        }
        return Ok(r0.with_prec(prec));
    }
}
