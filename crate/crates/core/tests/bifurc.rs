use std::error::Error;

use nilcyc_core::bifurc::{
    direct_displacement, independence_jacobian, pseudo_hopf_cycle, reduced_family, scaled_family,
    selected_constants, sliding_segment, unfold_cycles, BifurcError, Endpoint, ReducedParams,
    Regime, SlidingResult, Stage, UnfoldConfig,
};
use nilcyc_core::bigfloat::BigFloat;
use nilcyc_core::centers::ConditionId;
use nilcyc_core::exactalg::{int, rat, MPoly, Rational};
use nilcyc_core::lyapunov::displacement_coeffs;
use nilcyc_core::sysmodel::{
    hamiltonian_of, unfolded_system, Perturbation, PlanarField, SwitchingSystem, Z2CubicParams,
};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn poly(s: &str) -> MPoly {
    s.parse().unwrap()
}

fn condition_six() -> ReducedParams {
    ReducedParams {
        a02: int(-4),
        a21: int(-1),
        b03: int(-1),
        a03: int(1),
        ..Default::default()
    }
}

fn q_on_axis(f: &PlanarField) -> MPoly {
    f.q.subs("y", &MPoly::zero())
}

#[test]
fn sliding_endpoints_are_exact() {
    let eps = rat(1, 10);
    for (b, regime) in [
        (rat(1, 100), Regime::Sliding),
        (rat(-1, 100), Regime::Escaping),
        (rat(1, 10_000), Regime::Sliding),
        (rat(-1, 10_000), Regime::Escaping),
    ] {
        let sys = reduced_family(&condition_six(), &eps, &rat(1, 10), &b);
        let SlidingResult::Segment(seg) = sliding_segment(&sys, &rat(1, 2)).unwrap() else {
            panic!("b = {b}")
        };
        let mut ends = [seg.endpoints.0.clone(), seg.endpoints.1.clone()];
        ends.sort_by_key(|e| e.approx());
        let mut want = [
            Endpoint::Exact(Rational::zero()),
            Endpoint::Exact(-b.clone()),
        ];
        want.sort_by_key(|e| e.approx());
        assert_eq!(ends, want, "b = {b}");
        assert_eq!(seg.regime, regime, "b = {b}");
    }
}

#[test]
fn lower_axis_polynomial_factors() {
    let (eps, b) = (rat(1, 7), rat(3, 100));
    let sys = reduced_family(&condition_six(), &eps, &Rational::zero(), &b);
    let e3 = MPoly::constant(eps.pow(3));
    let x = MPoly::var("x");
    let one = MPoly::constant(int(1));
    let two = MPoly::constant(int(2));
    let bx = &MPoly::constant(b.clone()) + &x;
    let want = (&(&bx * &(&one + &(&e3 * &x))) * &(&two + &(&e3 * &x))).scale(&rat(1, 2));
    assert_eq!(q_on_axis(&sys.lower), want);
}

#[test]
fn degenerate_and_empty_segments() {
    let sys = reduced_family(
        &condition_six(),
        &rat(1, 10),
        &rat(1, 10),
        &Rational::zero(),
    );
    assert_eq!(
        sliding_segment(&sys, &rat(1, 2)).unwrap(),
        SlidingResult::Point(Endpoint::Exact(Rational::zero()))
    );
    let rot = PlanarField::new(poly("-y"), poly("x"));
    let same = SwitchingSystem {
        upper: rot.clone(),
        lower: rot.clone(),
    };
    assert_eq!(
        sliding_segment(&same, &rat(1, 2)).unwrap(),
        SlidingResult::Point(Endpoint::Exact(Rational::zero()))
    );
    let far = SwitchingSystem {
        upper: rot.clone(),
        lower: PlanarField::new(poly("-y"), poly("x + 1")),
    };
    assert_eq!(
        sliding_segment(&far, &rat(1, 2)).unwrap(),
        SlidingResult::Empty
    );
    let flat = SwitchingSystem {
        upper: rot,
        lower: PlanarField::new(poly("-y"), poly("y")),
    };
    assert!(matches!(
        sliding_segment(&flat, &rat(1, 2)),
        Err(BifurcError::ManifoldDegenerate)
    ));
}

#[test]
fn irrational_endpoint_is_isolated() {
    // roots of x^2 + x - 1/4 are (-1 +- sqrt 2)/2
    let sys = SwitchingSystem {
        upper: PlanarField::new(poly("-y"), poly("x")),
        lower: PlanarField::new(poly("-y"), poly("x^2 + x - 1/4")),
    };
    let SlidingResult::Segment(seg) = sliding_segment(&sys, &rat(1, 2)).unwrap() else {
        panic!()
    };
    assert_eq!(seg.endpoints.0, Endpoint::Exact(Rational::zero()));
    let Endpoint::Interval(a, b) = &seg.endpoints.1 else {
        panic!("{:?}", seg.endpoints.1)
    };
    let g = |x: &Rational| poly("x^2 + x - 1/4").eval(&[("x", x.clone())]).unwrap();
    assert!(g(a).is_negative() && g(b).is_positive());
    assert!(b - a < rat(1, 1_000_000_000_000));
    assert_eq!(seg.regime, Regime::Escaping);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn segment_invariants(bn in -50i64..50, bd in 100i64..1000, en in 1i64..4) {
        prop_assume!(bn != 0);
        let b = rat(bn, bd);
        let eps = rat(1, 4 * en);
        let sys = reduced_family(&condition_six(), &eps, &Rational::zero(), &b);
        let SlidingResult::Segment(seg) = sliding_segment(&sys, &rat(1, 1)).unwrap() else {
            return Err(TestCaseError::fail("no segment"));
        };
        let gu = q_on_axis(&sys.upper);
        let gl = q_on_axis(&sys.lower);
        let at = |p: &MPoly, x: &Rational| p.eval(&[("x", x.clone())]).unwrap();
        for e in [&seg.endpoints.0, &seg.endpoints.1] {
            let Endpoint::Exact(x) = e else { return Err(TestCaseError::fail("inexact")) };
            prop_assert!(at(&gu, x).is_zero() || at(&gl, x).is_zero());
        }
        let (l, r) = (seg.endpoints.0.approx(), seg.endpoints.1.approx());
        for k in 1..8 {
            let x = &l + &(&(&r - &l) * &rat(k, 8));
            let (u, d) = (at(&gu, &x), at(&gl, &x));
            prop_assert!((&u * &d).is_negative());
            match seg.regime {
                Regime::Sliding => prop_assert!(u.is_negative()),
                Regime::Escaping => prop_assert!(u.is_positive()),
            }
        }
    }
}

/// The eps-free form against a hand transcription with `delta1 = b = 0`.
#[test]
fn scaled_family_in_closed_form() {
    let caps = ReducedParams {
        a21: rat(4, 3),
        a02: rat(2, 3),
        a03: rat(1, 7),
        b03: rat(1, 17),
        p212: rat(-2, 1),
        q022: rat(1, 5),
        q032: rat(-1, 2),
        q212: rat(6, 5),
    };
    let eps = rat(1, 9);
    let sys = scaled_family(&caps, &eps, &Rational::zero(), &Rational::zero());
    let upper_p = "-y + e^3*(2*(A21 + P212)*x*y + (A02 - 3*B03)*y^2) + e^6*((A21 + P212)*x^2*y - 3*B03*x*y^2 + A03*y^3)";
    let upper_q = "x + e^3*(3/2*x^2 + 2*Q212*x*y - (A21 - Q022)*y^2) \
                   + e^6*(1/2*x^3 + Q212*x^2*y - A21*x*y^2 + (B03 + Q032)*y^3)";
    let lower_p = "-y + e^3*(2*(A21 + P212)*x*y - (A02 + 3*B03)*y^2) + e^6*((A21 + P212)*x^2*y - 3*B03*x*y^2 + A03*y^3)";
    let lower_q = "x + e^3*(3/2*x^2 + 2*Q212*x*y - (A21 + Q022)*y^2) \
                   + e^6*(1/2*x^3 + Q212*x^2*y - A21*x*y^2 + (B03 + Q032)*y^3)";
    let vals = [
        ("A21", caps.a21.clone()),
        ("A02", caps.a02.clone()),
        ("A03", caps.a03.clone()),
        ("B03", caps.b03.clone()),
        ("P212", caps.p212.clone()),
        ("Q022", caps.q022.clone()),
        ("Q032", caps.q032.clone()),
        ("Q212", caps.q212.clone()),
        ("e", eps),
    ];
    let f = |s: &str| poly(s).subs_rational(&vals);
    assert_eq!(sys.upper.p, f(upper_p));
    assert_eq!(sys.upper.q, f(upper_q));
    assert_eq!(sys.lower.p, f(lower_p));
    assert_eq!(sys.lower.q, f(lower_q));
}

#[test]
fn reduced_family_is_hamiltonian_without_trace() {
    let sys = reduced_family(
        &condition_six(),
        &rat(1, 10),
        &Rational::zero(),
        &Rational::zero(),
    );
    let hu = hamiltonian_of(&sys.upper).unwrap();
    let hl = hamiltonian_of(&sys.lower).unwrap();
    let y0 = MPoly::zero();
    assert_eq!(hu.subs("y", &y0), hl.subs("y", &y0));
    let r = displacement_coeffs(&sys, 6, 128).unwrap();
    assert!(r.max_abs().to_f64() < 1e-30);
}

type BoxErr = Box<dyn Error + Send + Sync>;

#[test]
fn toy_jacobian_closed_form() {
    let prec = 256;
    let eps = rat(1, 10);
    let e3 = BigFloat::from_rational(&eps.pow(3), prec);
    let pi = BigFloat::pi(prec);
    let vmap = |v: &[Rational]| -> Result<Vec<BigFloat>, BoxErr> {
        let d = BigFloat::from_rational(&v[0], prec);
        let q = BigFloat::from_rational(&v[1], prec);
        Ok(vec![
            &(&pi * &BigFloat::from_i64(2, prec)) * &d,
            &(&BigFloat::from_rational(&rat(8, 3), prec) * &e3) * &q,
        ])
    };
    let rep =
        independence_jacobian(vmap, &[rat(1, 3), rat(-2, 5)], &rat(1, 1 << 20), prec).unwrap();
    let want = &(&(&pi * &BigFloat::from_i64(16, prec)) / &BigFloat::from_i64(3, prec)) * &e3;
    let err = (&rep.determinant - &want).abs();
    assert!(
        err <= &rep.error_estimate + &want.abs().mul_2exp(-200),
        "{}",
        err.to_sci_string(4)
    );
    assert!(!rep.inconclusive);

    let flat = |v: &[Rational]| -> Result<Vec<BigFloat>, BoxErr> {
        Ok(vec![
            BigFloat::from_rational(&v[0], prec),
            BigFloat::from_i64(7, prec),
        ])
    };
    let rep =
        independence_jacobian(flat, &[rat(1, 3), rat(-2, 5)], &rat(1, 1 << 20), prec).unwrap();
    assert!(rep.determinant.is_zero());
    assert!(rep.inconclusive);
}

/// `V1 = e^(2 pi delta) - 1` and `V2 = (8/3) eps b02` at the linear center:
/// the Jacobian in `(delta, b02)` is triangular with determinant
/// `2 pi (8/3) eps`.
#[test]
fn jacobian_of_first_two_constants() {
    let prec = 192;
    let eps = rat(1, 10);
    let center = Z2CubicParams::from_ratios(&[("a21", -1, 1), ("a03", -1, 1)]);
    let fam = |v: &[Rational]| {
        let mut p = center.clone();
        p.b02 = v[1].clone();
        unfolded_system(&p, &Perturbation::default(), &eps, &v[0]).unwrap()
    };
    let vmap = |v: &[Rational]| selected_constants(&fam, v, &[1, 2], prec);
    let rep = independence_jacobian(
        vmap,
        &[Rational::zero(), Rational::zero()],
        &rat(1, 1 << 24),
        prec,
    )
    .unwrap();
    let want = 2.0 * std::f64::consts::PI * 8.0 / 3.0 * 0.1;
    assert!(
        (rep.determinant.to_f64() - want).abs() < 1e-9 * want,
        "{}",
        rep.determinant.to_f64()
    );
    assert!(!rep.inconclusive);
}

#[test]
fn direct_displacement_matches_series() {
    let prec = 128;
    let sys = reduced_family(
        &condition_six(),
        &rat(1, 10),
        &rat(1, 100),
        &Rational::zero(),
    );
    let r = displacement_coeffs(&sys, 6, prec).unwrap();
    let rho = BigFloat::from_rational(&rat(1, 10_000), prec);
    let d = direct_displacement(&sys, &rho, prec).unwrap();
    let series =
        r.v.iter()
            .rev()
            .fold(BigFloat::zero(prec), |acc, c| &(&acc + c) * &rho);
    assert!((&d - &series).abs().to_f64() < 1e-14 * d.abs().to_f64());
}

#[test]
fn no_pseudo_hopf_cycle_without_constant_or_with_wrong_sign() {
    let p = condition_six();
    let fam = |b: &Rational| reduced_family(&p, &rat(1, 10), &rat(1, 10), b);
    let s = pseudo_hopf_cycle(fam, &Rational::zero(), &rat(1, 4), 128).unwrap();
    assert!(s.cycle.is_none());
    // same stability sign for the focus and the segment: no crossing cycle
    let s = pseudo_hopf_cycle(fam, &rat(-1, 1000), &rat(1, 50), 128).unwrap();
    assert!(s.cycle.is_none());
    assert!(s.samples.iter().all(|(_, d)| d.signum() > 0));
}

fn stage(v: &[(&str, Rational)]) -> Stage {
    Stage {
        increments: v.iter().map(|(n, r)| (n.to_string(), r.clone())).collect(),
    }
}

fn center_two() -> Z2CubicParams {
    Z2CubicParams::from_ratios(&[("a21", -1, 1), ("a03", -1, 1)])
}

fn unfold_cfg() -> UnfoldConfig {
    UnfoldConfig {
        eps: rat(1, 10),
        order: 6,
        precision: 128,
        rho_max: rat(1, 4),
    }
}

#[test]
fn empty_schedule_has_no_brackets() {
    let c = unfold_cycles(&center_two(), ConditionId::II, &[], &unfold_cfg()).unwrap();
    assert_eq!(c.count, 0);
    assert!(c.stages.is_empty());
}

#[test]
fn two_stage_schedule_gives_one_bracket() {
    // V3 from b03, then V2 of opposite sign from b02
    let sched = [
        stage(&[("b03", rat(-1, 10))]),
        stage(&[("b02", rat(1, 100_000))]),
    ];
    let c = unfold_cycles(&center_two(), ConditionId::II, &sched, &unfold_cfg()).unwrap();
    assert_eq!(c.stages[0].brackets, 0);
    assert_eq!(c.count, 1);
    assert!(c.brackets[0].stable);
    // root of V2 + V3 rho = 0 with V2 = (8/3) eps b02, V3 = (3 pi / 4) eps^3 b03
    let want = (8.0 / 3.0 * 1e-5) / (3.0 * std::f64::consts::PI / 4.0 * 1e-2 * 0.1);
    let lo = c.brackets[0].lo_value.to_f64();
    assert!((lo - want).abs() < 0.05 * want, "{lo} vs {want}");
}

#[test]
fn unfold_preconditions() {
    let bad = unfold_cycles(
        &Z2CubicParams::default(),
        ConditionId::II,
        &[],
        &unfold_cfg(),
    );
    assert!(matches!(bad, Err(BifurcError::Center(_))));
    let unknown = unfold_cycles(
        &center_two(),
        ConditionId::II,
        &[stage(&[("zz", rat(1, 2))])],
        &unfold_cfg(),
    );
    assert!(matches!(unknown, Err(BifurcError::UnknownParameter(_))));
    // a reversible perturbation keeps every coefficient zero
    let flat = unfold_cycles(
        &center_two(),
        ConditionId::II,
        &[stage(&[("a21", rat(1, 3))])],
        &unfold_cfg(),
    );
    assert!(matches!(flat, Err(BifurcError::OrderTooLow(6))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn brackets_never_exceed_sign_alternations(
        b03 in -20i64..20, b02 in -20i64..20, d in -20i64..20,
    ) {
        prop_assume!(b03 != 0 || b02 != 0 || d != 0);
        let sched = [
            stage(&[("b03", rat(b03, 100))]),
            stage(&[("b02", rat(b02, 1_000_000))]),
            stage(&[("delta", rat(d, 1_000_000_000))]),
        ];
        let c = unfold_cycles(&center_two(), ConditionId::II, &sched, &unfold_cfg()).unwrap();
        for s in &c.stages {
            prop_assert!(s.brackets <= s.sign_alternations);
        }
        let last = c.stages.last().unwrap();
        prop_assert_eq!(last.brackets, c.count);
    }
}
