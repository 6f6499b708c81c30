use nilcyc_core::exactalg::{int, rat, MPoly, Rational};
use nilcyc_core::nilclass::{
    classify, classify_point, fg_data, implicit_series, multiplicity_of_family, nilpotent_form,
    Multiplicity, NilKind, MAX_MULTIPLICITY,
};
use nilcyc_core::sysmodel::{
    build_z2_cubic, shift_to_origin, z2_cubic_symbolic, Half, Z2CubicParams, Z2_PARAM_NAMES,
};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn poly(s: &str) -> MPoly {
    s.parse().unwrap()
}

fn one_zero() -> (Rational, Rational) {
    (Rational::one(), Rational::zero())
}

#[test]
fn closed_forms_of_leading_coefficients() {
    let (x0, y0) = one_zero();
    let sys = shift_to_origin(&z2_cubic_symbolic(), (&x0, &y0)).unwrap();
    let cases = [
        (
            Half::Upper,
            "a02 + a12",
            "a03 - 2*a21*b02 - 2*a21*b12",
            "2*a21 + 2*b02 + 2*b12",
        ),
        (
            Half::Lower,
            "-a02 + a12",
            "a03 + 2*a21*b02 - 2*a21*b12",
            "2*a21 - 2*b02 + 2*b12",
        ),
    ];
    for (half, f2, f3, g1) in cases {
        let (psi, phi) = nilpotent_form(sys.half(half)).unwrap();
        let d = fg_data(&psi, &phi, 3).unwrap();
        assert_eq!(d.f_coeff(2), poly(f2), "{half} f2");
        assert_eq!(d.f_coeff(3), poly(f3), "{half} f3");
        assert_eq!(d.g_coeff(1), poly(g1), "{half} g1");
    }
}

#[test]
fn implicit_series_special_instances() {
    assert!(implicit_series(&MPoly::zero(), 6).unwrap().is_zero());
    // b21 = 1, b02 + b12 = 0, b03 = 0
    let phi = poly("3/2*x^2 + 2*x*y + 1/2*x^3 + x^2*y");
    let f = implicit_series(&phi, 6).unwrap();
    for k in 0..4 {
        assert!(f.coeff(k).is_zero(), "coefficient {k}");
    }
    let d = fg_data(&poly("y^2"), &poly("x^2"), 6).unwrap();
    assert_eq!(d.m, Some(2));
    assert_eq!(d.f_coeff(2), MPoly::one());
}

#[test]
fn generic_instance_coefficients() {
    let p = Z2CubicParams::from_ratios(&[
        ("a21", 1, 1),
        ("b12", 2, 1),
        ("a02", 1, 1),
        ("a12", -1, 1),
        ("a03", -4, 1),
    ]);
    let sys = shift_to_origin(&build_z2_cubic(&p), (&Rational::one(), &Rational::zero())).unwrap();
    let (psi, phi) = nilpotent_form(&sys.upper).unwrap();
    let d = fg_data(&psi, &phi, 6).unwrap();
    assert_eq!(d.g_coeff(1), MPoly::constant(int(6)));
    assert_eq!(d.f_coeff(2), MPoly::zero());
    assert_eq!(d.f_coeff(3), MPoly::constant(int(-8)));
}

#[test]
fn two_cusp_example_lower_half() {
    let p = Z2CubicParams::from_ratios(&[
        ("a02", 1, 1),
        ("b12", 1, 1),
        ("a21", -1, 1),
        ("a12", -1, 1),
        ("a03", -4, 1),
        ("b03", 1, 3),
    ]);
    let (x0, y0) = one_zero();
    let cls = classify_point(&build_z2_cubic(&p), (&x0, &y0), 8).unwrap();
    let lower = &cls[1].class;
    assert_eq!(cls[1].half, Half::Lower);
    assert_eq!(lower.kind, NilKind::Cusp);
    assert_eq!(lower.m, Some(2));
    assert_eq!(lower.f_m, Some(int(-2)));
    assert_eq!(
        multiplicity_of_family(&p, Half::Lower).unwrap(),
        Multiplicity::Finite(2)
    );
}

#[test]
fn third_order_focus_instance() {
    let p = Z2CubicParams::from_ratios(&[("a21", -1, 1), ("a03", -1, 1)]);
    let (x0, y0) = one_zero();
    let cls = classify_point(&build_z2_cubic(&p), (&x0, &y0), 8).unwrap();
    let up = &cls[0].class;
    assert_eq!(up.kind, NilKind::CenterOrFocus);
    assert_eq!(up.multiplicity, Some(3));
    assert_eq!(
        (up.f_m.clone(), up.g_n.clone(), up.delta.clone()),
        (Some(int(-1)), Some(int(-2)), Some(int(-4)))
    );
    assert_eq!(
        multiplicity_of_family(&p, Half::Upper).unwrap(),
        Multiplicity::Finite(3)
    );
}

#[test]
fn sixth_order_instance() {
    let mut p = Z2CubicParams::from_ratios(&[
        ("a21", 1, 1),
        ("a12", 1, 1),
        ("a02", -1, 1),
        ("b02", 1, 4),
        ("b03", -1, 8),
    ]);
    // a03 = 2 a21 (b02 + b12)
    p.a03 = &(&int(2) * &p.a21) * &(&p.b02 + &p.b12);
    assert_eq!(p.a03, rat(1, 2));
    assert_eq!(
        multiplicity_of_family(&p, Half::Upper).unwrap(),
        Multiplicity::Finite(6)
    );
    let sys = shift_to_origin(&build_z2_cubic(&p), (&Rational::one(), &Rational::zero())).unwrap();
    let (psi, phi) = nilpotent_form(&sys.upper).unwrap();
    let d = fg_data(&psi, &phi, 6).unwrap();
    assert_eq!(d.f_coeff(6), MPoly::constant(rat(1, 32)));
    // closed form a12 (a12^2 + 4 a21^2 b12 - 4 a12 a21 b21)^2 / (32 a21^4)
    let (a12, a21, b12, b21) = (&p.a12, &p.a21, &p.b12, &p.b21);
    let inner =
        &(&(a12 * a12) + &(&(&int(4) * &(a21 * a21)) * b12)) - &(&(&int(4) * a12) * &(a21 * b21));
    let a21_4 = &(a21 * a21) * &(a21 * a21);
    let closed = &(a12 * &(&inner * &inner)) / &(&int(32) * &a21_4);
    assert_eq!(d.f_coeff(6), MPoly::constant(closed));
}

#[test]
fn witness_saddle() {
    let psi = poly("y^3");
    let phi = MPoly::zero();
    let cls = classify(&fg_data(&psi, &phi, 6).unwrap()).unwrap();
    assert_eq!(cls.kind, NilKind::Saddle);
    assert_eq!(cls.multiplicity, Some(3));
}

fn small_rat() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| rat(n, d))
}

fn random_params() -> impl Strategy<Value = Z2CubicParams> {
    prop::collection::vec(small_rat(), 8).prop_map(|v| {
        let pairs: Vec<(&str, Rational)> = Z2_PARAM_NAMES.iter().copied().zip(v).collect();
        Z2CubicParams::from_pairs(&pairs).unwrap()
    })
}

fn eval_closed(s: &str, p: &Z2CubicParams) -> Rational {
    poly(s).eval(&p.assignments()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_forms_hold_on_random_draws(p in random_params()) {
        let sys = shift_to_origin(&build_z2_cubic(&p), (&Rational::one(), &Rational::zero())).unwrap();
        let (psi, phi) = nilpotent_form(&sys.upper).unwrap();
        let d = fg_data(&psi, &phi, 3).unwrap();
        prop_assert_eq!(d.f_coeff(2), MPoly::constant(eval_closed("a02 + a12", &p)));
        prop_assert_eq!(d.f_coeff(3), MPoly::constant(eval_closed("a03 - 2*a21*b02 - 2*a21*b12", &p)));
        prop_assert_eq!(d.g_coeff(1), MPoly::constant(eval_closed("2*a21 + 2*b02 + 2*b12", &p)));
        let (psi, phi) = nilpotent_form(&sys.lower).unwrap();
        let d = fg_data(&psi, &phi, 3).unwrap();
        prop_assert_eq!(d.f_coeff(2), MPoly::constant(eval_closed("-a02 + a12", &p)));
        prop_assert_eq!(d.f_coeff(3), MPoly::constant(eval_closed("a03 + 2*a21*b02 - 2*a21*b12", &p)));
        prop_assert_eq!(d.g_coeff(1), MPoly::constant(eval_closed("2*a21 - 2*b02 + 2*b12", &p)));
    }

    #[test]
    fn implicit_series_residual_vanishes(p in random_params()) {
        let sys = shift_to_origin(&build_z2_cubic(&p), (&Rational::one(), &Rational::zero())).unwrap();
        for half in [Half::Upper, Half::Lower] {
            let (_, phi) = nilpotent_form(sys.half(half)).unwrap();
            let order = 12;
            let f = implicit_series(&phi, order).unwrap();
            let fx: MPoly = f.coeffs.iter().enumerate().fold(MPoly::zero(), |acc, (k, c)| {
                &acc + &(c * &MPoly::var("y").pow(k as u32))
            });
            let residual = &fx + &phi.subs("x", &fx);
            for ((_, j), c) in residual.bivariate("x", "y") {
                if j as usize <= order {
                    prop_assert!(c.is_zero(), "y^{} coefficient {}", j, c);
                }
            }
        }
    }

    #[test]
    fn classification_is_deterministic(p in random_params()) {
        let (x0, y0) = one_zero();
        let a = classify_point(&build_z2_cubic(&p), (&x0, &y0), 8).unwrap();
        let b = classify_point(&build_z2_cubic(&p), (&x0, &y0), 8).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn multiplicity_is_bounded(p in random_params(), upper in any::<bool>()) {
        let half = if upper { Half::Upper } else { Half::Lower };
        let sys = shift_to_origin(&build_z2_cubic(&p), (&Rational::one(), &Rational::zero())).unwrap();
        let (psi, phi) = nilpotent_form(sys.half(half)).unwrap();
        let d = fg_data(&psi, &phi, 2 * MAX_MULTIPLICITY).unwrap();
        // every nonzero coefficient shows up by order six
        if let Some(m) = d.m {
            prop_assert!(m <= MAX_MULTIPLICITY, "m = {}", m);
        }
        match multiplicity_of_family(&p, half).unwrap() {
            Multiplicity::Finite(m) => prop_assert!(m <= MAX_MULTIPLICITY),
            Multiplicity::NotIsolated => prop_assert!(d.m.is_none()),
        }
    }
}
