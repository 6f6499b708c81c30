use nilcyc_core::centers::{
    certify_center, certifying_perturbation, condition, condition_four_scaling_invariant,
    condition_membership, condition_three_identity, exact_certificate, necessity_spotcheck,
    parse_surd, CenterError, ConditionId, Constraint, Evidence, IdentityForm, Route,
    SpotCheckConfig, SurdParams, ALL_CONDITIONS,
};
use nilcyc_core::exactalg::{int, rat, MPoly, Rational};
use nilcyc_core::sysmodel::{
    build_z2_cubic, hamiltonian_of, shift_to_origin, z2_cubic_symbolic, Perturbation, Z2CubicParams,
};
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn poly(s: &str) -> MPoly {
    s.parse().unwrap()
}

fn parse_relation(rel: &str, expr: &str) -> Constraint {
    match rel {
        "=0" => Constraint::Zero(poly(expr)),
        ">0" => Constraint::Positive(poly(expr)),
        "<0" => Constraint::Negative(poly(expr)),
        _ => panic!("relation {rel}"),
    }
}

fn parse_atom(s: &str) -> Constraint {
    for (op, rel) in [(" < 0", "<0"), (" > 0", ">0"), (" = 0", "=0")] {
        if let Some(e) = s.trim().strip_suffix(op) {
            return parse_relation(rel, e);
        }
    }
    panic!("atom {s:?}")
}

fn golden() -> Vec<(ConditionId, Constraint)> {
    let text = include_str!("data/center_conditions.txt");
    let mut out = Vec::new();
    for line in text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
    {
        let mut it = line
            .splitn(3, char::is_whitespace)
            .filter(|s| !s.is_empty());
        let id: ConditionId = it.next().unwrap().parse().unwrap();
        let rest = line[line.find(char::is_whitespace).unwrap()..].trim_start();
        let (rel, expr) = rest.split_once(char::is_whitespace).unwrap();
        let c = if rel == "any" {
            Constraint::AnyOf(
                expr.split('|')
                    .map(|branch| branch.split(',').map(parse_atom).collect())
                    .collect(),
            )
        } else {
            parse_relation(rel, expr.trim())
        };
        out.push((id, c));
    }
    out
}

#[test]
fn conditions_match_transcription() {
    let g = golden();
    for id in ALL_CONDITIONS {
        let expected: Vec<&Constraint> =
            g.iter().filter(|(i, _)| *i == id).map(|(_, c)| c).collect();
        let actual = condition(id).constraints;
        assert_eq!(actual.len(), expected.len(), "condition {id}");
        for (a, e) in actual.iter().zip(expected) {
            assert_eq!(a, e, "condition {id}");
        }
    }
}

fn fig_instances() -> Vec<(ConditionId, SurdParams)> {
    let pairs: Vec<(ConditionId, Vec<(&str, &str)>)> = vec![
        (
            ConditionId::I,
            vec![
                ("a21", "1"),
                ("a12", "3"),
                ("a03", "-3"),
                ("a02", "-3"),
                ("b12", "-1"),
                ("b03", "-1"),
            ],
        ),
        (ConditionId::II, vec![("a21", "-1"), ("a03", "-1")]),
        (
            ConditionId::III,
            vec![
                ("a21", "1"),
                ("a03", "-4"),
                ("b21", "3/10*sqrt(5)"),
                ("b12", "-1"),
                ("b03", "-1/5*sqrt(5)"),
            ],
        ),
        (
            ConditionId::IV,
            vec![
                ("a21", "-3/2"),
                ("a03", "-3"),
                ("b21", "-2"),
                ("b12", "-2"),
                ("b03", "5"),
            ],
        ),
        (
            ConditionId::V,
            vec![("a02", "-1"), ("a21", "1"), ("a03", "1"), ("b12", "1")],
        ),
        (
            ConditionId::VI,
            vec![
                ("a02", "-4"),
                ("a21", "-1"),
                ("b03", "-1"),
                ("a12", "3"),
                ("a03", "1"),
                ("b12", "1"),
            ],
        ),
    ];
    pairs
        .into_iter()
        .map(|(id, p)| (id, SurdParams::parse_pairs(&p).unwrap()))
        .collect()
}

#[test]
fn instances_satisfy_their_condition() {
    for (id, p) in fig_instances() {
        let m = condition_membership(&p, id);
        assert!(m.holds, "{id}: {:?}", m.violated);
    }
}

#[test]
fn zero_parameters_satisfy_no_condition() {
    let p = SurdParams::from(Z2CubicParams::default());
    for id in ALL_CONDITIONS {
        let m = condition_membership(&p, id);
        assert!(!m.holds, "{id}");
        assert!(!m.violated.is_empty());
    }
}

#[test]
fn routes_per_condition() {
    let expected = [
        (ConditionId::I, Route::HamiltonianMatch),
        (ConditionId::II, Route::SwitchingSymmetry),
        (ConditionId::III, Route::InverseIntegratingFactor),
        (ConditionId::IV, Route::NumericSpotCheckOnly),
        (ConditionId::V, Route::SwitchingSymmetry),
        (ConditionId::VI, Route::HamiltonianMatch),
    ];
    for ((id, p), (eid, route)) in fig_instances().into_iter().zip(expected) {
        assert_eq!(id, eid);
        let (r, _) = exact_certificate(&p, id).unwrap();
        assert_eq!(r, route, "{id}");
    }
}

#[test]
fn all_six_certificates_with_spot_checks() {
    let cfg = SpotCheckConfig::default();
    for (id, p) in fig_instances() {
        let cert = certify_center(&p, id, &cfg).unwrap();
        let sc = &cert.spotcheck;
        assert!(sc.monodromic, "{id}");
        assert!(
            sc.passed,
            "{id}: max |V_k| = {}",
            sc.max_abs.to_sci_string(4)
        );
        assert_eq!(sc.reports.len(), 2);
    }
}

#[test]
fn non_member_is_rejected() {
    let p = SurdParams::parse_pairs(&[("a21", "1"), ("a03", "1")]).unwrap();
    match exact_certificate(&p, ConditionId::II) {
        Err(CenterError::NotMember(ConditionId::II, msg)) => assert!(msg.contains("a03"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

/// Shifted-system Hamiltonians against their closed forms, over the
/// whole parameter family of each condition.
#[test]
fn hamiltonians_match_closed_forms() {
    let x0 = Rational::one();
    let y0 = Rational::zero();
    let cases = [
        (
            vec![("a02", "-a12"), ("b12", "-a21"), ("a12", "-3*b03"), ("b02", "0"), ("b21", "0")],
            "-1/2*x^2 - 1/2*x^3 - 1/8*x^4 + 1/2*a21*x^2*y^2 - b03*x*y^3 + a21*x*y^2 + 1/4*a03*y^4",
            "-1/2*x^2 - 1/2*x^3 - 1/8*x^4 + 1/2*a21*x^2*y^2 - b03*x*y^3 + a21*x*y^2 - 2*b03*y^3 + 1/4*a03*y^4",
        ),
        (
            vec![("b12", "-a21"), ("a12", "-3*b03"), ("b02", "0"), ("b21", "0")],
            "-1/2*x^2 - 1/2*x^3 + a21*x*y^2 + 1/3*(a02 + a12)*y^3 - 1/8*x^4 + 1/2*a21*x^2*y^2 - b03*x*y^3 + 1/4*a03*y^4",
            "-1/2*x^2 - 1/2*x^3 + a21*x*y^2 - 1/3*(a02 + a12 + 6*b03)*y^3 - 1/8*x^4 + 1/2*a21*x^2*y^2 - b03*x*y^3 \
             + 1/4*a03*y^4",
        ),
    ];
    for (subs, hu, hl) in cases {
        let vals: Vec<(&str, MPoly)> = subs.iter().map(|(n, v)| (*n, poly(v))).collect();
        // apply twice so chained substitutions (a02 -> -a12 -> 3 b03) settle
        let fam = z2_cubic_symbolic().map(|q| q.subs_many(&vals).subs_many(&vals));
        let sys = shift_to_origin(&fam, (&x0, &y0)).unwrap();
        let closed = |s: &str| poly(s).subs_many(&vals).subs_many(&vals);
        assert_eq!(hamiltonian_of(&sys.upper).unwrap(), closed(hu));
        assert_eq!(hamiltonian_of(&sys.lower).unwrap(), closed(hl));
    }
}

#[test]
fn first_condition_instance_hamiltonians() {
    let (_, p) = fig_instances().remove(0);
    let (_, ev) = exact_certificate(&p, ConditionId::I).unwrap();
    let Evidence::Hamiltonians { upper, lower } = ev else {
        panic!()
    };
    assert_eq!(
        upper,
        poly("-1/2*x^2 - 1/2*x^3 - 1/8*x^4 + 1/2*x^2*y^2 + x*y^3 + x*y^2 - 3/4*y^4")
    );
    assert_eq!(&lower - &upper, poly("2*y^3"));
}

#[test]
fn third_condition_integrating_factor() {
    let form = condition_three_identity().expect("identity holds");
    assert_eq!(form, IdentityForm::ModuloRelation);
    let (_, p) = fig_instances().remove(2);
    let (_, ev) = exact_certificate(&p, ConditionId::III).unwrap();
    let Evidence::InverseIntegratingFactor { factor, .. } = ev else {
        panic!()
    };
    assert!(!factor.is_zero());
    // perturbing b21 off the relation breaks the instance identity
    let mut q = p.clone();
    q.radical.b21 = rat(1, 3);
    q.radical.b03 = rat(-2, 9);
    assert!(matches!(
        exact_certificate(&q, ConditionId::III),
        Err(CenterError::NotMember(..))
    ));
}

#[test]
fn fourth_condition_is_scaling_invariant() {
    assert!(condition_four_scaling_invariant());
    // r = 2 maps the instance to another member
    let (_, p) = fig_instances().remove(3);
    let w = [
        ("a21", 2),
        ("a02", 3),
        ("a12", 3),
        ("a03", 4),
        ("b21", 1),
        ("b02", 2),
        ("b12", 2),
        ("b03", 3),
    ];
    let mut q = p.rational.clone();
    for (n, k) in w {
        let v = q.get_mut(n).unwrap();
        *v = &*v * &Rational::from_integer(2.into()).pow(k);
    }
    assert!(condition_membership(&SurdParams::from(q), ConditionId::IV).holds);
}

#[test]
fn fourth_condition_needs_its_perturbation() {
    let (_, p) = fig_instances().remove(3);
    let cfg = SpotCheckConfig {
        order: 4,
        ..Default::default()
    };
    let zero = necessity_spotcheck(&p.rational, &Perturbation::default(), &cfg).unwrap();
    assert!(!zero.passed);
    assert!(zero.max_abs.to_f64() > 1e-4);
    let pert = certifying_perturbation(ConditionId::IV, &p.rational);
    assert_eq!(
        (pert.p21.clone(), pert.p03.clone(), pert.q03.clone()),
        (int(-1), int(3), int(-1))
    );
    assert!(
        necessity_spotcheck(&p.rational, &pert, &cfg)
            .unwrap()
            .passed
    );
}

#[test]
fn surd_parsing() {
    assert_eq!(
        parse_surd("3/10*sqrt(5)").unwrap(),
        (Rational::zero(), rat(3, 10), Some(int(5)))
    );
    assert_eq!(
        parse_surd("1 - sqrt(2)").unwrap(),
        (int(1), int(-1), Some(int(2)))
    );
    assert_eq!(
        parse_surd("-7/3").unwrap(),
        (rat(-7, 3), Rational::zero(), None)
    );
    assert!(parse_surd("sqrt(-2)").is_err());
    assert!(parse_surd("sqrt(2) + sqrt(3)").is_err());
    assert!(parse_surd("sqrt(2)*sqrt(2)").is_err());
}

#[test]
fn instance_matches_integer_build() {
    let (_, p) = fig_instances().remove(1);
    assert!(p.is_rational());
    let built = build_z2_cubic(&p.rational);
    let symbolic = p.system();
    assert_eq!(built, symbolic);
}

fn small_rat() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=5).prop_map(|(n, d)| rat(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn surd_sign_matches_float(a in small_rat(), b in small_rat(), s in 0i64..20) {
        let p = SurdParams::new(int(s), Z2CubicParams::default(), Z2CubicParams::default()).unwrap();
        let af = nilcyc_core::sysmodel::rational_to_f64(&a);
        let bf = nilcyc_core::sysmodel::rational_to_f64(&b);
        let x = af + bf * (s as f64).sqrt();
        let sg = p.sign(&a, &b);
        if x.abs() > 1e-9 {
            prop_assert_eq!(sg, if x > 0.0 { 1 } else { -1 });
        } else {
            prop_assert_eq!(sg, 0);
        }
    }

    /// Random members of II and V certify by reversibility; random members
    /// of I and VI by matching Hamiltonians.
    #[test]
    fn random_members_certify(a21 in small_rat(), b12 in small_rat(), t in 1i64..20, a12 in small_rat(), a02 in small_rat()) {
        let a03 = &(&(-&(&(&b12 - &a21) * &(&b12 - &a21))) - &rat(t, 3)) / &int(2);
        let ii = Z2CubicParams::from_pairs(&[("a21", a21.clone()), ("b12", b12.clone()), ("a03", a03)]).unwrap();
        prop_assert_eq!(exact_certificate(&ii.into(), ConditionId::II).unwrap().0, Route::SwitchingSymmetry);

        let v = Z2CubicParams::from_pairs(&[("a21", a21.clone()), ("b12", b12.clone()), ("a02", -&rat(t, 4))]).unwrap();
        prop_assert_eq!(exact_certificate(&v.into(), ConditionId::V).unwrap().0, Route::SwitchingSymmetry);

        let b03 = -&(&a12 / &int(3));
        let vi = Z2CubicParams::from_pairs(&[
            ("a21", a21.clone()), ("b12", -&a21), ("a12", a12.clone()), ("b03", b03.clone()),
            ("a02", &-a12.abs() - &rat(t, 7)), ("a03", a02.clone()),
        ]).unwrap();
        prop_assert_eq!(exact_certificate(&vi.into(), ConditionId::VI).unwrap().0, Route::HamiltonianMatch);
    }
}
