use nilcyc_core::bifurc::{reduced_family, sliding_segment, ReducedParams, SlidingResult};
use nilcyc_core::exactalg::{int, rat};
use nilcyc_core::portrait::*;
use nilcyc_core::sysmodel::{
    build_z2_cubic, eval_poly_f64, hamiltonian_of, z2_cubic_symbolic, PlanarField, SwitchingSystem,
    Z2CubicParams,
};
use proptest::prelude::*;

fn rotation() -> FilippovSystem {
    let f = PlanarField::parse("-y", "x").unwrap();
    FilippovSystem::new(&SwitchingSystem {
        upper: f.clone(),
        lower: f,
    })
    .unwrap()
}

fn bi_center() -> SwitchingSystem {
    build_z2_cubic(&Z2CubicParams::from_ratios(&[
        ("a21", -1, 1),
        ("a03", -1, 1),
    ]))
}

fn first_condition() -> Z2CubicParams {
    Z2CubicParams::from_ratios(&[
        ("a21", 1, 1),
        ("a12", 3, 1),
        ("a03", -3, 1),
        ("a02", -3, 1),
        ("b12", -1, 1),
        ("b03", -1, 1),
    ])
}

fn sliding_family(b: i64) -> SwitchingSystem {
    let r = ReducedParams {
        a02: int(-4),
        a21: int(-1),
        b03: int(-1),
        a03: int(1),
        ..Default::default()
    };
    reduced_family(&r, &rat(1, 10), &rat(1, 10), &rat(1, b))
}

#[test]
fn rotation_crosses_twice_per_period() {
    let tau = std::f64::consts::TAU;
    let tr = filippov_integrate(&rotation(), (0.5, 0.0), 3.0 * tau + 0.1, 1e-10).unwrap();
    assert_eq!(tr.termination, Termination::Completed);
    assert!(tr.events.iter().all(|e| e.kind == EventKind::Crossing));
    assert_eq!(tr.events.len(), 6);
    for (k, e) in tr.events.iter().enumerate() {
        let expected_t = (k + 1) as f64 * tau / 2.0;
        let expected_x = if k % 2 == 0 { -0.5 } else { 0.5 };
        assert!((e.t - expected_t).abs() < 1e-8, "{e:?}");
        assert!((e.x - expected_x).abs() < 1e-8, "{e:?}");
    }
    for [_, x, y] in &tr.samples {
        assert!((x.hypot(*y) - 0.5).abs() < 1e-8);
    }
}

#[test]
fn events_sit_on_the_line() {
    let sys = FilippovSystem::new(&bi_center()).unwrap();
    let tr = filippov_integrate(&sys, (1.6, 0.0), 50.0, 1e-9).unwrap();
    assert!(tr.crossings().count() >= 4);
    for e in &tr.events {
        let s = tr.samples.iter().find(|s| s[0] == e.t).unwrap();
        assert_eq!(s[1], e.x);
        assert!(s[2].abs() < 1e-12);
    }
    for w in tr.samples.windows(2) {
        assert!(w[1][0] >= w[0][0]);
    }
}

#[test]
fn bi_center_orbits_close() {
    let sys = FilippovSystem::new(&bi_center()).unwrap();
    for x0 in [1.25, 1.5, 1.75] {
        let d = return_proximity(&sys, x0, 1e-10, 100.0).unwrap().unwrap();
        assert!(d < 1e-6, "{x0}: {d}");
        // by symmetry the left seed of the pair closes too
        let d = return_proximity(&sys, -x0, 1e-10, 100.0).unwrap().unwrap();
        assert!(d < 1e-6, "{}: {d}", -x0);
    }
}

#[test]
fn return_proximity_shrinks_with_tolerance() {
    let sys = FilippovSystem::new(&bi_center()).unwrap();
    for x0 in [1.7, 1.9] {
        let coarse = return_proximity(&sys, x0, 1e-6, 100.0).unwrap().unwrap();
        let fine = return_proximity(&sys, x0, 1e-12, 100.0).unwrap().unwrap();
        assert!(fine < coarse, "{x0}: {fine} vs {coarse}");
    }
}

#[test]
fn hamiltonian_halves_conserve_energy_along_arcs() {
    let sym = build_z2_cubic(&first_condition());
    let hu = hamiltonian_of(&sym.upper).unwrap();
    let hl = hamiltonian_of(&sym.lower).unwrap();
    let sys = FilippovSystem::new(&sym).unwrap();
    let tol = 1e-10;
    // the period annulus of this instance is thin
    for x0 in [0.99, 1.005, 1.01] {
        let tr = filippov_integrate(&sys, (x0, 0.0), 150.0, tol).unwrap();
        let mut marks: Vec<f64> = vec![0.0];
        marks.extend(tr.events.iter().map(|e| e.t));
        assert!(marks.len() >= 5, "{x0}: {:?}", tr.termination);
        for w in marks.windows(2) {
            let arc: Vec<&[f64; 3]> = tr
                .samples
                .iter()
                .filter(|s| s[0] >= w[0] && s[0] <= w[1])
                .collect();
            let mid = arc[arc.len() / 2];
            let h = if mid[2] > 0.0 { &hu } else { &hl };
            let (a, b) = (arc[0], arc[arc.len() - 1]);
            let drift = (eval_poly_f64(h, a[1], a[2]) - eval_poly_f64(h, b[1], b[2])).abs();
            assert!(drift < 10.0 * tol, "{x0}: drift {drift}");
        }
    }
}

#[test]
fn sliding_entry_then_exit() {
    let sym = sliding_family(100);
    assert!(matches!(
        sliding_segment(&sym, &rat(1, 2)).unwrap(),
        SlidingResult::Segment(_)
    ));
    let sys = FilippovSystem::new(&sym).unwrap();
    assert!(sys.sliding(-0.005).is_some());
    assert!(sys.sliding(0.005).is_none());
    for start in [(-0.005, 0.0), (-0.005, 0.001)] {
        let tr = filippov_integrate(&sys, start, 20.0, 1e-10).unwrap();
        let kinds: Vec<EventKind> = tr.events.iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds[..2],
            [EventKind::SlidingEntry, EventKind::SlidingExit],
            "{start:?}"
        );
        let entry = tr.events[0].x;
        let exit = tr.events[1].x;
        assert!((-0.01..=0.0).contains(&entry));
        // the sliding field drifts left and leaves at the endpoint -b
        assert!((exit + 0.01).abs() < 1e-8, "exit at {exit}");
        for s in tr
            .samples
            .iter()
            .filter(|s| s[0] > tr.events[0].t && s[0] < tr.events[1].t)
        {
            assert_eq!(s[2], 0.0);
        }
    }
}

#[test]
fn escaping_start_terminates() {
    // both halves point away from the line
    let up = PlanarField::parse("1", "1").unwrap();
    let down = PlanarField::parse("1", "-1").unwrap();
    let sys = FilippovSystem::new(&SwitchingSystem {
        upper: up,
        lower: down,
    })
    .unwrap();
    let tr = filippov_integrate(&sys, (0.0, 0.0), 1.0, 1e-9).unwrap();
    assert_eq!(tr.termination, Termination::Escaping);
    assert!(tr.truncated());
}

#[test]
fn runaway_orbit_is_flagged() {
    let sys = FilippovSystem::new(&build_z2_cubic(&first_condition())).unwrap();
    let tr = filippov_integrate(&sys, (1.05, 0.0), 100.0, 1e-10).unwrap();
    assert_eq!(tr.termination, Termination::Diverged);
    assert!(tr.truncated());
}

#[test]
fn singular_start_is_flagged() {
    let sys = FilippovSystem::new(&bi_center()).unwrap();
    let tr = filippov_integrate(&sys, (1.0, 0.0), 1.0, 1e-9).unwrap();
    assert_eq!(tr.termination, Termination::Singular);
    assert_eq!(tr.samples.len(), 1);
}

#[test]
fn rejects_bad_input() {
    assert!(matches!(
        FilippovSystem::new(&z2_cubic_symbolic()),
        Err(PortraitError::NotNumeric(_))
    ));
    assert!(matches!(
        filippov_integrate(&rotation(), (1.0, 0.0), 1.0, 0.0),
        Err(PortraitError::BadTolerance(_))
    ));
    let cfg = PortraitConfig::new([1.0, 1.0, -1.0, 1.0]);
    assert!(matches!(
        render_portrait(&rotation(), &[], &cfg),
        Err(PortraitError::EmptyWindow(..))
    ));
}

#[test]
fn empty_seed_list_draws_markers_only() {
    let cfg = PortraitConfig::new([-2.0, 2.0, -1.5, 1.5]);
    let svg = render_portrait(&rotation(), &[], &cfg).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert_eq!(svg.matches("<circle").count(), 2);
    assert_eq!(svg.matches("<polyline").count(), 0);
    assert!(svg.contains(r#"<line x1="0" y1="300.00" x2="800" y2="300.00""#));
    assert!(svg.contains(r#"<circle cx="200.00" cy="300.00" r="4"/>"#));
    assert!(svg.contains(r#"<circle cx="600.00" cy="300.00" r="4"/>"#));
}

#[test]
fn portrait_is_deterministic() {
    let sys = FilippovSystem::new(&bi_center()).unwrap();
    let window = [-2.5, 2.5, -1.5, 1.5];
    let mut cfg = PortraitConfig::new(window);
    cfg.t_end = 10.0;
    let seeds = seed_grid(window, 4);
    let a = render_portrait(&sys, &seeds, &cfg).unwrap();
    let b = render_portrait(&sys, &seeds, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.matches("<polyline").count(), 16);
    let dir = std::env::temp_dir().join(format!("portrait-{}.svg", std::process::id()));
    write_portrait(&sys, &seeds, &cfg, &dir).unwrap();
    assert_eq!(std::fs::read_to_string(&dir).unwrap(), a);
    std::fs::remove_file(dir).unwrap();
}

#[test]
fn sliding_portions_are_drawn() {
    let sys = FilippovSystem::new(&sliding_family(100)).unwrap();
    let mut cfg = PortraitConfig::new([-0.05, 0.05, -0.05, 0.05]);
    cfg.markers.clear();
    let svg = render_portrait(&sys, &[(-0.005, 0.001)], &cfg).unwrap();
    // the manifold plus sliding pieces, the first from the entry to x = -b
    assert!(svg.matches("<line").count() >= 2);
    assert!(svg.contains(r#"x2="320.00" y2="400.00"/>"#));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rotation_orbits_return(r in 0.05f64..3.0) {
        let d = return_proximity(&rotation(), r, 1e-10, 20.0).unwrap().unwrap();
        prop_assert!(d < 1e-8 * r.max(1.0), "{} {}", r, d);
    }

    #[test]
    fn crossing_count_matches_time(r in 0.1f64..2.0, periods in 1usize..4) {
        let tau = std::f64::consts::TAU;
        let tr = filippov_integrate(&rotation(), (r, 0.0), periods as f64 * tau + 0.5, 1e-9).unwrap();
        prop_assert_eq!(tr.crossings().count(), 2 * periods);
    }
}
