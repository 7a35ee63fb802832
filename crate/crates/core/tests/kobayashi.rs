use proptest::prelude::*;
use staticlab::kobayashi::*;
use staticlab::levelset::slice_report;
use staticlab::tolerances::*;

fn periodic(n: usize, scalar: f64, a: f64, k: f64) -> PeriodicWarp {
    find_periodic_warp(n, scalar, a, k, ODE_TOL).unwrap().periodic().expect("closed orbit")
}

/// Period from `r'^2 = k - V(r)`: `T = 2 int dr / sqrt(k - V)` with
/// `r = mid + half sin(t)`, midpoint rule in `t`.
fn period_by_quadrature(w: &PeriodicWarp) -> f64 {
    let p = w.params;
    let (mid, half) = (0.5 * (w.r_max + w.r_min), 0.5 * (w.r_max - w.r_min));
    let m = 200_000;
    let h = std::f64::consts::PI / m as f64;
    let mut sum = 0.0;
    for i in 0..m {
        let t = -std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * h;
        let r = mid + half * t.sin();
        sum += half * t.cos() / (w.k - p.potential(r)).sqrt();
    }
    2.0 * sum * h
}

#[test]
fn first_integrals_conserved_over_ten_periods() {
    for (n, scalar, a, k) in [(3, 6.0, 0.15, 1.0), (4, 12.0, 0.2, 1.0), (5, 20.0, 0.22, 1.0)] {
        let w = periodic(n, scalar, a, k);
        let (traj, rep) = drift_check(w.params, w.r_min, 0.0, 10.5 * w.period, 4001).unwrap();
        assert!(traj.completed());
        assert!(rep.used > 1000, "{rep:?}");
        assert!(rep.relative() <= FIRST_INTEGRAL_DRIFT, "n={n}: {rep:?}");
        assert!((rep.a0 - a).abs() <= 1e-12 && (rep.k0 - k).abs() <= 1e-10, "{rep:?}");
        assert!(rep.substitution <= F_PROPORTIONAL, "{rep:?}");
        // f = r' is carried along by the full system
        let gap = traj.samples(2001).iter().map(|(_, u)| (u[2] - u[1]).abs()).fold(0.0, f64::max);
        assert!(gap <= F_PROPORTIONAL, "{gap}");
    }
}

#[test]
fn shooting_closes_the_orbit() {
    let w = periodic(3, 6.0, 0.15, 1.0);
    assert!(w.closure <= PERIODIC_CLOSURE, "{}", w.closure);
    assert!(w.r_min < w.r_max);
    let oracle = period_by_quadrature(&w);
    assert!((w.period - oracle).abs() <= 1e-6 * oracle, "{} vs {oracle}", w.period);
}

#[test]
fn period_is_stable_under_tolerance_tightening() {
    let coarse = find_periodic_warp(4, 12.0, 0.2, 1.0, 1e-11).unwrap().periodic().unwrap();
    let fine = find_periodic_warp(4, 12.0, 0.2, 1.0, 1e-12).unwrap().periodic().unwrap();
    assert!((coarse.period - fine.period).abs() <= 1e-8, "{} vs {}", coarse.period, fine.period);
}

#[test]
fn bottom_of_the_well_is_a_constant_warp() {
    // n = 3, R = 6: V(r) = r^2 + 2a/r, minimum V(1) = 3 at a = 1
    match find_periodic_warp(3, 6.0, 1.0, 3.0, ODE_TOL).unwrap() {
        PeriodicOutcome::Constant { r } => assert!((r - 1.0).abs() <= 1e-8, "{r}"),
        _ => panic!("expected the constant orbit"),
    }
    assert!(matches!(find_periodic_warp(3, 6.0, 1.0, 2.9, ODE_TOL).unwrap(), PeriodicOutcome::NoOrbit(_)));
}

#[test]
fn sine_warp_is_recovered() {
    // a = 0, k = 1 on n = 3, R = 6 is the round sphere: r = sin(s + s0)
    let p = KobayashiParams::new(3, 6.0, 0.0).unwrap();
    let s0: f64 = 0.5;
    let (traj, rep) = drift_check(p, s0.sin(), s0.cos(), 2.0, 201).unwrap();
    for (s, u) in traj.samples(101) {
        assert!((u[0] - (s + s0).sin()).abs() <= 1e-10, "s = {s}");
    }
    assert!(rep.a0.abs() <= 1e-15 && (rep.k0 - 1.0).abs() <= 1e-14);
}

#[test]
fn periodic_window_brackets_orbits() {
    let (_, a_max) = periodic_window(4, 12.0, 1.0).unwrap();
    assert!(find_periodic_warp(4, 12.0, 0.5 * a_max, 1.0, ODE_TOL).unwrap().periodic().is_some());
    assert!(matches!(
        find_periodic_warp(4, 12.0, 1.2 * a_max, 1.0, ODE_TOL).unwrap(),
        PeriodicOutcome::NoOrbit(_)
    ));
    assert!(periodic_window(3, -6.0, 1.0).is_err());
}

#[test]
fn catalog_certification() {
    let built = build_catalog().unwrap();
    assert_eq!(built.len(), catalog().len());
    for (e, m) in &built {
        assert_eq!(m.dim(), e.n);
        let pts = m.sample_points(6, 3);
        let c = m.check(&pts, false).unwrap();
        assert!(c.kind_residual <= VACUUM_STATIC, "{}: {}", e.name, c.kind_residual);
        assert!(c.d_max <= D_FLAT, "{}: {}", e.name, c.d_max);
        for x in &pts {
            let p = m.at(x, 4).unwrap();
            assert!((p.curv.scalar() - e.expected.scalar).abs() <= 1e-6, "{}", e.name);
            if e.expected.bach_flat {
                assert!(p.curv.bach().unwrap().max_abs() <= BACH_FLAT, "{}", e.name);
            }
        }
        if let (Some(k), Some(_)) = (e.expected.einstein_slice, m.f_profile.as_ref()) {
            let s = regular_slice(m);
            let rep = slice_report(m, s, 3).unwrap();
            let got = rep.slice_constant().unwrap();
            assert!((got - k).abs() <= EINSTEIN_SLICE, "{}: {got} vs {k}", e.name);
        }
    }
}

/// A value of `s` where `f'` is well away from zero.
fn regular_slice(m: &staticlab::statics::StaticModel) -> f64 {
    let w = m.warped_product().unwrap();
    let f = m.f_profile.as_ref().unwrap();
    let samples = w.s.samples(41);
    *samples
        .iter()
        .max_by(|a, b| f.taylor(**a, 1)[1].abs().total_cmp(&f.taylor(**b, 1)[1].abs()))
        .unwrap()
}

#[test]
fn catalog_tags_are_consistent() {
    for e in catalog() {
        if e.has(Tag::PeriodicWarp) || e.has(Tag::Sphere) && e.expected.scalar > 0.0 {
            assert!(e.expected.closed || e.has(Tag::NonCompactWarp), "{}", e.name);
        }
        if e.has(Tag::Hyperbolic) || e.has(Tag::NonCompactWarp) {
            assert!(!e.expected.closed, "{}", e.name);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn closed_orbits_throughout_the_window(n in 3usize..6, frac in 0.05f64..0.95) {
        let scalar = (n * (n - 1)) as f64;
        let (_, a_max) = periodic_window(n, scalar, 1.0).unwrap();
        let w = periodic(n, scalar, frac * a_max, 1.0);
        prop_assert!(w.closure <= PERIODIC_CLOSURE);
        prop_assert!(w.r_min > 0.0 && w.r_min < w.r_max);
        let oracle = period_by_quadrature(&w);
        prop_assert!((w.period - oracle).abs() <= 1e-6 * oracle);
    }
}
