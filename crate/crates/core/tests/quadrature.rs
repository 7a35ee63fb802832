use std::f64::consts::PI;

use num_rational::Rational64;
use staticlab::config::lookup;
use staticlab::quadrature::*;
use staticlab::statics::StaticModel;
use staticlab::tolerances::*;

fn model(name: &str) -> StaticModel {
    lookup(name).unwrap().build().unwrap()
}

fn rule() -> QuadratureRule {
    QuadratureRule::default()
}

#[test]
fn volumes_of_closed_models() {
    for (name, vol) in [("s3", 2.0 * PI * PI), ("s1xs2", 8.0 * PI * PI), ("s4", 8.0 * PI * PI / 3.0)] {
        let v = integrate_profile(&model(name), Region::ClosedManifold, rule(), |_| 1.0).unwrap();
        assert!((v.value - vol).abs() <= 1e-10 * vol, "{name}: {} vs {vol}", v.value);
        assert!(v.delta <= 1e-10 * vol);
    }
}

#[test]
fn squared_potential_on_circle_times_sphere() {
    let v = integrate_profile(&model("s1xs2"), Region::ClosedManifold, rule(), |s| s.sin().powi(2)).unwrap();
    assert!((v.value - 4.0 * PI * PI).abs() <= 1e-10);
}

#[test]
fn volume_between_two_levels_of_the_height_function() {
    // {0.2 < cos s < 0.8} on S^3 has volume 4 pi int sin^2 s ds
    let (a, b) = (0.8f64.acos(), 0.2f64.acos());
    let prim = |s: f64| s / 2.0 - (2.0 * s).sin() / 4.0;
    let exact = 4.0 * PI * (prim(b) - prim(a));
    let v = integrate_profile(&model("s3"), Region::BetweenLevels { c1: 0.2, c2: 0.8 }, rule(), |_| 1.0).unwrap();
    assert!((v.value - exact).abs() <= 1e-12, "{} vs {exact}", v.value);
}

#[test]
fn gradient_bach_identity_on_nonzero_model() {
    let m = model("warped5");
    for p in [2, 3, 4] {
        let c = check_main_identity(&m, 0.5, 1.5, p, rule()).unwrap();
        assert!(c.passed(), "{c:?}");
        assert!(c.lhs.abs() > 10.0 * c.tolerance && c.rhs.abs() > 10.0 * c.tolerance, "{c:?}");
        assert!(c.boundary_flux <= BOUNDARY_FLUX, "{c:?}");
        // the Hessian-contracted reading is a different number
        let hess = c.extra.iter().find(|(k, _)| k == "hessian_contracted_lhs").unwrap().1;
        assert!((hess - c.rhs).abs() > 100.0 * c.tolerance);
        let mid = c.extra.iter().find(|(k, _)| k == "d_hessian_gradient_over_n_minus_2").unwrap().1;
        assert!((mid - c.rhs).abs() <= c.tolerance);
    }
}

#[test]
fn odd_powers_need_positive_potential() {
    let m = model("warped5");
    assert!(check_main_identity(&m, 0.0, 1.5, 3, rule()).is_err());
    assert!(check_main_identity(&m, 0.5, 1.5, 1, rule()).is_err());
    assert!(check_3d_identity(&model("s3"), 3, rule()).is_err());
    assert!(check_full_divergence_identity(&model("s4"), 3, rule()).is_err());
}

#[test]
fn regions_must_be_bounded_by_level_sets() {
    let m = model("warped5");
    // f reaches 0.1 only beyond the left end of the window
    assert!(check_main_identity(&m, 0.1, 1.5, 2, rule()).is_err());
    assert!(integrate_profile(&model("h3"), Region::ClosedManifold, rule(), |_| 1.0).is_err());
    assert!(integrate_profile(&model("s3"), Region::BetweenLevels { c1: 0.5, c2: 0.2 }, rule(), |_| 1.0).is_err());
    assert!(integrate_profile(&model("s3"), Region::BetweenLevels { c1: 2.0, c2: 3.0 }, rule(), |_| 1.0).is_err());
}

#[test]
fn exact_coefficients() {
    for p in 1..12i64 {
        assert_eq!(full_divergence_coefficient(4, p), Rational64::from_integer(0));
        assert_eq!(full_divergence_coefficient(3, p), Rational64::new(p, 4));
        assert_eq!(cotton_identity_coefficient(p), Rational64::new(-p, 4));
    }
    assert_eq!(full_divergence_coefficient(5, 2), Rational64::new(-1, 12));
}

#[test]
fn full_divergence_identity_on_closed_members() {
    for name in ["s4", "s1xs3", "periodic4", "s1xs4", "periodic5", "s1xs2xs2"] {
        let m = model(name);
        for p in [2, 4] {
            let c = check_full_divergence_identity(&m, p, rule()).unwrap();
            assert!(c.passed(), "{name} p={p}: {c:?}");
            if m.dim() == 4 {
                assert!(c.lhs.abs() <= IDENTITY_TOL, "{name}: {c:?}");
            }
        }
    }
}

#[test]
fn cotton_integrals_vanish_on_closed_three_dimensional_members() {
    for name in ["s3", "s1xs2", "periodic3"] {
        let c = check_3d_identity(&model(name), 2, rule()).unwrap();
        let csq = c.extra[0].1;
        assert!(c.lhs.abs() <= INTEGRAL_VANISHING && csq.abs() <= INTEGRAL_VANISHING, "{name}: {c:?}");
        assert!(c.passed());
    }
}

#[test]
fn node_doubling_is_converged() {
    let m = model("warped5");
    let c = check_main_identity(&m, 0.6, 1.4, 2, rule()).unwrap();
    assert!(c.converged, "{c:?}");
    assert_eq!(c.node_counts[1], 2 * c.node_counts[0]);
    let coarse = check_main_identity(&m, 0.6, 1.4, 2, QuadratureRule { gauss: 8, periodic: 12 }).unwrap();
    assert!((coarse.lhs - c.lhs).abs() <= c.tolerance);
}

#[test]
fn gauss_legendre_weights_sum_to_length() {
    for m in [1, 4, 16, 40] {
        let w: f64 = gauss_legendre(m, -0.3, 2.2).iter().map(|p| p.1).sum();
        assert!((w - 2.5).abs() <= 1e-13);
    }
}

#[test]
fn identity_holds_across_integrator_tolerances() {
    use std::sync::Arc;
    use staticlab::geometry::{ClosedProfile, Coordinate, FiberFactor};
    use staticlab::statics::manufacture_static_multiwarped;

    let s2 = FiberFactor::Sphere { dim: 2, radius: 1.0 };
    for tol in [1e-6, 1e-7, 1e-8, 1e-9] {
        let m = manufacture_static_multiwarped(
            "warped5-sweep",
            Arc::new(ClosedProfile::affine_sine(2.0, 0.3, 1.0)),
            [s2.clone(), s2.clone()],
            Coordinate::interval("s", -0.6, 1.1),
            0.0,
            1.0,
            0.8,
            1.5,
            0.0,
            tol,
        )
        .unwrap();
        let unified = m.check(&m.sample_points(10, 2), false).unwrap().unified;
        assert!(unified <= UNIFIED_RESIDUAL, "tol {tol}: {unified}");
        let c = check_main_identity(&m, 0.5, 1.5, 2, rule()).unwrap();
        assert!(c.passed(), "tol {tol}: {c:?}");
    }
}
