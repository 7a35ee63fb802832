use std::f64::consts::PI;

use proptest::prelude::*;
use staticlab::config::{lookup, Construction, ModelSpec, ProfileSpec};
use staticlab::geometry::{Coordinate, FiberFactor};
use staticlab::statics::{ModelKind, StaticModel};
use staticlab::tensor::flat;
use staticlab::tolerances::*;

fn with_potential(name: &str, kind: ModelKind, f: ProfileSpec) -> StaticModel {
    let mut spec = lookup(name).unwrap();
    spec.kind = kind;
    spec.potential = Some(f);
    spec.build().unwrap()
}

fn max_kind_residual(m: &StaticModel, points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|x| m.kind_residual(&m.at(x, 3).unwrap()).max_abs())
        .fold(0.0, f64::max)
}

#[test]
fn height_function_on_unit_sphere_is_static() {
    let m = with_potential("s3", ModelKind::Static, ProfileSpec::Cosine { amplitude: 1.0, frequency: 1.0 });
    let pts = m.sample_points(9, 4);
    assert!(max_kind_residual(&m, &pts) <= STATIC_EXACT);
}

#[test]
fn sine_on_circle_times_sphere_is_static() {
    let m = with_potential(
        "s1xs2",
        ModelKind::Static,
        ProfileSpec::Sine { amplitude: 1.0, frequency: 1.0, phase: 0.0 },
    );
    assert!(max_kind_residual(&m, &m.sample_points(9, 4)) <= STATIC_EXACT);
}

#[test]
fn quadratic_potential_is_not_static() {
    // s(2 pi - s) has constant second derivative, so Hess f is not proportional to f Ric
    let m = with_potential(
        "s1xs2",
        ModelKind::Static,
        ProfileSpec::Polynomial { coeffs: vec![0.0, 2.0 * PI, -1.0] },
    );
    let pts: Vec<Vec<f64>> = [0.5, 1.5, 3.0, 4.5]
        .iter()
        .map(|&s| m.warped_product().unwrap().point(s, &[1.0, 0.5]))
        .collect();
    assert!(max_kind_residual(&m, &pts) > 1e-2);
}

#[test]
fn flat_torus_with_constant_potential_is_exact() {
    let m = lookup("t3").unwrap().build().unwrap();
    let r = max_kind_residual(&m, &m.sample_points(5, 4));
    assert!(r <= 1e-14, "{r}");
}

#[test]
fn vacuum_static_catalog_entries() {
    for name in ["s4", "h3", "s1xs3", "s1xs4", "s1xs2xs2", "rxh2"] {
        let m = lookup(name).unwrap().build().unwrap();
        assert_eq!(m.kind, ModelKind::VacuumStatic);
        let r = max_kind_residual(&m, &m.sample_points(7, 3));
        assert!(r <= VACUUM_STATIC, "{name}: {r}");
    }
}

#[test]
fn trace_identity_holds_on_every_registered_model() {
    for spec in staticlab::config::registry() {
        let m = spec.build().unwrap();
        let c = m.check(&m.sample_points(5, 2), false).unwrap();
        assert!(c.trace_identity <= TRACE_IDENTITY, "{}: {}", m.name, c.trace_identity);
    }
}

#[test]
fn cpe_solutions_in_this_sign_convention() {
    // f = 1 + c cos s on the unit 3-sphere
    let m = lookup("s3-cpe").unwrap().build().unwrap();
    let pts = m.sample_points(9, 3);
    assert!(m.scalar_curvature_variation(&pts).unwrap() <= 1e-8);
    assert!(max_kind_residual(&m, &pts) <= STATIC_EXACT);

    // f = 1 on Einstein spaces
    for name in ["s3", "s4"] {
        let m = with_potential(name, ModelKind::Cpe, ProfileSpec::Constant { value: 1.0 });
        assert!(max_kind_residual(&m, &m.sample_points(5, 3)) <= 1e-12, "{name}");
    }

    // f = -1 solves the opposite sign convention only, so it fails here
    let m = with_potential("s3", ModelKind::Cpe, ProfileSpec::Constant { value: -1.0 });
    assert!(max_kind_residual(&m, &m.sample_points(5, 3)) > 1.0);

    // on a Ricci-flat metric any constant works
    let mut spec = lookup("t3").unwrap();
    spec.kind = ModelKind::Cpe;
    spec.potential = Some(ProfileSpec::Constant { value: 3.5 });
    let m = spec.build().unwrap();
    assert!(max_kind_residual(&m, &m.sample_points(5, 3)) <= 1e-14);
}

#[test]
fn psi_routes_agree_and_vanish_at_critical_points() {
    for name in ["warped5", "s3-cpe", "s1xs3", "periodic4"] {
        let m = lookup(name).unwrap().build().unwrap();
        let c = m.check(&m.sample_points(8, 3), false).unwrap();
        assert!(c.psi_routes <= PSI_ROUTES, "{name}: {}", c.psi_routes);
    }
    // sin s has f' = 0 at s = pi/2
    let m = lookup("s1xs2").unwrap().build().unwrap();
    let x = m.warped_product().unwrap().point(PI / 2.0, &[1.0, 0.3]);
    let p = m.at(&x, 3).unwrap();
    let psi = p.psi().unwrap();
    assert!(psi.iter().all(|v| v.abs() <= 1e-12), "{psi:?}");
}

#[test]
fn augmented_cotton_routes_on_nonzero_model() {
    let m = lookup("warped5").unwrap().build().unwrap();
    let pts = m.sample_points(25, 4);
    assert!(pts.len() >= 100);
    let c = m.check(&pts, false).unwrap();
    assert!(c.d_routes <= D_ROUTES, "{}", c.d_routes);
    assert!(c.d_max > 0.1, "{}", c.d_max);
}

#[test]
fn augmented_cotton_is_antisymmetric_and_trace_free() {
    let m = lookup("warped5").unwrap().build().unwrap();
    let n = m.dim();
    for x in m.sample_points(5, 3) {
        let p = m.at(&x, 3).unwrap();
        let d = p.d_tensor().unwrap();
        let ginv = m.metric.values_at(&x).map(|g| staticlab::tensor::invert(&g, n)).unwrap();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = d.components[flat(n, &[i, j, k])] + d.components[flat(n, &[j, i, k])];
                    assert!(a.abs() <= SYMMETRY_LOW_ORDER);
                }
            }
        }
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            assert!(d.trace(a, b, &ginv).max_abs() <= SYMMETRY_LOW_ORDER);
        }
    }
}

#[test]
fn augmented_cotton_vanishes_on_height_functions() {
    for name in ["s3", "s1xs2", "warped5-single"] {
        let m = lookup(name).unwrap().build().unwrap();
        let c = m.check(&m.sample_points(7, 3), false).unwrap();
        assert!(c.d_max <= D_FLAT && c.d_routes <= D_ROUTES, "{name}: {c:?}");
    }
}

#[test]
fn augmented_cotton_in_three_dimensions_is_f_squared_cotton() {
    let m = lookup("s3-cpe").unwrap().build().unwrap();
    for x in m.sample_points(4, 2) {
        let p = m.at(&x, 3).unwrap();
        let c = p.curv.cotton().unwrap().scaled(p.f_value().powi(2));
        assert!(p.d_tensor().unwrap().max_diff(&c) <= 1e-12);
    }
}

#[test]
fn bach_rewrite_pointwise() {
    for name in ["s3", "s1xs3", "warped5"] {
        let m = lookup(name).unwrap().build().unwrap();
        let c = m.check(&m.sample_points(6, 2), true).unwrap();
        assert!(c.bach_rewrite <= BACH_REWRITE, "{name}: {}", c.bach_rewrite);
    }
}

#[test]
fn manufactured_potentials_recover_closed_forms() {
    let sphere = lookup("s3-manufactured").unwrap().build().unwrap();
    let circle = lookup("s1xs2-manufactured").unwrap().build().unwrap();
    for s in [0.3, 1.0, 1.5, 2.4, 2.9] {
        let f = sphere.f_profile.as_ref().unwrap().value(s);
        assert!((f - s.cos()).abs() <= 1e-10, "s3 at {s}: {f}");
    }
    for s in [0.1, 1.0, 3.0, 5.0, 6.2] {
        let f = circle.f_profile.as_ref().unwrap().value(s);
        assert!((f - s.sin()).abs() <= 1e-10, "s1xs2 at {s}: {f}");
    }
    // sin closes up over the period, so the chart stays periodic
    assert!(circle.warped_product().unwrap().s.is_periodic());
    for m in [&sphere, &circle] {
        let c = m.check(&m.sample_points(7, 3), false).unwrap();
        assert!(c.unified <= UNIFIED_RESIDUAL, "{}: {}", m.name, c.unified);
    }
}

#[test]
fn manufactured_models_solve_the_unified_equation() {
    for name in ["warped5", "warped5-single"] {
        let m = lookup(name).unwrap().build().unwrap();
        let c = m.check(&m.sample_points(12, 3), false).unwrap();
        assert!(c.unified <= UNIFIED_RESIDUAL, "{name}: {}", c.unified);
    }
}

#[test]
fn zero_initial_data_is_rejected() {
    let mut spec = lookup("warped5-single").unwrap();
    if let Construction::ManufacturedWarped { f0, df0, .. } = &mut spec.construction {
        *f0 = 0.0;
        *df0 = 0.0;
    }
    assert!(spec.build().is_err());
}

#[test]
fn perturbation_raises_residual_linearly() {
    let m = lookup("warped5").unwrap().build().unwrap();
    let pts = m.sample_points(15, 2);
    let base = m.check(&pts, false).unwrap().unified;
    let res = |eps: f64| m.perturbed(eps, 0.2, 0.3).unwrap().check(&pts, false).unwrap().unified;
    let (a, b) = (res(1e-3), res(1e-4));
    assert!(a > 100.0 * base.max(1e-12), "{a} vs {base}");
    let ratio = a / b;
    assert!((ratio - 10.0).abs() < 0.5, "ratio {ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn manufactured_warps_over_spheres(base in 1.5f64..3.0, amp in 0.0f64..0.4, freq in 0.5f64..1.5,
                                       df0 in -1.0f64..1.0) {
        let spec = ModelSpec::new(
            "random-warp",
            3,
            ModelKind::Static,
            Construction::ManufacturedWarped {
                s: Coordinate::interval("s", -0.5, 0.5),
                warp: ProfileSpec::AffineSine { base, amplitude: amp, frequency: freq },
                fiber: vec![FiberFactor::Sphere { dim: 2, radius: 1.0 }],
                s0: 0.0,
                f0: 1.0,
                df0,
            },
            None,
        );
        let m = spec.build().unwrap();
        let c = m.check(&m.sample_points(6, 2), false).unwrap();
        prop_assert!(c.unified <= UNIFIED_RESIDUAL);
        prop_assert!(c.trace_identity <= TRACE_IDENTITY);
        prop_assert!(c.d_routes <= D_ROUTES);
    }
}
