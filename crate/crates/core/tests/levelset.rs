use std::f64::consts::PI;

use proptest::prelude::*;
use staticlab::config::lookup;
use staticlab::levelset::*;
use staticlab::statics::StaticModel;
use staticlab::tolerances::*;
use staticlab::Error;

fn model(name: &str) -> StaticModel {
    lookup(name).unwrap().build().unwrap()
}

/// Mean curvature of `{s} x F` for `f = f(s)`, normal along `grad f`:
/// `H = -sign(f') sum_i d_i r_i'/r_i`.
fn mean_curvature_oracle(m: &StaticModel, s: f64) -> f64 {
    let w = m.warped_product().unwrap();
    let fp = m.f_profile.as_ref().unwrap().taylor(s, 1)[1];
    let sum: f64 = w
        .blocks
        .iter()
        .map(|b| {
            let r = b.warp.taylor(s, 1);
            b.factor.dim() as f64 * r[1] / r[0]
        })
        .sum();
    -fp.signum() * sum
}

#[test]
fn equator_of_the_three_sphere_is_totally_geodesic() {
    let m = model("s3");
    let slices = level_set(&m, 0.0, 8).unwrap();
    assert_eq!(slices.len(), 1);
    let rep = &slices[0];
    assert!((rep.s - PI / 2.0).abs() <= 1e-12);
    for p in &rep.points {
        assert!(p.mean_curvature.abs() <= 1e-10 && p.a_sq <= 1e-20);
    }
}

#[test]
fn geodesic_spheres_have_the_closed_form_mean_curvature() {
    let m = model("s3");
    for c in [-0.7, -0.2, 0.3, 0.8] {
        let rep = &level_set(&m, c, 6).unwrap()[0];
        let s = c.acos();
        assert!((rep.s - s).abs() <= 1e-12);
        // f = cos s decreases, so the normal is -d/ds and H = 2 cot s
        let h = 2.0 / s.tan();
        for p in &rep.points {
            assert!((p.mean_curvature - h).abs() <= 1e-9, "c = {c}: {} vs {h}", p.mean_curvature);
            assert!(p.traceless_sq <= 1e-12);
        }
    }
}

#[test]
fn mean_curvature_matches_warp_oracle() {
    for name in ["warped5", "warped5-single", "periodic4", "noncompact3", "s1xs3"] {
        let m = model(name);
        let w = m.warped_product().unwrap();
        for s in w.s.samples(7) {
            let fp = m.f_profile.as_ref().unwrap().taylor(s, 1)[1];
            if fp.abs() < 1e-3 {
                continue;
            }
            let rep = slice_report(&m, s, 4).unwrap();
            let h = mean_curvature_oracle(&m, s);
            assert!((rep.points[0].mean_curvature - h).abs() <= 1e-9, "{name} at {s}");
            assert!(rep.mean_curvature_gap <= 1e-9);
        }
    }
}

#[test]
fn squared_augmented_cotton_identity_on_nonzero_model() {
    let m = model("warped5");
    let mut nontrivial = 0;
    for s in [-0.4, 0.0, 0.35, 0.7, 1.0] {
        let rep = slice_report(&m, s, 4).unwrap();
        assert!(rep.identity_residual <= LEVELSET_IDENTITY, "s = {s}: {}", rep.identity_residual);
        let (lhs, _) = rep.identity_sides();
        if lhs > 1e-6 {
            nontrivial += 1;
        }
        assert!(rep.umbilic_defect > 0.0);
    }
    assert!(nontrivial >= 4);
}

#[test]
fn slice_quantities_are_constant_along_level_sets() {
    for name in ["warped5", "s3", "s4", "s1xs2xs2", "periodic5", "rxh2"] {
        let m = model(name);
        let s = m.warped_product().unwrap().s.samples(5)[1];
        let rep = slice_report(&m, s, 8).unwrap();
        let c = rep.constancy;
        for v in [c.scalar, c.laplacian, c.mean_curvature, c.slice_scalar, c.r_nn] {
            assert!(v <= CONSTANCY, "{name}: {c:?}");
        }
        assert!(rep.gauss_residual <= GAUSS_CODAZZI && rep.codazzi_residual <= GAUSS_CODAZZI, "{name}");
    }
}

#[test]
fn umbilic_slices_when_augmented_cotton_vanishes() {
    for name in ["s1xs3", "periodic3", "warped5-single", "h3"] {
        let m = model(name);
        let s = m.warped_product().unwrap().s.samples(5)[2];
        let rep = slice_report(&m, s, 4).unwrap();
        assert!(rep.max_d_sq <= 1e-20 && rep.umbilic_defect <= 1e-12, "{name}: {rep:?}");
    }
}

#[test]
fn weyl_normal_component_is_gated() {
    match weyl_normal_check(&model("warped5"), 0.7, 4, D_FLAT).unwrap() {
        WeylNormal::NotApplicable { d_max, .. } => assert!(d_max > D_FLAT),
        other => panic!("expected gating, got {other:?}"),
    }
    for name in ["s1xs3", "periodic4", "s1xs2xs2"] {
        let m = model(name);
        let s = m.warped_product().unwrap().s.samples(5)[1];
        match weyl_normal_check(&m, s, 4, D_FLAT).unwrap() {
            WeylNormal::Applicable { max } => assert!(max <= WEYL_NORMAL, "{name}: {max}"),
            other => panic!("{name}: {other:?}"),
        }
    }
}

#[test]
fn slices_of_bach_flat_members_are_einstein() {
    for (name, k) in [("s3", 1.0), ("s4", 2.0), ("s1xs4", 3.0), ("periodic5", 3.0), ("rxh2", -1.0)] {
        let m = model(name);
        let s = m.warped_product().unwrap().s.samples(5)[1];
        let rep = slice_report(&m, s, 4).unwrap();
        assert!(rep.slice_einstein_deviation <= EINSTEIN_SLICE, "{name}");
        assert!((rep.slice_constant().unwrap() - k).abs() <= EINSTEIN_SLICE, "{name}");
    }
}

#[test]
fn critical_levels_are_rejected() {
    let m = model("s1xs2");
    let err = slice_report(&m, PI / 2.0, 2).unwrap_err();
    assert!(matches!(err, Error::NotRegular(..)), "{err}");
    assert!(level_set(&m, 2.0, 2).is_err());
    assert!(level_set(&model("t3"), 1.0, 2).is_err());
}

#[test]
fn level_sets_on_a_closed_circle_have_two_slices() {
    let slices = level_set(&model("s1xs2"), 0.5, 2).unwrap();
    assert_eq!(slices.len(), 2);
    assert!((slices[0].s - PI / 6.0).abs() <= 1e-12 && (slices[1].s - 5.0 * PI / 6.0).abs() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn identity_and_gauss_codazzi_on_random_slices(s in -0.5f64..1.0) {
        let m = model("warped5");
        let rep = slice_report(&m, s, 2).unwrap();
        prop_assert!(rep.identity_residual <= LEVELSET_IDENTITY);
        prop_assert!(rep.gauss_residual <= GAUSS_CODAZZI);
        prop_assert!(rep.codazzi_residual <= GAUSS_CODAZZI);
    }
}
