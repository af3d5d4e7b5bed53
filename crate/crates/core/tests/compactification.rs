use std::f64::consts::FRAC_PI_2;

use conley_core::compactification::*;
use conley_core::fields::catalog::catalog_example;
use proptest::prelude::*;

#[test]
fn initial_element_uses_both_fields() {
    let p = catalog_example(1.0, 0.1).unwrap();
    let y = build_initial_element(&p, 0.05).unwrap();
    assert_eq!(y.rho(), 0.05);
    assert!(build_initial_element(&p, 1.0).is_err());
    // far along, the path sits at the rest points of the annulus flow
    let late = y.translated(40.0);
    assert!((late.angle_at(0.0) - y.angle_at(40.0)).abs() < 1e-12);
}

#[test]
fn hull_metric_is_a_pseudometric_on_samples() {
    let p = catalog_example(1.0, 0.1).unwrap();
    let q = catalog_example(0.5, 0.1).unwrap();
    let r = catalog_example(0.0, 0.1).unwrap();
    let opts = HullOptions { n_max: 3, per_axis: 9, dt: 0.1 };
    let d = |a: &conley_core::fields::VectorFieldSpec, b: &conley_core::fields::VectorFieldSpec| {
        hull_metric(a, b, &p.domain_box, &opts).unwrap()
    };
    assert_eq!(d(&p.f, &p.f), 0.0);
    assert!((d(&p.f, &q.f) - d(&q.f, &p.f)).abs() < 1e-15);
    assert!(d(&p.f, &r.f) <= d(&p.f, &q.f) + d(&q.f, &r.f) + 1e-9);
    assert!(d(&p.f, &q.f) > 0.0);
}

proptest! {
    #[test]
    fn gudermannian_inverse(s in -15.0..15.0f64) {
        prop_assert!((gd_inv(gd(s)) - s).abs() < 1e-8 * (1.0 + s.abs()));
        prop_assert!(gd(s).abs() < FRAC_PI_2);
    }

    #[test]
    fn radius_closed_form_and_semigroup(r0 in 0.5..=1.0f64, phi in -3.0..3.0f64, s in 0.0..5.0f64, t in 0.0..5.0f64) {
        let z = AnnulusPoint::new(r0, phi).unwrap();
        let a = annulus_flow(z, s + t);
        let b = annulus_flow(annulus_flow(z, s), t);
        prop_assert!((a.r - (1.0 - (1.0 - r0) * (-(s + t)).exp())).abs() < 1e-12);
        prop_assert!((a.r - b.r).abs() < 1e-12);
        prop_assert!((wrap_angle(a.phi - b.phi)).abs() < 1e-6, "{} vs {}", a.phi, b.phi);
    }

    #[test]
    fn unit_circle_angle_follows_closed_form(phi0 in -1.5..1.5f64, t in 0.0..6.0f64) {
        let z = AnnulusPoint::new(1.0, phi0).unwrap();
        let got = annulus_flow(z, t).phi;
        prop_assert!((got - angle_solution(phi0, t)).abs() < 1e-7, "{} vs {}", got, angle_solution(phi0, t));
    }
}
