use std::collections::BTreeMap;

use conley_core::dynamics::{find_equilibria, flow_endpoint, integrate_field, morse_index, FieldTag, StepOptions};
use conley_core::fields::catalog::gradient_cubic;
use conley_core::fields::{parse_field_expression, BoxDomain};
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn rk4_decay_against_exp() {
    let f = parse_field_expression("-x1", 1, &BTreeMap::new()).unwrap();
    let traj = integrate_field(&f, 0.0, &[1.0], 5.0, &StepOptions::rk4(0.01)).unwrap();
    for t in [0.5, 1.234, 5.0] {
        let x = traj.at(t).unwrap()[0];
        assert!((x - (-t).exp()).abs() < 1e-9, "t = {t}: {x}");
    }
    let csv = traj.to_csv();
    assert!(csv.starts_with("t,x1\n"));
    assert_eq!(csv.lines().count(), traj.len() + 1);
}

#[test]
fn backward_integration_inverts_forward() {
    let f = parse_field_expression("x2; -sin(x1)", 2, &BTreeMap::new()).unwrap();
    let x0 = [1.0, 0.2];
    let x1 = flow_endpoint(&f, 0.0, &x0, 3.0, 0.005, None).unwrap().unwrap();
    let back = flow_endpoint(&f, 3.0, &x1, 0.0, 0.005, None).unwrap().unwrap();
    assert!((back[0] - x0[0]).abs() < 1e-9 && (back[1] - x0[1]).abs() < 1e-9);
    // pendulum energy is conserved to integrator accuracy
    let energy = |x: &[f64]| 0.5 * x[1] * x[1] - x[0].cos();
    assert!((energy(&x1) - energy(&x0)).abs() < 1e-9);
}

#[test]
fn escape_box_stops_the_flow() {
    let f = parse_field_expression("x1", 1, &BTreeMap::new()).unwrap();
    let out = flow_endpoint(&f, 0.0, &[0.5], 10.0, 0.01, Some(&BoxDomain::cube(1, 1.0))).unwrap();
    assert!(out.is_none());
}

#[test]
fn phase_line_equilibria() {
    let f = gradient_cubic().unwrap();
    let s = find_equilibria(&f, FieldTag::Autonomous, &BoxDomain::cube(1, 2.0), 10, 1e-12, 1e-6).unwrap();
    let got: Vec<(f64, usize)> = s.equilibria.iter().map(|e| (e.point[0], e.morse_index)).collect();
    assert_eq!(got.len(), 3);
    for ((x, m), (wx, wm)) in got.iter().zip([(-1.0, 0), (0.0, 1), (1.0, 0)]) {
        assert!((x - wx).abs() < 1e-10 && *m == wm, "{got:?}");
    }
    assert!(s.equilibria.iter().all(|e| e.hyperbolic && e.residual < 1e-10));
    let t = parse_field_expression("x1*t", 1, &BTreeMap::new()).unwrap();
    assert!(find_equilibria(&t, FieldTag::Autonomous, &BoxDomain::cube(1, 1.0), 5, 1e-12, 1e-6).is_err());
}

proptest! {
    #[test]
    fn linear_flow_matches_the_matrix_exponential(a in -1.5..1.5f64, b in -1.5..1.5f64, t in 0.0..2.0f64) {
        let mut p = BTreeMap::new();
        p.insert("a".to_string(), a);
        p.insert("b".to_string(), b);
        let f = parse_field_expression("a*x1; b*x2 + x1", 2, &p).unwrap();
        let x = flow_endpoint(&f, 0.0, &[1.0, 0.0], t, 0.001, None).unwrap().unwrap();
        // x1 = e^{at}, x2 = (e^{at} - e^{bt}) / (a - b)
        let x2 = if (a - b).abs() < 1e-9 { t * (a * t).exp() } else { ((a * t).exp() - (b * t).exp()) / (a - b) };
        prop_assert!((x[0] - (a * t).exp()).abs() < 1e-9);
        prop_assert!((x[1] - x2).abs() < 1e-6 * (1.0 + x2.abs()));
    }

    #[test]
    fn morse_index_counts_unstable_directions(d in proptest::collection::vec(prop_oneof![-3.0..-0.1f64, 0.1..3.0f64], 1..5)) {
        let n = d.len();
        // a rotation conjugate of diag(d) has the same spectrum
        let mut j = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d.clone()));
        if n >= 2 {
            let mut q = DMatrix::<f64>::identity(n, n);
            let (c, s) = (0.6, 0.8);
            q[(0, 0)] = c; q[(0, 1)] = -s; q[(1, 0)] = s; q[(1, 1)] = c;
            j = &q * j * q.transpose();
        }
        let (m, hyperbolic) = morse_index(&j, 1e-6).unwrap();
        prop_assert!(hyperbolic);
        prop_assert_eq!(m, d.iter().filter(|&&v| v > 0.0).count());
    }
}
