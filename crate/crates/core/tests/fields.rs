use std::collections::BTreeMap;

use conley_core::fields::catalog::{ramp, ramp_rate, trivial_index_field};
use conley_core::fields::{asymptotic_limits, eval_field, parse_field_expression, BoxDomain, ProblemError, ProblemSpec};
use proptest::prelude::*;

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn evaluation_matches_closed_form() {
    let f = parse_field_expression("a*x1*sin(t) + x2^2; exp(-x1) - tanh(x2)/2", 2, &params(&[("a", 3.0)])).unwrap();
    let (t, x) = (0.7, [0.3, -1.2]);
    let v = eval_field(&f, t, &x).unwrap();
    assert!((v[0] - (3.0 * 0.3 * 0.7f64.sin() + 1.44)).abs() < 1e-15);
    assert!((v[1] - ((-0.3f64).exp() - (-1.2f64).tanh() / 2.0)).abs() < 1e-15);
    assert!(!f.is_autonomous());
}

#[test]
fn parse_errors_are_reported() {
    let p = BTreeMap::new();
    assert!(parse_field_expression("x1 +", 1, &p).is_err());
    assert!(parse_field_expression("x3", 2, &p).is_err());
    assert!(parse_field_expression("x1; x2; x1", 2, &p).is_err());
    assert!(parse_field_expression("foo(x1)", 1, &p).is_err());
    assert!(parse_field_expression("b*x1", 1, &p).is_err());
}

#[test]
fn source_round_trip_and_time_reversal() {
    let f = parse_field_expression("x1 - x1^3 + cos(t)*x2; -x2 + atan(x1)", 2, &BTreeMap::new()).unwrap();
    let g = parse_field_expression(&f.to_source(), 2, &BTreeMap::new()).unwrap();
    let r = f.time_reversed();
    for (t, x) in [(0.0, [0.5, 0.1]), (-2.0, [1.5, -0.7]), (3.3, [-0.2, 2.0])] {
        assert_eq!(f.eval(t, &x).unwrap(), g.eval(t, &x).unwrap());
        // g(t, x) = f(-t, x)
        assert_eq!(f.eval(-t, &x).unwrap(), r.eval(t, &x).unwrap());
    }
}

#[test]
fn planar_family_approaches_its_limits() {
    let f = trivial_index_field(1.0, 0.1).unwrap();
    let (neg, pos, report) = asymptotic_limits(&f, &BoxDomain::cube(2, 2.0), 50.0, 1e-6).unwrap();
    let x = [0.4, -0.3];
    let far_neg = f.eval(-10.0, &x).unwrap();
    let far_pos = f.eval(10.0, &x).unwrap();
    assert_eq!(far_neg, neg.eval(0.0, &x).unwrap());
    assert_eq!(far_pos, pos.eval(0.0, &x).unwrap());
    // f⁻ = (x1, -x2 + 3x1² - c), f⁺ = (-x1 + εx2, x2)
    assert!((far_neg[1] - (0.3 + 3.0 * 0.16 - 1.0)).abs() < 1e-15);
    assert!((far_pos[0] - (-0.4 - 0.03)).abs() < 1e-15);
    assert!(serde_json::to_string(&report).is_ok());
    assert_eq!((ramp(-2.0), ramp(2.0), ramp_rate(2.0), ramp_rate(-1.0)), (0.0, 2.0, 1.0, 0.0));
}

#[test]
fn problem_files() {
    let text = r#"{
        "dimension": 1,
        "f": {"expr": "k*x1*(1 - x1)", "params": {"k": 2}},
        "domain_box": [[-1, 2]],
        "tolerances": {"newton_tol": 1e-12}
    }"#;
    let p = ProblemSpec::from_json(text).unwrap();
    assert_eq!(p.dimension(), 1);
    assert!(p.g_is_time_reverse);
    assert_eq!(p.tolerances.newton_tol, 1e-12);
    assert_eq!(p.f.eval(0.0, &[0.5]).unwrap(), vec![0.5]);
    match ProblemSpec::from_json("{\n  \"dimension\": 1,\n  \"f\": }") {
        Err(ProblemError::Json { offset, .. }) => assert_eq!(offset, 27),
        other => panic!("{other:?}"),
    }
    let wrong_box = r#"{"dimension": 2, "f": {"expr": "x1; x2"}, "domain_box": [[0, 1]]}"#;
    assert!(ProblemSpec::from_json(wrong_box).is_err());
    let inverted = r#"{"dimension": 1, "f": {"expr": "x1"}, "domain_box": [[1, 0]]}"#;
    assert!(ProblemSpec::from_json(inverted).is_err());
}

fn field_strategy() -> impl Strategy<Value = String> {
    let term = prop_oneof![
        Just("x1*x2"),
        Just("sin(x1)"),
        Just("exp(x2/3)"),
        Just("x1^3"),
        Just("tanh(x1 - x2)"),
        Just("atan(x2)*t"),
        Just("cos(t*x1)"),
    ];
    (term.clone(), term.clone(), term).prop_map(|(a, b, c)| format!("{a} - {b}; {b} + 2*{c}"))
}

proptest! {
    // the symbolic Jacobian agrees with central differences
    #[test]
    fn jacobian_matches_finite_differences(
        src in field_strategy(),
        t in -2.0..2.0f64,
        x in proptest::array::uniform2(-1.5..1.5f64),
    ) {
        let f = parse_field_expression(&src, 2, &BTreeMap::new()).unwrap();
        let j = f.jacobian_at(t, &x).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let (mut up, mut dn) = (x, x);
            up[k] += h;
            dn[k] -= h;
            let a = f.eval(t, &up).unwrap();
            let b = f.eval(t, &dn).unwrap();
            for i in 0..2 {
                let fd = (a[i] - b[i]) / (2.0 * h);
                prop_assert!((j[(i, k)] - fd).abs() < 1e-6 * (1.0 + fd.abs()), "{} d{}/dx{}: {} vs {}", src, i, k, j[(i, k)], fd);
            }
        }
    }
}
