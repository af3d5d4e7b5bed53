use conley_core::connections::*;
use conley_core::dynamics::{Equilibrium, FieldTag};
use conley_core::fields::catalog::{catalog_example, gradient_cubic, trivial_index_field};
use conley_core::fields::{BoxDomain, GSpec, IntegratorSettings, ProblemSpec, Tolerances};
use proptest::prelude::*;

fn endpoints(c: f64) -> (ProblemSpec, Equilibrium, Equilibrium) {
    let p = catalog_example(c, 0.1).unwrap();
    let f = trivial_index_field(c, 0.1).unwrap();
    let gap = p.tolerances.spectral_gap_tol;
    let src = Equilibrium::at_point(f.limit_neg().unwrap(), vec![0.0, -c], FieldTag::NegInfinity, gap).unwrap();
    let dst = Equilibrium::at_point(f.limit_pos().unwrap(), vec![0.0, 0.0], FieldTag::PosInfinity, gap).unwrap();
    (p, src, dst)
}

fn f_connections(c: f64, opts: impl Fn(ShootOptions) -> ShootOptions) -> Vec<Connection> {
    let (p, src, dst) = endpoints(c);
    shoot_connections(&p, &src, &dst, &opts(ShootOptions::from_problem(&p))).unwrap()
}

#[test]
fn sweep_reproduces_counts_and_intersection_points() {
    let cs = [-0.5, 0.0, 0.25, 1.0];
    let rows = count_connections_sweep(|c| catalog_example(c, 0.1), &cs, ShootOptions::from_problem);
    let f: Vec<_> = rows.iter().map(|r| r.f_count.unwrap()).collect();
    assert_eq!(f, vec![0, 1, 2, 2]);
    for r in &rows {
        assert!(r.error.is_none());
        if r.c > 0.0 {
            assert_eq!(r.g_count, Some(1), "c = {}", r.c);
        }
    }
    // W^u(e⁻) = {(h, h² - c)} meets W^s(e⁺) = ℝ × {0} at (±√c, 0)
    for r in rows.iter().filter(|r| r.c > 0.0) {
        let root = r.c.sqrt();
        let mut xs: Vec<f64> = r.f_u0.iter().map(|u| u[0]).collect();
        xs.sort_by(f64::total_cmp);
        for (x, want) in xs.iter().zip([-root, root]) {
            assert!((x - want).abs() < 1e-3, "c = {}: {x} vs {want}", r.c);
        }
        for u in &r.f_u0 {
            assert!(u[1].abs() < 1e-3);
        }
        // the g-solution passes through W^u(e⁺) ∩ W^s(e⁻) = {0}
        assert!(r.g_u0[0].iter().all(|v| v.abs() < 1e-3));
    }
    assert!(cs.iter().zip(&rows).all(|(c, r)| *c == r.c));
    assert!(count_connections_sweep(|c| catalog_example(c, 0.1), &[], ShootOptions::from_problem).is_empty());
}

#[test]
fn refined_connection_follows_the_closed_form_unstable_manifold() {
    // for t ≤ -1 the equation is x1' = x1, x2' = -x2 + 3x1² - c, whose unstable
    // manifold is x2 = x1² - c; on [-1, 0] the same field is slowed by the
    // ramp rate, whose integral over the interval is 1
    for conn in f_connections(1.0, |o| o) {
        let u = &conn.trajectory;
        for t in [-15.0, -8.0, -3.0, -1.0, 0.0] {
            let x = u.at(t).unwrap();
            assert!((x[1] - (x[0] * x[0] - 1.0)).abs() < 1e-6, "t = {t}: {x:?}");
        }
        let a = u.at(-1.0).unwrap()[0];
        let b = u.at(0.0).unwrap()[0];
        assert!((b - a * std::f64::consts::E).abs() < 1e-6, "{a} {b}");
        assert!(conn.max_endpoint_error() <= 1e-5);
        assert!(conn.settled);
    }
}

#[test]
fn weak_hyperbolicity_verdicts() {
    let conns = f_connections(1.0, |o| o);
    assert_eq!(conns.len(), 2);
    let (p, _, _) = endpoints(1.0);
    for conn in &conns {
        let r = weak_hyperbolicity(&p, conn);
        assert_eq!(r.intersection_dim, Some(0));
        assert_eq!(conn.weakly_hyperbolic, Some(true));
        // TW^u at (±1, 0) is spanned by (1, ±2); TW^s by (1, 0)
        let v = &r.unstable_tangent[0];
        let slope = 2.0 * conn.u0[0].signum();
        assert!((v[1] - slope * v[0]).abs() < 1e-4, "{v:?}");
        assert!(r.stable_tangent[0][1].abs() < 1e-6);
    }
    let tangential = f_connections(0.0, |o| o);
    assert_eq!(tangential.len(), 1);
    assert_eq!(tangential[0].tangent_intersection_dim, Some(1));
    assert_eq!(tangential[0].weakly_hyperbolic, Some(false));

    // the g-solution through 0
    let p = catalog_example(1.0, 0.1).unwrap();
    let set = find_all_connections(&p, &ShootOptions::from_problem(&p)).unwrap();
    assert_eq!(set.g_connections.len(), 1);
    let v = &set.g_connections[0];
    assert_eq!(v.tangent_intersection_dim, Some(0));
    assert_eq!(weak_hyperbolicity(&p.swapped(), v).weakly_hyperbolic, Some(true));
}

#[test]
fn counts_stable_under_more_seeds_and_tighter_tolerance() {
    for c in [0.25, 1.0] {
        let base = f_connections(c, |o| o).len();
        let fine = f_connections(c, |o| ShootOptions {
            n_seeds: 2 * o.n_seeds,
            tol: 0.5 * o.tol,
            ..o
        })
        .len();
        assert_eq!((base, fine), (2, 2), "c = {c}");
    }
}

#[test]
fn index_bookkeeping() {
    let ok = f_connections(1.0, |o| o);
    assert!(check_index_monotonicity(&ok).is_empty());
    for c in &ok {
        assert!(c.morse_source >= c.morse_target);
    }
    // equal indices on a tangential connection are reported
    let bad = check_index_monotonicity(&f_connections(0.0, |o| o));
    assert_eq!(bad.len(), 1);
    assert_eq!(bad[0].kind, IndexViolationKind::EqualNotWeaklyHyperbolic);
}

#[test]
fn exhaustive_search_finds_no_bounded_solution_below_the_fold() {
    let p = catalog_example(-0.5, 0.1).unwrap();
    let s = exhaustive_bounded_search(&p, &SearchOptions::from_problem(&p)).unwrap();
    assert_eq!(s.points_tested, 41 * 41);
    assert_eq!(s.count, 0);
    // positive control: the grid contains (±1, 0), the two connections at c = 1
    let p = catalog_example(1.0, 0.1).unwrap();
    let s = exhaustive_bounded_search(&p, &SearchOptions::from_problem(&p)).unwrap();
    assert_eq!(s.count, 2);
    assert_eq!(s.bounded, vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
}

#[test]
fn gradient_phase_line() {
    // x' = x - x³: the repeller 0 connects to both attractors ±1
    let f = gradient_cubic().unwrap();
    let p = ProblemSpec::new(
        f,
        GSpec::TimeReverse,
        BoxDomain::cube(1, 2.0),
        IntegratorSettings::default(),
        Tolerances::default(),
    )
    .unwrap();
    let set = find_all_connections(&p, &ShootOptions::from_problem(&p)).unwrap();
    let mut ends: Vec<f64> = set.f_connections.iter().map(|c| c.target.point[0]).collect();
    ends.sort_by(f64::total_cmp);
    assert_eq!(ends.len(), 2);
    assert!((ends[0] + 1.0).abs() < 1e-12 && (ends[1] - 1.0).abs() < 1e-12);
    for c in &set.f_connections {
        assert_eq!(c.source.point, vec![0.0]);
        assert_eq!((c.morse_source, c.morse_target), (1, 0));
        assert_eq!(c.weakly_hyperbolic, Some(true));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 3, ..ProptestConfig::default() })]

    #[test]
    fn count_independent_of_jitter_seed(seed in any::<u64>()) {
        let n = f_connections(1.0, |o| ShootOptions { seed, ..o }).len();
        prop_assert_eq!(n, 2);
    }
}
