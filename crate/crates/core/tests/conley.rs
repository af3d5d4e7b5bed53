use std::collections::{BTreeSet, HashSet};
use std::time::Instant;

use conley_core::conley::fixtures::{corrupt_exit, saddle_fixture, trivial_index_fixture};
use conley_core::conley::*;
use proptest::prelude::*;

fn sq(x: u32, y: u32) -> Vec<u32> {
    vec![2 * x + 1, 2 * y + 1]
}

#[test]
fn homology_engine_oracles() {
    let t = Instant::now();
    let b = |n1: &[Vec<u32>], n2: &[Vec<u32>]| relative_homology_cells(2, n1, n2).unwrap().betti.0;
    assert_eq!(b(&[vec![2, 2]], &[]), vec![1, 0, 0]);
    assert_eq!(b(&[vec![0, 0], vec![6, 2]], &[]), vec![2, 0, 0]);
    let ring: Vec<_> = [(0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (1, 2), (2, 2)]
        .iter()
        .map(|&(x, y)| sq(x, y))
        .collect();
    assert_eq!(b(&ring, &[]), vec![1, 1, 0]);
    let solid: Vec<_> = (0..3).flat_map(|x| (0..3).map(move |y| sq(x, y))).collect();
    assert_eq!(b(&solid, &[]), vec![1, 0, 0]);
    // boundary of the 3×3 block as twelve unit edges
    let mut boundary = Vec::new();
    for k in 0..3u32 {
        let m = 2 * k + 1;
        boundary.extend([vec![m, 0], vec![m, 6], vec![0, m], vec![6, m]]);
    }
    assert_eq!(b(&solid, &boundary), vec![0, 0, 1]);
    assert!(t.elapsed().as_secs_f64() < 1.0);
}

// Independent planar oracle: b0 by flood fill over closed squares (sharing a
// vertex connects), χ = V - E + F by direct counting, b1 = b0 - χ.
fn planar_oracle(squares: &BTreeSet<(u32, u32)>) -> (usize, usize) {
    let mut verts = HashSet::new();
    let mut edges = HashSet::new();
    for &(x, y) in squares {
        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            verts.insert((x + dx, y + dy));
        }
        edges.extend([(x, y, 'h'), (x, y + 1, 'h'), (x, y, 'v'), (x + 1, y, 'v')]);
    }
    let chi = verts.len() as i64 - edges.len() as i64 + squares.len() as i64;
    let mut seen = HashSet::new();
    let mut components = 0;
    for &s in squares {
        if !seen.insert(s) {
            continue;
        }
        components += 1;
        let mut stack = vec![s];
        while let Some((x, y)) = stack.pop() {
            for &t in squares {
                if (t.0 as i64 - x as i64).abs() <= 1 && (t.1 as i64 - y as i64).abs() <= 1 && seen.insert(t) {
                    stack.push(t);
                }
            }
        }
    }
    (components, (components as i64 - chi) as usize)
}

proptest! {
    #[test]
    fn planar_sets_match_the_counting_oracle(cells in proptest::collection::btree_set((0u32..5, 0u32..5), 0..18)) {
        let gens: Vec<_> = cells.iter().map(|&(x, y)| sq(x, y)).collect();
        let r = relative_homology_cells(2, &gens, &[]).unwrap();
        let (b0, b1) = planar_oracle(&cells);
        prop_assert_eq!(r.betti.0, vec![b0, b1, 0]);
        prop_assert!(r.euler_consistent);
    }

    #[test]
    fn relative_euler_characteristic(
        cells in proptest::collection::btree_set((0u32..4, 0u32..4, 0u32..2), 1..14),
        cut in 0usize..6,
    ) {
        let gens: Vec<Vec<u32>> = cells.iter().map(|&(x, y, z)| vec![2 * x + 1, 2 * y + 1, 2 * z + 1]).collect();
        let sub: Vec<Vec<u32>> = gens.iter().take(cut).cloned().collect();
        let r = relative_homology_cells(3, &gens, &sub).unwrap();
        prop_assert!(r.euler_consistent);
        let alt: i64 = r.cell_counts.iter().enumerate().map(|(q, &n)| if q % 2 == 0 { n as i64 } else { -(n as i64) }).sum();
        prop_assert_eq!(r.betti.euler(), alt);
    }
}

#[test]
fn saddle_exit_time_closed_form() {
    let fx = saddle_fixture(20).unwrap();
    let v = g_plus(&fx.process, &fx.grid, &[0.0, 0.5, 0.0], &fx.u, 10.0, 0.005);
    assert!((v - 2f64.ln()).abs() < 0.005, "{v}");
}

#[test]
fn saddle_pair_has_the_index_of_a_one_dimensional_unstable_set() {
    let t = Instant::now();
    let fx = saddle_fixture(20).unwrap();
    let pair = fx.build().unwrap();
    assert!(relative_homology(&pair).unwrap().betti.matches(&[0, 1, 0]));
    for big in [0.0, 1.0, 5.0] {
        let e = enlarge_exit(&fx.process, &pair, big, fx.options.dt).unwrap();
        let h = relative_homology(&e).unwrap();
        assert!(h.betti.matches(&[0, 1, 0]), "T = {big}: {}", h.betti);
        assert!(h.euler_consistent);
    }
    let fine = fx.refined(2).unwrap().build().unwrap();
    assert!(relative_homology(&fine).unwrap().betti.matches(&[0, 1, 0]));
    assert!(t.elapsed().as_secs_f64() < 60.0);
}

#[test]
fn saddle_pair_validates_and_corruption_is_caught() {
    let fx = saddle_fixture(20).unwrap();
    let pair = fx.build().unwrap();
    let r = validate_index_pair(&fx.process, &pair, 10_000, fx.validation_horizon(), 0.01, 0);
    assert_eq!(r.samples, 10_000);
    assert!(r.passed(), "{r:?}");
    let bad = corrupt_exit(&pair).unwrap();
    let r = validate_index_pair(&fx.process, &bad, 10_000, fx.validation_horizon(), 0.01, 0);
    assert!(r.ip2_violations >= 1);
    assert!(!r.witnesses.is_empty());
    // an empty pair passes vacuously
    let empty = IndexPair::from_sets(fx.grid.clone(), CubeSet::empty(&fx.grid), CubeSet::empty(&fx.grid)).unwrap();
    assert!(validate_index_pair(&fx.process, &empty, 100, 1.0, 0.01, 0).passed());
}

#[test]
fn exit_enlargement_is_monotone_and_saturates() {
    let fx = saddle_fixture(20).unwrap();
    let pair = fx.build().unwrap();
    let mut prev = pair.n2.clone();
    for big in [0.5, 1.0, 2.0, 20.0] {
        let e = enlarge_exit(&fx.process, &pair, big, fx.options.dt).unwrap();
        assert!(prev.is_subset(&e.n2));
        assert_eq!(e.n1, pair.n1);
        prev = e.n2;
    }
    // the cubes left out at saturation are the ones holding never-exiting samples
    let rest = pair.n1.difference(&prev);
    assert!(!rest.is_empty());
    for i in rest.iter() {
        let (lo, hi) = fx.grid.cube_bounds(i)[1];
        assert!(lo <= 0.0 && hi >= 0.0);
    }
}

#[test]
fn trivial_index_family_below_the_fold() {
    let fx = trivial_index_fixture(-0.5, 0.1, 32, 8).unwrap();
    let pair = fx.build().unwrap();
    let h = relative_homology(&pair).unwrap();
    assert!(h.betti.is_zero(), "{}", h.betti);
    assert!(h.euler_consistent);
}

#[test]
fn trivial_index_family_pair_validates_at_two_connections() {
    let fx = trivial_index_fixture(1.0, 0.1, 32, 8).unwrap();
    let pair = fx.build().unwrap();
    assert!(!pair.n1.is_empty());
    let r = validate_index_pair(&fx.process, &pair, 10_000, fx.validation_horizon(), 0.01, 0);
    assert_eq!((r.ip2_violations, r.ip3_violations), (0, 0), "{:?}", r.witnesses);
    assert!(r.ip1_structural);
}

#[test]
fn pair_json_round_trip() {
    let fx = saddle_fixture(10).unwrap();
    let pair = fx.build().unwrap();
    let text = pair.to_json();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["n1"].is_array() && v["n2"].is_array() && v["grid"].is_object());
    let back = IndexPair::from_json(&text).unwrap();
    assert_eq!(back, pair);
    assert!(IndexPair::from_json(r#"{"grid": 3}"#).is_err());
}
