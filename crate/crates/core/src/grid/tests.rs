use super::*;
use crate::rational::{int, rat};
use proptest::prelude::*;

fn t(p: i64, r: i64) -> RationalScalar {
    RationalScalar::new(p, r).unwrap()
}

fn cube(d: usize, q: u64) -> GridSet {
    GridSet::unit_cube(d, q).unwrap()
}

/// Oracle: a cell-anchored set and its sum compared cell by cell through
/// brute-force containment of all pairwise sums of sub-cell sample points.
fn brute_minkowski(a: &GridSet, b: &GridSet) -> GridSet {
    let mut cells = Vec::new();
    for x in a.cells() {
        for y in b.cells() {
            for mask in 0..(1u32 << a.dim()) {
                cells.push(
                    (0..a.dim())
                        .map(|i| x[i] + y[i] + ((mask >> i) & 1) as i64)
                        .collect::<Vec<_>>(),
                );
            }
        }
    }
    GridSet::new(a.dim(), a.q(), cells).unwrap()
}

#[test]
fn volume_examples() {
    assert_eq!(cube(2, 1).volume(), int(1));
    assert_eq!(cube(2, 4).volume(), int(1));
    assert_eq!(cube(2, 4).len(), 16);
    let s = GridSet::new(2, 2, [[0, 0], [3, 3]]).unwrap();
    assert_eq!(s.volume(), rat(1, 2));
}

#[test]
fn refine_examples() {
    let r = cube(1, 1).refine(3).unwrap();
    assert_eq!(r.q(), 3);
    assert_eq!(r.cells().map(|c| c[0]).collect::<Vec<_>>(), vec![0, 1, 2]);
    let s = GridSet::new(2, 2, [[0, 1], [5, -3]]).unwrap();
    assert_eq!(s.refine(1).unwrap(), s);
    let r = cube(2, 1).refine(2).unwrap();
    assert_eq!((r.len(), r.q(), r.volume()), (4, 2, int(1)));
    assert!(cube(2, 1).refine(0).is_err());
}

#[test]
fn minkowski_examples() {
    let s = minkowski_sum(&cube(2, 1), &cube(2, 1)).unwrap();
    assert_eq!(s, GridSet::from_box(2, 1, &[0, 0], &[2, 2]).unwrap());
    assert_eq!(s.volume(), int(4));

    let b = GridSet::new(2, 1, [[0, 0], [10, 10]]).unwrap();
    let s = minkowski_sum(&cube(2, 1), &b).unwrap();
    let expected = GridSet::from_box(2, 1, &[0, 0], &[2, 2])
        .unwrap()
        .union(&GridSet::from_box(2, 1, &[10, 10], &[12, 12]).unwrap())
        .unwrap();
    assert_eq!(s, expected);
    assert_eq!(s.volume(), int(8));
    assert_eq!(s, brute_minkowski(&cube(2, 1), &b));

    let s = minkowski_sum(&cube(1, 1), &cube(1, 1)).unwrap();
    assert_eq!(s.volume(), int(2));
}

#[test]
fn minkowski_rejects_mismatches() {
    assert!(matches!(
        minkowski_sum(&cube(1, 1), &cube(2, 1)),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(matches!(
        minkowski_sum(&cube(2, 1), &cube(2, 2)),
        Err(Error::ResolutionMismatch { .. })
    ));
    assert!(minkowski_sum_fast(&cube(2, 1), &cube(2, 2)).is_err());
}

#[test]
fn fast_path_examples() {
    let s = minkowski_sum_fast(&cube(2, 1), &cube(2, 1)).unwrap();
    assert_eq!(s, GridSet::from_box(2, 1, &[0, 0], &[2, 2]).unwrap());
    let b = GridSet::new(3, 2, [[0, 0, 0], [4, -3, 7], [1, 1, 1]]).unwrap();
    let a = cube(3, 2);
    assert_eq!(
        minkowski_sum_fast(&a, &b).unwrap(),
        minkowski_sum(&a, &b).unwrap()
    );
}

#[test]
fn scaled_sum_examples() {
    for d in 1..=3 {
        let s = scaled_sum(&cube(d, 1), &cube(d, 1), t(1, 2)).unwrap();
        assert_eq!(s.volume(), int(1));
        assert!(s.same_set(&cube(d, 1)));
    }
    let s = scaled_sum(&cube(1, 1), &cube(1, 1), t(1, 3)).unwrap();
    assert!(s.same_set(&cube(1, 1)));

    // A = [0,1]^2, B = A plus one cell at (8,8): volume 1 + (1/2 + 1/(2q))^2
    for q in [1u64, 2, 4, 8] {
        let a = cube(2, q);
        let far = (8 * q) as i64;
        let b = a.union(&GridSet::new(2, q, [[far, far]]).unwrap()).unwrap();
        let s = scaled_sum(&a, &b, t(1, 2)).unwrap();
        let side = rat(1, 2) + rat(1, 2 * q as i64);
        assert_eq!(s.volume(), int(1) + &side * &side, "q={q}");
    }
}

#[test]
fn scaled_sum_rejects_bad_t() {
    for (p, r) in [(0, 1), (1, 1), (3, 2), (-1, 2)] {
        assert!(scaled_sum(&cube(1, 1), &cube(1, 1), t(p, r)).is_err());
    }
}

#[test]
fn scaled_sum_mixes_resolutions() {
    let a = GridSet::new(1, 2, [[0]]).unwrap(); // [0, 1/2]
    let b = GridSet::new(1, 3, [[3]]).unwrap(); // [1, 4/3]
    let s = scaled_sum(&a, &b, t(1, 2)).unwrap();
    // [1/2, 1/2 + (1/4 + 1/6)]
    assert_eq!(s.volume(), rat(5, 12));
    assert_eq!(s.bounding_box().unwrap(), (vec![rat(1, 2)], vec![rat(11, 12)]));
}

#[test]
fn iterated_sum_examples() {
    let a = GridSet::new(2, 3, [[0, 0], [4, 1]]).unwrap();
    assert_eq!(iterated_sum(&a, 1).unwrap(), a);
    assert_eq!(iterated_sum(&cube(1, 1), 3).unwrap().volume(), int(3));
    assert!(iterated_sum(&a, 0).is_err());

    // 2*([0,1]^2 + far cell at v=(8,8)): blocks [0,2]^2, v + [0,1+1/q]^2, 2v + [0,2/q]^2
    for q in [1u64, 2, 4] {
        let far = (8 * q) as i64;
        let a = cube(2, q)
            .union(&GridSet::new(2, q, [[far, far]]).unwrap())
            .unwrap();
        let s = iterated_sum(&a, 2).unwrap();
        let qi = q as i64;
        let mid = int(1) + rat(1, qi);
        let end = rat(2, qi);
        assert_eq!(s.volume(), int(4) + &mid * &mid + &end * &end, "q={q}");
    }
}

#[test]
fn translate_and_scale_examples() {
    let s = GridSet::new(2, 2, [[0, 1], [3, 3]]).unwrap();
    assert_eq!(s.translate(&[int(0), int(0)]).unwrap(), s);

    let h = cube(2, 1).scale(t(1, 2)).unwrap();
    assert_eq!(h.volume(), rat(1, 4));
    assert_eq!(h.bounding_box().unwrap().1, vec![rat(1, 2), rat(1, 2)]);

    let tr = cube(1, 1).translate(&[rat(1, 3)]).unwrap();
    assert_eq!(tr.q(), 3);
    assert_eq!(tr.bounding_box().unwrap(), (vec![rat(1, 3)], vec![rat(4, 3)]));
    assert_eq!(tr.volume(), int(1));
}

#[test]
fn coarsen_recovers_minimal_resolution() {
    let s = cube(2, 1).refine(12).unwrap();
    let c = s.coarsen();
    assert_eq!((c.q(), c.len()), (1, 1));
    let s = GridSet::new(1, 6, [[0], [1], [2]]).unwrap(); // [0, 1/2]
    assert_eq!(s.coarsen(), GridSet::new(1, 2, [[0]]).unwrap());
    let odd = GridSet::new(1, 4, [[1]]).unwrap();
    assert_eq!(odd.coarsen(), odd);
}

#[test]
fn centroid_and_corners() {
    let s = GridSet::from_box(2, 1, &[0, 0], &[2, 1]).unwrap();
    assert_eq!(s.centroid().unwrap(), vec![int(1), rat(1, 2)]);
    let mut corners = cube(2, 3).extreme_corner_candidates();
    corners.sort();
    // only the four outer corners survive the line filter
    assert_eq!(corners, vec![vec![0, 0], vec![0, 3], vec![3, 0], vec![3, 3]]);
}

fn arb_grid(dim: usize, q: u64, max_cells: usize) -> impl Strategy<Value = GridSet> {
    prop::collection::vec(prop::collection::vec(-6i64..6, dim), 1..max_cells)
        .prop_map(move |cells| GridSet::new(dim, q, cells).unwrap())
}

fn arb_pair() -> impl Strategy<Value = (GridSet, GridSet)> {
    (1usize..=3, prop::sample::select(vec![1u64, 2, 4]))
        .prop_flat_map(|(d, q)| (arb_grid(d, q, 24), arb_grid(d, q, 24)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinement_preserves_volume_and_commutes_with_sum((a, b) in arb_pair(), m in 1u64..4) {
        prop_assert_eq!(a.refine(m).unwrap().volume(), a.volume());
        let lhs = minkowski_sum(&a.refine(m).unwrap(), &b.refine(m).unwrap()).unwrap();
        let rhs = minkowski_sum(&a, &b).unwrap().refine(m).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn sum_is_commutative_and_matches_brute_force((a, b) in arb_pair()) {
        let ab = minkowski_sum(&a, &b).unwrap();
        prop_assert_eq!(&ab, &minkowski_sum(&b, &a).unwrap());
        prop_assert_eq!(&ab, &brute_minkowski(&a, &b));
        prop_assert!(ab.volume() >= a.volume().max(b.volume()));
    }

    #[test]
    fn fast_path_is_bit_exact((a, b) in arb_pair()) {
        prop_assert_eq!(minkowski_sum_fast(&a, &b).unwrap(), minkowski_sum(&a, &b).unwrap());
    }

    #[test]
    fn iterated_sum_is_associative((a, _b) in arb_pair()) {
        let three = iterated_sum(&a, 3).unwrap();
        let two = iterated_sum(&a, 2).unwrap();
        prop_assert_eq!(three, minkowski_sum(&two, &a).unwrap());
    }

    #[test]
    fn scaling_law((a, _b) in arb_pair(), p in 1i64..5, r in 1i64..5) {
        let s = RationalScalar::new(p, r).unwrap();
        let scaled = a.scale(s).unwrap();
        prop_assert_eq!(scaled.volume(), crate::rational::pow(&s.to_rational(), a.dim()) * a.volume());
    }

    #[test]
    fn grid_brunn_minkowski_for_equal_volumes((a, _b) in arb_pair(), shift in -5i64..5, p in 1i64..4) {
        let b = a.translate(&vec![int(shift); a.dim()]).unwrap().coarsen();
        let tt = RationalScalar::new(p, 4).unwrap();
        let s = scaled_sum(&a, &b, tt).unwrap();
        prop_assert!(s.volume() >= a.volume());
    }
}
