use super::*;
use crate::rational::{int, rat};
use proptest::prelude::*;

fn poly(raw: &[(i64, i64)]) -> Polytope {
    let pts: Vec<Vec<Rational>> = raw.iter().map(|&(a, b)| vec![int(a), int(b)]).collect();
    hull_of(2, &pts).unwrap()
}

fn poly3(raw: &[[i64; 3]]) -> Polytope {
    let pts: Vec<Vec<Rational>> = raw.iter().map(|p| p.iter().map(|&c| int(c)).collect()).collect();
    hull_of(3, &pts).unwrap()
}

#[test]
fn unit_square_is_already_positioned() {
    let sq = poly(&[(0, 0), (1, 0), (1, 1), (0, 1)]);
    let out = position(&sq, &sq).unwrap();
    assert_eq!(out.map, AffineMap::identity(2));
    assert_eq!(out.translation, vec![int(0), int(0)]);
    let c = &out.certificate;
    assert_eq!(c.lambdas(), vec![int(1), int(1)]);
    assert!(c.points.iter().all(|p| p.p == vec![int(0), int(0)]));
    assert!(c.axis_aligned());
    let r = verify_certificate(c).unwrap();
    assert!(r.holds && r.tight);
}

#[test]
fn triangle_shear_example() {
    let tri = poly(&[(0, 0), (2, 0), (1, 1)]);
    let out = position(&tri, &tri).unwrap();
    let c = &out.certificate;
    assert_eq!(c.u, poly(&[(0, 0), (2, 0), (0, 1)]));
    assert_eq!(c.u.vertices(), &[vec![int(0), int(0)], vec![int(2), int(0)], vec![int(0), int(1)]]);
    assert_eq!(c.lambdas(), vec![int(2), int(1)]);
    assert_eq!(c.points[0].p, vec![int(0), int(0)]);
    assert_eq!(c.points[1].p, vec![int(0), int(0)]);
    // T(w) = w - w_2 (1, 0)
    assert_eq!(out.map.linear, vec![vec![int(1), int(-1)], vec![int(0), int(1)]]);
    assert!(verify_certificate(c).unwrap().holds);
}

#[test]
fn later_shears_tilt_earlier_hyperplanes() {
    let quad = poly(&[(0, 0), (2, 0), (2, 2), (0, 1)]);
    let out = position(&quad, &quad).unwrap();
    let c = &out.certificate;
    assert_eq!(c.slabs[0].normal, vec![int(1), int(1)]);
    assert!(!c.axis_aligned());
    let r = verify_certificate(c).unwrap();
    assert!(r.holds);
    assert_eq!(r.get("det_normals"), Some(&int(1)));
}

#[test]
fn broken_certificates_fail() {
    let tri = poly(&[(0, 0), (2, 0), (1, 1)]);
    let good = position(&tri, &tri).unwrap().certificate;

    let mut halved = good.clone();
    halved.slabs[0].lambda /= int(2);
    let r = verify_certificate(&halved).unwrap();
    assert!(!r.holds);
    assert_eq!(r.get("property2"), Some(&int(0)));

    let mut moved = good.clone();
    moved.points[0].p = vec![int(-1), int(0)];
    let r = verify_certificate(&moved).unwrap();
    assert!(!r.holds);
    assert_eq!(r.get("property1"), Some(&int(0)));

    let mut skew = good;
    skew.slabs[1].normal = vec![int(1), int(1)];
    skew.slabs[0].normal = vec![int(1), int(1)];
    let r = verify_certificate(&skew).unwrap();
    assert_eq!(r.get("property3"), Some(&int(0)));
}

#[test]
fn translation_moves_second_set() {
    // y sits far above x; after positioning both share the same slabs
    let x = poly(&[(0, 0), (4, 0), (4, 1), (0, 1)]);
    let y = poly(&[(10, 20), (11, 20), (11, 22), (10, 22)]);
    let out = position(&x, &y).unwrap();
    let v_direct = out
        .map
        .apply_polytope(&y)
        .unwrap()
        .map_affine(&AffineMap::identity(2).linear, &out.translation)
        .unwrap();
    assert_eq!(v_direct, out.certificate.v);
    assert_eq!(out.map.apply_polytope(&x).unwrap(), out.certificate.u);
    assert!(verify_certificate(&out.certificate).unwrap().holds);
}

#[test]
fn rejects_degenerate_input() {
    let seg = poly(&[(0, 0), (1, 1)]);
    let sq = poly(&[(0, 0), (1, 0), (1, 1), (0, 1)]);
    assert!(matches!(position(&seg, &sq), Err(Error::Degenerate(_))));
}

#[test]
fn tetrahedra_verify() {
    let a = poly3(&[[0, 0, 0], [3, 1, 0], [1, 4, 1], [2, 2, 5]]);
    let b = poly3(&[[7, -2, 1], [8, 0, 0], [6, 1, 3], [9, 3, 2]]);
    let out = position(&a, &b).unwrap();
    assert!(verify_certificate(&out.certificate).unwrap().holds);
}

#[test]
fn equalized_widths() {
    let tri = poly(&[(0, 0), (2, 0), (1, 1)]);
    let c = position(&tri, &tri).unwrap().certificate;
    let (map, eq) = equalize_lambdas(&c, None).unwrap();
    assert_eq!(eq.lambdas(), vec![int(2), int(2)]);
    assert_eq!(map.det(), int(2));
    assert!(verify_certificate(&eq).unwrap().holds);
    let (_, eq) = equalize_lambdas(&c, Some(rat(7, 3))).unwrap();
    assert_eq!(eq.lambdas(), vec![rat(7, 3), rat(7, 3)]);
    assert!(verify_certificate(&eq).unwrap().holds);
}

#[test]
fn affine_map_algebra() {
    let m = AffineMap::new(
        vec![vec![int(2), int(1)], vec![int(1), int(1)]],
        vec![rat(1, 2), int(-3)],
    )
    .unwrap();
    let inv = m.inverse().unwrap();
    assert_eq!(m.compose(&inv), AffineMap::identity(2));
    assert_eq!(inv.compose(&m), AffineMap::identity(2));
    assert_eq!(m.det(), int(1));
    let p = vec![rat(3, 7), int(5)];
    assert_eq!(inv.apply(&m.apply(&p)), p);
    assert!(AffineMap::new(vec![vec![int(1), int(2)], vec![int(2), int(4)]], vec![int(0), int(0)]).is_err());
}

#[test]
fn certificate_json_round_trip() {
    let tri = poly(&[(0, 0), (2, 0), (1, 1)]);
    let out = position(&tri, &tri).unwrap();
    let text = serde_json::to_string(&out).unwrap();
    let back: Positioning = serde_json::from_str(&text).unwrap();
    assert_eq!(back, out);
}

fn arb_poly2() -> impl Strategy<Value = Polytope> {
    prop::collection::vec((-12i64..12, -12i64..12, 1i64..4), 3..=4)
        .prop_map(|v| {
            let pts: Vec<Vec<Rational>> = v.iter().map(|&(a, b, den)| vec![rat(a, den), rat(b, den)]).collect();
            hull_of(2, &pts).unwrap()
        })
        .prop_filter("full-dimensional", |p| !p.volume().is_zero())
}

fn arb_poly3() -> impl Strategy<Value = Polytope> {
    prop::collection::vec(prop::collection::vec(-6i64..6, 3), 4..=5)
        .prop_map(|v| {
            let pts: Vec<Vec<Rational>> = v.iter().map(|p| p.iter().map(|&c| int(c)).collect()).collect();
            hull_of(3, &pts).unwrap()
        })
        .prop_filter("full-dimensional", |p| !p.volume().is_zero())
}

/// Rectangles and right triangles with legs along the axes.
fn arb_right_shape() -> impl Strategy<Value = Polytope> {
    (-9i64..9, -9i64..9, 1i64..6, 1i64..6, any::<bool>()).prop_map(|(x, y, a, b, tri)| {
        if tri {
            poly(&[(x, y), (x + a, y), (x, y + b)])
        } else {
            poly(&[(x, y), (x + a, y), (x + a, y + b), (x, y + b)])
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn planar_certificates_verify(x in arb_poly2(), y in arb_poly2()) {
        let out = position(&x, &y).unwrap();
        let c = &out.certificate;
        prop_assert!(verify_certificate(c).unwrap().holds);
        let det = out.map.det().abs();
        prop_assert_eq!(c.u.volume(), x.volume() * &det);
        prop_assert_eq!(c.v.volume(), y.volume() * &det);
        let (_, eq) = equalize_lambdas(c, None).unwrap();
        prop_assert!(verify_certificate(&eq).unwrap().holds);
        prop_assert!(eq.lambdas().windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn spatial_certificates_verify(x in arb_poly3(), y in arb_poly3()) {
        let out = position(&x, &y).unwrap();
        prop_assert!(verify_certificate(&out.certificate).unwrap().holds);
        prop_assert_eq!(out.certificate.u.volume(), x.volume() * out.map.det().abs());
    }

    #[test]
    fn rerun_keeps_widths_when_slabs_are_axis_aligned(x in arb_right_shape(), y in arb_right_shape()) {
        let c = position(&x, &y).unwrap().certificate;
        prop_assert!(c.axis_aligned());
        let again = position(&c.u, &c.v).unwrap();
        prop_assert_eq!(again.certificate.lambdas(), c.lambdas());
        prop_assert_eq!(again.map, AffineMap::identity(2));
    }
}
