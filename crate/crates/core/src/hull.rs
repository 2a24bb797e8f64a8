//! Exact convex hulls in dimensions 1 to 3.
//!
//! Points are scaled to a common integer lattice, then hulled with exact
//! orientation predicates: `i128` when the coordinates are small enough that
//! no 3x3 determinant can overflow, `BigInt` otherwise.

use std::collections::HashSet;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSet;
use crate::intervals::IntervalSet;
use crate::rational::{common_denominator, serde_points, Rational};

/// Differences stay below 2^41, so 3x3 determinants stay below 2^126.
const SMALL_COORD_BITS: u64 = 40;

/// A convex polytope given by its extreme points.
///
/// In dimension 2 the vertices run counter-clockwise from the
/// lexicographically smallest one; in dimensions 1 and 3 they are sorted
/// lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<Rational>>,
    volume: Rational,
}

impl Polytope {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    pub fn volume(&self) -> Rational {
        self.volume.clone()
    }

    /// Closed containment test.
    pub fn contains(&self, point: &[Rational]) -> Result<bool> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: point.len(),
            });
        }
        let mut pts = self.vertices.clone();
        pts.push(point.to_vec());
        let grown = hull_of(self.dim, &pts)?;
        // an outside point always becomes a new vertex
        let mut a = grown.vertices;
        let mut b = self.vertices.clone();
        a.sort();
        b.sort();
        Ok(a == b)
    }

    /// Image under `x -> m x + offset`.
    pub fn map_affine(&self, m: &[Vec<Rational>], offset: &[Rational]) -> Result<Polytope> {
        let pts: Vec<Vec<Rational>> = self
            .vertices
            .iter()
            .map(|v| {
                (0..self.dim)
                    .map(|i| {
                        (0..self.dim).fold(offset[i].clone(), |acc, j| acc + &m[i][j] * &v[j])
                    })
                    .collect()
            })
            .collect();
        hull_of(self.dim, &pts)
    }
}

#[derive(Serialize, Deserialize)]
struct PolytopeJson {
    dim: usize,
    #[serde(with = "serde_points")]
    vertices: Vec<Vec<Rational>>,
}

impl Serialize for Polytope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolytopeJson {
            dim: self.dim,
            vertices: self.vertices.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polytope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolytopeJson::deserialize(d)?;
        hull_of(raw.dim, &raw.vertices).map_err(serde::de::Error::custom)
    }
}

/// Exact convex hull of a nonempty point list.
pub fn hull_of(dim: usize, points: &[Vec<Rational>]) -> Result<Polytope> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if dim > 3 {
        return Err(Error::Unsupported(format!(
            "exact hulls are implemented for d <= 3, got d = {dim}"
        )));
    }
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: p.len(),
        });
    }
    let scale = common_denominator(points.iter().flatten());
    let mut lattice: Vec<Vec<BigInt>> = points
        .iter()
        .map(|p| {
            p.iter()
                .map(|c| (c * Rational::from_integer(scale.clone())).to_integer())
                .collect()
        })
        .collect();
    lattice.sort();
    lattice.dedup();

    let small = lattice.iter().flatten().all(|c| c.bits() <= SMALL_COORD_BITS);
    let (extreme, scaled_volume) = if small {
        let pts: Vec<Vec<i128>> = lattice
            .iter()
            .map(|p| p.iter().map(|c| i128::try_from(c).expect("small coordinate")).collect())
            .collect();
        hull_indices(dim, &pts)
    } else {
        hull_indices(dim, &lattice)
    };

    let factorial = [1i64, 1, 2, 6][dim];
    let volume = Rational::new(
        scaled_volume,
        BigInt::from(factorial) * num_traits::pow(scale.clone(), dim),
    );
    let vertices = extreme
        .into_iter()
        .map(|i| {
            lattice[i]
                .iter()
                .map(|c| Rational::new(c.clone(), scale.clone()))
                .collect()
        })
        .collect();
    Ok(Polytope {
        dim,
        vertices,
        volume,
    })
}

/// Exact volume of a polytope.
pub fn hull_volume(p: &Polytope) -> Rational {
    p.volume()
}

/// `|co(corners(s) u extra)| / |s|` for a grid set.
pub fn hull_ratio(s: &GridSet, extra: &[Vec<Rational>]) -> Result<Rational> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut pts = s.corner_points();
    pts.extend(extra.iter().cloned());
    let co = hull_of(s.dim(), &pts)?;
    Ok(co.volume() / s.volume())
}

/// `|co(s u extra)| / |s|` for a one-dimensional set.
pub fn hull_ratio_1d(s: &IntervalSet, extra: &[Rational]) -> Result<Rational> {
    let m = s.measure();
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    if m.is_zero() {
        return Err(Error::ZeroMeasure);
    }
    let (mut lo, mut hi) = s.hull().expect("nonempty");
    for x in extra {
        if *x < lo {
            lo = x.clone();
        }
        if *x > hi {
            hi = x.clone();
        }
    }
    Ok((hi - lo) / m)
}

/// Hull of a grid set, built from its candidate extreme cell corners.
pub fn hull_of_grid(s: &GridSet) -> Result<Polytope> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    hull_of(s.dim(), &s.corner_points())
}

trait Coord: Clone + Ord + Signed + Debug + Into<BigInt> {}
impl<T: Clone + Ord + Signed + Debug + Into<BigInt>> Coord for T {}

fn sub<T: Coord>(a: &[T], b: &[T]) -> [T; 3] {
    let g = |i: usize| {
        if i < a.len() {
            a[i].clone() - b[i].clone()
        } else {
            T::zero()
        }
    };
    [g(0), g(1), g(2)]
}

fn cross<T: Coord>(u: &[T; 3], v: &[T; 3]) -> [T; 3] {
    [
        u[1].clone() * v[2].clone() - u[2].clone() * v[1].clone(),
        u[2].clone() * v[0].clone() - u[0].clone() * v[2].clone(),
        u[0].clone() * v[1].clone() - u[1].clone() * v[0].clone(),
    ]
}

fn dot<T: Coord>(u: &[T; 3], v: &[T; 3]) -> T {
    u[0].clone() * v[0].clone() + u[1].clone() * v[1].clone() + u[2].clone() * v[2].clone()
}

fn is_zero3<T: Coord>(u: &[T; 3]) -> bool {
    u.iter().all(Zero::is_zero)
}

fn cross2<T: Coord>(o: &[T; 2], a: &[T; 2], b: &[T; 2]) -> T {
    (a[0].clone() - o[0].clone()) * (b[1].clone() - o[1].clone())
        - (a[1].clone() - o[1].clone()) * (b[0].clone() - o[0].clone())
}

/// Sign of `det(b - a, c - a, p - a)`: positive when `p` sees face `abc`.
fn orient3<T: Coord>(a: &[T], b: &[T], c: &[T], p: &[T]) -> T {
    dot(&cross(&sub(b, a), &sub(c, a)), &sub(p, a))
}

/// Extreme point indices (in output order) and `d! * volume` on the lattice.
/// `pts` must be sorted and deduplicated.
fn hull_indices<T: Coord>(dim: usize, pts: &[Vec<T>]) -> (Vec<usize>, BigInt) {
    let n = pts.len();
    if n == 1 {
        return (vec![0], BigInt::zero());
    }
    match dim {
        1 => {
            let len: BigInt = (pts[n - 1][0].clone() - pts[0][0].clone()).into();
            (vec![0, n - 1], len)
        }
        2 => {
            let flat: Vec<[T; 2]> = pts.iter().map(|p| [p[0].clone(), p[1].clone()]).collect();
            let order: Vec<usize> = (0..n).collect();
            let ring = monotone_chain(&flat, &order);
            let area2 = shoelace2(&flat, &ring);
            (ring, area2)
        }
        _ => hull3(pts),
    }
}

/// Andrew's monotone chain over `order` (which must be lexicographically
/// sorted by the 2D coordinates). Collinear boundary points are dropped.
fn monotone_chain<T: Coord>(pts: &[[T; 2]], order: &[usize]) -> Vec<usize> {
    if order.len() <= 1 {
        return order.to_vec();
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in order {
        while lower.len() >= 2
            && !cross2(&pts[lower[lower.len() - 2]], &pts[lower[lower.len() - 1]], &pts[i]).is_positive()
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in order.iter().rev() {
        while upper.len() >= 2
            && !cross2(&pts[upper[upper.len() - 2]], &pts[upper[upper.len() - 1]], &pts[i]).is_positive()
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 && lower[0] == lower[1] {
        lower.pop();
    }
    lower
}

fn shoelace2<T: Coord>(pts: &[[T; 2]], ring: &[usize]) -> BigInt {
    if ring.len() < 3 {
        return BigInt::zero();
    }
    let mut acc = T::zero();
    for k in 0..ring.len() {
        let a = &pts[ring[k]];
        let b = &pts[ring[(k + 1) % ring.len()]];
        acc = acc + a[0].clone() * b[1].clone() - a[1].clone() * b[0].clone();
    }
    acc.into()
}

fn hull3<T: Coord>(pts: &[Vec<T>]) -> (Vec<usize>, BigInt) {
    let n = pts.len();
    let u = sub(&pts[1], &pts[0]);
    let Some(i2) = (2..n).find(|&k| !is_zero3(&cross(&u, &sub(&pts[k], &pts[0])))) else {
        // collinear: lexicographic order follows the line
        return (vec![0, n - 1], BigInt::zero());
    };
    let Some(i3) = (2..n).find(|&k| !orient3(&pts[0], &pts[1], &pts[i2], &pts[k]).is_zero()) else {
        return coplanar_hull(pts, &cross(&u, &sub(&pts[i2], &pts[0])));
    };

    let seed = [0, 1, i2, i3];
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for skip in 0..4 {
        let tri: Vec<usize> = (0..4).filter(|&j| j != skip).map(|j| seed[j]).collect();
        let (a, mut b, mut c) = (tri[0], tri[1], tri[2]);
        if orient3(&pts[a], &pts[b], &pts[c], &pts[seed[skip]]).is_positive() {
            std::mem::swap(&mut b, &mut c);
        }
        faces.push([a, b, c]);
    }

    for p in 0..n {
        if seed.contains(&p) {
            continue;
        }
        let visible: Vec<bool> = faces
            .iter()
            .map(|f| orient3(&pts[f[0]], &pts[f[1]], &pts[f[2]], &pts[p]).is_positive())
            .collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, v)| **v) {
            for k in 0..3 {
                edges.insert((f[k], f[(k + 1) % 3]));
            }
        }
        let mut next: Vec<[usize; 3]> = faces
            .iter()
            .zip(&visible)
            .filter(|(_, v)| !**v)
            .map(|(f, _)| *f)
            .collect();
        for &(a, b) in &edges {
            if !edges.contains(&(b, a)) {
                next.push([a, b, p]);
            }
        }
        faces = next;
    }

    // normals are products of coordinates; their cross products need BigInt
    let normals: Vec<[BigInt; 3]> = faces
        .iter()
        .map(|f| cross(&sub(&pts[f[1]], &pts[f[0]]), &sub(&pts[f[2]], &pts[f[0]])).map(Into::into))
        .collect();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, f) in faces.iter().enumerate() {
        for &v in f {
            incident[v].push(k);
        }
    }
    let extreme: Vec<usize> = (0..n)
        .filter(|&v| normals_span_space(incident[v].iter().map(|&k| &normals[k])))
        .collect();

    let mut six_vol = T::zero();
    for f in &faces {
        six_vol = six_vol + orient3(&pts[f[0]], &pts[f[1]], &pts[f[2]], &pts[0]);
    }
    (extreme, six_vol.abs().into())
}

fn normals_span_space<'a>(normals: impl Iterator<Item = &'a [BigInt; 3]>) -> bool {
    let normals: Vec<&[BigInt; 3]> = normals.collect();
    let Some(first) = normals.first() else {
        return false;
    };
    let Some(second) = normals.iter().find(|m| !is_zero3(&cross(first, m))) else {
        return false;
    };
    let plane = cross(first, second);
    normals.iter().any(|m| !dot(&plane, m).is_zero())
}

/// Hull of coplanar points: project away an axis the normal is not
/// orthogonal to, hull in 2D, lift back.
fn coplanar_hull<T: Coord>(pts: &[Vec<T>], normal: &[T; 3]) -> (Vec<usize>, BigInt) {
    let drop = (0..3).find(|&i| !normal[i].is_zero()).expect("nonzero normal");
    let keep: Vec<usize> = (0..3).filter(|&i| i != drop).collect();
    let flat: Vec<[T; 2]> = pts
        .iter()
        .map(|p| [p[keep[0]].clone(), p[keep[1]].clone()])
        .collect();
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| flat[a].cmp(&flat[b]));
    let mut ring = monotone_chain(&flat, &order);
    ring.sort_unstable();
    (ring, BigInt::zero())
}
