//! Affine normalization of a pair of convex polytopes.
//!
//! Axis by axis, one set is slid along the current axis until the extreme
//! points in that direction both lie in the same set, everything is
//! translated so the minimizer sits at the origin, and a shear fixing the
//! other basis vectors moves the maximizer onto the axis.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::{hull_of, Polytope};
use crate::rational::{serde_points, serde_str, serde_vec, Rational};
use crate::verdict::{Digester, Fingerprint, VerdictReport};

/// `x -> linear * x + offset` with an invertible rational matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineMap {
    #[serde(with = "serde_points")]
    pub linear: Vec<Vec<Rational>>,
    #[serde(with = "serde_vec")]
    pub offset: Vec<Rational>,
}

impl AffineMap {
    pub fn identity(dim: usize) -> Self {
        AffineMap {
            linear: (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
                .collect(),
            offset: vec![Rational::zero(); dim],
        }
    }

    pub fn new(linear: Vec<Vec<Rational>>, offset: Vec<Rational>) -> Result<Self> {
        let d = offset.len();
        if linear.len() != d || linear.iter().any(|row| row.len() != d) {
            return Err(Error::invalid("affine map needs a square matrix matching the offset"));
        }
        let map = AffineMap { linear, offset };
        if map.det().is_zero() {
            return Err(Error::Degenerate("singular affine map".into()));
        }
        Ok(map)
    }

    pub fn diagonal(scales: &[Rational]) -> Result<Self> {
        let mut m = AffineMap::identity(scales.len());
        for (i, s) in scales.iter().enumerate() {
            m.linear[i][i] = s.clone();
        }
        AffineMap::new(m.linear, m.offset)
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        mat_vec(&self.linear, x)
            .into_iter()
            .zip(&self.offset)
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn apply_polytope(&self, p: &Polytope) -> Result<Polytope> {
        p.map_affine(&self.linear, &self.offset)
    }

    /// `self after other`: `x -> self(other(x))`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            linear: mat_mul(&self.linear, &other.linear),
            offset: self.apply(&other.offset),
        }
    }

    pub fn det(&self) -> Rational {
        determinant(&self.linear)
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let inv = invert(&self.linear).ok_or_else(|| Error::Degenerate("singular affine map".into()))?;
        let offset = mat_vec(&inv, &self.offset).into_iter().map(|v| -v).collect();
        Ok(AffineMap { linear: inv, offset })
    }
}

/// One of the `d` points `p^i` with the set it belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorPoint {
    #[serde(with = "serde_vec")]
    pub p: Vec<Rational>,
    pub in_u: bool,
}

/// Slab `H_i + [0, lambda_i] e_i` with `H_i = {x : normal . x = offset}`.
///
/// Normals are scaled so that `normal . e_i = 1`. Each hyperplane starts
/// out as a coordinate hyperplane; shears applied for later axes tilt it
/// only along those later axes, so the normals form a unit upper-triangular
/// matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slab {
    #[serde(with = "serde_vec")]
    pub normal: Vec<Rational>,
    #[serde(with = "serde_str")]
    pub offset: Rational,
    #[serde(with = "serde_str")]
    pub lambda: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositioningCertificate {
    pub u: Polytope,
    pub v: Polytope,
    pub points: Vec<AnchorPoint>,
    pub slabs: Vec<Slab>,
}

impl PositioningCertificate {
    pub fn lambdas(&self) -> Vec<Rational> {
        self.slabs.iter().map(|s| s.lambda.clone()).collect()
    }

    pub fn hyperplane_offsets(&self) -> Vec<Rational> {
        self.slabs.iter().map(|s| s.offset.clone()).collect()
    }

    /// Whether every hyperplane is a coordinate hyperplane.
    pub fn axis_aligned(&self) -> bool {
        self.slabs.iter().enumerate().all(|(i, s)| {
            s.normal.iter().enumerate().all(|(j, c)| (j == i) != c.is_zero())
        })
    }
}

impl Fingerprint for Polytope {
    fn feed(&self, h: &mut sha2::Sha256) {
        use sha2::Digest;
        h.update(format!("polytope:{}:", self.dim()).as_bytes());
        for v in self.vertices() {
            v.feed(h);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Positioning {
    /// Maps `x` onto `u`.
    pub map: AffineMap,
    /// `v = translation + map.linear * y + map.offset`.
    #[serde(with = "serde_vec")]
    pub translation: Vec<Rational>,
    pub certificate: PositioningCertificate,
}

/// Runs the normalization on two full-dimensional polytopes.
pub fn position(x: &Polytope, y: &Polytope) -> Result<Positioning> {
    let d = x.dim();
    if y.dim() != d {
        return Err(Error::DimensionMismatch { left: d, right: y.dim() });
    }
    for p in [x, y] {
        if p.volume().is_zero() {
            return Err(Error::Degenerate("positioning needs full-dimensional polytopes".into()));
        }
    }

    let mut xs: Vec<Vec<Rational>> = x.vertices().to_vec();
    let mut ys: Vec<Vec<Rational>> = y.vertices().to_vec();
    let mut linear = AffineMap::identity(d).linear;
    let mut off_x = vec![Rational::zero(); d];
    let mut off_y = vec![Rational::zero(); d];
    let mut points: Vec<AnchorPoint> = Vec::with_capacity(d);
    let mut slabs: Vec<Slab> = Vec::with_capacity(d);

    for k in 0..d {
        let (min_x, max_x) = axis_range(&xs, k);
        let (min_y, max_y) = axis_range(&ys, k);
        // slide y the least amount that puts both extremes in one set
        let use_x = &max_x - &min_x >= &max_y - &min_y;
        let (lo, hi) = if use_x {
            (&min_x - &min_y, &max_x - &max_y)
        } else {
            (&max_x - &max_y, &min_x - &min_y)
        };
        let shift = clamp_zero(lo, hi);
        if !shift.is_zero() {
            for v in ys.iter_mut() {
                v[k] += &shift;
            }
            off_y[k] += &shift;
            for p in points.iter_mut().filter(|p| !p.in_u) {
                p.p[k] += &shift;
            }
        }

        let chosen = if use_x { &xs } else { &ys };
        let q = lex_extreme(chosen, k, false);
        let r = lex_extreme(chosen, k, true);

        for v in xs.iter_mut().chain(ys.iter_mut()) {
            sub_assign(v, &q);
        }
        sub_assign(&mut off_x, &q);
        sub_assign(&mut off_y, &q);
        for p in points.iter_mut() {
            sub_assign(&mut p.p, &q);
        }
        for s in slabs.iter_mut() {
            s.offset -= dot(&s.normal, &q);
        }
        let r: Vec<Rational> = r.iter().zip(&q).map(|(a, b)| a - b).collect();
        let lambda = r[k].clone();

        // x -> x - x_k w, with w = r / lambda - e_k
        let mut w: Vec<Rational> = r.iter().map(|c| c / &lambda).collect();
        w[k] -= Rational::one();
        if w.iter().any(|c| !c.is_zero()) {
            let shear = |v: &mut Vec<Rational>| {
                let xk = v[k].clone();
                for (c, wc) in v.iter_mut().zip(&w) {
                    *c -= &xk * wc;
                }
            };
            xs.iter_mut().chain(ys.iter_mut()).for_each(shear);
            points.iter_mut().for_each(|p| shear(&mut p.p));
            shear(&mut off_x);
            shear(&mut off_y);
            for j in 0..d {
                let col: Vec<Rational> = linear.iter().map(|row| row[j].clone()).collect();
                let xk = col[k].clone();
                for i in 0..d {
                    linear[i][j] = &col[i] - &xk * &w[i];
                }
            }
            for s in slabs.iter_mut() {
                let lift = dot(&w, &s.normal);
                s.normal[k] += lift;
            }
        }

        let mut normal = vec![Rational::zero(); d];
        normal[k] = Rational::one();
        slabs.push(Slab {
            normal,
            offset: Rational::zero(),
            lambda,
        });
        points.push(AnchorPoint {
            p: vec![Rational::zero(); d],
            in_u: use_x,
        });

        // the hypotheses for the axes handled so far must survive each step
        let partial = PositioningCertificate {
            u: hull_of(d, &xs)?,
            v: hull_of(d, &ys)?,
            points: points.clone(),
            slabs: slabs.clone(),
        };
        let (p1, p2) = (property_one(&partial)?, property_two(&partial));
        if !(p1 && p2) {
            return Err(Error::Invariant(format!("positioning step {} broke properties", k + 1)));
        }
    }

    let translation: Vec<Rational> = off_y.iter().zip(&off_x).map(|(a, b)| a - b).collect();
    let map = AffineMap::new(linear, off_x)?;
    Ok(Positioning {
        map,
        translation,
        certificate: PositioningCertificate {
            u: hull_of(d, &xs)?,
            v: hull_of(d, &ys)?,
            points,
            slabs,
        },
    })
}

fn property_one(c: &PositioningCertificate) -> Result<bool> {
    for (i, a) in c.points.iter().enumerate() {
        let target = if a.in_u { &c.u } else { &c.v };
        let mut far = a.p.clone();
        far[i] += &c.slabs[i].lambda;
        if !(target.contains(&a.p)? && target.contains(&far)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn property_two(c: &PositioningCertificate) -> bool {
    c.slabs.iter().all(|s| {
        let top = &s.offset + &s.lambda;
        c.u.vertices().iter().chain(c.v.vertices()).all(|x| {
            let h = dot(&s.normal, x);
            h >= s.offset && h <= top
        })
    })
}

/// Checks the three certificate properties exactly.
///
/// The measured map carries `property1..3` as 0/1 flags, `det_normals`,
/// `slab_volume` (`prod lambda_i / |det N|`) and `lambda_i` per axis.
pub fn verify_certificate(c: &PositioningCertificate) -> Result<VerdictReport> {
    let d = c.u.dim();
    if c.v.dim() != d || c.points.len() != d || c.slabs.len() != d {
        return Err(Error::invalid("certificate needs d points and d slabs in dimension d"));
    }
    if c.slabs.iter().any(|s| s.normal.len() != d) || c.points.iter().any(|p| p.p.len() != d) {
        return Err(Error::invalid("certificate vectors must have length d"));
    }
    let positive = c.slabs.iter().all(|s| s.lambda.is_positive());
    let normalized = c.slabs.iter().enumerate().all(|(i, s)| s.normal[i].is_one());
    let p1 = property_one(c)?;
    let p2 = property_two(c);
    let normals: Vec<Vec<Rational>> = c.slabs.iter().map(|s| s.normal.clone()).collect();
    let det = determinant(&normals);
    let prod = c.slabs.iter().fold(Rational::one(), |acc, s| acc * &s.lambda);
    let p3 = !det.is_zero() && positive && normalized && (&prod / det.abs()) == prod;

    let mut digest = Digester::new("positioning").add(&c.u).add(&c.v);
    for s in &c.slabs {
        digest = digest.add(&s.normal).add(&s.offset).add(&s.lambda);
    }
    let flag = |b: bool| if b { Rational::one() } else { Rational::zero() };
    let slab_volume = if det.is_zero() { Rational::zero() } else { &prod / det.abs() };
    let mut report = VerdictReport::new("positioning", digest.finish(), prod.clone())
        .with("property1", flag(p1))
        .with("property2", flag(p2))
        .with("property3", flag(p3))
        .with("det_normals", det)
        .with("slab_volume", slab_volume);
    for (i, s) in c.slabs.iter().enumerate() {
        report = report.with(&format!("lambda_{}", i + 1), s.lambda.clone());
    }
    for (name, ok) in [("property (1)", p1), ("property (2)", p2), ("property (3)", p3)] {
        report = report.note(format!("{name}: {}", if ok { "pass" } else { "fail" }));
    }
    let holds = p1 && p2 && p3;
    Ok(report.verdict(holds, holds))
}

/// Diagonal map making every `lambda_i` equal to `target` (default: the
/// largest one), applied to the certificate.
///
/// The map is not volume-preserving: the geometric mean of the widths is
/// usually irrational.
pub fn equalize_lambdas(
    c: &PositioningCertificate,
    target: Option<Rational>,
) -> Result<(AffineMap, PositioningCertificate)> {
    let lambdas = c.lambdas();
    let target = match target {
        Some(t) => t,
        None => lambdas.iter().max().cloned().ok_or(Error::EmptySet)?,
    };
    if !target.is_positive() || lambdas.iter().any(|l| !l.is_positive()) {
        return Err(Error::invalid("widths must be positive"));
    }
    let scales: Vec<Rational> = lambdas.iter().map(|l| &target / l).collect();
    let map = AffineMap::diagonal(&scales)?;
    let slabs = c
        .slabs
        .iter()
        .enumerate()
        .map(|(i, s)| Slab {
            normal: s
                .normal
                .iter()
                .zip(&scales)
                .map(|(n, sc)| n * &scales[i] / sc)
                .collect(),
            offset: &s.offset * &scales[i],
            lambda: target.clone(),
        })
        .collect();
    let points = c
        .points
        .iter()
        .map(|a| AnchorPoint {
            p: map.apply(&a.p),
            in_u: a.in_u,
        })
        .collect();
    let cert = PositioningCertificate {
        u: map.apply_polytope(&c.u)?,
        v: map.apply_polytope(&c.v)?,
        points,
        slabs,
    };
    Ok((map, cert))
}

fn axis_range(pts: &[Vec<Rational>], k: usize) -> (Rational, Rational) {
    let lo = pts.iter().map(|p| &p[k]).min().expect("nonempty").clone();
    let hi = pts.iter().map(|p| &p[k]).max().expect("nonempty").clone();
    (lo, hi)
}

/// Lexicographically smallest minimizer (or maximizer) of coordinate `k`.
fn lex_extreme(pts: &[Vec<Rational>], k: usize, maximize: bool) -> Vec<Rational> {
    let (lo, hi) = axis_range(pts, k);
    let target = if maximize { hi } else { lo };
    pts.iter()
        .filter(|p| p[k] == target)
        .min()
        .expect("extreme exists")
        .clone()
}

fn clamp_zero(lo: Rational, hi: Rational) -> Rational {
    if lo.is_positive() {
        lo
    } else if hi.is_negative() {
        hi
    } else {
        Rational::zero()
    }
}

fn sub_assign(v: &mut [Rational], by: &[Rational]) {
    for (a, b) in v.iter_mut().zip(by) {
        *a -= b;
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

fn mat_vec(m: &[Vec<Rational>], x: &[Rational]) -> Vec<Rational> {
    m.iter().map(|row| dot(row, x)).collect()
}

fn mat_mul(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| row.iter().zip(b).fold(Rational::zero(), |acc, (x, brow)| acc + x * &brow[j]))
                .collect()
        })
        .collect()
}

/// Gauss-Jordan elimination; returns the reduced matrix and determinant.
fn eliminate(m: &[Vec<Rational>], rhs: Option<&[Vec<Rational>]>) -> (Rational, Option<Vec<Vec<Rational>>>) {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let mut b: Vec<Vec<Rational>> = rhs.map(|r| r.to_vec()).unwrap_or_default();
    let mut det = Rational::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return (Rational::zero(), None);
        };
        if piv != col {
            a.swap(piv, col);
            if !b.is_empty() {
                b.swap(piv, col);
            }
            det = -det;
        }
        let pv = a[col][col].clone();
        det *= &pv;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &pv;
            for c in col..n {
                let delta = &f * &a[col][c];
                a[r][c] -= delta;
            }
            if !b.is_empty() {
                for c in 0..b[r].len() {
                    let delta = &f * &b[col][c];
                    b[r][c] -= delta;
                }
            }
        }
    }
    if !b.is_empty() {
        for r in 0..n {
            let pv = a[r][r].clone();
            for v in b[r].iter_mut() {
                *v /= &pv;
            }
        }
        return (det, Some(b));
    }
    (det, None)
}

pub(crate) fn determinant(m: &[Vec<Rational>]) -> Rational {
    eliminate(m, None).0
}

fn invert(m: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let id = AffineMap::identity(m.len()).linear;
    eliminate(m, Some(&id)).1
}

#[cfg(test)]
mod tests;
