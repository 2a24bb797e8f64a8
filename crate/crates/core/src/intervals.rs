//! Exact one-dimensional sets: finite unions of closed rational intervals,
//! their images on the circle `R/Z`, and checkers for the 1D sumset bounds.
//!
//! Degenerate intervals (points) are first-class citizens. They carry no
//! measure but take part in sums and hulls, which is what makes
//! "interval plus a far point" sets behave correctly.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::error::{Error, Result};
use crate::rational::{int, serde_points, Rational, RationalScalar};
use crate::verdict::{Digester, Fingerprint, VerdictReport};

/// A finite union of disjoint closed intervals `[lo, hi]`, `lo <= hi`,
/// sorted by `lo`. Touching or overlapping parts are merged on construction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IntervalSet {
    parts: Vec<(Rational, Rational)>,
}

impl IntervalSet {
    pub fn new<I>(parts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Rational, Rational)>,
    {
        let parts: Vec<_> = parts.into_iter().collect();
        if let Some((lo, hi)) = parts.iter().find(|(lo, hi)| lo > hi) {
            return Err(Error::invalid(format!("interval [{lo}, {hi}] has lo > hi")));
        }
        Ok(Self::normalized(parts))
    }

    pub fn empty() -> Self {
        IntervalSet { parts: Vec::new() }
    }

    pub fn interval(lo: Rational, hi: Rational) -> Result<Self> {
        Self::new([(lo, hi)])
    }

    pub fn point(x: Rational) -> Self {
        IntervalSet {
            parts: vec![(x.clone(), x)],
        }
    }

    fn normalized(mut parts: Vec<(Rational, Rational)>) -> Self {
        parts.sort_unstable();
        let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(parts.len());
        for (lo, hi) in parts {
            match out.last_mut() {
                Some(last) if lo <= last.1 => {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                }
                _ => out.push((lo, hi)),
            }
        }
        IntervalSet { parts: out }
    }

    pub fn parts(&self) -> &[(Rational, Rational)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn measure(&self) -> Rational {
        self.parts
            .iter()
            .fold(Rational::zero(), |acc, (lo, hi)| acc + (hi - lo))
    }

    pub fn min(&self) -> Option<&Rational> {
        self.parts.first().map(|p| &p.0)
    }

    pub fn max(&self) -> Option<&Rational> {
        self.parts.last().map(|p| &p.1)
    }

    /// `co(X) = [min X, max X]`.
    pub fn hull(&self) -> Option<(Rational, Rational)> {
        Some((self.min()?.clone(), self.max()?.clone()))
    }

    /// `|co(X)|`, zero for the empty set.
    pub fn hull_measure(&self) -> Rational {
        match self.hull() {
            Some((lo, hi)) => hi - lo,
            None => Rational::zero(),
        }
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let i = self.parts.partition_point(|(lo, _)| lo <= x);
        i > 0 && self.parts[i - 1].1 >= *x
    }

    pub fn is_within(&self, lo: &Rational, hi: &Rational) -> bool {
        self.parts.iter().all(|(a, b)| a >= lo && b <= hi)
    }

    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        self.parts.iter().all(|(lo, hi)| {
            let i = other.parts.partition_point(|(a, _)| a <= lo);
            i > 0 && other.parts[i - 1].1 >= *hi
        })
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut parts = self.parts.clone();
        parts.extend(other.parts.iter().cloned());
        Self::normalized(parts)
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.parts.len() && j < other.parts.len() {
            let (a0, a1) = &self.parts[i];
            let (b0, b1) = &other.parts[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if lo <= hi {
                out.push((lo.clone(), hi.clone()));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::normalized(out)
    }

    pub fn translate(&self, by: &Rational) -> IntervalSet {
        IntervalSet {
            parts: self
                .parts
                .iter()
                .map(|(lo, hi)| (lo + by, hi + by))
                .collect(),
        }
    }

    /// `s * X` for any rational `s` (a negative factor reflects).
    pub fn scale(&self, s: &Rational) -> IntervalSet {
        if s.is_negative() {
            return Self::normalized(
                self.parts
                    .iter()
                    .map(|(lo, hi)| (hi * s, lo * s))
                    .collect(),
            );
        }
        Self::normalized(
            self.parts
                .iter()
                .map(|(lo, hi)| (lo * s, hi * s))
                .collect(),
        )
    }

    /// `{x + y}` for points `x` in `self`, `y` in `offsets`.
    pub fn plus_points(&self, offsets: &[Rational]) -> IntervalSet {
        let mut parts = Vec::with_capacity(self.parts.len() * offsets.len());
        for o in offsets {
            parts.extend(self.parts.iter().map(|(lo, hi)| (lo + o, hi + o)));
        }
        Self::normalized(parts)
    }

    pub fn centroid(&self) -> Option<Rational> {
        let m = self.measure();
        if m.is_zero() {
            // the hull midpoint stands in for measure-zero sets
            let (lo, hi) = self.hull()?;
            return Some((lo + hi) / int(2));
        }
        let moment = self.parts.iter().fold(Rational::zero(), |acc, (lo, hi)| {
            acc + (hi * hi - lo * lo) / int(2)
        });
        Some(moment / m)
    }

    /// `k * X = X + ... + X` (`k` terms).
    pub fn iterated_sum(&self, k: usize) -> Result<IntervalSet> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        let mut acc = self.clone();
        for _ in 1..k {
            acc = sum_1d(&acc, self)?;
        }
        Ok(acc)
    }

    /// Exact `tX + (1-t)Y`.
    pub fn convex_combination(&self, other: &IntervalSet, t: RationalScalar) -> Result<IntervalSet> {
        t.require_open_unit()?;
        let tr = t.to_rational();
        sum_1d(&self.scale(&tr), &other.scale(&(Rational::one() - tr)))
    }
}

impl Fingerprint for IntervalSet {
    fn feed(&self, h: &mut Sha256) {
        use sha2::Digest;
        h.update(b"intervals:");
        for (lo, hi) in &self.parts {
            lo.feed(h);
            hi.feed(h);
        }
    }
}

/// Wire form: `{"parts": [["p/q", "r/s"], ...]}`.
#[derive(Serialize, Deserialize)]
struct IntervalSetJson {
    #[serde(with = "serde_points")]
    parts: Vec<Vec<Rational>>,
}

impl Serialize for IntervalSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IntervalSetJson {
            parts: self
                .parts
                .iter()
                .map(|(lo, hi)| vec![lo.clone(), hi.clone()])
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = IntervalSetJson::deserialize(d)?;
        let mut parts = Vec::with_capacity(raw.parts.len());
        for p in raw.parts {
            match <[Rational; 2]>::try_from(p) {
                Ok([lo, hi]) => parts.push((lo, hi)),
                Err(p) => {
                    return Err(D::Error::custom(format!(
                        "interval needs exactly 2 endpoints, got {}",
                        p.len()
                    )))
                }
            }
        }
        IntervalSet::new(parts).map_err(D::Error::custom)
    }
}

/// Exact Minkowski sum of two nonempty interval sets.
pub fn sum_1d(x: &IntervalSet, y: &IntervalSet) -> Result<IntervalSet> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut parts = Vec::with_capacity(x.parts.len() * y.parts.len());
    for (a0, a1) in &x.parts {
        for (b0, b1) in &y.parts {
            parts.push((a0 + b0, a1 + b1));
        }
    }
    Ok(IntervalSet::normalized(parts))
}

/// A finite union of arcs of the circle `R/Z`, stored as closed intervals
/// inside `[0, 1]` with `1` identified with `0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusSet {
    arcs: IntervalSet,
}

impl TorusSet {
    pub fn full() -> Self {
        TorusSet {
            arcs: IntervalSet {
                parts: vec![(Rational::zero(), Rational::one())],
            },
        }
    }

    pub fn arcs(&self) -> &IntervalSet {
        &self.arcs
    }

    pub fn measure(&self) -> Rational {
        self.arcs.measure()
    }

    pub fn intersection(&self, other: &TorusSet) -> TorusSet {
        TorusSet {
            arcs: self.arcs.intersection(&other.arcs),
        }
    }

    pub fn union(&self, other: &TorusSet) -> TorusSet {
        TorusSet {
            arcs: self.arcs.union(&other.arcs),
        }
    }
}

fn frac_part(x: &Rational) -> Rational {
    x - x.floor()
}

/// Image of `x` under `x -> x - floor(x)`.
pub fn torus_project(x: &IntervalSet) -> TorusSet {
    let one = Rational::one();
    let mut arcs = Vec::new();
    for (lo, hi) in &x.parts {
        if hi - lo >= one {
            return TorusSet::full();
        }
        let start = frac_part(lo);
        let end = &start + (hi - lo);
        if end <= one {
            if start == end && end == one {
                arcs.push((Rational::zero(), Rational::zero()));
            } else {
                arcs.push((start, end));
            }
        } else {
            arcs.push((start, one.clone()));
            arcs.push((Rational::zero(), end - &one));
        }
    }
    TorusSet {
        arcs: IntervalSet::normalized(arcs),
    }
}

fn unit_interval_check(name: &str, s: &IntervalSet) -> Result<()> {
    if !s.is_within(&Rational::zero(), &Rational::one()) {
        return Err(Error::Precondition(format!("{name} must lie in [0, 1]")));
    }
    Ok(())
}

/// `|f(X+Y)| >= min{1, |f(X)| + |f(Y)|}` on the circle.
pub fn check_cauchy_davenport(x: &IntervalSet, y: &IntervalSet) -> Result<VerdictReport> {
    let sum = sum_1d(x, y)?;
    let fx = torus_project(x).measure();
    let fy = torus_project(y).measure();
    let lhs = torus_project(&sum).measure();
    let rhs = (&fx + &fy).min(Rational::one());
    let digest = Digester::new("cauchy-davenport").add(x).add(y).finish();
    Ok(VerdictReport::new("cauchy-davenport", digest, rhs.clone())
        .with("lhs", lhs.clone())
        .with("rhs", rhs.clone())
        .with("torus_x", fx)
        .with("torus_y", fy)
        .with("slack", &lhs - &rhs)
        .lower_bound_verdict(&lhs))
}

/// For `X, Y, Z` in `[0, 1]`:
/// `|(X+Y) u ({0,1}+Z)| >= min{1, |X|+|Y|} + |Z|`.
pub fn check_lemma_distinct(
    x: &IntervalSet,
    y: &IntervalSet,
    z: &IntervalSet,
) -> Result<VerdictReport> {
    for (name, s) in [("X", x), ("Y", y), ("Z", z)] {
        if s.is_empty() {
            return Err(Error::EmptySet);
        }
        unit_interval_check(name, s)?;
    }
    let s = sum_1d(x, y)?.union(&z.plus_points(&[Rational::zero(), Rational::one()]));
    let (mx, my, mz) = (x.measure(), y.measure(), z.measure());
    let bound = (&mx + &my).min(Rational::one()) + &mz;
    let ms = s.measure();
    let digest = Digester::new("lemma-distinct").add(x).add(y).add(z).finish();
    Ok(VerdictReport::new("lemma-distinct", digest, bound.clone())
        .with("S", ms.clone())
        .with("X", mx)
        .with("Y", my)
        .with("Z", mz)
        .with("slack", &ms - &bound)
        .lower_bound_verdict(&ms))
}

/// The union `S = U_i ({0, ..., k-i} + i*Y_i)` for `i = 1..k`.
pub fn iterated_lemma_set(ys: &[IntervalSet]) -> Result<IntervalSet> {
    let k = ys.len();
    let mut s = IntervalSet::empty();
    for (idx, y) in ys.iter().enumerate() {
        if y.is_empty() {
            continue;
        }
        let i = idx + 1;
        let offsets: Vec<Rational> = (0..=(k - i) as i64).map(int).collect();
        s = s.union(&y.iterated_sum(i)?.plus_points(&offsets));
    }
    Ok(s)
}

/// For `Y_i` in `[0, 1]` with `|Y_i| <= 1/k`: `|S| >= sum_i i |Y_i|`.
///
/// Inputs outside the hypothesis are rejected with
/// [`Error::Precondition`] rather than checked.
pub fn check_lemma_iterated(ys: &[IntervalSet]) -> Result<VerdictReport> {
    let k = ys.len();
    if k == 0 {
        return Err(Error::invalid("need at least one Y_i"));
    }
    let cap = Rational::new(BigInt::one(), BigInt::from(k));
    for (i, y) in ys.iter().enumerate() {
        unit_interval_check(&format!("Y_{}", i + 1), y)?;
        if y.measure() > cap {
            return Err(Error::Precondition(format!(
                "|Y_{}| = {} exceeds 1/k = {}",
                i + 1,
                y.measure(),
                cap
            )));
        }
    }
    let s = iterated_lemma_set(ys)?;
    let bound = ys
        .iter()
        .enumerate()
        .fold(Rational::zero(), |acc, (i, y)| acc + int(i as i64 + 1) * y.measure());
    let ms = s.measure();
    let digest = Digester::new("lemma-iterated").add(ys).finish();
    Ok(VerdictReport::new("lemma-iterated", digest, bound.clone())
        .with("S", ms.clone())
        .with("k", int(k as i64))
        .with("slack", &ms - &bound)
        .lower_bound_verdict(&ms))
}

/// Chain inequality behind the iterated lemma:
/// `sum_i (k-i+1)|Z_i| >= sum_i |f(i*Y_i)|` with
/// `Z_i = f(i*Y_i) \ U_{j<i} f(j*Y_j)`.
pub fn check_torus_chain(ys: &[IntervalSet]) -> Result<VerdictReport> {
    let k = ys.len();
    if k == 0 {
        return Err(Error::invalid("need at least one Y_i"));
    }
    let mut covered: Option<TorusSet> = None;
    let mut lhs = Rational::zero();
    let mut rhs = Rational::zero();
    for (idx, y) in ys.iter().enumerate() {
        if y.is_empty() {
            continue;
        }
        let i = idx + 1;
        let image = torus_project(&y.iterated_sum(i)?);
        let fresh = match &covered {
            Some(c) => image.measure() - image.intersection(c).measure(),
            None => image.measure(),
        };
        lhs += int((k - i + 1) as i64) * fresh;
        rhs += image.measure();
        covered = Some(match covered {
            Some(c) => c.union(&image),
            None => image,
        });
    }
    let digest = Digester::new("torus-chain").add(ys).finish();
    Ok(VerdictReport::new("torus-chain", digest, rhs.clone())
        .with("weighted_fresh", lhs.clone())
        .with("image_total", rhs)
        .lower_bound_verdict(&lhs))
}

/// `|k*A| >= C(l+1, 2)|A| + (k-l)|co(A)|` with
/// `l = min{floor(|co A| / |A|), k}`.
///
/// When `l = 1` and `k >= 2` the report also carries the hull deficit
/// `|co(A) \ A|` and its bound `(|k*A| - k|A|) / (k-1)`.
pub fn freiman_iterated_bound(a: &IntervalSet, k: usize) -> Result<VerdictReport> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let m = a.measure();
    if m.is_zero() {
        return Err(Error::ZeroMeasure);
    }
    let co = a.hull_measure();
    let ratio_floor = (&co / &m).floor().to_integer();
    let ell = ratio_floor.min(BigInt::from(k)).to_usize().expect("ell <= k");
    let binom = int((ell * (ell + 1) / 2) as i64);
    let bound = binom * &m + int((k - ell) as i64) * &co;
    let ka = a.iterated_sum(k)?.measure();
    let digest = Digester::new("freiman").add(a).add(&k).finish();
    let mut report = VerdictReport::new("freiman", digest, bound.clone())
        .with("kA", ka.clone())
        .with("A", m.clone())
        .with("coA", co.clone())
        .with("ell", int(ell as i64))
        .with("k", int(k as i64))
        .lower_bound_verdict(&ka);
    if ell == 1 && k >= 2 {
        let deficit = &co - &m;
        let deficit_bound = (&ka - int(k as i64) * &m) / int(k as i64 - 1);
        let ok = deficit <= deficit_bound;
        report = report
            .with("hull_deficit", deficit)
            .with("hull_deficit_bound", deficit_bound)
            .note("dense regime l = 1: hull deficit bound checked");
        report.holds &= ok;
    }
    Ok(report)
}
