//! Fibers of grid sets along one axis and transport of their marginals.
//!
//! A grid set sliced along `axis` is a map from base cells (the other
//! `d - 1` anchor coordinates) to one-dimensional fibers. The marginal puts
//! an atom of mass `|A_x| * q^-(d-1)` at each base cell centre.
//!
//! Transport plans pair atoms. With a one-dimensional base the monotone
//! rearrangement is used; otherwise an exact min-cost flow with squared
//! Euclidean cost. For a pair moving mass `m` between densities `a` and
//! `b`, the interpolated base region has measure `t m/a + (1-t) m/b` and
//! carries fibers of length `t a + (1-t) b`; summing their product over the
//! plan gives the integral of `rho_t`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{scaled_sum, GridSet};
use crate::intervals::{sum_1d, IntervalSet};
use crate::rational::{int, rat, serde_str, serde_vec, Rational, RationalScalar};
use crate::verdict::{Digester, Fingerprint, VerdictReport};

/// A grid set sliced along `axis` (0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberDecomposition {
    axis: usize,
    dim: usize,
    q: u64,
    fibers: BTreeMap<Vec<i64>, IntervalSet>,
}

impl FiberDecomposition {
    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn fibers(&self) -> &BTreeMap<Vec<i64>, IntervalSet> {
        &self.fibers
    }

    pub fn fiber(&self, base: &[i64]) -> Option<&IntervalSet> {
        self.fibers.get(base)
    }

    /// Area of one base cell, `q^-(d-1)`.
    pub fn base_cell_area(&self) -> Rational {
        Rational::new(BigInt::one(), num_traits::pow(BigInt::from(self.q), self.dim - 1))
    }

    /// Centre of a base cell.
    pub fn base_location(&self, base: &[i64]) -> Vec<Rational> {
        let q = self.q as i64;
        base.iter().map(|&c| rat(2 * c + 1, 2 * q)).collect()
    }

    fn base_anchor(&self, location: &[Rational]) -> Option<Vec<i64>> {
        let q2 = int(2 * self.q as i64);
        location
            .iter()
            .map(|c| {
                let twice = c * &q2 - int(1);
                if !twice.is_integer() || twice.to_integer().is_odd() {
                    return None;
                }
                let twice: num_bigint::BigInt = twice.to_integer();
                (twice / num_bigint::BigInt::from(2)).to_i64()
            })
            .collect()
    }

    pub fn marginal(&self) -> Marginal {
        let area = self.base_cell_area();
        Marginal {
            dim: self.dim - 1,
            atoms: self
                .fibers
                .iter()
                .map(|(x, fiber)| {
                    let density = fiber.measure();
                    Atom {
                        at: self.base_location(x),
                        mass: &density * &area,
                        density,
                    }
                })
                .collect(),
        }
    }

    pub fn volume(&self) -> Rational {
        let total = self
            .fibers
            .values()
            .fold(Rational::zero(), |acc, f| acc + f.measure());
        total * self.base_cell_area()
    }

    /// Rebuilds the grid set from its fibers.
    pub fn reassemble(&self) -> Result<GridSet> {
        let q = self.q as i64;
        let mut cells = Vec::new();
        for (base, fiber) in &self.fibers {
            for (lo, hi) in fiber.parts() {
                let lo = (lo * int(q)).to_integer().to_i64().ok_or(Error::CoordinateOverflow)?;
                let hi = (hi * int(q)).to_integer().to_i64().ok_or(Error::CoordinateOverflow)?;
                for c in lo..hi {
                    let mut cell = base.clone();
                    cell.insert(self.axis, c);
                    cells.push(cell);
                }
            }
        }
        GridSet::new(self.dim, self.q, cells)
    }
}

/// Slices `s` into fibers parallel to coordinate `axis` (0-based).
pub fn decompose(s: &GridSet, axis: usize) -> Result<FiberDecomposition> {
    let d = s.dim();
    if axis >= d {
        return Err(Error::invalid(format!("axis {axis} out of range for d = {d}")));
    }
    let q = s.q() as i64;
    let mut parts: BTreeMap<Vec<i64>, Vec<(Rational, Rational)>> = BTreeMap::new();
    for c in s.cells() {
        let mut base = c.to_vec();
        let h = base.remove(axis);
        parts
            .entry(base)
            .or_default()
            .push((rat(h, q), rat(h + 1, q)));
    }
    let mut fibers = BTreeMap::new();
    for (base, p) in parts {
        fibers.insert(base, IntervalSet::new(p)?);
    }
    Ok(FiberDecomposition {
        axis,
        dim: d,
        q: s.q(),
        fibers,
    })
}

/// A point mass of the fiber-length marginal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(with = "serde_vec")]
    pub at: Vec<Rational>,
    /// Fiber length `|A_x|` over the base cell.
    #[serde(with = "serde_str")]
    pub density: Rational,
    /// `density * base cell area`.
    #[serde(with = "serde_str")]
    pub mass: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marginal {
    pub dim: usize,
    pub atoms: Vec<Atom>,
}

impl Marginal {
    pub fn total(&self) -> Rational {
        self.atoms
            .iter()
            .fold(Rational::zero(), |acc, a| acc + &a.mass)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanPair {
    #[serde(with = "serde_vec")]
    pub x: Vec<Rational>,
    #[serde(with = "serde_vec")]
    pub y: Vec<Rational>,
    #[serde(with = "serde_str")]
    pub m: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub pairs: Vec<PlanPair>,
    #[serde(with = "serde_str")]
    pub cost: Rational,
}

impl TransportPlan {
    fn from_pairs(pairs: Vec<PlanPair>) -> Self {
        let cost = plan_cost(&pairs);
        TransportPlan { pairs, cost }
    }
}

fn squared_distance(x: &[Rational], y: &[Rational]) -> Rational {
    x.iter().zip(y).fold(Rational::zero(), |acc, (a, b)| {
        let d = a - b;
        acc + &d * &d
    })
}

fn plan_cost(pairs: &[PlanPair]) -> Rational {
    pairs
        .iter()
        .fold(Rational::zero(), |acc, p| acc + &p.m * squared_distance(&p.x, &p.y))
}

/// Exact squared-cost transport between marginals of equal total mass.
pub fn optimal_transport(mu_a: &Marginal, mu_b: &Marginal) -> Result<TransportPlan> {
    if mu_a.dim != mu_b.dim {
        return Err(Error::DimensionMismatch {
            left: mu_a.dim,
            right: mu_b.dim,
        });
    }
    let (ta, tb) = (mu_a.total(), mu_b.total());
    if ta != tb {
        return Err(Error::UnequalVolumes {
            left: ta.to_string(),
            right: tb.to_string(),
        });
    }
    let a: Vec<&Atom> = mu_a.atoms.iter().filter(|x| x.mass.is_positive()).collect();
    let b: Vec<&Atom> = mu_b.atoms.iter().filter(|x| x.mass.is_positive()).collect();
    if a.is_empty() {
        return Ok(TransportPlan::from_pairs(Vec::new()));
    }
    if mu_a.dim <= 1 {
        Ok(monotone_plan(&a, &b))
    } else {
        min_cost_plan(&a, &b)
    }
}

/// The order-preserving coupling of two atomic measures on the line.
pub fn monotone_transport(mu_a: &Marginal, mu_b: &Marginal) -> Result<TransportPlan> {
    if mu_a.dim > 1 || mu_b.dim > 1 {
        return Err(Error::invalid("monotone rearrangement needs a base of dimension <= 1"));
    }
    if mu_a.total() != mu_b.total() {
        return Err(Error::UnequalVolumes {
            left: mu_a.total().to_string(),
            right: mu_b.total().to_string(),
        });
    }
    let a: Vec<&Atom> = mu_a.atoms.iter().filter(|x| x.mass.is_positive()).collect();
    let b: Vec<&Atom> = mu_b.atoms.iter().filter(|x| x.mass.is_positive()).collect();
    Ok(monotone_plan(&a, &b))
}

fn monotone_plan(a: &[&Atom], b: &[&Atom]) -> TransportPlan {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|u, v| u.at.cmp(&v.at));
    b.sort_by(|u, v| u.at.cmp(&v.at));
    let mut pairs = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut left_a = a.first().map(|x| x.mass.clone()).unwrap_or_default();
    let mut left_b = b.first().map(|x| x.mass.clone()).unwrap_or_default();
    while i < a.len() && j < b.len() {
        let m = (&left_a).min(&left_b).clone();
        pairs.push(PlanPair {
            x: a[i].at.clone(),
            y: b[j].at.clone(),
            m: m.clone(),
        });
        left_a -= &m;
        left_b -= &m;
        if left_a.is_zero() {
            i += 1;
            if i < a.len() {
                left_a = a[i].mass.clone();
            }
        }
        if left_b.is_zero() {
            j += 1;
            if j < b.len() {
                left_b = b[j].mass.clone();
            }
        }
    }
    TransportPlan::from_pairs(pairs)
}

/// Exact min-cost flow by successive shortest paths on the bipartite
/// transportation network, with masses and costs scaled to integers.
pub fn min_cost_plan_exact(mu_a: &Marginal, mu_b: &Marginal) -> Result<TransportPlan> {
    if mu_a.total() != mu_b.total() {
        return Err(Error::UnequalVolumes {
            left: mu_a.total().to_string(),
            right: mu_b.total().to_string(),
        });
    }
    let a: Vec<&Atom> = mu_a.atoms.iter().filter(|x| x.mass.is_positive()).collect();
    let b: Vec<&Atom> = mu_b.atoms.iter().filter(|x| x.mass.is_positive()).collect();
    if a.is_empty() {
        return Ok(TransportPlan::from_pairs(Vec::new()));
    }
    min_cost_plan(&a, &b)
}

fn to_i128(n: &BigInt) -> Result<i128> {
    n.to_i128().ok_or(Error::CoordinateOverflow)
}

fn min_cost_plan(a: &[&Atom], b: &[&Atom]) -> Result<TransportPlan> {
    let (n, m) = (a.len(), b.len());
    let mass_den = a
        .iter()
        .chain(b)
        .fold(BigInt::one(), |acc, x| acc.lcm(x.mass.denom()));
    let scale_mass = |r: &Rational| to_i128(&(r * Rational::from_integer(mass_den.clone())).to_integer());
    let supply: Vec<i128> = a.iter().map(|x| scale_mass(&x.mass)).collect::<Result<_>>()?;
    let demand: Vec<i128> = b.iter().map(|x| scale_mass(&x.mass)).collect::<Result<_>>()?;

    let raw: Vec<Vec<Rational>> = a
        .iter()
        .map(|x| b.iter().map(|y| squared_distance(&x.at, &y.at)).collect())
        .collect();
    let cost_den = raw
        .iter()
        .flatten()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let cost: Vec<Vec<i128>> = raw
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| to_i128(&(c * Rational::from_integer(cost_den.clone())).to_integer()))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;

    let flow = transportation_ssp(&supply, &demand, &cost)?;
    let unit = Rational::new(BigInt::one(), mass_den);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if flow[i][j] > 0 {
                pairs.push(PlanPair {
                    x: a[i].at.clone(),
                    y: b[j].at.clone(),
                    m: Rational::from_integer(BigInt::from(flow[i][j])) * &unit,
                });
            }
        }
    }
    Ok(TransportPlan::from_pairs(pairs))
}

/// Successive shortest paths with Johnson potentials on the complete
/// bipartite graph; dense O(V^2) Dijkstra per augmentation.
fn transportation_ssp(supply: &[i128], demand: &[i128], cost: &[Vec<i128>]) -> Result<Vec<Vec<i128>>> {
    let (n, m) = (supply.len(), demand.len());
    let mut flow = vec![vec![0i128; m]; n];
    let mut left_s = supply.to_vec();
    let mut left_d = demand.to_vec();
    // sources [0, n), sinks [n, n + m), super source n + m
    let root = n + m;
    let mut pot = vec![0i128; n + m + 1];
    let inf = i128::MAX / 4;
    while left_s.iter().any(|&v| v > 0) {
        let mut dist = vec![inf; n + m + 1];
        let mut prev = vec![usize::MAX; n + m + 1];
        let mut done = vec![false; n + m + 1];
        dist[root] = 0;
        loop {
            let mut u = usize::MAX;
            for v in 0..=n + m {
                if !done[v] && dist[v] < inf && (u == usize::MAX || dist[v] < dist[u]) {
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            let mut relax = |v: usize, rc: i128, dist: &mut Vec<i128>| {
                debug_assert!(rc >= 0, "negative reduced cost");
                if dist[u] + rc < dist[v] {
                    dist[v] = dist[u] + rc;
                    prev[v] = u;
                }
            };
            if u == root {
                for i in (0..n).filter(|&i| left_s[i] > 0) {
                    relax(i, pot[root] - pot[i], &mut dist);
                }
            } else if u < n {
                for j in 0..m {
                    relax(n + j, cost[u][j] + pot[u] - pot[n + j], &mut dist);
                }
            } else {
                let j = u - n;
                for i in (0..n).filter(|&i| flow[i][j] > 0) {
                    relax(i, -cost[i][j] + pot[u] - pot[i], &mut dist);
                }
            }
        }
        let target = (0..m)
            .filter(|&j| left_d[j] > 0 && dist[n + j] < inf)
            .min_by_key(|&j| dist[n + j])
            .ok_or_else(|| Error::Invariant("transport network disconnected".into()))?;
        for v in 0..=n + m {
            if dist[v] < inf {
                pot[v] += dist[v];
            }
        }
        // bottleneck along the path
        let mut push = left_d[target];
        let mut v = n + target;
        while prev[v] != root {
            let u = prev[v];
            if u >= n {
                push = push.min(flow[v][u - n]);
            }
            v = u;
        }
        push = push.min(left_s[v]);
        let start = v;
        let mut v = n + target;
        while prev[v] != root {
            let u = prev[v];
            if u < n {
                flow[u][v - n] += push;
            } else {
                flow[v][u - n] -= push;
            }
            v = u;
        }
        left_s[start] -= push;
        left_d[target] -= push;
    }
    Ok(flow)
}

fn fraction(t: RationalScalar) -> Result<(Rational, Rational)> {
    t.require_open_unit()?;
    let tr = t.to_rational();
    let s = Rational::one() - &tr;
    Ok((tr, s))
}

/// Checks that `plan` couples the marginals of `a` and `b` exactly and
/// returns, per pair, the source and target atoms.
fn matched_pairs<'p>(
    a: &FiberDecomposition,
    b: &FiberDecomposition,
    plan: &'p TransportPlan,
) -> Result<Vec<(&'p PlanPair, Vec<i64>, Vec<i64>)>> {
    if a.dim != b.dim || a.axis != b.axis {
        return Err(Error::invalid("decompositions must share dimension and axis"));
    }
    let (ma, mb) = (a.marginal(), b.marginal());
    let mut out_a: BTreeMap<Vec<i64>, Rational> = BTreeMap::new();
    let mut out_b: BTreeMap<Vec<i64>, Rational> = BTreeMap::new();
    let mut matched = Vec::with_capacity(plan.pairs.len());
    for p in &plan.pairs {
        if !p.m.is_positive() {
            return Err(Error::invalid("plan masses must be positive"));
        }
        let xa = a
            .base_anchor(&p.x)
            .filter(|x| a.fibers.contains_key(x))
            .ok_or_else(|| Error::invalid("plan source is not an atom of the first marginal"))?;
        let yb = b
            .base_anchor(&p.y)
            .filter(|y| b.fibers.contains_key(y))
            .ok_or_else(|| Error::invalid("plan target is not an atom of the second marginal"))?;
        *out_a.entry(xa.clone()).or_default() += &p.m;
        *out_b.entry(yb.clone()).or_default() += &p.m;
        matched.push((p, xa, yb));
    }
    let rows_ok = ma.atoms.iter().zip(a.fibers.keys()).all(|(atom, x)| {
        out_a.get(x).cloned().unwrap_or_default() == atom.mass
    });
    let cols_ok = mb.atoms.iter().zip(b.fibers.keys()).all(|(atom, y)| {
        out_b.get(y).cloned().unwrap_or_default() == atom.mass
    });
    if !(rows_ok && cols_ok) {
        return Err(Error::invalid("plan marginals do not match the decompositions"));
    }
    Ok(matched)
}

/// `integral of rho_t >= |A|` for a coupling of the fiber marginals.
pub fn rho_t_check(
    a: &FiberDecomposition,
    b: &FiberDecomposition,
    plan: &TransportPlan,
    t: RationalScalar,
) -> Result<VerdictReport> {
    let (tr, s) = fraction(t)?;
    let matched = matched_pairs(a, b, plan)?;
    let mut integral = Rational::zero();
    for (p, xa, yb) in &matched {
        let da = a.fibers[xa].measure();
        let db = b.fibers[yb].measure();
        let length = &tr * &da + &s * &db;
        let base = &tr * &p.m / &da + &s * &p.m / &db;
        integral += length * base;
    }
    let volume = a.volume();
    let digest = Digester::new("rho-t").add(a).add(b).add(&t).finish();
    Ok(VerdictReport::new("rho-t", digest, volume.clone())
        .with("integral", integral.clone())
        .with("volume_a", volume.clone())
        .with("volume_b", b.volume())
        .with("cost", plan.cost.clone())
        .with("slack", &integral - &volume)
        .lower_bound_verdict(&integral))
}

/// `tI (+) (1-t)J = (t min I + (1-t)J) u (tI + (1-t) max J)`.
pub fn special_fiber_sum(i: &IntervalSet, j: &IntervalSet, t: RationalScalar) -> Result<IntervalSet> {
    let (tr, s) = fraction(t)?;
    let (min_i, max_j) = match (i.min(), j.max()) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        _ => return Err(Error::EmptySet),
    };
    let low = j.scale(&s).translate(&(&tr * min_i));
    let high = i.scale(&tr).translate(&(&s * max_j));
    Ok(low.union(&high))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct S1Piece {
    /// `t x + (1-t) y`.
    #[serde(with = "serde_vec")]
    pub location: Vec<Rational>,
    /// Base measure the pair occupies after interpolation.
    #[serde(with = "serde_str")]
    pub base_measure: Rational,
    pub fiber: IntervalSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct S1Record {
    pub pieces: Vec<S1Piece>,
    #[serde(with = "serde_str")]
    pub measure: Rational,
}

/// Builds the fiber family `S^1` from a plan, checking the per-pair
/// identity `|tI (+) (1-t)J| = t|I| + (1-t)|J|`.
pub fn s1_construct(
    a: &FiberDecomposition,
    b: &FiberDecomposition,
    plan: &TransportPlan,
    t: RationalScalar,
) -> Result<S1Record> {
    let (tr, s) = fraction(t)?;
    let matched = matched_pairs(a, b, plan)?;
    let mut pieces = Vec::with_capacity(matched.len());
    let mut measure = Rational::zero();
    for (p, xa, yb) in matched {
        let (fi, fj) = (&a.fibers[&xa], &b.fibers[&yb]);
        if fi.is_empty() || fj.is_empty() {
            return Err(Error::invalid("empty fiber carries plan mass"));
        }
        let fiber = special_fiber_sum(fi, fj, t)?;
        let expected = &tr * fi.measure() + &s * fj.measure();
        if fiber.measure() != expected {
            return Err(Error::Invariant(format!(
                "fiber sum measure {} differs from {}",
                fiber.measure(),
                expected
            )));
        }
        let base_measure = &tr * &p.m / fi.measure() + &s * &p.m / fj.measure();
        measure += fiber.measure() * &base_measure;
        let location = p.x.iter().zip(&p.y).map(|(x, y)| &tr * x + &s * y).collect();
        pieces.push(S1Piece {
            location,
            base_measure,
            fiber,
        });
    }
    Ok(S1Record { pieces, measure })
}

/// Checks `S^1 ⊆ tA + (1-t)B` cell by cell at the resolution of the
/// scaled sum: the piece for pair `(x, y)` lives over the base block
/// `t cell(x) + (1-t) cell(y)`.
pub fn check_s1_containment(
    a_set: &GridSet,
    b_set: &GridSet,
    axis: usize,
    plan: &TransportPlan,
    t: RationalScalar,
) -> Result<VerdictReport> {
    let a = decompose(a_set, axis)?;
    let b = decompose(b_set, axis)?;
    let sum = scaled_sum(a_set, b_set, t)?;
    let (p, r) = (t.numer(), t.denom());
    let qa = a.q as i64;
    let qb = b.q as i64;
    let common = qa.lcm(&qb);
    let big_q = sum.q() as i64;
    debug_assert_eq!(big_q, common * r);
    let matched = matched_pairs(&a, &b, plan)?;
    let mut checked = 0i64;
    let mut missing = 0i64;
    for (_, xa, yb) in matched {
        let fiber = special_fiber_sum(&a.fibers[&xa], &b.fibers[&yb], t)?;
        let mut fiber_cells = Vec::new();
        for (lo, hi) in fiber.parts() {
            let lo = (lo * int(big_q)).to_integer().to_i64().ok_or(Error::CoordinateOverflow)?;
            let hi = (hi * int(big_q)).to_integer().to_i64().ok_or(Error::CoordinateOverflow)?;
            fiber_cells.extend(lo..hi);
        }
        // base anchors at the common resolution, then the block of side r
        let base: Vec<i64> = xa
            .iter()
            .zip(&yb)
            .map(|(&x, &y)| p * x * (common / qa) + (r - p) * y * (common / qb))
            .collect();
        let k = base.len();
        let blocks = (r as usize).pow(k as u32);
        for idx in 0..blocks {
            let mut cell_base = base.clone();
            let mut rem = idx;
            for c in cell_base.iter_mut() {
                *c += (rem % r as usize) as i64;
                rem /= r as usize;
            }
            for &h in &fiber_cells {
                let mut cell = cell_base.clone();
                cell.insert(axis, h);
                checked += 1;
                if !sum.contains_cell(&cell) {
                    missing += 1;
                }
            }
        }
    }
    let digest = Digester::new("s1-containment").add(a_set).add(b_set).add(&t).finish();
    Ok(VerdictReport::new("s1-containment", digest, int(0))
        .with("cells_checked", int(checked))
        .with("cells_missing", int(missing))
        .verdict(missing == 0, missing == 0))
}

impl Fingerprint for FiberDecomposition {
    fn feed(&self, h: &mut sha2::Sha256) {
        use sha2::Digest;
        h.update(format!("fibers:{}:{}:{}:", self.dim, self.axis, self.q).as_bytes());
        for (base, fiber) in &self.fibers {
            for c in base {
                h.update(c.to_le_bytes());
            }
            fiber.feed(h);
        }
    }
}

/// Fiber Minkowski sum used as a reference: `tI + (1-t)J`.
pub fn plain_fiber_sum(i: &IntervalSet, j: &IntervalSet, t: RationalScalar) -> Result<IntervalSet> {
    let (tr, s) = fraction(t)?;
    sum_1d(&i.scale(&tr), &j.scale(&s))
}
