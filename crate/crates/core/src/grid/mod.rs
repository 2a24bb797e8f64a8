//! Grid-discretized subsets of `R^d`.
//!
//! A [`GridSet`] is a finite union of closed cells `a/q + [0, 1/q]^d` with
//! integer anchors `a`. Sums of closed cells are closed blocks, so every sum
//! computed here is the exact continuous Minkowski sum of the represented
//! sets; there is no discretization error anywhere in this module.

pub(crate) mod kernel;

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::rational::{common_denominator, rat, Rational, RationalScalar};

pub use kernel::DEFAULT_WORKSPACE_CAP;

/// A union of closed axis-aligned cells at resolution `1/q`.
///
/// Cells are kept sorted lexicographically and deduplicated; values are
/// immutable once built.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GridSet {
    dim: usize,
    q: u64,
    coords: Vec<i64>,
}

impl fmt::Debug for GridSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSet")
            .field("dim", &self.dim)
            .field("q", &self.q)
            .field("cells", &self.len())
            .finish()
    }
}

fn check_dim_q(dim: usize, q: u64) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if q == 0 {
        return Err(Error::invalid("resolution q must be at least 1"));
    }
    Ok(())
}

impl GridSet {
    pub fn new<I, C>(dim: usize, q: u64, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[i64]>,
    {
        check_dim_q(dim, q)?;
        let mut flat = Vec::new();
        for c in cells {
            let c = c.as_ref();
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: c.len(),
                });
            }
            flat.extend_from_slice(c);
        }
        Ok(Self::from_flat(dim, q, flat))
    }

    /// Builds from flat row-major anchors; order and duplicates are fixed up.
    pub(crate) fn from_flat(dim: usize, q: u64, flat: Vec<i64>) -> Self {
        GridSet {
            dim,
            q,
            coords: kernel::sort_dedup_rows(dim, flat),
        }
    }

    pub fn empty(dim: usize, q: u64) -> Result<Self> {
        check_dim_q(dim, q)?;
        Ok(GridSet {
            dim,
            q,
            coords: Vec::new(),
        })
    }

    /// All cells with anchors in `lo[i] <= a[i] < hi[i]`, i.e. the box
    /// `[lo/q, hi/q]`.
    pub fn from_box(dim: usize, q: u64, lo: &[i64], hi: &[i64]) -> Result<Self> {
        check_dim_q(dim, q)?;
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: lo.len().max(hi.len()),
            });
        }
        if lo.iter().zip(hi).any(|(l, h)| l >= h) {
            return Err(Error::invalid("box must have positive side lengths"));
        }
        let mut flat = Vec::new();
        let mut cur = lo.to_vec();
        loop {
            flat.extend_from_slice(&cur);
            let mut axis = dim;
            loop {
                if axis == 0 {
                    return Ok(GridSet {
                        dim,
                        q,
                        coords: flat,
                    });
                }
                axis -= 1;
                cur[axis] += 1;
                if cur[axis] < hi[axis] {
                    break;
                }
                cur[axis] = lo[axis];
            }
        }
    }

    /// `[0, 1]^d` at resolution `q`.
    pub fn unit_cube(dim: usize, q: u64) -> Result<Self> {
        let side = i64::try_from(q).map_err(|_| Error::CoordinateOverflow)?;
        Self::from_box(dim, q, &vec![0; dim], &vec![side; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn cells(&self) -> impl ExactSizeIterator<Item = &[i64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub(crate) fn flat(&self) -> &[i64] {
        &self.coords
    }

    pub fn contains_cell(&self, cell: &[i64]) -> bool {
        let (mut lo, mut hi) = (0usize, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match kernel::row_cmp(&self.coords[mid * self.dim..(mid + 1) * self.dim], cell) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// `|cells| / q^d`, exactly.
    pub fn volume(&self) -> Rational {
        let denom = num_traits::pow(BigInt::from(self.q), self.dim);
        Rational::new(BigInt::from(self.len()), denom)
    }

    /// The same continuous set at resolution `q * m`.
    pub fn refine(&self, m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("refinement factor must be at least 1"));
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let q = self.q.checked_mul(m).ok_or(Error::CoordinateOverflow)?;
        let m = i64::try_from(m).map_err(|_| Error::CoordinateOverflow)?;
        let scaled = kernel::scale_rows(&self.coords, m)?;
        Ok(GridSet {
            dim: self.dim,
            q,
            coords: kernel::dilate_rows(self.dim, scaled, m)?,
        })
    }

    /// Refines to resolution `q`, which must be a multiple of `self.q()`.
    pub fn at_resolution(&self, q: u64) -> Result<Self> {
        if q == 0 || !q.is_multiple_of(self.q) {
            return Err(Error::invalid(format!(
                "resolution {q} is not a multiple of {}",
                self.q
            )));
        }
        self.refine(q / self.q)
    }

    /// Coarsest resolution at which the set is still exactly representable.
    ///
    /// Representability at `q1` and `q2` implies representability at
    /// `gcd(q1, q2)`, so stripping prime factors greedily is optimal.
    pub fn coarsen(&self) -> Self {
        let mut best = self.clone();
        for p in distinct_prime_factors(self.q) {
            while best.q.is_multiple_of(p) {
                match best.try_coarsen(p) {
                    Some(c) => best = c,
                    None => break,
                }
            }
        }
        best
    }

    fn try_coarsen(&self, m: u64) -> Option<Self> {
        let mi = m as i64;
        let parents: Vec<i64> = self.coords.iter().map(|v| v.div_floor(&mi)).collect();
        let parent = GridSet::from_flat(self.dim, self.q / m, parents);
        let back = parent.refine(m).ok()?;
        (back.coords == self.coords).then_some(parent)
    }

    /// True when both describe the same continuous set.
    pub fn same_set(&self, other: &GridSet) -> bool {
        if self.dim != other.dim {
            return false;
        }
        match common_resolution(self, other) {
            Ok((a, b)) => a.coords == b.coords,
            Err(_) => false,
        }
    }

    pub fn is_subset_of(&self, other: &GridSet) -> Result<bool> {
        let (a, b) = common_resolution(self, other)?;
        let contained = a.cells().all(|c| b.contains_cell(c));
        Ok(contained)
    }

    pub fn union(&self, other: &GridSet) -> Result<Self> {
        let (a, b) = common_resolution(self, other)?;
        let mut flat = a.coords;
        flat.extend_from_slice(&b.coords);
        Ok(GridSet::from_flat(self.dim, a.q, flat))
    }

    /// Exact translate by a rational vector; the resolution is refined to the
    /// least multiple of `q` at which the shift is a whole number of cells.
    pub fn translate(&self, v: &[Rational]) -> Result<Self> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: v.len(),
            });
        }
        let den = common_denominator(v.iter());
        let q_new = BigInt::from(self.q).lcm(&den);
        let q_new = q_new.to_u64().ok_or(Error::CoordinateOverflow)?;
        let refined = self.refine(q_new / self.q)?;
        let shift: Vec<i64> = v
            .iter()
            .map(|c| {
                let s = c * Rational::from_integer(BigInt::from(q_new));
                debug_assert!(s.is_integer());
                s.to_integer().to_i64().ok_or(Error::CoordinateOverflow)
            })
            .collect::<Result<_>>()?;
        let mut coords = refined.coords;
        for row in coords.chunks_exact_mut(self.dim) {
            for (c, s) in row.iter_mut().zip(&shift) {
                *c = c.checked_add(*s).ok_or(Error::CoordinateOverflow)?;
            }
        }
        Ok(GridSet {
            dim: self.dim,
            q: q_new,
            coords,
        })
    }

    /// `t * S` for a positive scalar `t = p/r`, at resolution `q * r`.
    pub fn scale(&self, t: RationalScalar) -> Result<Self> {
        if t.numer() <= 0 {
            return Err(Error::invalid(format!("scale factor {t} must be positive")));
        }
        let q = self
            .q
            .checked_mul(t.denom() as u64)
            .ok_or(Error::CoordinateOverflow)?;
        let scaled = kernel::scale_rows(&self.coords, t.numer())?;
        Ok(GridSet {
            dim: self.dim,
            q,
            coords: kernel::dilate_rows(self.dim, scaled, t.numer())?,
        })
    }

    /// Per-axis `(min anchor, max anchor)`, or `None` when empty.
    pub fn anchor_bounds(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        if self.is_empty() {
            return None;
        }
        let mut lo = vec![i64::MAX; self.dim];
        let mut hi = vec![i64::MIN; self.dim];
        for c in self.cells() {
            for i in 0..self.dim {
                lo[i] = lo[i].min(c[i]);
                hi[i] = hi[i].max(c[i]);
            }
        }
        Some((lo, hi))
    }

    /// Lower and upper corners of the bounding box of the continuous set.
    pub fn bounding_box(&self) -> Option<(Vec<Rational>, Vec<Rational>)> {
        let (lo, hi) = self.anchor_bounds()?;
        let q = self.q as i64;
        Some((
            lo.iter().map(|&v| rat(v, q)).collect(),
            hi.iter().map(|&v| rat(v + 1, q)).collect(),
        ))
    }

    /// Center of mass of the set, or `None` when empty.
    pub fn centroid(&self) -> Option<Vec<Rational>> {
        if self.is_empty() {
            return None;
        }
        let mut sums = vec![BigInt::from(0); self.dim];
        for c in self.cells() {
            for (s, &v) in sums.iter_mut().zip(c) {
                *s += 2 * v + 1;
            }
        }
        let den = BigInt::from(2 * self.q) * BigInt::from(self.len());
        Some(
            sums.into_iter()
                .map(|s| Rational::new(s, den.clone()))
                .collect(),
        )
    }

    /// Every cell corner that can be an extreme point of the hull.
    ///
    /// A corner is kept only if it is the minimum or maximum corner on each
    /// of the `d` axis-parallel lines through it; any other corner lies on a
    /// segment between two corners and cannot be extreme.
    pub fn extreme_corner_candidates(&self) -> Vec<Vec<i64>> {
        let d = self.dim;
        let mut corners: Vec<i64> = Vec::with_capacity(self.coords.len() << d);
        for c in self.cells() {
            for mask in 0..(1u32 << d) {
                corners.extend((0..d).map(|i| c[i] + ((mask >> i) & 1) as i64));
            }
        }
        let corners = kernel::sort_dedup_rows(d, corners);
        let rows: Vec<&[i64]> = corners.chunks_exact(d).collect();
        let mut keep = vec![true; rows.len()];
        for axis in 0..d {
            // extremes along each line parallel to `axis`
            let mut ext: rustc_hash::FxHashMap<Vec<i64>, (i64, i64)> = Default::default();
            for r in &rows {
                let mut key = r.to_vec();
                key.remove(axis);
                let e = ext.entry(key).or_insert((r[axis], r[axis]));
                e.0 = e.0.min(r[axis]);
                e.1 = e.1.max(r[axis]);
            }
            for (k, r) in rows.iter().enumerate() {
                let mut key = r.to_vec();
                key.remove(axis);
                let (lo, hi) = ext[&key];
                if r[axis] != lo && r[axis] != hi {
                    keep[k] = false;
                }
            }
        }
        rows.into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(r, _)| r.to_vec())
            .collect()
    }

    /// Hull candidate corners as rational points.
    pub fn corner_points(&self) -> Vec<Vec<Rational>> {
        let q = BigInt::from(self.q);
        self.extreme_corner_candidates()
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .map(|v| Rational::new(BigInt::from(v), q.clone()))
                    .collect()
            })
            .collect()
    }
}

fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Refines both sets to the least common resolution.
pub fn common_resolution(a: &GridSet, b: &GridSet) -> Result<(GridSet, GridSet)> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    let q = a.q.lcm(&b.q);
    Ok((a.at_resolution(q)?, b.at_resolution(q)?))
}

fn check_compatible(a: &GridSet, b: &GridSet) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    if a.q != b.q {
        return Err(Error::ResolutionMismatch {
            left: a.q,
            right: b.q,
        });
    }
    Ok(())
}

/// Exact Minkowski sum by pairwise anchor enumeration.
///
/// Both sets must share dimension and resolution. `[0,h] + [0,h] = [0,2h]`,
/// so each anchor pair contributes the `2^d` cells `x + y + {0,1}^d`.
pub fn minkowski_sum(a: &GridSet, b: &GridSet) -> Result<GridSet> {
    check_compatible(a, b)?;
    let rows = kernel::block_sum_naive(a.dim, &a.coords, 1, &b.coords, 1, 2)?;
    Ok(GridSet {
        dim: a.dim,
        q: a.q,
        coords: rows,
    })
}

/// [`minkowski_sum`] through an FFT convolution of dense indicator arrays.
///
/// Returns [`Error::WorkspaceOverflow`] when the bounding boxes do not fit
/// the default workspace and [`Error::PrecisionLoss`] if rounding cannot be
/// certified; callers fall back to [`minkowski_sum`] in both cases.
pub fn minkowski_sum_fast(a: &GridSet, b: &GridSet) -> Result<GridSet> {
    minkowski_sum_fast_with_cap(a, b, DEFAULT_WORKSPACE_CAP)
}

pub fn minkowski_sum_fast_with_cap(a: &GridSet, b: &GridSet, cap: usize) -> Result<GridSet> {
    check_compatible(a, b)?;
    let rows = kernel::block_sum_dense(a.dim, &a.coords, 1, &b.coords, 1, 2, cap)?;
    Ok(GridSet {
        dim: a.dim,
        q: a.q,
        coords: rows,
    })
}

/// Minkowski sum choosing the dense or pairwise kernel by size.
pub fn minkowski_sum_auto(a: &GridSet, b: &GridSet) -> Result<GridSet> {
    check_compatible(a, b)?;
    let rows = kernel::block_sum_auto(a.dim, &a.coords, 1, &b.coords, 1, 2)?;
    Ok(GridSet {
        dim: a.dim,
        q: a.q,
        coords: rows,
    })
}

/// Resolution of `scaled_sum(a, b, t)` without computing it.
pub fn scaled_sum_resolution(a: &GridSet, b: &GridSet, t: RationalScalar) -> Result<u64> {
    a.q.lcm(&b.q)
        .checked_mul(t.denom() as u64)
        .ok_or(Error::CoordinateOverflow)
}

/// Exact `tA + (1-t)B` for `t = p/r` in `(0, 1)`.
///
/// At the common resolution `q'`, a cell of `A` scales to a side-`p` block
/// and a cell of `B` to a side-`(r-p)` block at resolution `q'r`; their sum
/// is a side-`r` block at anchor `p*x + (r-p)*y`.
pub fn scaled_sum(a: &GridSet, b: &GridSet, t: RationalScalar) -> Result<GridSet> {
    t.require_open_unit()?;
    let (a, b) = common_resolution(a, b)?;
    let q = scaled_sum_resolution(&a, &b, t)?;
    let (p, r) = (t.numer(), t.denom());
    let rows = kernel::block_sum_auto(a.dim, &a.coords, p, &b.coords, r - p, r)?;
    Ok(GridSet {
        dim: a.dim,
        q,
        coords: rows,
    })
}

/// `k * A = A + ... + A` (`k` terms).
pub fn iterated_sum(a: &GridSet, k: usize) -> Result<GridSet> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut acc = a.clone();
    for _ in 1..k {
        acc = minkowski_sum_auto(&acc, a)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests;
