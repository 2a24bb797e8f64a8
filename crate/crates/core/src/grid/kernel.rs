//! Anchor-level sum kernels shared by every grid operation.
//!
//! A "block sum" of two anchor sets is
//! `{ sa*x + sb*y + o : x in A, y in B, o in {0..side-1}^d }`. The Minkowski
//! sum of two cell unions is the block sum with `sa = sb = 1, side = 2`; the
//! convex combination `tA + (1-t)B` with `t = p/r` is the block sum with
//! `sa = p, sb = r - p, side = r` one resolution level finer.
//!
//! Rows are stored flat (`dim` coordinates per row) and every function that
//! returns rows returns them sorted lexicographically without duplicates.

use std::cmp::Ordering;

use rustc_hash::FxHashSet;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use smallvec::SmallVec;

use crate::error::{Error, Result};

type Row = SmallVec<[i64; 4]>;

/// Default cap on the number of complex elements in the dense workspace
/// (two 2048x2048 planes fit; a 2^23 element buffer is 128 MiB).
pub const DEFAULT_WORKSPACE_CAP: usize = 1 << 23;

/// Above this many anchor pairs the automatic path tries the dense kernel.
const DENSE_PAIR_THRESHOLD: u128 = 1 << 16;

pub(crate) fn row_cmp(a: &[i64], b: &[i64]) -> Ordering {
    a.cmp(b)
}

pub(crate) fn sort_dedup_rows(dim: usize, flat: Vec<i64>) -> Vec<i64> {
    debug_assert_eq!(flat.len() % dim, 0);
    let n = flat.len() / dim;
    let row = |i: usize| &flat[i * dim..(i + 1) * dim];
    let sorted = (1..n).all(|i| row_cmp(row(i - 1), row(i)) == Ordering::Less);
    if sorted {
        return flat;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_unstable_by(|&i, &j| row_cmp(row(i), row(j)));
    idx.dedup_by(|i, j| row(*i) == row(*j));
    let mut out = Vec::with_capacity(idx.len() * dim);
    for i in idx {
        out.extend_from_slice(row(i));
    }
    out
}

fn max_abs(flat: &[i64]) -> i128 {
    flat.iter().map(|&v| (v as i128).abs()).max().unwrap_or(0)
}

/// Guards the unchecked arithmetic of the kernels.
fn check_range(a: &[i64], sa: i64, b: &[i64], sb: i64, side: i64) -> Result<()> {
    let bound = max_abs(a) * (sa as i128).abs() + max_abs(b) * (sb as i128).abs() + side as i128;
    if bound >= (i64::MAX / 2) as i128 {
        Err(Error::CoordinateOverflow)
    } else {
        Ok(())
    }
}

/// `{ sa*x + sb*y }` by pairwise enumeration.
pub(crate) fn anchor_sumset_naive(
    dim: usize,
    a: &[i64],
    sa: i64,
    b: &[i64],
    sb: i64,
) -> Result<Vec<i64>> {
    check_range(a, sa, b, sb, 0)?;
    let mut seen: FxHashSet<Row> = FxHashSet::default();
    for x in a.chunks_exact(dim) {
        for y in b.chunks_exact(dim) {
            let r: Row = x.iter().zip(y).map(|(&xi, &yi)| sa * xi + sb * yi).collect();
            seen.insert(r);
        }
    }
    let mut flat = Vec::with_capacity(seen.len() * dim);
    for r in seen {
        flat.extend_from_slice(&r);
    }
    Ok(sort_dedup_rows(dim, flat))
}

/// Scales every coordinate; order is preserved for positive factors.
pub(crate) fn scale_rows(rows: &[i64], factor: i64) -> Result<Vec<i64>> {
    rows.iter()
        .map(|&v| v.checked_mul(factor).ok_or(Error::CoordinateOverflow))
        .collect()
}

/// Dilates a sorted row set by `{0..side-1}^d`, one axis at a time.
pub(crate) fn dilate_rows(dim: usize, rows: Vec<i64>, side: i64) -> Result<Vec<i64>> {
    if side <= 1 || rows.is_empty() {
        return Ok(rows);
    }
    if max_abs(&rows) + side as i128 >= i64::MAX as i128 {
        return Err(Error::CoordinateOverflow);
    }
    let mut cur = rows;
    for axis in 0..dim {
        let mut next = Vec::with_capacity(cur.len() * side as usize);
        for r in cur.chunks_exact(dim) {
            for o in 0..side {
                let start = next.len();
                next.extend_from_slice(r);
                next[start + axis] += o;
            }
        }
        cur = sort_dedup_rows(dim, next);
    }
    Ok(cur)
}

pub(crate) fn block_sum_naive(
    dim: usize,
    a: &[i64],
    sa: i64,
    b: &[i64],
    sb: i64,
    side: i64,
) -> Result<Vec<i64>> {
    let anchors = anchor_sumset_naive(dim, a, sa, b, sb)?;
    dilate_rows(dim, anchors, side)
}

fn bounds(dim: usize, rows: &[i64], scale: i64) -> (Vec<i64>, Vec<i64>) {
    let mut lo = vec![i64::MAX; dim];
    let mut hi = vec![i64::MIN; dim];
    for r in rows.chunks_exact(dim) {
        for i in 0..dim {
            let v = r[i] * scale;
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    (lo, hi)
}

/// Number of dense-workspace elements the FFT path would allocate.
pub(crate) fn dense_workspace(dim: usize, a: &[i64], sa: i64, b: &[i64], sb: i64) -> u128 {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let (alo, ahi) = bounds(dim, a, sa);
    let (blo, bhi) = bounds(dim, b, sb);
    (0..dim)
        .map(|i| {
            let n = (ahi[i] - alo[i]) as u128 + (bhi[i] - blo[i]) as u128 + 1;
            n.next_power_of_two()
        })
        .try_fold(1u128, |acc, m| acc.checked_mul(m))
        .unwrap_or(u128::MAX)
}

fn fft_nd(buf: &mut [Complex<f64>], shape: &[usize], inverse: bool, planner: &mut FftPlanner<f64>) {
    let total = buf.len();
    for axis in (0..shape.len()).rev() {
        let len = shape[axis];
        if len == 1 {
            continue;
        }
        let fft = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        let stride: usize = shape[axis + 1..].iter().product();
        if stride == 1 {
            fft.process(buf);
            continue;
        }
        let block = len * stride;
        let mut line = vec![Complex::new(0.0, 0.0); len];
        let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for base in (0..total).step_by(block) {
            for j in 0..stride {
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = buf[base + i * stride + j];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    buf[base + i * stride + j] = *v;
                }
            }
        }
    }
}

/// Block sum through a dense indicator convolution.
///
/// Both indicators are packed into one complex buffer (`a` real, `b`
/// imaginary), so the product spectrum needs one forward and one inverse
/// transform. The support of the rounded convolution is the anchor sumset;
/// any output that is not within 1/4 of an integer is reported as
/// [`Error::PrecisionLoss`] instead of being guessed.
pub(crate) fn block_sum_dense(
    dim: usize,
    a: &[i64],
    sa: i64,
    b: &[i64],
    sb: i64,
    side: i64,
    cap: usize,
) -> Result<Vec<i64>> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    check_range(a, sa, b, sb, side)?;
    let needed = dense_workspace(dim, a, sa, b, sb);
    let (alo, ahi) = bounds(dim, a, sa);
    let (blo, bhi) = bounds(dim, b, sb);
    let conv: Vec<usize> = (0..dim)
        .map(|i| ((ahi[i] - alo[i]) + (bhi[i] - blo[i]) + 1) as usize)
        .collect();
    let out_shape: Vec<usize> = conv.iter().map(|&n| n + side as usize - 1).collect();
    let out_total = out_shape
        .iter()
        .try_fold(1u128, |acc, &m| acc.checked_mul(m as u128))
        .unwrap_or(u128::MAX);
    if needed > cap as u128 || out_total > cap as u128 {
        return Err(Error::WorkspaceOverflow {
            needed: needed.max(out_total),
            cap,
        });
    }
    let shape: Vec<usize> = conv.iter().map(|n| n.next_power_of_two()).collect();
    let total = needed as usize;
    let strides = row_major_strides(&shape);

    let mut buf = vec![Complex::new(0.0f64, 0.0f64); total];
    for r in a.chunks_exact(dim) {
        let idx: usize = (0..dim)
            .map(|i| (r[i] * sa - alo[i]) as usize * strides[i])
            .sum();
        buf[idx].re = 1.0;
    }
    for r in b.chunks_exact(dim) {
        let idx: usize = (0..dim)
            .map(|i| (r[i] * sb - blo[i]) as usize * strides[i])
            .sum();
        buf[idx].im = 1.0;
    }

    let mut planner = FftPlanner::new();
    fft_nd(&mut buf, &shape, false, &mut planner);

    // Z = FA + i FB with FA, FB hermitian, so FA*FB = (Z_k^2 - conj(Z_-k)^2) / 4i.
    let quarter_neg_i = Complex::new(0.0, -0.25);
    let mut counter = vec![0usize; dim];
    for k in 0..total {
        let nk: usize = (0..dim)
            .map(|i| ((shape[i] - counter[i]) % shape[i]) * strides[i])
            .sum();
        if nk >= k {
            let zk = buf[k];
            let zn = buf[nk];
            buf[k] = (zk * zk - zn.conj() * zn.conj()) * quarter_neg_i;
            if nk != k {
                buf[nk] = (zn * zn - zk.conj() * zk.conj()) * quarter_neg_i;
            }
        }
        for i in (0..dim).rev() {
            counter[i] += 1;
            if counter[i] < shape[i] {
                break;
            }
            counter[i] = 0;
        }
    }

    fft_nd(&mut buf, &shape, true, &mut planner);

    let norm = total as f64;
    let out_strides = row_major_strides(&out_shape);
    let mut present = vec![false; out_total as usize];
    let mut counter = vec![0usize; dim];
    let conv_total: usize = conv.iter().product();
    for _ in 0..conv_total {
        let src: usize = (0..dim).map(|i| counter[i] * strides[i]).sum();
        let v = buf[src].re / norm;
        let rounded = v.round();
        if (v - rounded).abs() > 0.25 || rounded < 0.0 {
            return Err(Error::PrecisionLoss);
        }
        if rounded >= 1.0 {
            let dst: usize = (0..dim).map(|i| counter[i] * out_strides[i]).sum();
            present[dst] = true;
        }
        for i in (0..dim).rev() {
            counter[i] += 1;
            if counter[i] < conv[i] {
                break;
            }
            counter[i] = 0;
        }
    }
    drop(buf);

    if side > 1 {
        for axis in 0..dim {
            dilate_axis(&mut present, &out_shape, axis, side as usize);
        }
    }

    let origin: Vec<i64> = (0..dim).map(|i| alo[i] + blo[i]).collect();
    let mut out = Vec::new();
    let mut counter = vec![0usize; dim];
    for &p in &present {
        if p {
            out.extend((0..dim).map(|i| origin[i] + counter[i] as i64));
        }
        for i in (0..dim).rev() {
            counter[i] += 1;
            if counter[i] < out_shape[i] {
                break;
            }
            counter[i] = 0;
        }
    }
    Ok(out)
}

fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

/// `out[j] = any(in[j-side+1..=j])` along one axis.
fn dilate_axis(grid: &mut [bool], shape: &[usize], axis: usize, side: usize) {
    let len = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let block = len * stride;
    let mut line = vec![false; len];
    for base in (0..grid.len()).step_by(block) {
        for j in 0..stride {
            for (i, slot) in line.iter_mut().enumerate() {
                *slot = grid[base + i * stride + j];
            }
            let mut last_true: Option<usize> = None;
            for (i, &v) in line.iter().enumerate() {
                if v {
                    last_true = Some(i);
                }
                grid[base + i * stride + j] = matches!(last_true, Some(t) if i - t < side);
            }
        }
    }
}

/// Picks the dense kernel for large pair counts when it fits, otherwise
/// (or on any dense-path refusal) enumerates pairs.
pub(crate) fn block_sum_auto(
    dim: usize,
    a: &[i64],
    sa: i64,
    b: &[i64],
    sb: i64,
    side: i64,
) -> Result<Vec<i64>> {
    let pairs = (a.len() / dim) as u128 * (b.len() / dim) as u128;
    if pairs > DENSE_PAIR_THRESHOLD {
        let ws = dense_workspace(dim, a, sa, b, sb);
        // Dense only pays off when the box is not mostly empty.
        if ws <= DEFAULT_WORKSPACE_CAP as u128 && ws <= pairs.saturating_mul(16) {
            match block_sum_dense(dim, a, sa, b, sb, side, DEFAULT_WORKSPACE_CAP) {
                Ok(rows) => return Ok(rows),
                Err(Error::PrecisionLoss) | Err(Error::WorkspaceOverflow { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    block_sum_naive(dim, a, sa, b, sb, side)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sort_dedup_orders_rows() {
        let rows = vec![1, 0, 0, 5, 1, 0, 0, 1];
        assert_eq!(sort_dedup_rows(2, rows), vec![0, 1, 0, 5, 1, 0]);
    }

    #[test]
    fn dilation_is_a_box_per_anchor() {
        let d = dilate_rows(2, vec![0, 0], 2).unwrap();
        assert_eq!(d, vec![0, 0, 0, 1, 1, 0, 1, 1]);
    }

    #[test]
    fn dense_matches_naive_on_small_sparse_input() {
        let a = vec![0, 0, 3, 1, -2, 4];
        let b = vec![1, 1, 0, -5];
        for (sa, sb, side) in [(1, 1, 2), (1, 2, 3), (2, 3, 5)] {
            let naive = block_sum_naive(2, &a, sa, &b, sb, side).unwrap();
            let dense = block_sum_dense(2, &a, sa, &b, sb, side, 1 << 20).unwrap();
            assert_eq!(naive, dense, "sa={sa} sb={sb} side={side}");
        }
    }

    #[test]
    fn dense_refuses_oversized_workspace() {
        let a = vec![0, 1_000_000];
        let b = vec![0];
        assert!(matches!(
            block_sum_dense(1, &a, 1, &b, 1, 2, 1024),
            Err(Error::WorkspaceOverflow { .. })
        ));
    }

    #[test]
    fn overflow_is_detected() {
        let a = vec![i64::MAX / 3];
        assert_eq!(
            anchor_sumset_naive(1, &a, 2, &a, 2),
            Err(Error::CoordinateOverflow)
        );
    }
}
