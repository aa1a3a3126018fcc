//! Deterministic data parallelism: work is cut into fixed-size blocks and
//! partial results are merged in block order, so the floating-point result
//! does not depend on the thread count or scheduling.

use rayon::prelude::*;

const BLOCK: usize = 64;

/// `Σ_{i<n} f(i)`.
pub(crate) fn sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let partials: Vec<f64> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| (b * BLOCK..((b + 1) * BLOCK).min(n)).map(&f).sum())
        .collect();
    partials.into_iter().sum()
}

/// Sums the buffers `f(i, buf)` accumulates into, for `i < n`; each block of
/// indices writes into its own zeroed buffer of length `len`.
pub(crate) fn accumulate(n: usize, len: usize, f: impl Fn(usize, &mut [f64]) + Sync) -> Vec<f64> {
    let blocks = n.div_ceil(BLOCK);
    if blocks <= 1 {
        let mut out = vec![0.0; len];
        (0..n).for_each(|i| f(i, &mut out));
        return out;
    }
    let partials: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut buf = vec![0.0; len];
            (b * BLOCK..((b + 1) * BLOCK).min(n)).for_each(|i| f(i, &mut buf));
            buf
        })
        .collect();
    let mut iter = partials.into_iter();
    let mut out = iter.next().unwrap_or_else(|| vec![0.0; len]);
    for p in iter {
        out.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
    }
    out
}

/// Runs `f(i, row_i)` over the `width`-sized rows of `data` in parallel.
pub(crate) fn rows_mut(data: &mut [f64], width: usize, f: impl Fn(usize, &mut [f64]) + Sync) {
    if width == 0 {
        return;
    }
    data.par_chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
}
