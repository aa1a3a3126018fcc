//! Timing harness for the pairwise kernels over a grid of ratings-per-user.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use rand::Rng as _;

use crate::data::{RatingsMatrix, Triple};
use crate::error::{Error, Result};
use crate::matrix::FactorTable;
use crate::primal_cr::{self, CrState, PairKernel, PairwiseKernel, ScanKernel};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchKernel {
    /// Sorted level scans: gradient, Hessian products and user gradients.
    CrPlusPlus,
    /// Per-pair coefficient accumulation with the same epoch composition.
    Cr,
    /// The comparison-by-comparison gradient in `V` alone.
    NaivePairwise,
}

impl fmt::Display for BenchKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchKernel::CrPlusPlus => "crpp",
            BenchKernel::Cr => "cr",
            BenchKernel::NaivePairwise => "naive",
        })
    }
}

impl FromStr for BenchKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crpp" => Ok(BenchKernel::CrPlusPlus),
            "cr" => Ok(BenchKernel::Cr),
            "naive" => Ok(BenchKernel::NaivePairwise),
            _ => Err(Error::Config(format!("unknown kernel '{s}' (expected crpp, cr or naive)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchGrid {
    pub n_users: usize,
    pub rank: usize,
    /// Ratings per user; the item count is twice the largest value.
    pub per_user: Vec<usize>,
    pub levels: u8,
    pub reps: usize,
    /// Hessian-vector products per timed epoch.
    pub hessvecs: usize,
    pub kernels: Vec<BenchKernel>,
    pub seed: u64,
}

impl Default for BenchGrid {
    fn default() -> Self {
        BenchGrid {
            n_users: 2000,
            rank: 32,
            per_user: vec![50, 100, 200, 400],
            levels: 5,
            reps: 3,
            hessvecs: 5,
            kernels: vec![BenchKernel::CrPlusPlus, BenchKernel::NaivePairwise],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub kernel: BenchKernel,
    pub per_user: usize,
    pub nnz: usize,
    pub mean_secs: f64,
    pub std_secs: f64,
}

/// Every user rates exactly `per_user` distinct items with uniform levels.
pub fn bench_ratings(n_users: usize, n_items: usize, per_user: usize, levels: u8, seed: u64) -> Result<RatingsMatrix> {
    if per_user > n_items {
        return Err(Error::Config(format!("{per_user} ratings per user exceed {n_items} items")));
    }
    let mut triples = Vec::with_capacity(n_users * per_user);
    for u in 0..n_users {
        let mut g = rng::stream(seed, &[u as u64]);
        for j in index::sample(&mut g, n_items, per_user) {
            triples.push(Triple {
                user: u as u32,
                item: j as u32,
                rating: g.random_range(1..=levels) as f64,
            });
        }
    }
    RatingsMatrix::from_levels(n_users, n_items, levels, triples)
}

fn epoch<K: PairwiseKernel>(k: &K, s: &CrState, direction: &FactorTable, hessvecs: usize) -> Result<()> {
    let g = primal_cr::grad_v(k, s)?;
    std::hint::black_box(&g);
    for _ in 0..hessvecs {
        std::hint::black_box(primal_cr::hessvec_v(k, s, direction)?);
    }
    for u in 0..k.n_users() {
        std::hint::black_box(primal_cr::user_gradient(k, &s.items, s.lambda, u, s.users.row(u)));
    }
    Ok(())
}

fn time_once(kernel: BenchKernel, ratings: &RatingsMatrix, s: &CrState, direction: &FactorTable, hessvecs: usize) -> Result<f64> {
    let start = Instant::now();
    match kernel {
        BenchKernel::CrPlusPlus => epoch(&ScanKernel::new(ratings)?, s, direction, hessvecs)?,
        BenchKernel::Cr => epoch(&PairKernel(ratings), s, direction, hessvecs)?,
        BenchKernel::NaivePairwise => {
            std::hint::black_box(primal_cr::grad_v_naive(s, ratings)?);
        }
    }
    Ok(start.elapsed().as_secs_f64())
}

/// Times one epoch of each kernel on each grid cell, `reps` times.
pub fn run_bench(grid: &BenchGrid) -> Result<Vec<BenchCell>> {
    if grid.reps == 0 || grid.per_user.is_empty() || grid.rank == 0 {
        return Err(Error::Config("bench needs reps >= 1, rank >= 1 and a non-empty grid".into()));
    }
    let n_items = 2 * grid.per_user.iter().max().copied().unwrap_or(1);
    let mut cells = Vec::new();
    for &d in &grid.per_user {
        let ratings = bench_ratings(grid.n_users, n_items, d, grid.levels, rng::derive(grid.seed, &[d as u64]))?;
        let s = CrState::random(grid.n_users, n_items, grid.rank, 1.0, grid.seed);
        let direction = FactorTable::gaussian(n_items, grid.rank, 1.0, &mut rng::stream(grid.seed, &[7]));
        for &kernel in &grid.kernels {
            let times = (0..grid.reps)
                .map(|_| time_once(kernel, &ratings, &s, &direction, grid.hessvecs))
                .collect::<Result<Vec<f64>>>()?;
            let mean = times.iter().sum::<f64>() / times.len() as f64;
            let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / times.len() as f64;
            log::info!("bench {kernel} d={d}: {mean:.4}s");
            cells.push(BenchCell {
                kernel,
                per_user: d,
                nnz: ratings.nnz(),
                mean_secs: mean,
                std_secs: var.sqrt(),
            });
        }
    }
    Ok(cells)
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// distinct positive points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if pts.len() < 2 || sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Slope of mean epoch time against total ratings for `kernel`.
pub fn kernel_slope(cells: &[BenchCell], kernel: BenchKernel) -> Option<f64> {
    let pts: Vec<(f64, f64)> = cells
        .iter()
        .filter(|c| c.kernel == kernel)
        .map(|c| (c.nnz as f64, c.mean_secs))
        .collect();
    loglog_slope(&pts)
}

/// Tab-separated table, then one "# slope <kernel> <value>" line per kernel.
pub fn write_bench<W: Write>(cells: &[BenchCell], mut w: W) -> Result<()> {
    writeln!(w, "kernel\tper_user\tnnz\tmean_secs\tstd_secs")?;
    for c in cells {
        writeln!(w, "{}\t{}\t{}\t{:.6}\t{:.6}", c.kernel, c.per_user, c.nnz, c.mean_secs, c.std_secs)?;
    }
    let mut kernels: Vec<BenchKernel> = Vec::new();
    for c in cells {
        if !kernels.contains(&c.kernel) {
            kernels.push(c.kernel);
        }
    }
    for k in kernels {
        match kernel_slope(cells, k) {
            Some(s) => writeln!(w, "# slope {k} {s:.4}")?,
            None => writeln!(w, "# slope {k} -")?,
        }
    }
    Ok(())
}
