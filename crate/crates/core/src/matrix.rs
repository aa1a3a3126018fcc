use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::rng::Rng;

/// Dense row-major table of `rows` vectors, each of length `rank`.
///
/// Used for every factor table (users, items, pseudo-nodes); row `i` is the
/// latent vector of entity `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorTable {
    rows: usize,
    rank: usize,
    data: Vec<f64>,
}

impl FactorTable {
    pub fn zeros(rows: usize, rank: usize) -> Self {
        FactorTable {
            rows,
            rank,
            data: vec![0.0; rows * rank],
        }
    }

    pub fn from_vec(rows: usize, rank: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * rank, "factor table size mismatch");
        FactorTable { rows, rank, data }
    }

    /// i.i.d. Gaussian entries with standard deviation `std`.
    pub fn gaussian(rows: usize, rank: usize, std: f64, rng: &mut Rng) -> Self {
        let data = (0..rows * rank)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z * std
            })
            .collect();
        FactorTable { rows, rank, data }
    }

    pub fn uniform(rows: usize, rank: usize, lo: f64, hi: f64, rng: &mut Rng) -> Self {
        let data = (0..rows * rank).map(|_| rng.random_range(lo..hi)).collect();
        FactorTable { rows, rank, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.rank..(i + 1) * self.rank]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.rank..(i + 1) * self.rank]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Keeps the first `rows` rows.
    pub fn truncated(&self, rows: usize) -> Self {
        let rows = rows.min(self.rows);
        FactorTable {
            rows,
            rank: self.rank,
            data: self.data[..rows * self.rank].to_vec(),
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &FactorTable) {
        assert_eq!(self.data.len(), other.data.len());
        axpy(alpha, &other.data, &mut self.data);
    }

    /// Gram matrix `Σ_i row_i row_iᵀ` over the first `limit` rows, row-major r×r.
    pub fn gram(&self, limit: usize) -> Vec<f64> {
        let r = self.rank;
        let mut g = vec![0.0; r * r];
        for i in 0..limit.min(self.rows) {
            let x = self.row(i);
            for a in 0..r {
                let xa = x[a];
                if xa == 0.0 {
                    continue;
                }
                let ga = &mut g[a * r..(a + 1) * r];
                for b in 0..r {
                    ga[b] += xa * x[b];
                }
            }
        }
        g
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y = M x` for a row-major square matrix of order `x.len()`.
pub fn symv(m: &[f64], x: &[f64], y: &mut [f64]) {
    let r = x.len();
    for a in 0..r {
        y[a] = dot(&m[a * r..(a + 1) * r], x);
    }
}

/// ‖a − b‖ / max(‖b‖, tiny): the relative deviation used by all oracle checks.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    diff.sqrt() / norm(b).max(f64::MIN_POSITIVE)
}
