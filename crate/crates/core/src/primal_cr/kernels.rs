use super::pairs::PairSource;
use super::CrState;
use crate::data::RatingsMatrix;
use crate::error::{Error, Result};
use crate::fenwick::FenwickTree;
use crate::matrix::{axpy, dot, FactorTable};
use crate::par;

/// Squared hinge `max(0, 1 − a)²`.
#[inline]
pub fn l2_hinge(a: f64) -> f64 {
    let z = (1.0 - a).max(0.0);
    z * z
}

/// Derivative `2·min(a − 1, 0)`.
#[inline]
pub fn l2_hinge_deriv(a: f64) -> f64 {
    2.0 * (a - 1.0).min(0.0)
}

/// Whether a pair with margin `a` has nonzero curvature (`a ≤ 1`).
#[inline]
pub fn l2_hinge_active(a: f64) -> bool {
    a <= 1.0
}

/// Per-user reduction of the pairwise loss to per-item scalar coefficients.
///
/// For user scores `m_p = u·v_p` over [`PairwiseKernel::user_items`],
/// `gradient_coefficients` returns the user's loss `Σ L(m_j − m_k)` and sets
/// `t_p = ∂loss/∂m_p`; `hessian_coefficients` sets `t = (∂²loss/∂m²)·b`.
/// Every gradient and Hessian product in `U` or `V` is assembled from these.
pub trait PairwiseKernel: Sync {
    fn n_users(&self) -> usize;
    fn n_items(&self) -> usize;
    fn user_items(&self, u: usize) -> &[u32];
    fn gradient_coefficients(&self, u: usize, m: &[f64], t: &mut [f64]) -> f64;
    fn hessian_coefficients(&self, u: usize, m: &[f64], b: &[f64], t: &mut [f64]);

    fn user_loss(&self, u: usize, m: &[f64]) -> f64 {
        let mut t = vec![0.0; m.len()];
        self.gradient_coefficients(u, m, &mut t)
    }
}

/// Coefficients by visiting every comparison: O(|Ω_i|) per user.
#[derive(Debug, Clone, Copy)]
pub struct PairKernel<'a, P>(pub &'a P);

impl<P: PairSource> PairwiseKernel for PairKernel<'_, P> {
    fn n_users(&self) -> usize {
        self.0.n_users()
    }

    fn n_items(&self) -> usize {
        self.0.n_items()
    }

    fn user_items(&self, u: usize) -> &[u32] {
        self.0.user_items(u)
    }

    fn gradient_coefficients(&self, u: usize, m: &[f64], t: &mut [f64]) -> f64 {
        t.iter_mut().for_each(|x| *x = 0.0);
        let mut loss = 0.0;
        self.0.for_each_pair(u, |j, k| {
            let a = m[j] - m[k];
            if a < 1.0 {
                loss += l2_hinge(a);
                let d = l2_hinge_deriv(a);
                t[j] += d;
                t[k] -= d;
            }
        });
        loss
    }

    fn hessian_coefficients(&self, u: usize, m: &[f64], b: &[f64], t: &mut [f64]) {
        t.iter_mut().for_each(|x| *x = 0.0);
        self.0.for_each_pair(u, |j, k| {
            if l2_hinge_active(m[j] - m[k]) {
                let c = 2.0 * (b[j] - b[k]);
                t[j] += c;
                t[k] -= c;
            }
        });
    }
}

/// Coefficients from explicit rating levels without enumerating pairs:
/// O(d log d + d log L) per user with `d` rated items and `L` levels.
///
/// Items are sorted by score. Item `p` is the worse side of an active pair
/// with every higher-rated item scoring at most `m_p + 1`, collected by a
/// forward pointer scan, and the better side of an active pair with every
/// lower-rated item scoring at least `m_p − 1`, collected by a backward scan.
/// Fenwick trees over levels give the counts and sums for "higher level" and
/// "lower level" in O(log L).
#[derive(Debug, Clone, Copy)]
pub struct ScanKernel<'a> {
    ratings: &'a RatingsMatrix,
    levels: usize,
}

impl<'a> ScanKernel<'a> {
    pub fn new(ratings: &'a RatingsMatrix) -> Result<Self> {
        let levels = ratings
            .levels()
            .ok_or_else(|| Error::Config("the level scan needs integer rating levels".into()))?;
        Ok(ScanKernel {
            ratings,
            levels: levels as usize,
        })
    }

    fn level(&self, u: usize, p: usize) -> usize {
        self.ratings.user(u).1[p] as usize
    }
}

fn score_order(m: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m.len()).collect();
    order.sort_unstable_by(|&a, &b| m[a].total_cmp(&m[b]));
    order
}

impl PairwiseKernel for ScanKernel<'_> {
    fn n_users(&self) -> usize {
        self.ratings.n_users()
    }

    fn n_items(&self) -> usize {
        self.ratings.n_items()
    }

    fn user_items(&self, u: usize) -> &[u32] {
        self.ratings.user(u).0
    }

    fn gradient_coefficients(&self, u: usize, m: &[f64], t: &mut [f64]) -> f64 {
        let d = m.len();
        let order = score_order(m);
        let (mut cnt, mut sum, mut sq) = (FenwickTree::new(self.levels), FenwickTree::new(self.levels), FenwickTree::new(self.levels));
        let mut loss = 0.0;

        let mut next = 0;
        for &p in &order {
            while next < d && m[order[next]] <= m[p] + 1.0 {
                let q = order[next];
                let l = self.level(u, q);
                cnt.add(l, 1.0);
                sum.add(l, m[q]);
                sq.add(l, m[q] * m[q]);
                next += 1;
            }
            let above = self.level(u, p) + 1;
            let (c, s, q) = (cnt.suffix(above), sum.suffix(above), sq.suffix(above));
            let a = m[p] + 1.0;
            loss += c * a * a - 2.0 * a * s + q;
            t[p] = 2.0 * a * c - 2.0 * s;
        }

        cnt.clear();
        sum.clear();
        let mut next = d;
        for &p in order.iter().rev() {
            while next > 0 && m[order[next - 1]] >= m[p] - 1.0 {
                let q = order[next - 1];
                let l = self.level(u, q);
                cnt.add(l, 1.0);
                sum.add(l, m[q]);
                next -= 1;
            }
            let below = self.level(u, p) - 1;
            t[p] += 2.0 * (m[p] - 1.0) * cnt.prefix(below) - 2.0 * sum.prefix(below);
        }
        loss
    }

    fn hessian_coefficients(&self, u: usize, m: &[f64], b: &[f64], t: &mut [f64]) {
        let d = m.len();
        let order = score_order(m);
        let (mut cnt, mut sum) = (FenwickTree::new(self.levels), FenwickTree::new(self.levels));

        let mut next = 0;
        for &p in &order {
            while next < d && m[order[next]] <= m[p] + 1.0 {
                let q = order[next];
                cnt.add(self.level(u, q), 1.0);
                sum.add(self.level(u, q), b[q]);
                next += 1;
            }
            let above = self.level(u, p) + 1;
            t[p] = 2.0 * b[p] * cnt.suffix(above) - 2.0 * sum.suffix(above);
        }

        cnt.clear();
        sum.clear();
        let mut next = d;
        for &p in order.iter().rev() {
            while next > 0 && m[order[next - 1]] >= m[p] - 1.0 {
                let q = order[next - 1];
                cnt.add(self.level(u, q), 1.0);
                sum.add(self.level(u, q), b[q]);
                next -= 1;
            }
            let below = self.level(u, p) - 1;
            t[p] += 2.0 * b[p] * cnt.prefix(below) - 2.0 * sum.prefix(below);
        }
    }
}

fn check_state<K: PairwiseKernel + ?Sized>(k: &K, s: &CrState) -> Result<()> {
    if s.users.rank() != s.items.rank() || s.users.rows() != k.n_users() || s.items.rows() < k.n_items() {
        return Err(Error::Dimension(format!(
            "factors {}x{} (ranks {}, {}) do not fit {} users and {} items",
            s.users.rows(),
            s.items.rows(),
            s.users.rank(),
            s.items.rank(),
            k.n_users(),
            k.n_items()
        )));
    }
    Ok(())
}

/// Scores `u·v_p` of one user over the kernel's items.
pub(crate) fn user_scores<K: PairwiseKernel + ?Sized>(k: &K, s: &CrState, u: usize) -> Vec<f64> {
    let ui = s.users.row(u);
    k.user_items(u).iter().map(|&j| dot(ui, s.items.row(j as usize))).collect()
}

/// Per-user score vectors `m_i` for a fixed state.
#[derive(Debug, Clone)]
pub struct ScoreCache {
    m: Vec<Vec<f64>>,
}

impl ScoreCache {
    pub fn new<K: PairwiseKernel + ?Sized>(k: &K, s: &CrState) -> Self {
        use rayon::prelude::*;
        ScoreCache {
            m: (0..k.n_users()).into_par_iter().map(|u| user_scores(k, s, u)).collect(),
        }
    }

    pub fn user(&self, u: usize) -> &[f64] {
        &self.m[u]
    }
}

/// `Σ_Ω L(u_i·(v_j − v_k)) + (λ/2)(‖U‖² + ‖V‖²)`.
pub fn cr_objective<K: PairwiseKernel + ?Sized>(k: &K, s: &CrState) -> Result<f64> {
    check_state(k, s)?;
    let loss = par::sum(k.n_users(), |u| k.user_loss(u, &user_scores(k, s, u)));
    Ok(loss + 0.5 * s.lambda * (s.users.frobenius_sq() + s.items.frobenius_sq()))
}

/// `∇_V f = Σ_i Σ_p t_p u_i e_pᵀ + λV`.
pub fn grad_v<K: PairwiseKernel + ?Sized>(k: &K, s: &CrState) -> Result<FactorTable> {
    check_state(k, s)?;
    let r = s.items.rank();
    let data = par::accumulate(k.n_users(), s.items.rows() * r, |u, buf| {
        let m = user_scores(k, s, u);
        let mut t = vec![0.0; m.len()];
        k.gradient_coefficients(u, &m, &mut t);
        let ui = s.users.row(u);
        for (&j, &c) in k.user_items(u).iter().zip(&t) {
            if c != 0.0 {
                axpy(c, ui, &mut buf[j as usize * r..(j as usize + 1) * r]);
            }
        }
    });
    let mut g = FactorTable::from_vec(s.items.rows(), r, data);
    g.axpy(s.lambda, &s.items);
    Ok(g)
}

/// `H·a` for the Hessian of `f` in `V` at the scores in `cache`.
pub(crate) fn hessvec_v_cached<K: PairwiseKernel + ?Sized>(k: &K, s: &CrState, cache: &ScoreCache, a: &FactorTable) -> FactorTable {
    let r = s.items.rank();
    let data = par::accumulate(k.n_users(), s.items.rows() * r, |u, buf| {
        let ui = s.users.row(u);
        let items = k.user_items(u);
        let b: Vec<f64> = items.iter().map(|&j| dot(ui, a.row(j as usize))).collect();
        let mut t = vec![0.0; b.len()];
        k.hessian_coefficients(u, cache.user(u), &b, &mut t);
        for (&j, &c) in items.iter().zip(&t) {
            if c != 0.0 {
                axpy(c, ui, &mut buf[j as usize * r..(j as usize + 1) * r]);
            }
        }
    });
    let mut h = FactorTable::from_vec(s.items.rows(), r, data);
    h.axpy(s.lambda, a);
    h
}

/// `H·a` for the Hessian of `f` in `V`, with `a` shaped like `V`.
pub fn hessvec_v<K: PairwiseKernel + ?Sized>(k: &K, s: &CrState, a: &FactorTable) -> Result<FactorTable> {
    check_state(k, s)?;
    if a.rows() != s.items.rows() || a.rank() != s.items.rank() {
        return Err(Error::Dimension(format!(
            "direction is {}x{}, V is {}x{}",
            a.rows(),
            a.rank(),
            s.items.rows(),
            s.items.rank()
        )));
    }
    Ok(hessvec_v_cached(k, s, &ScoreCache::new(k, s), a))
}

/// Gradient in `V` by adding `L′(a)·(±u_i)` for every comparison: O(|Ω|·r).
pub fn grad_v_naive<P: PairSource>(s: &CrState, pairs: &P) -> Result<FactorTable> {
    check_state(&PairKernel(pairs), s)?;
    let r = s.items.rank();
    let mut g = FactorTable::zeros(s.items.rows(), r);
    let mut diff = vec![0.0; r];
    for u in 0..pairs.n_users() {
        let ui = s.users.row(u);
        let items = pairs.user_items(u);
        pairs.for_each_pair(u, |j, k| {
            let (vj, vk) = (s.items.row(items[j] as usize), s.items.row(items[k] as usize));
            for t in 0..r {
                diff[t] = vj[t] - vk[t];
            }
            let d = l2_hinge_deriv(dot(ui, &diff));
            if d != 0.0 {
                axpy(d, ui, g.row_mut(items[j] as usize));
                axpy(-d, ui, g.row_mut(items[k] as usize));
            }
        });
    }
    g.axpy(s.lambda, &s.items);
    Ok(g)
}

/// Gradient through per-item coefficients accumulated over the comparisons:
/// O(|Ω_i| + d_i·r) per user.
pub fn grad_v_fast<P: PairSource>(s: &CrState, pairs: &P) -> Result<FactorTable> {
    grad_v(&PairKernel(pairs), s)
}

pub fn grad_v_scan_pp(s: &CrState, ratings: &RatingsMatrix) -> Result<FactorTable> {
    grad_v(&ScanKernel::new(ratings)?, s)
}

pub fn hessvec_v_fast<P: PairSource>(s: &CrState, pairs: &P, a: &FactorTable) -> Result<FactorTable> {
    hessvec_v(&PairKernel(pairs), s, a)
}

pub fn hessvec_v_scan_pp(s: &CrState, ratings: &RatingsMatrix, a: &FactorTable) -> Result<FactorTable> {
    hessvec_v(&ScanKernel::new(ratings)?, s, a)
}
