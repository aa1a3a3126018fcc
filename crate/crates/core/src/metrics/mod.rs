//! Ranking and rating metrics.
//!
//! Rankings sort by descending score; equal scores are ordered by ascending
//! item index. A user's candidates are either every item they did not rate
//! in training or, for NDCG, exactly their test items.

pub mod reference;

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;

use crate::data::RatingsMatrix;
use crate::error::{Error, Result};
use crate::fenwick::FenwickTree;
use crate::model::FactorModel;

/// Anything that scores `(user, item)` pairs.
pub trait Scorer: Sync {
    fn score(&self, user: usize, item: usize) -> f64;
}

impl Scorer for FactorModel {
    fn score(&self, user: usize, item: usize) -> f64 {
        self.predict(user, item)
    }
}

impl<F: Fn(usize, usize) -> f64 + Sync> Scorer for F {
    fn score(&self, user: usize, item: usize) -> f64 {
        self(user, item)
    }
}

/// Ranking order on `(score, item)`: higher score first, then lower index.
pub fn rank_order(a: (f64, u32), b: (f64, u32)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidatePolicy {
    /// Every item the user did not rate in training.
    UnseenItems,
    /// Only the user's test items.
    TestItems,
}

/// Per-user candidate items in ranked order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub policy: CandidatePolicy,
    lists: Vec<Vec<u32>>,
}

impl RankedList {
    /// Ranks the candidates of every user, keeping at most `depth` per user.
    pub fn build(
        s: &impl Scorer,
        train: &RatingsMatrix,
        test: &RatingsMatrix,
        policy: CandidatePolicy,
        depth: Option<usize>,
    ) -> Self {
        let lists = (0..test.n_users())
            .into_par_iter()
            .map(|u| {
                let cands = match policy {
                    CandidatePolicy::UnseenItems => unseen(train, test.n_items(), u),
                    CandidatePolicy::TestItems => test_items(test, u),
                };
                top(s, u, cands, depth.unwrap_or(usize::MAX))
            })
            .collect();
        RankedList { policy, lists }
    }

    pub fn user(&self, u: usize) -> &[u32] {
        &self.lists[u]
    }

    pub fn n_users(&self) -> usize {
        self.lists.len()
    }
}

fn unseen(train: &RatingsMatrix, n_items: usize, u: usize) -> Vec<u32> {
    if u >= train.n_users() {
        return (0..n_items as u32).collect();
    }
    (0..n_items as u32).filter(|&j| !train.is_observed(u, j)).collect()
}

fn test_items(test: &RatingsMatrix, u: usize) -> Vec<u32> {
    let mut v: Vec<u32> = test.user(u).0.iter().chain(test.observed_zeros(u)).copied().collect();
    v.sort_unstable();
    v
}

/// The best `k` of `cands` for user `u`, in rank order.
fn top(s: &impl Scorer, u: usize, cands: Vec<u32>, k: usize) -> Vec<u32> {
    let mut scored: Vec<(f64, u32)> = cands.into_iter().map(|j| (s.score(u, j as usize), j)).collect();
    if k < scored.len() {
        if k == 0 {
            return Vec::new();
        }
        scored.select_nth_unstable_by(k - 1, |a, b| rank_order(*a, *b));
        scored.truncate(k);
    }
    scored.sort_unstable_by(|a, b| rank_order(*a, *b));
    scored.into_iter().map(|(_, j)| j).collect()
}

fn has_test(test: &RatingsMatrix, u: usize) -> bool {
    test.user_len(u) > 0 || !test.observed_zeros(u).is_empty()
}

/// Mean of the per-user values that are defined.
fn mean_over_users(n: usize, f: impl Fn(usize) -> Option<f64> + Sync, what: &str) -> Result<f64> {
    let vals: Vec<Option<f64>> = (0..n).into_par_iter().map(&f).collect();
    let (sum, count) = vals.into_iter().flatten().fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        return Err(Error::UndefinedMetric(format!("{what}: no user qualifies for evaluation")));
    }
    Ok(sum / count as f64)
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Config("cutoff k must be at least 1".into()));
    }
    Ok(())
}

pub(crate) fn dcg(rels: impl Iterator<Item = f64>) -> f64 {
    rels.enumerate().map(|(l, r)| (2f64.powf(r) - 1.0) / ((l + 2) as f64).log2()).sum()
}

/// Mean NDCG@k over users with a positive test rating, ranking each user's
/// test items.
pub fn ndcg_at_k(s: &impl Scorer, test: &RatingsMatrix, k: usize) -> Result<f64> {
    check_k(k)?;
    mean_over_users(
        test.n_users(),
        |u| {
            if !has_test(test, u) {
                return None;
            }
            let rel = |j: u32| test.get(u, j).unwrap_or(0.0);
            let ranked = top(s, u, test_items(test, u), k);
            let got = dcg(ranked.iter().map(|&j| rel(j)));
            let mut ideal: Vec<f64> = test_items(test, u).into_iter().map(rel).collect();
            ideal.sort_unstable_by(|a, b| b.total_cmp(a));
            let best = dcg(ideal.into_iter().take(k));
            (best > 0.0).then(|| got / best)
        },
        "NDCG",
    )
}

/// Σ_i hits_i@k / (n·k) over users with test entries, ranking all items each
/// user did not rate in training; a hit is a test rating ≥ `threshold`.
/// Users with fewer than `k` candidates keep the full `k` in the denominator.
fn precision(s: &impl Scorer, train: &RatingsMatrix, test: &RatingsMatrix, k: usize, threshold: f64) -> Result<f64> {
    check_k(k)?;
    mean_over_users(
        test.n_users(),
        |u| {
            if !has_test(test, u) {
                return None;
            }
            let ranked = top(s, u, unseen(train, test.n_items(), u), k);
            let hits = ranked.iter().filter(|&&j| test.get(u, j).is_some_and(|x| x >= threshold)).count();
            Some(hits as f64 / k as f64)
        },
        "precision",
    )
}

pub fn precision_at_k_implicit(s: &impl Scorer, train: &RatingsMatrix, test: &RatingsMatrix, k: usize) -> Result<f64> {
    precision(s, train, test, k, 1.0)
}

/// Relevant means a test rating of at least `threshold` (4 on a 1–5 scale).
pub fn precision_at_k_explicit(
    s: &impl Scorer,
    train: &RatingsMatrix,
    test: &RatingsMatrix,
    k: usize,
    threshold: u8,
) -> Result<f64> {
    precision(s, train, test, k, threshold as f64)
}

/// Fraction of test comparisons (pairs of one user's test items with
/// different ratings) whose preferred item does not score strictly higher.
pub fn pairwise_error(s: &impl Scorer, test: &RatingsMatrix) -> Result<f64> {
    let per_user: Vec<(u64, u64)> = (0..test.n_users())
        .into_par_iter()
        .map(|u| match test.levels() {
            Some(l) => user_pair_errors_scan(s, test, u, l as usize),
            None => reference::user_pair_errors(s, test, u),
        })
        .collect();
    let (err, total) = per_user.into_iter().fold((0u64, 0u64), |(e, t), (a, b)| (e + a, t + b));
    if total == 0 {
        return Err(Error::UndefinedMetric("pairwise error: no test comparisons".into()));
    }
    Ok(err as f64 / total as f64)
}

/// Errors and comparisons of one user in O(d log L): items are visited in
/// descending score groups, and each item counts the lower-rated items whose
/// score is at least its own.
fn user_pair_errors_scan(s: &impl Scorer, test: &RatingsMatrix, u: usize, levels: usize) -> (u64, u64) {
    let (items, vals) = test.user(u);
    let mut scored: Vec<(f64, usize)> = items
        .iter()
        .zip(vals)
        .map(|(&j, &r)| (s.score(u, j as usize), r as usize))
        .collect();
    scored.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
    let mut seen = FenwickTree::new(levels);
    let mut per_level = vec![0u64; levels + 1];
    let mut errors = 0u64;
    let mut g = 0;
    while g < scored.len() {
        let end = g + scored[g..].iter().take_while(|x| x.0.total_cmp(&scored[g].0).is_eq()).count();
        for &(_, r) in &scored[g..end] {
            seen.add(r, 1.0);
            per_level[r] += 1;
        }
        for &(_, r) in &scored[g..end] {
            errors += seen.prefix(r - 1) as u64;
        }
        g = end;
    }
    let d = scored.len() as u64;
    let same: u64 = per_level.iter().map(|&c| c * c.saturating_sub(1) / 2).sum();
    (errors, d * d.saturating_sub(1) / 2 - same)
}

/// 1-based ranks, among the user's unseen items, of the relevant test items
/// (test rating > 0), ascending.
fn relevant_ranks(s: &impl Scorer, train: &RatingsMatrix, test: &RatingsMatrix, u: usize) -> Vec<usize> {
    let ranked = top(s, u, unseen(train, test.n_items(), u), usize::MAX);
    ranked
        .iter()
        .enumerate()
        .filter(|&(_, &j)| test.get(u, j).is_some_and(|x| x > 0.0))
        .map(|(l, _)| l + 1)
        .collect()
}

/// Mean average precision over users with at least one relevant test item.
pub fn map_score(s: &impl Scorer, train: &RatingsMatrix, test: &RatingsMatrix) -> Result<f64> {
    mean_over_users(
        test.n_users(),
        |u| {
            let ranks = relevant_ranks(s, train, test, u);
            if ranks.is_empty() {
                return None;
            }
            let ap: f64 = ranks.iter().enumerate().map(|(h, &l)| (h + 1) as f64 / l as f64).sum();
            Some(ap / ranks.len() as f64)
        },
        "MAP",
    )
}

/// Mean fraction of each user's relevant test items ranked in the top `k`.
pub fn recall_at_k(s: &impl Scorer, train: &RatingsMatrix, test: &RatingsMatrix, k: usize) -> Result<f64> {
    check_k(k)?;
    mean_over_users(
        test.n_users(),
        |u| {
            let relevant = test.user(u).1.iter().filter(|&&x| x > 0.0).count();
            if relevant == 0 {
                return None;
            }
            let hits = top(s, u, unseen(train, test.n_items(), u), k)
                .iter()
                .filter(|&&j| test.get(u, j).is_some_and(|x| x > 0.0))
                .count();
            Some(hits as f64 / relevant as f64)
        },
        "recall",
    )
}

/// Half-life utility: mean over users with test entries of
/// `Σ_l max(R_{i,π(l)} − neutral, 0) / 2^((l−1)/(α−1))` over the ranked
/// unseen items, where `l` is the rank position.
pub fn hlu(s: &impl Scorer, train: &RatingsMatrix, test: &RatingsMatrix, halflife: f64, neutral: f64) -> Result<f64> {
    if !(halflife > 1.0) {
        return Err(Error::Config(format!("half-life must exceed 1, got {halflife}")));
    }
    mean_over_users(
        test.n_users(),
        |u| {
            if !has_test(test, u) {
                return None;
            }
            let ranked = top(s, u, unseen(train, test.n_items(), u), usize::MAX);
            let utility = ranked
                .iter()
                .enumerate()
                .filter_map(|(l, &j)| test.get(u, j).map(|x| (l, x)))
                .map(|(l, x)| (x - neutral).max(0.0) / 2f64.powf(l as f64 / (halflife - 1.0)))
                .sum();
            Some(utility)
        },
        "HLU",
    )
}

/// Root mean squared error over every stored test entry.
pub fn rmse(s: &impl Scorer, test: &RatingsMatrix) -> Result<f64> {
    let per_user: Vec<(f64, usize)> = (0..test.n_users())
        .into_par_iter()
        .map(|u| {
            let (items, vals) = test.user(u);
            let mut se = 0.0;
            for (&j, &x) in items.iter().zip(vals) {
                se += (x - s.score(u, j as usize)).powi(2);
            }
            for &j in test.observed_zeros(u) {
                se += s.score(u, j as usize).powi(2);
            }
            (se, items.len() + test.observed_zeros(u).len())
        })
        .collect();
    let (se, count) = per_user.into_iter().fold((0.0, 0), |(a, c), (x, n)| (a + x, c + n));
    if count == 0 {
        return Err(Error::UndefinedMetric("RMSE of an empty test set".into()));
    }
    Ok((se / count as f64).sqrt())
}

/// Metric report: one "metric\tk\tvalue" line per entry in insertion order,
/// with "-" for metrics that have no cutoff.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub entries: Vec<(String, Option<usize>, f64)>,
}

impl MetricReport {
    pub fn push(&mut self, metric: &str, k: Option<usize>, value: f64) {
        self.entries.push((metric.to_owned(), k, value));
    }

    pub fn get(&self, metric: &str, k: Option<usize>) -> Option<f64> {
        self.entries.iter().find(|(m, kk, _)| m == metric && *kk == k).map(|e| e.2)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (m, k, v) in &self.entries {
            match k {
                Some(k) => writeln!(w, "{m}\t{k}\t{v}")?,
                None => writeln!(w, "{m}\t-\t{v}")?,
            }
        }
        Ok(())
    }

    pub fn read(text: &str) -> Result<Self> {
        let mut report = MetricReport::default();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split('\t').collect();
            let bad = || Error::parse(i + 1, format!("bad report line '{line}'"));
            if f.len() != 3 {
                return Err(bad());
            }
            let k = if f[1] == "-" { None } else { Some(f[1].parse().map_err(|_| bad())?) };
            report.push(f[0], k, f[2].parse().map_err(|_| bad())?);
        }
        Ok(report)
    }
}
