//! Direct, unoptimized versions of every metric. They rank by counting how
//! many candidates precede each item and enumerate every comparison pair.

use super::{dcg, rank_order, Scorer};
use crate::data::{enumerate_comparisons, RatingsMatrix};

/// Candidates of `u` with their 0-based rank, by pairwise counting.
fn ranks(s: &impl Scorer, u: usize, cands: &[u32]) -> Vec<(usize, u32)> {
    let scored: Vec<(f64, u32)> = cands.iter().map(|&j| (s.score(u, j as usize), j)).collect();
    let mut out: Vec<(usize, u32)> = scored
        .iter()
        .map(|&a| (scored.iter().filter(|&&b| rank_order(b, a).is_lt()).count(), a.1))
        .collect();
    out.sort_unstable();
    out
}

fn unseen(train: &RatingsMatrix, m: usize, u: usize) -> Vec<u32> {
    (0..m as u32).filter(|&j| u >= train.n_users() || train.get(u, j).is_none() && !train.observed_zeros(u).contains(&j)).collect()
}

fn test_entries(test: &RatingsMatrix, u: usize) -> Vec<(u32, f64)> {
    let (items, vals) = test.user(u);
    let mut v: Vec<(u32, f64)> = items.iter().copied().zip(vals.iter().copied()).collect();
    v.extend(test.observed_zeros(u).iter().map(|&j| (j, 0.0)));
    v
}

fn mean(vals: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, c) = vals.fold((0.0, 0), |(s, c), x| (s + x, c + 1));
    (c > 0).then(|| s / c as f64)
}

pub fn ndcg_at_k(s: &impl Scorer, test: &RatingsMatrix, k: usize) -> Option<f64> {
    mean((0..test.n_users()).filter_map(|u| {
        let entries = test_entries(test, u);
        let items: Vec<u32> = entries.iter().map(|e| e.0).collect();
        let rel = |j: u32| entries.iter().find(|e| e.0 == j).unwrap().1;
        let got = dcg(ranks(s, u, &items).into_iter().take(k).map(|(_, j)| rel(j)));
        let mut ideal: Vec<f64> = entries.iter().map(|e| e.1).collect();
        ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let best = dcg(ideal.into_iter().take(k));
        (best > 0.0).then(|| got / best)
    }))
}

pub fn precision_at_k(s: &impl Scorer, train: &RatingsMatrix, test: &RatingsMatrix, k: usize, threshold: f64) -> Option<f64> {
    mean((0..test.n_users()).filter_map(|u| {
        let entries = test_entries(test, u);
        if entries.is_empty() {
            return None;
        }
        let hits = ranks(s, u, &unseen(train, test.n_items(), u))
            .into_iter()
            .filter(|&(l, j)| l < k && entries.iter().any(|e| e.0 == j && e.1 >= threshold))
            .count();
        Some(hits as f64 / k as f64)
    }))
}

pub(crate) fn user_pair_errors(s: &impl Scorer, test: &RatingsMatrix, u: usize) -> (u64, u64) {
    let mut errors = 0;
    let mut total = 0;
    for c in enumerate_comparisons(test, u) {
        total += 1;
        if s.score(u, c.j as usize) <= s.score(u, c.k as usize) {
            errors += 1;
        }
    }
    (errors, total)
}

pub fn pairwise_error(s: &impl Scorer, test: &RatingsMatrix) -> Option<f64> {
    let (e, t) = (0..test.n_users())
        .map(|u| user_pair_errors(s, test, u))
        .fold((0, 0), |(a, b), (x, y)| (a + x, b + y));
    (t > 0).then(|| e as f64 / t as f64)
}

fn relevant_ranks(s: &impl Scorer, train: &RatingsMatrix, test: &RatingsMatrix, u: usize) -> Vec<usize> {
    let entries = test_entries(test, u);
    ranks(s, u, &unseen(train, test.n_items(), u))
        .into_iter()
        .filter(|&(_, j)| entries.iter().any(|e| e.0 == j && e.1 > 0.0))
        .map(|(l, _)| l + 1)
        .collect()
}

pub fn map_score(s: &impl Scorer, train: &RatingsMatrix, test: &RatingsMatrix) -> Option<f64> {
    mean((0..test.n_users()).filter_map(|u| {
        let r = relevant_ranks(s, train, test, u);
        let ap = mean(r.iter().enumerate().map(|(h, &l)| (h + 1) as f64 / l as f64))?;
        Some(ap)
    }))
}

pub fn recall_at_k(s: &impl Scorer, train: &RatingsMatrix, test: &RatingsMatrix, k: usize) -> Option<f64> {
    mean((0..test.n_users()).filter_map(|u| {
        let relevant = test_entries(test, u).iter().filter(|e| e.1 > 0.0).count();
        if relevant == 0 {
            return None;
        }
        let hits = relevant_ranks(s, train, test, u).iter().filter(|&&l| l <= k).count();
        Some(hits as f64 / relevant as f64)
    }))
}

pub fn hlu(s: &impl Scorer, train: &RatingsMatrix, test: &RatingsMatrix, halflife: f64, neutral: f64) -> Option<f64> {
    mean((0..test.n_users()).filter_map(|u| {
        let entries = test_entries(test, u);
        if entries.is_empty() {
            return None;
        }
        let mut total = 0.0;
        for (l, j) in ranks(s, u, &unseen(train, test.n_items(), u)) {
            if let Some(e) = entries.iter().find(|e| e.0 == j) {
                total += (e.1 - neutral).max(0.0) * 0.5f64.powf(l as f64 / (halflife - 1.0));
            }
        }
        Some(total)
    }))
}

pub fn rmse(s: &impl Scorer, test: &RatingsMatrix) -> Option<f64> {
    let all = test.all_triples();
    let ms = mean(all.iter().map(|t| (t.rating - s.score(t.user as usize, t.item as usize)).powi(2)))?;
    Some(ms.sqrt())
}
