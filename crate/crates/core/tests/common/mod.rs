//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use cfrank::data::{FeedbackMode, RatingsMatrix, Triple};
use cfrank::graph::Graph;
use cfrank::matrix::FactorTable;
use cfrank::rng::{self, Rng};
use rand::Rng as _;

/// Central finite differences of `f` at `x`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = xp[i];
            xp[i] = orig + h;
            let fp = f(&xp);
            xp[i] = orig - h;
            let fm = f(&xp);
            xp[i] = orig;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

pub fn table(rows: usize, rank: usize, data: &[f64]) -> FactorTable {
    FactorTable::from_vec(rows, rank, data.to_vec())
}

/// Random explicit ratings with integer levels in `1..=levels`; each cell is
/// observed with probability `density`.
pub fn random_ratings(n: usize, m: usize, levels: u8, density: f64, rng: &mut Rng) -> RatingsMatrix {
    let mut triples = Vec::new();
    for user in 0..n as u32 {
        for item in 0..m as u32 {
            if rng.random::<f64>() < density {
                let rating = rng.random_range(1..=levels) as f64;
                triples.push(Triple { user, item, rating });
            }
        }
    }
    RatingsMatrix::from_levels(n, m, levels, triples).unwrap()
}

pub fn random_implicit(n: usize, m: usize, density: f64, zero_density: f64, rng: &mut Rng) -> RatingsMatrix {
    let mut triples = Vec::new();
    for user in 0..n as u32 {
        for item in 0..m as u32 {
            let x: f64 = rng.random();
            if x < density {
                triples.push(Triple { user, item, rating: 1.0 });
            } else if x < density + zero_density {
                triples.push(Triple { user, item, rating: 0.0 });
            }
        }
    }
    RatingsMatrix::from_triples(n, m, FeedbackMode::Implicit, triples).unwrap()
}

pub fn random_graph(n: usize, p: f64, weighted: bool, rng: &mut Rng) -> Graph {
    let mut edges = Vec::new();
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            if rng.random::<f64>() < p {
                let w = if weighted { rng.random_range(0.1..2.0) } else { 1.0 };
                edges.push((a, b, w));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

pub fn gaussian(rows: usize, rank: usize, std: f64, seed: u64) -> FactorTable {
    FactorTable::gaussian(rows, rank, std, &mut rng::seeded(seed))
}

/// Hop distances from `src` (usize::MAX when unreachable).
pub fn bfs(g: &Graph, src: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    dist[src] = 0;
    let mut q = VecDeque::from([src]);
    while let Some(a) = q.pop_front() {
        for &b in g.neighbors(a).0 {
            if dist[b as usize] == usize::MAX {
                dist[b as usize] = dist[a] + 1;
                q.push_back(b as usize);
            }
        }
    }
    dist
}

/// max |a−b| / max(|b|_∞, 1e-300): an entrywise relative deviation.
pub fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Dense Hessian of the pairwise objective in `V`, indexed `j·r + t`:
/// `λI + Σ_i Σ_{active (j,k)} 2·(e_j − e_k)(e_j − e_k)ᵀ ⊗ u_i u_iᵀ`.
pub fn explicit_hessian_v<P: cfrank::primal_cr::PairSource>(s: &cfrank::primal_cr::CrState, pairs: &P) -> Vec<f64> {
    let (m, r) = (s.items.rows(), s.items.rank());
    let dim = m * r;
    let mut h = vec![0.0; dim * dim];
    for i in 0..dim {
        h[i * dim + i] = s.lambda;
    }
    for u in 0..pairs.n_users() {
        let ui = s.users.row(u);
        let items = pairs.user_items(u);
        pairs.for_each_pair(u, |a, b| {
            let (j, k) = (items[a] as usize, items[b] as usize);
            let margin: f64 = (0..r).map(|t| ui[t] * (s.items.row(j)[t] - s.items.row(k)[t])).sum();
            if margin > 1.0 {
                return;
            }
            for (p, sp) in [(j, 1.0), (k, -1.0)] {
                for (q, sq) in [(j, 1.0), (k, -1.0)] {
                    for t1 in 0..r {
                        for t2 in 0..r {
                            h[(p * r + t1) * dim + q * r + t2] += 2.0 * sp * sq * ui[t1] * ui[t2];
                        }
                    }
                }
            }
        });
    }
    h
}

pub fn matvec(a: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| {
        let mut row = a[i * n..(i + 1) * n].to_vec();
        row.push(b[i]);
        row
    }).collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, piv);
        for rr in c + 1..n {
            let f = m[rr][c] / m[c][c];
            for cc in c..=n {
                m[rr][cc] -= f * m[c][cc];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// Pairwise objective evaluated comparison by comparison.
pub fn naive_cr_objective<P: cfrank::primal_cr::PairSource>(s: &cfrank::primal_cr::CrState, pairs: &P) -> f64 {
    let r = s.items.rank();
    let mut f = 0.0;
    for u in 0..pairs.n_users() {
        let ui = s.users.row(u);
        let items = pairs.user_items(u);
        pairs.for_each_pair(u, |a, b| {
            let (vj, vk) = (s.items.row(items[a] as usize), s.items.row(items[b] as usize));
            let margin: f64 = (0..r).map(|t| ui[t] * (vj[t] - vk[t])).sum();
            f += (1.0 - margin).max(0.0).powi(2);
        });
    }
    f + 0.5 * s.lambda * (s.users.frobenius_sq() + s.items.frobenius_sq())
}

/// Random Primal-CR instance: ratings with `levels` levels and Gaussian factors.
pub fn cr_instance(seed: u64, max_n: usize, max_m: usize, max_r: usize, max_levels: u8) -> (RatingsMatrix, cfrank::primal_cr::CrState) {
    let mut g = rng::seeded(seed);
    let n = g.random_range(1..=max_n);
    let m = g.random_range(2..=max_m);
    let r = g.random_range(1..=max_r);
    let levels = g.random_range(2..=max_levels);
    let density = g.random_range(0.2..0.9);
    let ratings = random_ratings(n, m, levels, density, &mut g);
    let std = g.random_range(0.2..1.0);
    let state = cfrank::primal_cr::CrState {
        users: FactorTable::gaussian(n, r, std, &mut g),
        items: FactorTable::gaussian(m, r, std, &mut g),
        lambda: g.random_range(0.01..2.0),
    };
    (ratings, state)
}

/// All permutations of `0..m` (Heap's algorithm).
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            let j = if k % 2 == 0 { i } else { 0 };
            a.swap(j, k - 1);
        }
    }
    let mut out = Vec::new();
    heap(m, &mut (0..m).collect(), &mut out);
    out
}

/// Listwise objective evaluated term by term in linear space.
pub fn naive_sql_objective(u: &FactorTable, v: &FactorTable, lists: &[Vec<u32>], lambda: f64, k: usize) -> f64 {
    let phi = |x: f64| (1.0 / (1.0 + (-x).exp())).exp();
    let mut f = 0.0;
    for (i, list) in lists.iter().enumerate() {
        let s: Vec<f64> = list
            .iter()
            .map(|&j| u.row(i).iter().zip(v.row(j as usize)).map(|(a, b)| a * b).sum())
            .collect();
        for t in 0..k.min(s.len()) {
            let d: f64 = s[t..].iter().map(|&x| phi(x)).sum();
            f -= (phi(s[t]) / d).ln();
        }
    }
    f + 0.5 * lambda * (u.frobenius_sq() + v.frobenius_sq())
}

/// Random listwise instance: factors, per-user lists (possibly empty) and a truncation.
pub fn sql_instance(seed: u64, max_n: usize, max_list: usize, max_r: usize) -> (FactorTable, FactorTable, Vec<Vec<u32>>, f64, usize) {
    use rand::seq::SliceRandom;
    let mut g = rng::seeded(seed);
    let n = g.random_range(1..=max_n);
    let m = g.random_range(1..=max_list);
    let r = g.random_range(1..=max_r);
    let std = g.random_range(0.3..1.5);
    let u = FactorTable::gaussian(n, r, std, &mut g);
    let v = FactorTable::gaussian(m, r, std, &mut g);
    let lists = (0..n)
        .map(|_| {
            let mut items: Vec<u32> = (0..m as u32).collect();
            items.shuffle(&mut g);
            items.truncate(g.random_range(0..=m));
            items
        })
        .collect();
    let lambda = g.random_range(0.0..1.0);
    let k = g.random_range(1..=m + 1);
    (u, v, lists, lambda, k)
}

/// Outcome of encoding one random graph with `θ = ∞` and comparing rows
/// against BFS `d`-hop neighborhoods.
pub struct DnaTrial {
    pub false_negatives: usize,
    /// Fraction of (node, non-neighbor) pairs whose hash positions are all set.
    pub fp_rate: f64,
    pub configured_fp: f64,
}

/// Random graph with `n ≤ 200`; filters are sized for the largest `d`-hop
/// neighborhood at false-positive rate `eps`.
pub fn dna_trial(seed: u64, depth: usize, eps: f64) -> DnaTrial {
    use cfrank::bloom::{bloom_params, dna_encode, HashScheme};
    let mut g = rng::seeded(seed);
    let n = g.random_range(5..=200);
    let avg_degree = g.random_range(0.5..4.0);
    let graph = random_graph(n, (avg_degree / n as f64).min(1.0), false, &mut g);
    let dist: Vec<Vec<usize>> = (0..n).map(|i| bfs(&graph, i)).collect();
    let capacity = dist.iter().map(|d| d.iter().filter(|&&x| x <= depth).count()).max().unwrap();
    let (c, k) = bloom_params(capacity, eps).unwrap();
    let enc = dna_encode(&graph, c, k, depth, f64::INFINITY, g.random()).unwrap();
    let scheme = HashScheme::new(c, k, enc.scheme.seed).unwrap();
    let mut false_negatives = 0;
    let (mut fp, mut outside) = (0usize, 0usize);
    for i in 0..n {
        for j in 0..n {
            let all_set = scheme.positions(j as u64).all(|p| enc.row(i).binary_search(&(p as u32)).is_ok());
            if dist[i][j] <= depth {
                false_negatives += !all_set as usize;
            } else {
                outside += 1;
                fp += all_set as usize;
            }
        }
    }
    DnaTrial {
        false_negatives,
        fp_rate: if outside == 0 { 0.0 } else { fp as f64 / outside as f64 },
        configured_fp: eps,
    }
}

/// Direct O(n·m·r) evaluation of the weighted implicit objective.
pub fn dense_weighted(r: &RatingsMatrix, u: &FactorTable, v: &FactorTable, g: &Graph, lambda: f64, mu: f64, rho: f64) -> f64 {
    use cfrank::matrix::dot;
    let mut f = 0.0;
    for i in 0..r.n_users() {
        for j in 0..r.n_items() {
            let s = dot(u.row(i), v.row(j));
            if r.get(i, j as u32) == Some(1.0) {
                f += (1.0 - s) * (1.0 - s);
            } else {
                f += rho * s * s;
            }
        }
    }
    let lap: f64 = g
        .edges()
        .map(|(a, b, w)| {
            let (ua, ub) = (u.row(a as usize), u.row(b as usize));
            w * ua.iter().zip(ub).map(|(x, y)| (x - y).powi(2)).sum::<f64>()
        })
        .sum();
    f + 0.5 * lambda * (u.frobenius_sq() + v.frobenius_sq()) + mu * lap
}

/// Small explicit train/test pair on levels 1..=5 with a dense score table
/// drawn from four values, so ties are common.
pub fn metric_fixture(seed: u64) -> (RatingsMatrix, RatingsMatrix, Vec<f64>, usize) {
    let mut g = rng::seeded(seed);
    let (n, m) = (g.random_range(1..12), g.random_range(2..15));
    let all = random_ratings(n, m, 5, 0.6, &mut g);
    let (mut tr, mut te) = (Vec::new(), Vec::new());
    for t in all.triples() {
        if g.random::<f64>() < 0.5 {
            tr.push(t)
        } else {
            te.push(t)
        }
    }
    let train = RatingsMatrix::from_levels(n, m, 5, tr).unwrap();
    let test = RatingsMatrix::from_levels(n, m, 5, te).unwrap();
    let scores = (0..n * m).map(|_| g.random_range(0..4) as f64).collect();
    (train, test, scores, m)
}

/// Both undefined, or both defined and equal to 1e-12.
pub fn metric_close(a: Option<f64>, b: cfrank::Result<f64>) -> bool {
    match (a, b) {
        (Some(x), Ok(y)) => (x - y).abs() <= 1e-12,
        (None, Err(_)) => true,
        _ => false,
    }
}

/// Names of the fast metrics that disagree with their reference on
/// `metric_fixture(seed)`; implicit precision uses ratings of at least 4 as
/// the positives.
pub fn metric_mismatches(seed: u64, k: usize) -> Vec<&'static str> {
    use cfrank::metrics::{self, reference};
    let (train, test, tab, m) = metric_fixture(seed);
    let s = |u: usize, j: usize| tab[u * m + j];
    let implicit = |r: &RatingsMatrix| {
        let ones = r.triples().filter(|t| t.rating >= 4.0).map(|t| Triple { rating: 1.0, ..t });
        RatingsMatrix::from_triples(r.n_users(), r.n_items(), FeedbackMode::Implicit, ones.collect::<Vec<_>>()).unwrap()
    };
    let (itrain, itest) = (implicit(&train), implicit(&test));
    let checks = [
        ("ndcg", metric_close(reference::ndcg_at_k(&s, &test, k), metrics::ndcg_at_k(&s, &test, k))),
        (
            "precision_explicit",
            metric_close(reference::precision_at_k(&s, &train, &test, k, 4.0), metrics::precision_at_k_explicit(&s, &train, &test, k, 4)),
        ),
        (
            "precision_implicit",
            metric_close(reference::precision_at_k(&s, &itrain, &itest, k, 1.0), metrics::precision_at_k_implicit(&s, &itrain, &itest, k)),
        ),
        ("pairwise_error", metric_close(reference::pairwise_error(&s, &test), metrics::pairwise_error(&s, &test))),
        ("map", metric_close(reference::map_score(&s, &train, &test), metrics::map_score(&s, &train, &test))),
        ("recall", metric_close(reference::recall_at_k(&s, &train, &test, k), metrics::recall_at_k(&s, &train, &test, k))),
        ("hlu", metric_close(reference::hlu(&s, &train, &test, 3.0, 2.0), metrics::hlu(&s, &train, &test, 3.0, 2.0))),
        ("rmse", metric_close(reference::rmse(&s, &test), metrics::rmse(&s, &test))),
    ];
    checks.iter().filter(|c| !c.1).map(|c| c.0).collect()
}

/// Explicit ratings at MovieLens-100k scale: 943 users, 1682 items and about
/// 1e5 ratings. Users rate at least 20 items with a long tail; item choice
/// follows a power-law popularity. A rank-5 latent score plus noise passes
/// through a per-user scale and offset before rounding to levels 1..=5.
pub fn movielens_like(seed: u64) -> RatingsMatrix {
    use rand::seq::index;
    use rand_distr::{Distribution, Exp, Normal};
    let (n, m, r) = (943usize, 1682usize, 5usize);
    let mut g = rng::stream(seed, &[200]);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let u = FactorTable::gaussian(n, r, 1.0, &mut g);
    let v = FactorTable::gaussian(m, r, 1.0, &mut g);
    let popularity: Vec<f64> = (0..m).map(|j| 1.0 / (j as f64 + 10.0).powf(0.8)).collect();
    let tail: Exp<f64> = Exp::new(1.0 / 86.0).unwrap();
    let mut triples = Vec::new();
    for i in 0..n {
        let count = (20.0 + tail.sample(&mut g)).min(600.0) as usize;
        let scale = g.random_range(0.5..1.5);
        let offset = 0.7 * normal.sample(&mut g);
        for j in index::sample_weighted(&mut g, m, |j| popularity[j], count).unwrap() {
            let s = cfrank::matrix::dot(u.row(i), v.row(j)) / (r as f64).sqrt();
            let x = 3.0 + offset + scale * (s + 0.5 * normal.sample(&mut g));
            triples.push(Triple {
                user: i as u32,
                item: j as u32,
                rating: x.round().clamp(1.0, 5.0),
            });
        }
    }
    RatingsMatrix::from_levels(n, m, 5, triples).unwrap()
}

/// Implicit train/test pair: 500 users, 300 items. Each user's top 10% of
/// items under a rank-5 score with uniform noise are positives, and each
/// positive goes to training with probability one half.
pub fn implicit_top_fraction(seed: u64) -> (RatingsMatrix, RatingsMatrix) {
    use cfrank::matrix::dot;
    let (n, m) = (500usize, 300usize);
    let mut g = rng::stream(seed, &[100]);
    let u = FactorTable::gaussian(n, 5, 1.0, &mut g);
    let v = FactorTable::gaussian(m, 5, 1.0, &mut g);
    let (mut tr, mut te) = (Vec::new(), Vec::new());
    for i in 0..n {
        let mut s: Vec<(f64, u32)> = (0..m).map(|j| (dot(u.row(i), v.row(j)) + 0.5 * g.random::<f64>(), j as u32)).collect();
        s.sort_by(|a, b| b.0.total_cmp(&a.0));
        for &(_, j) in &s[..m / 10] {
            let t = Triple {
                user: i as u32,
                item: j,
                rating: 1.0,
            };
            if g.random::<f64>() < 0.5 {
                tr.push(t)
            } else {
                te.push(t)
            }
        }
    }
    (
        RatingsMatrix::from_triples(n, m, FeedbackMode::Implicit, tr).unwrap(),
        RatingsMatrix::from_triples(n, m, FeedbackMode::Implicit, te).unwrap(),
    )
}
