mod common;

use cfrank::data::{FeedbackMode, RatingsMatrix, Triple};
use cfrank::matrix::FactorTable;
use cfrank::rng;
use cfrank::sql_rank::*;
use common::*;
use proptest::prelude::*;
use rand::Rng as _;

#[test]
fn probabilities_sum_to_one_over_all_permutations() {
    let mut g = rng::seeded(5);
    for m in 1..=6 {
        let perms = permutations(m);
        for _ in 0..10 {
            let s: Vec<f64> = (0..m).map(|_| g.random_range(-4.0..4.0)).collect();
            let total: f64 = perms.iter().map(|p| perm_prob(&s, p, m).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-9, "m={m}: {total}");
        }
    }
}

#[test]
fn equal_scores_give_uniform_permutations() {
    let s = [0.7; 4];
    for p in permutations(4) {
        assert!((perm_prob(&s, &p, 4).unwrap() - 1.0 / 24.0).abs() < 1e-15);
    }
}

#[test]
fn score_descending_order_is_most_probable() {
    let mut g = rng::seeded(8);
    for m in 2..=6 {
        let s: Vec<f64> = (0..m).map(|_| g.random_range(-3.0..3.0)).collect();
        let mut best: Vec<usize> = (0..m).collect();
        best.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
        let top = perm_prob(&s, &best, m).unwrap();
        for p in permutations(m) {
            assert!(perm_prob(&s, &p, m).unwrap() <= top + 1e-15);
        }
    }
}

proptest! {
    #[test]
    fn swapping_a_higher_score_down_lowers_probability(
        s in prop::collection::vec(-5.0f64..5.0, 2..7),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let m = s.len();
        let mut pi: Vec<usize> = (0..m).collect();
        pi.shuffle(&mut rng::seeded(seed));
        let p = perm_prob(&s, &pi, m).unwrap();
        for i in 0..m {
            for j in i + 1..m {
                if s[pi[i]] > s[pi[j]] {
                    let mut q = pi.clone();
                    q.swap(i, j);
                    prop_assert!(perm_prob(&s, &q, m).unwrap() < p);
                }
            }
        }
    }
}

#[test]
fn objective_matches_term_by_term_evaluation() {
    for seed in 0..100 {
        let (u, v, lists, lambda, k) = sql_instance(seed, 8, 8, 4);
        let batch = PermutationBatch::from_lists(lists.clone());
        let fast = sql_objective(&u, &v, &batch, lambda, Some(k));
        let naive = naive_sql_objective(&u, &v, &lists, lambda, k);
        assert!((fast - naive).abs() <= 1e-12 * naive.abs().max(1.0), "seed {seed}: {fast} vs {naive}");
    }
}

#[test]
fn v_gradient_matches_double_loop_and_finite_differences() {
    for seed in 0..100 {
        let (u, v, lists, lambda, k) = sql_instance(seed, 8, 8, 4);
        let batch = PermutationBatch::from_lists(lists);
        let fast = grad_v_listwise(&u, &v, &batch, lambda, Some(k));
        let naive = grad_v_listwise_naive(&u, &v, &batch, lambda, Some(k));
        assert!(max_rel(fast.as_slice(), naive.as_slice()) < 1e-10, "seed {seed}");
        let (rows, r) = (v.rows(), v.rank());
        let fd = fd_gradient(
            |x| sql_objective(&u, &FactorTable::from_vec(rows, r, x.to_vec()), &batch, lambda, Some(k)),
            v.as_slice(),
            1e-5,
        );
        assert!(max_rel(fast.as_slice(), &fd) < 1e-5, "seed {seed}");
    }
}

#[test]
fn u_gradient_matches_finite_differences() {
    for seed in 0..100 {
        let (u, v, lists, lambda, k) = sql_instance(seed, 8, 8, 4);
        let batch = PermutationBatch::from_lists(lists);
        let g = grad_u_listwise(&u, &v, &batch, lambda, Some(k));
        let (rows, r) = (u.rows(), u.rank());
        let fd = fd_gradient(
            |x| sql_objective(&FactorTable::from_vec(rows, r, x.to_vec()), &v, &batch, lambda, Some(k)),
            u.as_slice(),
            1e-5,
        );
        assert!(max_rel(g.as_slice(), &fd) < 1e-5, "seed {seed}");
    }
}

#[test]
fn saturated_scores_leave_only_the_ridge_term() {
    let u = table(1, 1, &[1.0]);
    let v = table(3, 1, &[800.0, -800.0, 900.0]);
    let batch = PermutationBatch::from_lists(vec![vec![0, 1, 2]]);
    let g = grad_v_listwise(&u, &v, &batch, 0.5, None);
    for (a, b) in g.as_slice().iter().zip(v.as_slice()) {
        assert_eq!(*a, 0.5 * b);
    }
}

fn implicit_fixture(seed: u64) -> RatingsMatrix {
    let mut g = rng::seeded(seed);
    let triples: Vec<Triple> = (0..40u32)
        .flat_map(|user| (0..30u32).map(move |item| (user, item)))
        .filter(|_| g.random::<f64>() < 0.2)
        .map(|(user, item)| Triple { user, item, rating: 1.0 })
        .collect();
    RatingsMatrix::from_triples(40, 30, FeedbackMode::Implicit, triples).unwrap()
}

#[test]
fn training_is_deterministic_and_decreases_the_objective() {
    let train = implicit_fixture(1);
    let hyper = ListHyper {
        epochs: 30,
        seed: 9,
        ..ListHyper::default()
    };
    let a = train_sql_rank(&train, &hyper, None).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| train_sql_rank(&train, &hyper, None)).unwrap();
    assert_eq!(a.users, b.users);
    assert_eq!(a.items, b.items);
    let fixed = train_sql_rank(&train, &ListHyper { queuing: false, ..hyper.clone() }, None).unwrap();
    assert!(fixed.log.last().unwrap().objective < fixed.log[0].objective);
    assert_eq!(a.algorithm, "sql-rank");
}

#[test]
fn rejects_invalid_hyperparameters() {
    let train = implicit_fixture(2);
    for bad in [
        ListHyper { k: Some(0), ..ListHyper::default() },
        ListHyper { rho_neg: -1.0, ..ListHyper::default() },
        ListHyper { step: 0.0, ..ListHyper::default() },
    ] {
        assert!(train_sql_rank(&train, &bad, None).is_err());
    }
}
