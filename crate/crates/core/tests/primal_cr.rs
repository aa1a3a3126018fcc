mod common;

use cfrank::data::RatingsMatrix;
use cfrank::matrix::{relative_error, FactorTable};
use cfrank::primal_cr::*;
use cfrank::rng;
use common::*;
use proptest::prelude::*;

fn direction(s: &CrState, seed: u64) -> FactorTable {
    gaussian(s.items.rows(), s.items.rank(), 1.0, seed)
}

#[test]
fn gradient_oracle_chain() {
    for seed in 0..100 {
        let (ratings, s) = cr_instance(seed, 30, 30, 8, 5);
        let pairs = ComparisonSet::from_ratings(&ratings);
        let naive = grad_v_naive(&s, &pairs).unwrap();
        let fast = grad_v_fast(&s, &pairs).unwrap();
        let scan = grad_v_scan_pp(&s, &ratings).unwrap();
        let on_the_fly = grad_v_naive(&s, &ratings).unwrap();
        assert!(relative_error(fast.as_slice(), naive.as_slice()) <= 1e-10, "seed {seed}");
        assert!(relative_error(scan.as_slice(), naive.as_slice()) <= 1e-10, "seed {seed}");
        assert!(relative_error(on_the_fly.as_slice(), naive.as_slice()) <= 1e-10, "seed {seed}");
        let f = cr_objective(&ScanKernel::new(&ratings).unwrap(), &s).unwrap();
        let g = cr_objective(&PairKernel(&pairs), &s).unwrap();
        let oracle = naive_cr_objective(&s, &pairs);
        assert!((f - oracle).abs() <= 1e-10 * oracle && (g - oracle).abs() <= 1e-10 * oracle);
    }
}

#[test]
fn hessian_oracle_chain() {
    for seed in 0..100 {
        let (ratings, s) = cr_instance(seed + 1000, 12, 10, 5, 5);
        let pairs = ComparisonSet::from_ratings(&ratings);
        let a = direction(&s, seed);
        let dense = matvec(&explicit_hessian_v(&s, &pairs), a.as_slice());
        let fast = hessvec_v_fast(&s, &pairs, &a).unwrap();
        let scan = hessvec_v_scan_pp(&s, &ratings, &a).unwrap();
        assert!(relative_error(fast.as_slice(), &dense) <= 1e-10, "seed {seed}");
        assert!(relative_error(scan.as_slice(), &dense) <= 1e-10, "seed {seed}");
    }
}

#[test]
fn naive_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let (ratings, s) = cr_instance(seed + 2000, 8, 8, 4, 5);
        let pairs = ComparisonSet::from_ratings(&ratings);
        let g = grad_v_naive(&s, &pairs).unwrap();
        let f = |x: &[f64]| {
            let t = CrState {
                items: table(s.items.rows(), s.items.rank(), x),
                ..s.clone()
            };
            naive_cr_objective(&t, &pairs)
        };
        let fd = fd_gradient(f, s.items.as_slice(), 1e-6);
        assert!(relative_error(g.as_slice(), &fd) < 1e-5, "seed {seed}");
    }
}

#[test]
fn user_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let (ratings, s) = cr_instance(seed + 3000, 6, 10, 4, 5);
        let kernel = ScanKernel::new(&ratings).unwrap();
        for u in 0..ratings.n_users() {
            let g = user_gradient(&kernel, &s.items, s.lambda, u, s.users.row(u));
            let f = |x: &[f64]| {
                let mut t = s.clone();
                t.users.row_mut(u).copy_from_slice(x);
                naive_cr_objective(&t, &ratings)
            };
            let fd = fd_gradient(f, s.users.row(u), 1e-6);
            assert!(relative_error(&g, &fd) < 1e-5, "seed {seed} user {u}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn tied_scores_do_not_change_the_scan(seed in 0u64..10_000, dup in 0usize..5) {
        // duplicate item rows produce exactly tied scores for every user
        let (ratings, mut s) = cr_instance(seed, 10, 12, 4, 5);
        let m = s.items.rows();
        for j in 0..m {
            if j % 2 == 1 {
                let src = s.items.row((j - 1 + dup) % m).to_vec();
                s.items.row_mut(j).copy_from_slice(&src);
            }
        }
        let pairs = ComparisonSet::from_ratings(&ratings);
        let naive = grad_v_naive(&s, &pairs).unwrap();
        let scan = grad_v_scan_pp(&s, &ratings).unwrap();
        prop_assert!(relative_error(scan.as_slice(), naive.as_slice()) <= 1e-10);
        let a = direction(&s, seed);
        let h1 = hessvec_v_fast(&s, &pairs, &a).unwrap();
        let h2 = hessvec_v_scan_pp(&s, &ratings, &a).unwrap();
        prop_assert!(relative_error(h2.as_slice(), h1.as_slice()) <= 1e-10);
    }
}

#[test]
fn degenerate_regions() {
    let (ratings, mut s) = cr_instance(7, 10, 10, 3, 5);
    let pairs = ComparisonSet::from_ratings(&ratings);
    // zero user factors: every hinge equals one
    s.users = FactorTable::zeros(s.users.rows(), s.users.rank());
    let f = cr_objective(&PairKernel(&pairs), &s).unwrap();
    let expected = pairs.n_pairs() as f64 + 0.5 * s.lambda * s.items.frobenius_sq();
    assert!((f - expected).abs() < 1e-12 * expected);
    // huge margins: all hinges inactive
    let (ratings, mut s) = cr_instance(8, 10, 10, 1, 5);
    s.users = FactorTable::from_vec(s.users.rows(), 1, vec![1.0; s.users.rows()]);
    s.items = FactorTable::from_vec(s.items.rows(), 1, vec![0.0; s.items.rows()]);
    for u in 0..ratings.n_users() {
        let (items, vals) = ratings.user(u);
        for (&j, &x) in items.iter().zip(vals) {
            s.items.row_mut(j as usize)[0] = 10.0 * x;
        }
    }
    // all users share the scale, so each item needs one consistent level
    let consistent = RatingsMatrix::from_levels(
        ratings.n_users(),
        ratings.n_items(),
        5,
        ratings.triples().map(|mut t| {
            t.rating = s.items.row(t.item as usize)[0] / 10.0;
            t
        }),
    )
    .unwrap();
    let g = grad_v_scan_pp(&s, &consistent).unwrap();
    let mut lv = s.items.clone();
    lv.as_mut_slice().iter_mut().for_each(|x| *x *= s.lambda);
    assert_eq!(g, lv);
    let a = direction(&s, 1);
    let h = hessvec_v_scan_pp(&s, &consistent, &a).unwrap();
    let mut la = a.clone();
    la.as_mut_slice().iter_mut().for_each(|x| *x *= s.lambda);
    assert!(relative_error(h.as_slice(), la.as_slice()) < 1e-15);
    let zero = FactorTable::zeros(a.rows(), a.rank());
    assert_eq!(hessvec_v_scan_pp(&s, &consistent, &zero).unwrap(), zero);
}

#[test]
fn newton_step_never_increases_objective() {
    let h = CrHyper::default();
    for seed in 0..20 {
        let (ratings, mut s) = cr_instance(seed + 4000, 20, 20, 5, 5);
        let k = ScanKernel::new(&ratings).unwrap();
        let v = newton_update_v(&k, &mut s, &h).unwrap();
        assert!(v.objective_after <= v.objective_before);
        assert!((cr_objective(&k, &s).unwrap() - v.objective_after).abs() <= 1e-12 * v.objective_after);
        let u = update_u_ranksvm(&k, &mut s, &h).unwrap();
        assert!(u.objective_after <= u.objective_before + 1e-12 * u.objective_before);
    }
}

#[test]
fn zero_gradient_leaves_state_unchanged() {
    let (ratings, mut s) = cr_instance(5, 10, 10, 3, 5);
    s.users = FactorTable::zeros(s.users.rows(), s.users.rank());
    s.items = FactorTable::zeros(s.items.rows(), s.items.rank());
    let before = s.clone();
    let stats = newton_update_v(&ScanKernel::new(&ratings).unwrap(), &mut s, &CrHyper::default()).unwrap();
    assert_eq!(s, before);
    assert_eq!(stats.step, 0.0);
}

#[test]
fn newton_step_solves_the_active_quadratic() {
    // tiny user factors keep every margin far below 1, so the objective is an
    // exact quadratic around V and one Newton step lands on its minimizer
    let h = CrHyper {
        cg_tol: 1e-12,
        cg_max_iter: 500,
        ..Default::default()
    };
    for seed in 0..5 {
        let (ratings, mut s) = cr_instance(seed + 5000, 6, 6, 3, 5);
        s.users.as_mut_slice().iter_mut().for_each(|x| *x *= 0.05);
        s.lambda = 1.0;
        let pairs = ComparisonSet::from_ratings(&ratings);
        let hess = explicit_hessian_v(&s, &pairs);
        let g = grad_v_naive(&s, &pairs).unwrap();
        let delta = dense_solve(&hess, g.as_slice());
        let expected: Vec<f64> = s.items.as_slice().iter().zip(&delta).map(|(v, d)| v - d).collect();
        let stats = newton_update_v(&PairKernel(&pairs), &mut s, &h).unwrap();
        assert_eq!(stats.step, 1.0);
        assert!(relative_error(s.items.as_slice(), &expected) < 1e-8, "seed {seed}");
    }
}

/// Plain gradient descent with backtracking on one user's objective.
fn generic_user_solve(k: &ScanKernel, v: &FactorTable, lambda: f64, user: usize, r: usize) -> f64 {
    let eval = |u: &[f64]| {
        let s = CrState {
            users: FactorTable::from_vec(1, r, u.to_vec()),
            items: v.clone(),
            lambda,
        };
        let m: Vec<f64> = k.user_items(user).iter().map(|&j| cfrank::matrix::dot(u, v.row(j as usize))).collect();
        k.user_loss(user, &m) + 0.5 * lambda * s.users.frobenius_sq()
    };
    let mut u = vec![0.0; r];
    let mut f = eval(&u);
    let mut step = 1.0;
    for _ in 0..20_000 {
        let g = user_gradient(k, v, lambda, user, &u);
        let gg: f64 = g.iter().map(|x| x * x).sum();
        if gg < 1e-24 {
            break;
        }
        loop {
            let trial: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let ft = eval(&trial);
            if ft <= f - 0.5 * step * gg {
                u = trial;
                f = ft;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
    }
    f
}

#[test]
fn user_update_reaches_generic_solver_optimum() {
    let h = CrHyper {
        u_newton_steps: 50,
        cg_tol: 1e-10,
        ..Default::default()
    };
    for seed in 0..5 {
        let (ratings, mut s) = cr_instance(seed + 6000, 6, 15, 5, 5);
        let k = ScanKernel::new(&ratings).unwrap();
        update_u_ranksvm(&k, &mut s, &h).unwrap();
        for u in 0..ratings.n_users() {
            let m: Vec<f64> = k.user_items(u).iter().map(|&j| cfrank::matrix::dot(s.users.row(u), s.items.row(j as usize))).collect();
            let ours = k.user_loss(u, &m) + 0.5 * s.lambda * s.users.row(u).iter().map(|x| x * x).sum::<f64>();
            let oracle = generic_user_solve(&k, &s.items, s.lambda, u, s.users.rank());
            assert!(ours - oracle <= 1e-6, "seed {seed} user {u}: {ours} vs {oracle}");
            if ratings.user_len(u) == 0 {
                assert!(s.users.row(u).iter().all(|&x| x == 0.0));
            }
        }
    }
}

#[test]
fn variants_follow_the_same_iterates() {
    let mut g = rng::seeded(9);
    let ratings = random_ratings(40, 30, 5, 0.3, &mut g);
    let h = CrHyper {
        rank: 4,
        outer_iters: 5,
        lambda: 0.5,
        ..Default::default()
    };
    let a = train_primal_cr(&ratings, &h, Variant::Cr, Some(&ratings)).unwrap();
    let b = train_primal_cr(&ratings, &h, Variant::CrPlusPlus, Some(&ratings)).unwrap();
    assert!(relative_error(a.items.as_slice(), b.items.as_slice()) < 1e-8);
    assert!(relative_error(a.users.as_slice(), b.users.as_slice()) < 1e-8);
    assert_eq!(a.log.len(), b.log.len());
    assert!(a.log.windows(2).all(|w| w[1].objective <= w[0].objective));
    assert_eq!(b.log_columns, ["ndcg@10", "pairwise_error"]);
    let c = train_primal_cr_pairs(&ComparisonSet::from_ratings(&ratings), &h, None).unwrap();
    assert!(relative_error(c.items.as_slice(), a.items.as_slice()) < 1e-8);
    let again = train_primal_cr(&ratings, &h, Variant::CrPlusPlus, Some(&ratings)).unwrap();
    assert_eq!(again.items, b.items);
}
