use rayon::prelude::*;

use super::kernels::{grad_v, hessvec_v_cached, PairwiseKernel, ScoreCache};
use super::{CrHyper, CrState};
use crate::error::Result;
use crate::matrix::{axpy, dot, norm, FactorTable};

/// Outcome of a truncated-Newton step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonStats {
    pub objective_before: f64,
    pub objective_after: f64,
    pub cg_iterations: usize,
    /// Accepted step length (0 when no step decreased the objective).
    pub step: f64,
    /// CG hit non-positive curvature on its first direction and the
    /// gradient was used as the search direction instead.
    pub fell_back: bool,
}

pub(crate) struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub fell_back: bool,
}

/// Linear CG on `H x = g` from `x = 0`, stopping once
/// `‖r‖ < tol·‖r₀‖` or after `max_iter` products.
pub(crate) fn conjugate_gradient(g: &[f64], mut hv: impl FnMut(&[f64]) -> Vec<f64>, max_iter: usize, tol: f64) -> CgResult {
    let mut x = vec![0.0; g.len()];
    let mut r = g.to_vec();
    let mut p = g.to_vec();
    let mut rr = dot(&r, &r);
    let stop = tol * rr.sqrt();
    let mut iterations = 0;
    while iterations < max_iter && rr.sqrt() >= stop && rr > 0.0 {
        let hp = hv(&p);
        let curvature = dot(&p, &hp);
        iterations += 1;
        if curvature <= 1e-14 * dot(&p, &p) {
            if iterations == 1 {
                return CgResult {
                    x: g.to_vec(),
                    iterations,
                    fell_back: true,
                };
            }
            break;
        }
        let alpha = rr / curvature;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &hp, &mut r);
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    CgResult {
        x,
        iterations,
        fell_back: false,
    }
}

/// Backtracking Armijo search along `−δ`: the first `s = s₀·shrinkᵏ` with
/// `f(s) ≤ f₀ − c₁·s·gᵀδ`. Returns `None` when no step qualifies.
pub(crate) fn armijo(f0: f64, slope: f64, h: &CrHyper, mut f: impl FnMut(f64) -> f64) -> Option<(f64, f64)> {
    let mut s = 1.0;
    for _ in 0..h.ls_max_steps {
        let fs = f(s);
        if fs.is_finite() && fs <= f0 - h.ls_c1 * s * slope {
            return Some((s, fs));
        }
        s *= h.ls_shrink;
    }
    None
}

fn loss_and_reg<K: PairwiseKernel + ?Sized>(k: &K, s: &CrState) -> f64 {
    super::kernels::cr_objective(k, s).expect("state dimensions were checked")
}

/// One truncated-Newton update of `V` with `U` fixed.
pub fn newton_update_v<K: PairwiseKernel + ?Sized>(k: &K, s: &mut CrState, h: &CrHyper) -> Result<NewtonStats> {
    let f0 = super::kernels::cr_objective(k, s)?;
    let g = grad_v(k, s)?;
    let (rows, r) = (g.rows(), g.rank());
    let unchanged = NewtonStats {
        objective_before: f0,
        objective_after: f0,
        cg_iterations: 0,
        step: 0.0,
        fell_back: false,
    };
    if g.frobenius_sq() == 0.0 {
        return Ok(unchanged);
    }
    let cache = ScoreCache::new(k, s);
    let cg = conjugate_gradient(
        g.as_slice(),
        |p| hessvec_v_cached(k, s, &cache, &FactorTable::from_vec(rows, r, p.to_vec())).into_vec(),
        h.cg_max_iter,
        h.cg_tol,
    );
    let delta = FactorTable::from_vec(rows, r, cg.x);
    let slope = dot(g.as_slice(), delta.as_slice());
    let base = s.items.clone();
    let found = armijo(f0, slope, h, |step| {
        s.items = base.clone();
        s.items.axpy(-step, &delta);
        loss_and_reg(k, s)
    });
    let stats = NewtonStats {
        cg_iterations: cg.iterations,
        fell_back: cg.fell_back,
        ..unchanged
    };
    Ok(match found {
        Some((step, f)) => {
            s.items = base;
            s.items.axpy(-step, &delta);
            NewtonStats {
                objective_after: f,
                step,
                ..stats
            }
        }
        None => {
            s.items = base;
            stats
        }
    })
}

/// Per-user objective `h(u) = Σ_{Ω_i} L(u·(v_j − v_k)) + (λ/2)‖u‖²`.
fn user_objective<K: PairwiseKernel + ?Sized>(k: &K, v: &FactorTable, lambda: f64, user: usize, u: &[f64]) -> f64 {
    let m: Vec<f64> = k.user_items(user).iter().map(|&j| dot(u, v.row(j as usize))).collect();
    k.user_loss(user, &m) + 0.5 * lambda * dot(u, u)
}

/// Gradient of the per-user objective: `Σ_p t_p v_p + λu`.
pub fn user_gradient<K: PairwiseKernel + ?Sized>(k: &K, v: &FactorTable, lambda: f64, user: usize, u: &[f64]) -> Vec<f64> {
    let items = k.user_items(user);
    let m: Vec<f64> = items.iter().map(|&j| dot(u, v.row(j as usize))).collect();
    let mut t = vec![0.0; m.len()];
    k.gradient_coefficients(user, &m, &mut t);
    let mut g: Vec<f64> = u.iter().map(|x| lambda * x).collect();
    for (&j, &c) in items.iter().zip(&t) {
        axpy(c, v.row(j as usize), &mut g);
    }
    g
}

/// Truncated-Newton steps on one user's rankSVM problem in `r` dimensions.
/// Returns the new row and whether CG fell back to the gradient.
fn newton_user<K: PairwiseKernel + ?Sized>(k: &K, v: &FactorTable, h: &CrHyper, lambda: f64, user: usize, start: &[f64]) -> (Vec<f64>, bool) {
    let items = k.user_items(user);
    let mut u = start.to_vec();
    let mut fell_back = false;
    for _ in 0..h.u_newton_steps {
        let m: Vec<f64> = items.iter().map(|&j| dot(&u, v.row(j as usize))).collect();
        let mut t = vec![0.0; m.len()];
        let f0 = k.gradient_coefficients(user, &m, &mut t) + 0.5 * lambda * dot(&u, &u);
        let mut g: Vec<f64> = u.iter().map(|x| lambda * x).collect();
        for (&j, &c) in items.iter().zip(&t) {
            axpy(c, v.row(j as usize), &mut g);
        }
        if norm(&g) == 0.0 {
            break;
        }
        let cg = conjugate_gradient(
            &g,
            |w| {
                let b: Vec<f64> = items.iter().map(|&j| dot(w, v.row(j as usize))).collect();
                let mut tb = vec![0.0; b.len()];
                k.hessian_coefficients(user, &m, &b, &mut tb);
                let mut out: Vec<f64> = w.iter().map(|x| lambda * x).collect();
                for (&j, &c) in items.iter().zip(&tb) {
                    axpy(c, v.row(j as usize), &mut out);
                }
                out
            },
            h.cg_max_iter,
            h.cg_tol,
        );
        fell_back |= cg.fell_back;
        let slope = dot(&g, &cg.x);
        let trial = |step: f64| -> Vec<f64> { u.iter().zip(&cg.x).map(|(a, d)| a - step * d).collect() };
        match armijo(f0, slope, h, |step| user_objective(k, v, lambda, user, &trial(step))) {
            Some((step, _)) => u = trial(step),
            None => break,
        }
    }
    (u, fell_back)
}

/// Updates every user row independently with `V` fixed; parallel over users.
pub fn update_u_ranksvm<K: PairwiseKernel + ?Sized>(k: &K, s: &mut CrState, h: &CrHyper) -> Result<NewtonStats> {
    let f0 = super::kernels::cr_objective(k, s)?;
    let r = s.users.rank();
    let v = &s.items;
    let lambda = s.lambda;
    let rows: Vec<(Vec<f64>, bool)> = (0..k.n_users())
        .into_par_iter()
        .map(|u| newton_user(k, v, h, lambda, u, s.users.row(u)))
        .collect();
    let fell_back = rows.iter().any(|x| x.1);
    let data = rows.into_iter().flat_map(|x| x.0).collect();
    s.users = FactorTable::from_vec(k.n_users(), r, data);
    let f1 = super::kernels::cr_objective(k, s)?;
    Ok(NewtonStats {
        objective_before: f0,
        objective_after: f1,
        cg_iterations: 0,
        step: 1.0,
        fell_back,
    })
}
