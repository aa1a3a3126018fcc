use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, FactorTable};
use crate::par;

use super::PermutationBatch;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log φ(x)`, with `φ(x) = exp(sigmoid(x))`.
#[inline]
pub fn log_phi(x: f64) -> f64 {
    sigmoid(x)
}

/// `Σ_j log[φ(s_{π_j}) / Σ_{l≥j} φ(s_{π_l})]` over the first `min(k, |π|)` positions.
pub fn log_perm_prob(s: &[f64], pi: &[usize], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Config("truncation k must be at least 1".into()));
    }
    let mut seen = vec![false; s.len()];
    for &p in pi {
        match seen.get_mut(p) {
            None => return Err(Error::InvalidPermutation(format!("index {p} out of range for {} scores", s.len()))),
            Some(true) => return Err(Error::InvalidPermutation(format!("index {p} repeated"))),
            Some(flag) => *flag = true,
        }
    }
    let h: Vec<f64> = pi.iter().map(|&p| log_phi(s[p])).collect();
    Ok(list_log_likelihood(&h, k))
}

pub fn perm_prob(s: &[f64], pi: &[usize], k: usize) -> Result<f64> {
    log_perm_prob(s, pi, k).map(f64::exp)
}

/// Log-likelihood of a list from its `log φ` values in list order.
fn list_log_likelihood(h: &[f64], k: usize) -> f64 {
    let top = k.min(h.len());
    let lse = suffix_log_sum_exp(h, top);
    (0..top).map(|t| h[t] - lse[t]).sum()
}

/// `log Σ_{l≥t} exp(h_l)` for `t < top`.
fn suffix_log_sum_exp(h: &[f64], top: usize) -> Vec<f64> {
    let mut out = vec![0.0; top];
    let mut acc = f64::NEG_INFINITY;
    for t in (0..h.len()).rev() {
        acc = log_add(acc, h[t]);
        if t < top {
            out[t] = acc;
        }
    }
    out
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

fn list_scores(u: &FactorTable, v: &FactorTable, user: usize, list: &[u32]) -> Vec<f64> {
    list.iter().map(|&j| dot(u.row(user), v.row(j as usize))).collect()
}

fn check(u: &FactorTable, v: &FactorTable, batch: &PermutationBatch) {
    assert_eq!(u.rank(), v.rank(), "factor ranks differ");
    assert!(batch.n_users() <= u.rows(), "batch has more users than U");
}

/// Negative log-likelihood of the batch plus `(λ/2)(‖U‖² + ‖V‖²)`.
pub fn sql_objective(u: &FactorTable, v: &FactorTable, batch: &PermutationBatch, lambda: f64, k: Option<usize>) -> f64 {
    check(u, v, batch);
    let k = k.unwrap_or(usize::MAX);
    let nll = par::sum(batch.n_users(), |i| {
        let h: Vec<f64> = list_scores(u, v, i, batch.user(i)).into_iter().map(log_phi).collect();
        -list_log_likelihood(&h, k)
    });
    nll + 0.5 * lambda * (u.frobenius_sq() + v.frobenius_sq())
}

/// `∂(−log-likelihood)/∂s_p` for each list position, from one backward pass
/// for the suffix sums and one forward pass for `A_p = Σ_{t≤min(p,K−1)} 1/D_t`.
fn score_coefficients(s: &[f64], k: usize) -> Vec<f64> {
    let top = k.min(s.len());
    let phi: Vec<f64> = s.iter().map(|&x| log_phi(x).exp()).collect();
    let mut d = vec![0.0; top];
    let mut acc = 0.0;
    for t in (0..s.len()).rev() {
        acc += phi[t];
        if t < top {
            d[t] = acc;
        }
    }
    let mut a = 0.0;
    (0..s.len())
        .map(|p| {
            if p < top {
                a += 1.0 / d[p];
            }
            let g = sigmoid(s[p]);
            let dg = g * (1.0 - g);
            dg * (phi[p] * a - if p < top { 1.0 } else { 0.0 })
        })
        .collect()
}

/// Same coefficients by the direct double loop over `(t, l ≥ t)`.
fn score_coefficients_naive(s: &[f64], k: usize) -> Vec<f64> {
    let top = k.min(s.len());
    let phi = |x: f64| log_phi(x).exp();
    let dg = |x: f64| sigmoid(x) * (1.0 - sigmoid(x));
    let mut c = vec![0.0; s.len()];
    for t in 0..top {
        let d: f64 = s[t..].iter().map(|&x| phi(x)).sum();
        c[t] -= dg(s[t]);
        for l in t..s.len() {
            c[l] += phi(s[l]) * dg(s[l]) / d;
        }
    }
    c
}

fn grad_v_with(
    u: &FactorTable,
    v: &FactorTable,
    batch: &PermutationBatch,
    lambda: f64,
    coeffs: impl Fn(&[f64]) -> Vec<f64> + Sync,
) -> FactorTable {
    check(u, v, batch);
    let r = v.rank();
    let mut g = par::accumulate(batch.n_users(), v.rows() * r, |i, buf| {
        let list = batch.user(i);
        let c = coeffs(&list_scores(u, v, i, list));
        for (&j, cp) in list.iter().zip(c) {
            let j = j as usize;
            axpy(cp, u.row(i), &mut buf[j * r..(j + 1) * r]);
        }
    });
    g.iter_mut().zip(v.as_slice()).for_each(|(a, b)| *a += lambda * b);
    FactorTable::from_vec(v.rows(), r, g)
}

/// Gradient of [`sql_objective`] in `V` at a fixed batch, linear in each list length.
pub fn grad_v_listwise(u: &FactorTable, v: &FactorTable, batch: &PermutationBatch, lambda: f64, k: Option<usize>) -> FactorTable {
    let k = k.unwrap_or(usize::MAX);
    grad_v_with(u, v, batch, lambda, |s| score_coefficients(s, k))
}

/// Quadratic-per-list reference for [`grad_v_listwise`].
pub fn grad_v_listwise_naive(u: &FactorTable, v: &FactorTable, batch: &PermutationBatch, lambda: f64, k: Option<usize>) -> FactorTable {
    let k = k.unwrap_or(usize::MAX);
    grad_v_with(u, v, batch, lambda, |s| score_coefficients_naive(s, k))
}

/// Gradient of [`sql_objective`] in `U`; rows beyond the batch carry only the ridge term.
pub fn grad_u_listwise(u: &FactorTable, v: &FactorTable, batch: &PermutationBatch, lambda: f64, k: Option<usize>) -> FactorTable {
    check(u, v, batch);
    let k = k.unwrap_or(usize::MAX);
    let r = u.rank();
    let mut g = u.as_slice().iter().map(|x| lambda * x).collect::<Vec<_>>();
    par::rows_mut(&mut g, r, |i, row| {
        if i >= batch.n_users() {
            return;
        }
        let list = batch.user(i);
        let c = score_coefficients(&list_scores(u, v, i, list), k);
        for (&j, cp) in list.iter().zip(c) {
            axpy(cp, v.row(j as usize), row);
        }
    });
    FactorTable::from_vec(u.rows(), r, g)
}
