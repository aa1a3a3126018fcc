//! Pairwise collaborative ranking with the squared hinge loss.
//!
//! Minimizes `Σ_Ω max(0, 1 − u_i·(v_j − v_k))² + (λ/2)(‖U‖² + ‖V‖²)` over
//! comparisons `(i, j, k)` where user `i` rated `j` above `k`, alternating a
//! truncated-Newton step on `V` with independent per-user Newton steps on `U`.
//! Primal-CR reduces each user's comparisons to per-item coefficients; CR++
//! obtains the same coefficients from sorted scans over rating levels without
//! enumerating pairs.

mod kernels;
mod newton;
mod pairs;

pub use kernels::{
    cr_objective, grad_v, grad_v_fast, grad_v_naive, grad_v_scan_pp, hessvec_v, hessvec_v_fast, hessvec_v_scan_pp,
    l2_hinge, l2_hinge_active, l2_hinge_deriv, PairKernel, PairwiseKernel, ScanKernel, ScoreCache,
};
pub use newton::{newton_update_v, update_u_ranksvm, user_gradient, NewtonStats};
pub use pairs::{ComparisonSet, PairSource};

use std::fmt;
use std::str::FromStr;

use crate::data::{FeedbackMode, RatingsMatrix};
use crate::error::{Error, Result};
use crate::matrix::FactorTable;
use crate::metrics;
use crate::model::{EpochRecord, FactorModel};
use crate::rng;

/// Factor tables and the ridge weight. Row `i` of `users` is `u_i`, row `j`
/// of `items` is `v_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrState {
    pub users: FactorTable,
    pub items: FactorTable,
    pub lambda: f64,
}

impl CrState {
    /// Gaussian initialization with standard deviation `1/√r`.
    pub fn random(n_users: usize, n_items: usize, rank: usize, lambda: f64, seed: u64) -> Self {
        let std = 1.0 / (rank as f64).sqrt();
        CrState {
            users: FactorTable::gaussian(n_users, rank, std, &mut rng::stream(seed, &[1])),
            items: FactorTable::gaussian(n_items, rank, std, &mut rng::stream(seed, &[2])),
            lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrHyper {
    pub lambda: f64,
    pub rank: usize,
    pub outer_iters: usize,
    /// Stop when the relative objective decrease of an outer iteration is below this.
    pub tol: f64,
    pub cg_max_iter: usize,
    /// CG stops once `‖r‖ < cg_tol·‖r₀‖`.
    pub cg_tol: f64,
    pub ls_shrink: f64,
    pub ls_c1: f64,
    pub ls_max_steps: usize,
    /// Newton steps per user in each `U` update.
    pub u_newton_steps: usize,
    pub seed: u64,
}

impl Default for CrHyper {
    fn default() -> Self {
        CrHyper {
            lambda: 1.0,
            rank: 10,
            outer_iters: 30,
            tol: 1e-4,
            cg_max_iter: 25,
            cg_tol: 1e-2,
            ls_shrink: 0.5,
            ls_c1: 1e-4,
            ls_max_steps: 30,
            u_newton_steps: 1,
            seed: 0,
        }
    }
}

impl CrHyper {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| x > 0.0 && x < 1.0;
        if !(self.lambda >= 0.0) || self.rank == 0 {
            return Err(Error::Config(format!("need lambda >= 0 and rank >= 1, got {} and {}", self.lambda, self.rank)));
        }
        if !in_unit(self.cg_tol) || !in_unit(self.ls_shrink) || !in_unit(self.ls_c1) || !(self.tol >= 0.0) {
            return Err(Error::Config("CG tolerance, line-search shrink and c1 must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Coefficients by enumerating comparisons.
    Cr,
    /// Coefficients by level scans; needs integer rating levels.
    CrPlusPlus,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Cr => "primal-cr",
            Variant::CrPlusPlus => "primal-crpp",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "primal-cr" | "cr" => Ok(Variant::Cr),
            "primal-crpp" | "cr++" | "crpp" => Ok(Variant::CrPlusPlus),
            _ => Err(Error::Config(format!("unknown Primal-CR variant '{s}'"))),
        }
    }
}

/// Alternates [`newton_update_v`] and [`update_u_ranksvm`] until the relative
/// objective decrease falls below `tol` or `outer_iters` is reached. With a
/// held-out set, each epoch logs NDCG@10 and pairwise error on it.
pub fn train_primal_cr(
    train: &RatingsMatrix,
    hyper: &CrHyper,
    variant: Variant,
    heldout: Option<&RatingsMatrix>,
) -> Result<FactorModel> {
    let model = match variant {
        Variant::Cr => train_with_kernel(&PairKernel(train), hyper, heldout)?,
        Variant::CrPlusPlus => train_with_kernel(&ScanKernel::new(train)?, hyper, heldout)?,
    };
    finish(model, train.mode(), variant)
}

/// Primal-CR on a raw comparison stream.
pub fn train_primal_cr_pairs(pairs: &ComparisonSet, hyper: &CrHyper, heldout: Option<&RatingsMatrix>) -> Result<FactorModel> {
    let model = train_with_kernel(&PairKernel(pairs), hyper, heldout)?;
    finish(model, FeedbackMode::Explicit, Variant::Cr)
}

fn finish(mut model: FactorModel, mode: FeedbackMode, variant: Variant) -> Result<FactorModel> {
    model.algorithm = variant.to_string();
    model.mode = mode;
    Ok(model)
}

fn train_with_kernel<K: PairwiseKernel>(k: &K, hyper: &CrHyper, heldout: Option<&RatingsMatrix>) -> Result<FactorModel> {
    hyper.validate()?;
    let mut s = CrState::random(k.n_users(), k.n_items(), hyper.rank, hyper.lambda, hyper.seed);
    let mut log = Vec::new();
    let mut f_prev = cr_objective(k, &s)?;
    for epoch in 0..hyper.outer_iters {
        newton_update_v(k, &mut s, hyper)?;
        let f = update_u_ranksvm(k, &mut s, hyper)?.objective_after;
        if !f.is_finite() || !s.users.is_finite() || !s.items.is_finite() {
            return Err(Error::Divergence { epoch, value: f });
        }
        let metrics = match heldout {
            Some(test) => {
                let scorer = |u: usize, j: usize| crate::matrix::dot(s.users.row(u), s.items.row(j));
                vec![
                    metrics::ndcg_at_k(&scorer, test, 10).unwrap_or(f64::NAN),
                    metrics::pairwise_error(&scorer, test).unwrap_or(f64::NAN),
                ]
            }
            None => Vec::new(),
        };
        log.push(EpochRecord {
            epoch,
            objective: f,
            metrics,
        });
        let converged = (f_prev - f) <= hyper.tol * f_prev.abs();
        f_prev = f;
        if converged {
            break;
        }
    }
    let mut model = FactorModel::new("primal-cr", FeedbackMode::Explicit, s.users, s.items)?;
    model.set_param("lambda", hyper.lambda);
    model.set_param("outer_iters", hyper.outer_iters);
    model.set_param("cg_max_iter", hyper.cg_max_iter);
    model.set_param("cg_tol", hyper.cg_tol);
    model.set_param("seed", hyper.seed);
    if heldout.is_some() {
        model.log_columns = vec!["ndcg@10".into(), "pairwise_error".into()];
    }
    model.log = log;
    Ok(model)
}
