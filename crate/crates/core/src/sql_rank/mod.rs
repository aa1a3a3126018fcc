//! Listwise collaborative ranking.
//!
//! Each user's observed items form a ranked list scored under the
//! permutation probability `Π_j φ(s_{π_j}) / Σ_{l≥j} φ(s_{π_l})` with
//! `φ(x) = exp(sigmoid(x))`. Ties and, for implicit feedback, sampled
//! unobserved items are re-shuffled every epoch (stochastic queuing).

mod listwise;
mod queue;

pub use listwise::{
    grad_u_listwise, grad_v_listwise, grad_v_listwise_naive, log_perm_prob, perm_prob, sigmoid, sql_objective,
};
pub use queue::{stochastic_queuing, PermutationBatch};

use crate::data::{FeedbackMode, RatingsMatrix};
use crate::error::{Error, Result};
use crate::matrix::FactorTable;
use crate::metrics;
use crate::model::{EpochRecord, FactorModel};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ListHyper {
    pub lambda: f64,
    pub rank: usize,
    /// Top-k truncation of each list; `None` scores the full list.
    pub k: Option<usize>,
    /// Sampled unobserved items per observed 1 (implicit feedback only).
    pub rho_neg: f64,
    pub step: f64,
    /// Multiplicative step decay applied after every epoch.
    pub decay: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Redraw the lists every epoch; when false the epoch-0 lists are reused.
    pub queuing: bool,
}

impl Default for ListHyper {
    fn default() -> Self {
        ListHyper {
            lambda: 0.01,
            rank: 10,
            k: None,
            rho_neg: 3.0,
            step: 0.1,
            decay: 0.98,
            epochs: 50,
            seed: 0,
            queuing: true,
        }
    }
}

impl ListHyper {
    pub fn validate(&self) -> Result<()> {
        if self.k == Some(0) {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.rho_neg >= 0.0) {
            return Err(Error::Config(format!("rho_neg must be non-negative, got {}", self.rho_neg)));
        }
        if !(self.lambda >= 0.0) || !(self.step > 0.0) || !(self.decay > 0.0) || self.rank == 0 {
            return Err(Error::Config("need lambda >= 0, step > 0, decay > 0 and rank >= 1".into()));
        }
        Ok(())
    }
}

/// Alternating full-gradient steps on `U` then `V`, one pair per epoch, on a
/// freshly queued batch. With `validation`, precision@1 is logged per epoch.
pub fn train_sql_rank(train: &RatingsMatrix, hyper: &ListHyper, validation: Option<&RatingsMatrix>) -> Result<FactorModel> {
    hyper.validate()?;
    let (n, m, r) = (train.n_users(), train.n_items(), hyper.rank);
    let std = 1.0 / (r as f64).sqrt();
    let mut u = FactorTable::gaussian(n, r, std, &mut rng::stream(hyper.seed, &[1]));
    let mut v = FactorTable::gaussian(m, r, std, &mut rng::stream(hyper.seed, &[2]));
    let queue_seed = rng::derive(hyper.seed, &[3]);
    let fixed = (!hyper.queuing).then(|| PermutationBatch::draw(train, hyper.rho_neg, queue_seed, 0));
    let mut step = hyper.step;
    let mut log = Vec::with_capacity(hyper.epochs);
    for epoch in 0..hyper.epochs {
        let drawn;
        let batch = match &fixed {
            Some(b) => b,
            None => {
                drawn = PermutationBatch::draw(train, hyper.rho_neg, queue_seed, epoch as u64);
                &drawn
            }
        };
        let gu = grad_u_listwise(&u, &v, batch, hyper.lambda, hyper.k);
        u.axpy(-step, &gu);
        let gv = grad_v_listwise(&u, &v, batch, hyper.lambda, hyper.k);
        v.axpy(-step, &gv);
        step *= hyper.decay;
        let f = sql_objective(&u, &v, batch, hyper.lambda, hyper.k);
        if !f.is_finite() || !u.is_finite() || !v.is_finite() {
            return Err(Error::Divergence { epoch, value: f });
        }
        let metrics = match validation {
            Some(val) => {
                let scorer = |i: usize, j: usize| crate::matrix::dot(u.row(i), v.row(j));
                vec![precision_at_1(&scorer, train, val).unwrap_or(f64::NAN)]
            }
            None => Vec::new(),
        };
        log.push(EpochRecord {
            epoch,
            objective: f,
            metrics,
        });
    }
    let mut model = FactorModel::new("sql-rank", train.mode(), u, v)?;
    model.set_param("lambda", hyper.lambda);
    model.set_param("k", hyper.k.map_or("full".to_string(), |k| k.to_string()));
    model.set_param("rho_neg", hyper.rho_neg);
    model.set_param("step", hyper.step);
    model.set_param("decay", hyper.decay);
    model.set_param("epochs", hyper.epochs);
    model.set_param("queuing", hyper.queuing);
    model.set_param("seed", hyper.seed);
    if validation.is_some() {
        model.log_columns = vec!["precision@1".into()];
    }
    model.log = log;
    Ok(model)
}

/// Precision@1 in the sense matching the feedback mode: observed 1's for
/// implicit data, ratings of at least 4 for explicit data.
pub fn precision_at_1(s: &impl metrics::Scorer, train: &RatingsMatrix, test: &RatingsMatrix) -> Result<f64> {
    match train.mode() {
        FeedbackMode::Implicit => metrics::precision_at_k_implicit(s, train, test, 1),
        FeedbackMode::Explicit => metrics::precision_at_k_explicit(s, train, test, 1, 4),
    }
}
