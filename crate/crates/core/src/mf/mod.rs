//! Pointwise matrix factorization: plain MF, graph-regularized MF (GRMF),
//! graph-regularized weighted MF for implicit feedback (GRWMF) and Co-Factor.
//! Each accepts either a raw graph or a DNA-augmented one.

mod objective;
mod train;

pub use objective::{
    cofactor_gradient, cofactor_objective, grmf_gradient, grmf_objective, grwmf_gradient, grwmf_objective,
};
pub use train::{cofactor_train, grmf_train, grwmf_train, mf_train};

use crate::data::{FeedbackMode, RatingsMatrix, Triple};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::FactorModel;

#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub lambda: f64,
    pub mu: f64,
    /// Confidence weight of zero cells in the weighted implicit loss.
    pub rho_zero: f64,
    pub rank: usize,
    /// Initial SGD step (GRWMF: initial gradient step).
    pub step: f64,
    /// Multiplicative per-epoch step decay.
    pub decay: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            lambda: 0.1,
            mu: 0.1,
            rho_zero: 0.01,
            rank: 10,
            step: 0.01,
            decay: 0.95,
            epochs: 50,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lambda >= 0.0) || !(self.mu >= 0.0) {
            return bad(format!("lambda and mu must be non-negative (got {}, {})", self.lambda, self.mu));
        }
        if !(self.rho_zero > 0.0 && self.rho_zero < 1.0) {
            return bad(format!("rho_zero must lie in (0, 1), got {}", self.rho_zero));
        }
        if self.rank == 0 {
            return bad("rank must be at least 1".into());
        }
        if !(self.step > 0.0) || !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad(format!("need step > 0 and decay in (0, 1], got {} and {}", self.step, self.decay));
        }
        Ok(())
    }

    pub(crate) fn record(&self, model: &mut FactorModel) {
        model.set_param("lambda", self.lambda);
        model.set_param("mu", self.mu);
        model.set_param("rho_zero", self.rho_zero);
        model.set_param("step", self.step);
        model.set_param("decay", self.decay);
        model.set_param("epochs", self.epochs);
        model.set_param("seed", self.seed);
    }
}

/// Relative Graph Gain in percent: how much more of the gap between no graph
/// and the raw graph is closed by `with_x`; 0 when `with_x` equals `with_g`.
pub fn rgg(rmse_no_graph: f64, rmse_with_g: f64, rmse_with_x: f64) -> Result<f64> {
    let denom = rmse_no_graph - rmse_with_g;
    if !(denom > 0.0) {
        return Err(Error::UndefinedMetric(format!(
            "relative graph gain needs the graph to help (no-graph {rmse_no_graph} vs graph {rmse_with_g})"
        )));
    }
    Ok(((rmse_no_graph - rmse_with_x) / denom - 1.0) * 100.0)
}

/// The weighted adjacency matrix of `g` as an n×n side matrix for Co-Factor.
pub fn graph_side_matrix(g: &Graph) -> RatingsMatrix {
    let triples = (0..g.n()).flat_map(|a| {
        let (nb, wt) = g.neighbors(a);
        nb.iter().zip(wt).map(move |(&b, &w)| Triple {
            user: a as u32,
            item: b,
            rating: w,
        })
    });
    RatingsMatrix::from_triples(g.n(), g.n(), FeedbackMode::Explicit, triples).expect("adjacency rows are sorted and unique")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgg_reference_values() {
        assert!((rgg(2.9971e-1, 2.7823e-1, 2.4247e-1).unwrap() - 166.48).abs() < 5e-3);
        assert_eq!(rgg(3.0, 2.0, 2.0).unwrap(), 0.0);
        assert_eq!(rgg(3.0, 2.0, 3.0).unwrap(), -100.0);
        assert!(matches!(rgg(2.0, 2.0, 1.0), Err(Error::UndefinedMetric(_))));
        assert!(rgg(2.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn hyper_validation() {
        assert!(HyperParams::default().validate().is_ok());
        for h in [
            HyperParams { lambda: -1.0, ..Default::default() },
            HyperParams { rho_zero: 1.0, ..Default::default() },
            HyperParams { rank: 0, ..Default::default() },
            HyperParams { decay: 0.0, ..Default::default() },
        ] {
            assert!(h.validate().is_err());
        }
    }

    #[test]
    fn adjacency_side_matrix_is_symmetric() {
        let g = Graph::from_edges(3, [(0, 1, 2.0), (1, 2, 1.0)]).unwrap();
        let s = graph_side_matrix(&g);
        assert_eq!(s.nnz(), 4);
        assert_eq!(s.get(1, 0), Some(2.0));
        assert_eq!(s.get(0, 1), Some(2.0));
    }
}
