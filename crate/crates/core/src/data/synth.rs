use rand::seq::index;

use super::ratings::{FeedbackMode, RatingsMatrix, Triple};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{dot, FactorTable};
use crate::rng;

/// Parameters of the propagated-embedding simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_users: usize,
    pub n_items: usize,
    pub rank: usize,
    /// Share of a user's embedding taken from its neighbors at each step.
    pub influence_weight: f64,
    pub propagation_steps: usize,
    pub edge_prob: f64,
    pub train_frac: f64,
    pub test_frac: f64,
}

impl SyntheticSpec {
    /// The simulation-study scale: 10,000 users, 2,000 items, rank 50.
    pub fn paper_scale() -> Self {
        SyntheticSpec {
            n_users: 10_000,
            n_items: 2_000,
            rank: 50,
            influence_weight: 0.6,
            propagation_steps: 3,
            edge_prob: 0.001,
            train_frac: 0.05,
            test_frac: 0.02,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.influence_weight) {
            return Err(Error::Config(format!(
                "influence weight {} outside [0, 1]",
                self.influence_weight
            )));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(Error::Config(format!("edge probability {} outside [0, 1]", self.edge_prob)));
        }
        if self.train_frac < 0.0 || self.test_frac < 0.0 || self.train_frac + self.test_frac > 1.0 {
            return Err(Error::Config(format!(
                "train/test fractions {} + {} must lie in [0, 1]",
                self.train_frac, self.test_frac
            )));
        }
        if self.rank == 0 {
            return Err(Error::Config("rank must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub train: RatingsMatrix,
    pub test: RatingsMatrix,
    pub graph: Graph,
    /// User embeddings before propagation.
    pub initial_users: FactorTable,
    /// User embeddings after propagation; ratings are `users · itemsᵀ`.
    pub users: FactorTable,
    pub items: FactorTable,
}

/// Simulates ratings whose user embeddings have been smoothed over a random
/// friendship graph.
///
/// Each step replaces `U_i` by `w·Σ_{j~i} U_j + (1−w)·U_i` (a weighted sum over
/// neighbors, not their average). Ratings `R = UVᵀ` are observed on disjoint
/// uniformly sampled train and test cells.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticData> {
    spec.validate()?;
    let (n, m, r) = (spec.n_users, spec.n_items, spec.rank);
    let initial_users = FactorTable::gaussian(n, r, 1.0, &mut rng::stream(seed, &[1]));
    let items = FactorTable::gaussian(m, r, 1.0, &mut rng::stream(seed, &[2]));
    let graph = Graph::erdos_renyi(n, spec.edge_prob, &mut rng::stream(seed, &[3]));

    let w = spec.influence_weight;
    let mut users = initial_users.clone();
    for _ in 0..spec.propagation_steps {
        let mut next = FactorTable::zeros(n, r);
        for i in 0..n {
            let out = next.row_mut(i);
            for (o, x) in out.iter_mut().zip(users.row(i)) {
                *o = (1.0 - w) * x;
            }
            let (nb, _) = graph.neighbors(i);
            for &j in nb {
                for (o, x) in out.iter_mut().zip(users.row(j as usize)) {
                    *o += w * x;
                }
            }
        }
        users = next;
    }

    let cells = n * m;
    let n_train = (spec.train_frac * cells as f64).round() as usize;
    let n_test = ((spec.test_frac * cells as f64).round() as usize).min(cells - n_train);
    let picked = index::sample(&mut rng::stream(seed, &[4]), cells, n_train + n_test).into_vec();
    let rating_at = |c: usize| {
        let (i, j) = (c / m, c % m);
        Triple {
            user: i as u32,
            item: j as u32,
            rating: dot(users.row(i), items.row(j)),
        }
    };
    let train = RatingsMatrix::from_triples(
        n,
        m,
        FeedbackMode::Explicit,
        picked[..n_train].iter().map(|&c| rating_at(c)),
    )?;
    let test = RatingsMatrix::from_triples(
        n,
        m,
        FeedbackMode::Explicit,
        picked[n_train..].iter().map(|&c| rating_at(c)),
    )?;
    Ok(SyntheticData {
        train,
        test,
        graph,
        initial_users,
        users,
        items,
    })
}
