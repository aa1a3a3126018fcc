use std::io::Write;

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;

use crate::data::{FeedbackMode, RatingsMatrix};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// One draw of the Stochastic Queuing Process for `user`: the rated items in
/// non-increasing rating order with ties shuffled uniformly. For implicit
/// feedback the shuffled 1's are followed by `round(ρ·m̃)` items sampled
/// without replacement from the user's non-positive items (all of them when
/// fewer are available).
pub fn stochastic_queuing(r: &RatingsMatrix, user: usize, rho_neg: f64, rng: &mut Rng) -> Result<Vec<u32>> {
    let (items, vals) = r.user(user);
    if items.is_empty() {
        return Err(Error::Data(format!("user {user} has no observed entries to queue")));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(rng);
    // stable sort keeps the shuffled order inside each rating level
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let mut list: Vec<u32> = order.into_iter().map(|p| items[p]).collect();
    if r.mode() == FeedbackMode::Implicit && rho_neg > 0.0 {
        let wanted = (rho_neg * items.len() as f64).round() as usize;
        let negatives: Vec<u32> = (0..r.n_items() as u32).filter(|j| items.binary_search(j).is_err()).collect();
        if wanted > negatives.len() {
            log::warn!("user {user}: only {} of {wanted} negatives available", negatives.len());
        }
        let draw = index::sample(rng, negatives.len(), wanted.min(negatives.len()));
        list.extend(draw.into_iter().map(|a| negatives[a]));
    }
    Ok(list)
}

/// Per-user ranked lists `Π_i` (best first) for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationBatch {
    lists: Vec<Vec<u32>>,
    pub includes_negatives: bool,
    pub seed: u64,
}

impl PermutationBatch {
    /// Draws every user's list from the stream `(seed, epoch, user)`; users
    /// without observed entries get empty lists.
    pub fn draw(r: &RatingsMatrix, rho_neg: f64, seed: u64, epoch: u64) -> Self {
        let lists = (0..r.n_users())
            .into_par_iter()
            .map(|u| {
                if r.user_len(u) == 0 {
                    return Vec::new();
                }
                let mut g = rng::stream(seed, &[epoch, u as u64]);
                stochastic_queuing(r, u, rho_neg, &mut g).expect("user has entries")
            })
            .collect();
        PermutationBatch {
            lists,
            includes_negatives: r.mode() == FeedbackMode::Implicit && rho_neg > 0.0,
            seed,
        }
    }

    pub fn from_lists(lists: Vec<Vec<u32>>) -> Self {
        PermutationBatch {
            lists,
            includes_negatives: false,
            seed: 0,
        }
    }

    pub fn n_users(&self) -> usize {
        self.lists.len()
    }

    pub fn user(&self, u: usize) -> &[u32] {
        &self.lists[u]
    }

    /// Debug dump: one line of space-separated item indices per user.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for list in &self.lists {
            let line: Vec<String> = list.iter().map(u32::to_string).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}
