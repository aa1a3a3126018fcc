use std::io::Write;

use rand::seq::SliceRandom;

use super::ratings::{FeedbackMode, RatingsMatrix, Triple};
use crate::error::{Error, Result};
use crate::rng;

/// A train/test partition of one ratings matrix; both halves keep the
/// source's dimensions so indices stay aligned.
#[derive(Debug, Clone)]
pub struct TrainTestSplit {
    pub train: RatingsMatrix,
    pub test: RatingsMatrix,
    pub seed: u64,
    /// `None` means every rating not held out went to training.
    pub per_user_train_count: Option<usize>,
    pub min_test: usize,
}

impl TrainTestSplit {
    /// Manifest lines ("key=value") recording how the split was made.
    pub fn write_manifest<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "seed={}", self.seed)?;
        match self.per_user_train_count {
            Some(n) => writeln!(w, "n_train={n}")?,
            None => writeln!(w, "n_train=all")?,
        }
        writeln!(w, "min_test={}", self.min_test)?;
        writeln!(w, "n_users={}", self.train.n_users())?;
        writeln!(w, "n_items={}", self.train.n_items())?;
        writeln!(w, "train_nnz={}", self.train.nnz())?;
        writeln!(w, "test_nnz={}", self.test.nnz())?;
        Ok(())
    }
}

/// Per user, samples exactly `n_train` ratings for training and holds out the
/// rest; users with fewer than `n_train + min_test` ratings are dropped.
///
/// Observed zeros of implicit data stay with the training side.
pub fn split_fixed_count(
    ratings: &RatingsMatrix,
    n_train: usize,
    min_test: usize,
    seed: u64,
) -> Result<TrainTestSplit> {
    if n_train == 0 || min_test == 0 {
        return Err(Error::Config("n_train and min_test must be at least 1".into()));
    }
    let required = n_train + min_test;
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut survivors = 0;
    for u in 0..ratings.n_users() {
        let (items, vals) = ratings.user(u);
        if items.len() < required {
            continue;
        }
        survivors += 1;
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut rng::stream(seed, &[u as u64]));
        for (rank, &p) in order.iter().enumerate() {
            let t = Triple {
                user: u as u32,
                item: items[p],
                rating: vals[p],
            };
            if rank < n_train {
                train.push(t);
            } else {
                test.push(t);
            }
        }
        if ratings.mode() == FeedbackMode::Implicit {
            train.extend(ratings.observed_zeros(u).iter().map(|&item| Triple {
                user: u as u32,
                item,
                rating: 0.0,
            }));
        }
    }
    if survivors == 0 {
        return Err(Error::EmptySplit { required });
    }
    Ok(TrainTestSplit {
        train: rebuild(ratings, train)?,
        test: rebuild(ratings, test)?,
        seed,
        per_user_train_count: Some(n_train),
        min_test,
    })
}

/// Holds out a uniformly random `test_frac` of each user's ratings (at least
/// one when the user has two or more).
pub fn split_fraction(ratings: &RatingsMatrix, test_frac: f64, seed: u64) -> Result<TrainTestSplit> {
    if !(0.0..1.0).contains(&test_frac) {
        return Err(Error::Config(format!("test fraction {test_frac} outside [0, 1)")));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for u in 0..ratings.n_users() {
        let (items, vals) = ratings.user(u);
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut rng::stream(seed, &[u as u64]));
        let mut n_test = (items.len() as f64 * test_frac).round() as usize;
        if n_test == 0 && items.len() >= 2 && test_frac > 0.0 {
            n_test = 1;
        }
        for (rank, &p) in order.iter().enumerate() {
            let t = Triple {
                user: u as u32,
                item: items[p],
                rating: vals[p],
            };
            if rank < n_test {
                test.push(t);
            } else {
                train.push(t);
            }
        }
        train.extend(ratings.observed_zeros(u).iter().map(|&item| Triple {
            user: u as u32,
            item,
            rating: 0.0,
        }));
    }
    Ok(TrainTestSplit {
        train: rebuild(ratings, train)?,
        test: rebuild(ratings, test)?,
        seed,
        per_user_train_count: None,
        min_test: 0,
    })
}

fn rebuild(like: &RatingsMatrix, triples: Vec<Triple>) -> Result<RatingsMatrix> {
    match (like.mode(), like.levels()) {
        (FeedbackMode::Explicit, Some(l)) if l > 0 => {
            RatingsMatrix::from_levels(like.n_users(), like.n_items(), l, triples)
        }
        (mode, _) => RatingsMatrix::from_triples(like.n_users(), like.n_items(), mode, triples),
    }
}

/// Ratings `>= threshold` become 1; the remaining observed entries become
/// observed zeros.
pub fn binarize(ratings: &RatingsMatrix, threshold: u8) -> Result<RatingsMatrix> {
    if ratings.mode() != FeedbackMode::Explicit {
        return Err(Error::Config("binarize expects explicit ratings".into()));
    }
    let levels = ratings
        .levels()
        .ok_or_else(|| Error::Config("binarize expects whole rating levels".into()))?;
    if threshold < 1 || threshold > levels {
        return Err(Error::Config(format!(
            "threshold {threshold} outside rating levels 1..={levels}"
        )));
    }
    let t = threshold as f64;
    let triples = ratings.triples().map(|e| Triple {
        rating: if e.rating >= t { 1.0 } else { 0.0 },
        ..e
    });
    RatingsMatrix::from_triples(ratings.n_users(), ratings.n_items(), FeedbackMode::Implicit, triples)
}
