//! Rating storage, splitting, comparison enumeration and synthetic data.

mod comparisons;
mod ratings;
mod split;
mod synth;

pub use comparisons::{enumerate_comparisons, Comparison};
pub use ratings::{
    load_ratings, load_ratings_with, FeedbackMode, IdMap, IdMaps, RatingsMatrix, Triple, UnknownIds,
};
pub use split::{binarize, split_fixed_count, split_fraction, TrainTestSplit};
pub use synth::{generate_synthetic, SyntheticData, SyntheticSpec};
