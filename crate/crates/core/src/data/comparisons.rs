use super::ratings::RatingsMatrix;

/// A preference of one user: item `j` compared against item `k`.
/// `y = +1` means `j` is preferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Comparison {
    pub j: u32,
    pub k: u32,
    pub y: i8,
}

/// All strictly-ordered item pairs rated by `user`, each emitted once with the
/// preferred item first (`y = +1`). Ties produce no pair.
pub fn enumerate_comparisons(
    ratings: &RatingsMatrix,
    user: usize,
) -> impl Iterator<Item = Comparison> + '_ {
    let (items, vals) = ratings.user(user);
    (0..items.len()).flat_map(move |a| {
        (a + 1..items.len()).filter_map(move |b| {
            let (ra, rb) = (vals[a], vals[b]);
            if ra > rb {
                Some(Comparison { j: items[a], k: items[b], y: 1 })
            } else if rb > ra {
                Some(Comparison { j: items[b], k: items[a], y: 1 })
            } else {
                None
            }
        })
    })
}
