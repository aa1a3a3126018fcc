use std::io::BufRead;

use crate::data::{enumerate_comparisons, RatingsMatrix};
use crate::error::{Error, Result};

/// Sources of per-user preference pairs. Pairs are reported as positions
/// `(preferred, other)` into [`PairSource::user_items`].
pub trait PairSource: Sync {
    fn n_users(&self) -> usize;
    fn n_items(&self) -> usize;
    /// Items that can appear in the user's pairs, ascending.
    fn user_items(&self, u: usize) -> &[u32];
    fn for_each_pair(&self, u: usize, f: impl FnMut(usize, usize));
}

/// Pairs implied by explicit ratings: every two items of a user with
/// different ratings, enumerated on the fly.
impl PairSource for RatingsMatrix {
    fn n_users(&self) -> usize {
        RatingsMatrix::n_users(self)
    }

    fn n_items(&self) -> usize {
        RatingsMatrix::n_items(self)
    }

    fn user_items(&self, u: usize) -> &[u32] {
        self.user(u).0
    }

    fn for_each_pair(&self, u: usize, mut f: impl FnMut(usize, usize)) {
        let vals = self.user(u).1;
        for a in 0..vals.len() {
            for b in a + 1..vals.len() {
                if vals[a] > vals[b] {
                    f(a, b);
                } else if vals[b] > vals[a] {
                    f(b, a);
                }
            }
        }
    }
}

/// Materialized per-user comparisons, each stored with the preferred item
/// first.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSet {
    n_items: usize,
    item_ptr: Vec<usize>,
    items: Vec<u32>,
    pair_ptr: Vec<usize>,
    /// Positions into the user's slice of `items`.
    pairs: Vec<(u32, u32)>,
}

impl ComparisonSet {
    /// All comparisons implied by `ratings`; ties yield none.
    pub fn from_ratings(ratings: &RatingsMatrix) -> Self {
        let mut set = ComparisonSet::with_capacity(ratings.n_items());
        for u in 0..ratings.n_users() {
            let items = ratings.user(u).0;
            let pos = |x: u32| items.binary_search(&x).expect("compared items are rated") as u32;
            set.pairs.extend(enumerate_comparisons(ratings, u).map(|c| (pos(c.j), pos(c.k))));
            set.pair_ptr.push(set.pairs.len());
            set.items.extend_from_slice(items);
            set.item_ptr.push(set.items.len());
        }
        set
    }

    fn with_capacity(n_items: usize) -> Self {
        ComparisonSet {
            n_items,
            item_ptr: vec![0],
            items: Vec::new(),
            pair_ptr: vec![0],
            pairs: Vec::new(),
        }
    }

    /// Builds the set from `(user, j, k, y)` records, where `y = +1` means
    /// `j` is preferred and `y = −1` means `k` is. Duplicate records are kept.
    pub fn from_records(n_users: usize, n_items: usize, records: &[(u32, u32, u32, i8)]) -> Result<Self> {
        let mut by_user: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n_users];
        for &(u, j, k, y) in records {
            if u as usize >= n_users || j as usize >= n_items || k as usize >= n_items {
                return Err(Error::Dimension(format!("comparison ({u}, {j}, {k}) outside {n_users}x{n_items}")));
            }
            if j == k {
                return Err(Error::Data(format!("user {u} compares item {j} with itself")));
            }
            match y {
                1 => by_user[u as usize].push((j, k)),
                -1 => by_user[u as usize].push((k, j)),
                _ => return Err(Error::Data(format!("comparison label must be +1 or -1, got {y}"))),
            }
        }
        let mut set = ComparisonSet::with_capacity(n_items);
        for pairs in by_user {
            let mut items: Vec<u32> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
            items.sort_unstable();
            items.dedup();
            let pos = |x: u32| items.binary_search(&x).unwrap() as u32;
            set.pairs.extend(pairs.iter().map(|&(a, b)| (pos(a), pos(b))));
            set.pair_ptr.push(set.pairs.len());
            set.items.extend_from_slice(&items);
            set.item_ptr.push(set.items.len());
        }
        Ok(set)
    }

    /// Reads "user j k Y" lines of dense 0-based indices; `#` starts a comment.
    /// Dimensions are one past the largest index seen.
    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::parse(i + 1, format!("expected 'user j k Y', got '{line}'")));
            }
            let idx = |s: &str| s.parse::<u32>().map_err(|_| Error::parse(i + 1, format!("bad index '{s}'")));
            let y = f[3].parse::<i8>().map_err(|_| Error::parse(i + 1, format!("bad label '{}'", f[3])))?;
            records.push((idx(f[0])?, idx(f[1])?, idx(f[2])?, y));
        }
        let n = records.iter().map(|r| r.0 as usize + 1).max().unwrap_or(0);
        let m = records.iter().map(|r| r.1.max(r.2) as usize + 1).max().unwrap_or(0);
        ComparisonSet::from_records(n, m, &records)
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn user_pairs(&self, u: usize) -> &[(u32, u32)] {
        &self.pairs[self.pair_ptr[u]..self.pair_ptr[u + 1]]
    }

    /// Grows the item dimension (new items have no comparisons).
    pub fn with_items(mut self, n_items: usize) -> Self {
        self.n_items = self.n_items.max(n_items);
        self
    }
}

impl PairSource for ComparisonSet {
    fn n_users(&self) -> usize {
        self.pair_ptr.len() - 1
    }

    fn n_items(&self) -> usize {
        self.n_items
    }

    fn user_items(&self, u: usize) -> &[u32] {
        &self.items[self.item_ptr[u]..self.item_ptr[u + 1]]
    }

    fn for_each_pair(&self, u: usize, mut f: impl FnMut(usize, usize)) {
        for &(a, b) in self.user_pairs(u) {
            f(a as usize, b as usize);
        }
    }
}
