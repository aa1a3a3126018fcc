//! Binary indexed tree over rating levels `1..=L`.

/// Point updates and prefix/suffix sums over levels `1..=len`, each O(log L).
#[derive(Debug, Clone, PartialEq)]
pub struct FenwickTree {
    tree: Vec<f64>,
    total: f64,
}

impl FenwickTree {
    pub fn new(levels: usize) -> Self {
        FenwickTree {
            tree: vec![0.0; levels + 1],
            total: 0.0,
        }
    }

    pub fn levels(&self) -> usize {
        self.tree.len() - 1
    }

    pub fn clear(&mut self) {
        self.tree.iter_mut().for_each(|x| *x = 0.0);
        self.total = 0.0;
    }

    /// Adds `x` at `level` (1-based).
    pub fn add(&mut self, level: usize, x: f64) {
        assert!(level >= 1 && level <= self.levels(), "level {level} outside 1..={}", self.levels());
        self.total += x;
        let mut i = level;
        while i < self.tree.len() {
            self.tree[i] += x;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over levels `1..=level`; `level` 0 gives 0.
    pub fn prefix(&self, level: usize) -> f64 {
        let mut i = level.min(self.levels());
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i &= i - 1;
        }
        s
    }

    /// Sum over levels `level..=L`, as total minus prefix.
    pub fn suffix(&self, level: usize) -> f64 {
        if level <= 1 {
            return self.total;
        }
        self.total - self.prefix(level - 1)
    }

    pub fn total(&self) -> f64 {
        self.total
    }
}
