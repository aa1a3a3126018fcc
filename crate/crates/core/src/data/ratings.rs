//! Sparse rating storage with row- and column-major views, plus the text
//! ratings format.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Explicit ratings carry levels `1..=L`; implicit ones are binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackMode {
    Explicit,
    Implicit,
}

impl std::str::FromStr for FeedbackMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(FeedbackMode::Explicit),
            "implicit" => Ok(FeedbackMode::Implicit),
            other => Err(Error::Config(format!("unknown feedback mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for FeedbackMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeedbackMode::Explicit => "explicit",
            FeedbackMode::Implicit => "implicit",
        })
    }
}

/// One observed entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple {
    pub user: u32,
    pub item: u32,
    pub rating: f64,
}

fn by_position(a: &Triple, b: &Triple) -> std::cmp::Ordering {
    (a.user, a.item).cmp(&(b.user, b.item))
}

#[derive(Debug, Clone, PartialEq)]
struct Csr {
    ptr: Vec<usize>,
    idx: Vec<u32>,
    val: Vec<f64>,
}

impl Csr {
    fn build(n_rows: usize, mut entries: Vec<(u32, u32, f64)>) -> Csr {
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut ptr = vec![0usize; n_rows + 1];
        for &(r, _, _) in &entries {
            ptr[r as usize + 1] += 1;
        }
        for i in 0..n_rows {
            ptr[i + 1] += ptr[i];
        }
        let idx = entries.iter().map(|e| e.1).collect();
        let val = entries.iter().map(|e| e.2).collect();
        Csr { ptr, idx, val }
    }

    #[inline]
    fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.ptr[i], self.ptr[i + 1]);
        (&self.idx[a..b], &self.val[a..b])
    }
}

/// Sparse user×item matrix.
///
/// `by_user` and `by_item` hold the same triples. Explicit data whose values
/// are all whole numbers `1..=L` exposes `L` through [`levels`](Self::levels);
/// real-valued explicit data (e.g. synthetic `UVᵀ` ratings) has no levels. In
/// implicit mode the main entries all carry 1 and entries observed as 0 live
/// in a separate per-user list, so they stay distinguishable from
/// never-observed cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsMatrix {
    n_users: usize,
    n_items: usize,
    levels: Option<u8>,
    mode: FeedbackMode,
    by_user: Csr,
    by_item: Csr,
    observed_zeros: Vec<Vec<u32>>,
}

fn whole_level(v: f64) -> Option<u8> {
    (v.fract() == 0.0 && (1.0..=255.0).contains(&v)).then_some(v as u8)
}

impl RatingsMatrix {
    /// Builds a matrix from triples, rejecting duplicates and invalid values.
    ///
    /// In implicit mode a triple with rating 0 is recorded as an observed zero.
    pub fn from_triples(
        n_users: usize,
        n_items: usize,
        mode: FeedbackMode,
        triples: impl IntoIterator<Item = Triple>,
    ) -> Result<Self> {
        let mut main = Vec::new();
        let mut zeros: Vec<Vec<u32>> = vec![Vec::new(); n_users];
        for t in triples {
            if t.user as usize >= n_users || t.item as usize >= n_items {
                return Err(Error::Data(format!(
                    "entry ({}, {}) outside {}x{} matrix",
                    t.user, t.item, n_users, n_items
                )));
            }
            if !t.rating.is_finite() {
                return Err(Error::Data(format!("non-finite rating at ({}, {})", t.user, t.item)));
            }
            match mode {
                FeedbackMode::Explicit => main.push((t.user, t.item, t.rating)),
                FeedbackMode::Implicit => {
                    if t.rating == 0.0 {
                        zeros[t.user as usize].push(t.item);
                    } else if t.rating == 1.0 {
                        main.push((t.user, t.item, 1.0));
                    } else {
                        return Err(Error::Data(format!(
                            "implicit rating {} at ({}, {}); expected 0 or 1",
                            t.rating, t.user, t.item
                        )));
                    }
                }
            }
        }
        let levels = match mode {
            FeedbackMode::Implicit => Some(2),
            FeedbackMode::Explicit => main
                .iter()
                .try_fold(0u8, |acc, e| whole_level(e.2).map(|l| acc.max(l))),
        };
        Self::assemble(n_users, n_items, levels, mode, main, zeros)
    }

    /// Explicit matrix on levels `1..=levels`; every rating must be such a level.
    pub fn from_levels(
        n_users: usize,
        n_items: usize,
        levels: u8,
        triples: impl IntoIterator<Item = Triple>,
    ) -> Result<Self> {
        let mut m = Self::from_triples(n_users, n_items, FeedbackMode::Explicit, triples)?;
        match m.levels {
            Some(l) if l <= levels => m.levels = Some(levels),
            _ => {
                return Err(Error::Data(format!(
                    "ratings are not all whole levels in 1..={levels}"
                )))
            }
        }
        Ok(m)
    }

    fn assemble(
        n_users: usize,
        n_items: usize,
        levels: Option<u8>,
        mode: FeedbackMode,
        main: Vec<(u32, u32, f64)>,
        mut zeros: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let by_user = Csr::build(n_users, main);
        for u in 0..n_users {
            let (items, _) = by_user.row(u);
            if let Some(w) = items.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::Data(format!("duplicate pair (user {u}, item {})", w[0])));
            }
        }
        for (u, z) in zeros.iter_mut().enumerate() {
            z.sort_unstable();
            if let Some(w) = z.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::Data(format!("duplicate pair (user {u}, item {})", w[0])));
            }
            let (items, _) = by_user.row(u);
            if let Some(&j) = z.iter().find(|j| items.binary_search(j).is_ok()) {
                return Err(Error::Data(format!("duplicate pair (user {u}, item {j})")));
            }
        }
        let mut transposed = Vec::with_capacity(by_user.idx.len());
        for u in 0..n_users {
            let (items, vals) = by_user.row(u);
            transposed.extend(items.iter().zip(vals).map(|(&j, &v)| (j, u as u32, v)));
        }
        let by_item = Csr::build(n_items, transposed);
        Ok(RatingsMatrix {
            n_users,
            n_items,
            levels,
            mode,
            by_user,
            by_item,
            observed_zeros: zeros,
        })
    }

    pub fn empty(mode: FeedbackMode) -> Self {
        Self::from_triples(0, 0, mode, std::iter::empty()).expect("empty matrix is valid")
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// Number of rating levels `L` when every rating is a whole level
    /// (always 2 in implicit mode).
    pub fn levels(&self) -> Option<u8> {
        self.levels
    }

    pub fn mode(&self) -> FeedbackMode {
        self.mode
    }

    /// Number of main (non-zero) entries.
    pub fn nnz(&self) -> usize {
        self.by_user.idx.len()
    }

    pub fn n_observed_zeros(&self) -> usize {
        self.observed_zeros.iter().map(Vec::len).sum()
    }

    /// Items (strictly increasing) and ratings of user `u`.
    #[inline]
    pub fn user(&self, u: usize) -> (&[u32], &[f64]) {
        self.by_user.row(u)
    }

    /// Users (strictly increasing) and ratings of item `j`.
    #[inline]
    pub fn item(&self, j: usize) -> (&[u32], &[f64]) {
        self.by_item.row(j)
    }

    #[inline]
    pub fn user_len(&self, u: usize) -> usize {
        self.by_user.ptr[u + 1] - self.by_user.ptr[u]
    }

    /// Items observed as 0 for user `u` (implicit mode only; sorted).
    pub fn observed_zeros(&self, u: usize) -> &[u32] {
        &self.observed_zeros[u]
    }

    pub fn get(&self, u: usize, j: u32) -> Option<f64> {
        let (items, vals) = self.user(u);
        items.binary_search(&j).ok().map(|p| vals[p])
    }

    /// Whether user `u` has any observation (one or zero) on item `j`.
    pub fn is_observed(&self, u: usize, j: u32) -> bool {
        self.get(u, j).is_some() || self.observed_zeros[u].binary_search(&j).is_ok()
    }

    /// All main entries in user-major order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        (0..self.n_users).flat_map(move |u| {
            let (items, vals) = self.user(u);
            items.iter().zip(vals).map(move |(&item, &rating)| Triple {
                user: u as u32,
                item,
                rating,
            })
        })
    }

    /// Main entries and observed zeros (rating 0), sorted by (user, item).
    pub fn all_triples(&self) -> Vec<Triple> {
        let mut out: Vec<Triple> = self.triples().collect();
        for (u, z) in self.observed_zeros.iter().enumerate() {
            out.extend(z.iter().map(|&item| Triple {
                user: u as u32,
                item,
                rating: 0.0,
            }));
        }
        out.sort_unstable_by(by_position);
        out
    }

    /// Cross-walks the two layouts; `true` when they hold identical triples.
    pub fn layouts_consistent(&self) -> bool {
        let mut from_items = Vec::with_capacity(self.nnz());
        for j in 0..self.n_items {
            let (users, vals) = self.item(j);
            if users.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            from_items.extend(users.iter().zip(vals).map(|(&user, &rating)| Triple {
                user,
                item: j as u32,
                rating,
            }));
        }
        from_items.sort_unstable_by(by_position);
        let from_users: Vec<Triple> = self.triples().collect();
        from_users == from_items
    }

    /// Same shape, mode and level count, restricted to entries accepted by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Triple) -> bool) -> RatingsMatrix {
        let kept: Vec<Triple> = self.all_triples().into_iter().filter(|t| keep(t)).collect();
        let mut m = RatingsMatrix::from_triples(self.n_users, self.n_items, self.mode, kept)
            .expect("subset of a valid matrix is valid");
        if m.levels.is_some() {
            m.levels = self.levels;
        }
        m
    }

    /// Writes "user item rating" lines, translating indices through `ids` when given.
    pub fn write<W: Write>(&self, mut w: W, ids: Option<&IdMaps>) -> Result<()> {
        for t in self.all_triples() {
            let (u, j) = match ids {
                Some(m) => (m.users.external(t.user), m.items.external(t.item)),
                None => (t.user as u64, t.item as u64),
            };
            writeln!(w, "{u}\t{j}\t{}", t.rating)?;
        }
        Ok(())
    }
}

/// Dense-index ↔ external-id table for one axis.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdMap {
    external: Vec<u64>,
    index: HashMap<u64, u32>,
}

impl IdMap {
    pub fn from_sorted(ids: impl IntoIterator<Item = u64>) -> Self {
        let mut m = IdMap::default();
        for id in ids {
            m.insert(id);
        }
        m
    }

    fn insert(&mut self, id: u64) -> u32 {
        if let Some(&i) = self.index.get(&id) {
            return i;
        }
        let i = self.external.len() as u32;
        self.external.push(id);
        self.index.insert(id, i);
        i
    }

    pub fn get(&self, id: u64) -> Option<u32> {
        self.index.get(&id).copied()
    }

    pub fn external(&self, i: u32) -> u64 {
        self.external[i as usize]
    }

    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }

    /// Mapping file: "external_id internal_index" lines.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, id) in self.external.iter().enumerate() {
            writeln!(w, "{id} {i}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut f = line.split_whitespace();
            let (Some(a), Some(b), None) = (f.next(), f.next(), f.next()) else {
                return Err(Error::parse(n + 1, "expected 'external_id internal_index'"));
            };
            let id: u64 = a.parse().map_err(|_| Error::parse(n + 1, format!("bad id '{a}'")))?;
            let idx: usize = b.parse().map_err(|_| Error::parse(n + 1, format!("bad index '{b}'")))?;
            pairs.push((idx, id));
        }
        pairs.sort_unstable();
        let mut m = IdMap::default();
        for (expect, (idx, id)) in pairs.into_iter().enumerate() {
            if idx != expect {
                return Err(Error::Data(format!("mapping file skips internal index {expect}")));
            }
            if m.get(id).is_some() {
                return Err(Error::Data(format!("mapping file repeats external id {id}")));
            }
            m.insert(id);
        }
        Ok(m)
    }
}

/// User and item id tables produced by loading a ratings file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdMaps {
    pub users: IdMap,
    pub items: IdMap,
}

/// What to do with ids missing from a frozen mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownIds {
    Error,
    Skip,
}

struct RawLine {
    line: usize,
    user: u64,
    item: u64,
    rating: f64,
}

fn detect_separator(line: &str) -> Option<&'static str> {
    if line.contains("::") {
        Some("::")
    } else if line.contains('\t') {
        Some("\t")
    } else if line.contains(',') {
        Some(",")
    } else if line.contains(' ') {
        Some(" ")
    } else {
        None
    }
}

fn parse_lines<R: BufRead>(reader: R) -> Result<Vec<RawLine>> {
    let mut sep: Option<&'static str> = None;
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let s = match sep {
            Some(s) => s,
            None => {
                let s = detect_separator(trimmed)
                    .ok_or_else(|| Error::parse(lineno, "no field separator found"))?;
                sep = Some(s);
                s
            }
        };
        let fields: Vec<&str> = if s == " " {
            trimmed.split_whitespace().collect()
        } else {
            trimmed.split(s).map(str::trim).collect()
        };
        // A fourth column (timestamp) is tolerated and ignored.
        if fields.len() != 3 && fields.len() != 4 {
            return Err(Error::parse(
                lineno,
                format!("expected 'user item rating', got {} fields", fields.len()),
            ));
        }
        let user = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad user id '{}'", fields[0])))?;
        let item = fields[1]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad item id '{}'", fields[1])))?;
        let rating: f64 = fields[2]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::parse(lineno, format!("bad rating '{}'", fields[2])))?;
        out.push(RawLine {
            line: lineno,
            user,
            item,
            rating,
        });
    }
    Ok(out)
}

fn check_duplicates(lines: &[RawLine]) -> Result<()> {
    let mut seen: HashMap<(u64, u64), usize> = HashMap::with_capacity(lines.len());
    for l in lines {
        if let Some(first) = seen.insert((l.user, l.item), l.line) {
            return Err(Error::Data(format!(
                "duplicate pair (user {}, item {}) on lines {first} and {}",
                l.user, l.item, l.line
            )));
        }
    }
    Ok(())
}

/// Parses a ratings stream, remapping ids to dense indices in ascending id order.
pub fn load_ratings<R: BufRead>(reader: R, mode: FeedbackMode) -> Result<(RatingsMatrix, IdMaps)> {
    let lines = parse_lines(reader)?;
    check_duplicates(&lines)?;
    let users: BTreeSet<u64> = lines.iter().map(|l| l.user).collect();
    let items: BTreeSet<u64> = lines.iter().map(|l| l.item).collect();
    let ids = IdMaps {
        users: IdMap::from_sorted(users),
        items: IdMap::from_sorted(items),
    };
    let m = build(&lines, mode, &ids, UnknownIds::Error)?.0;
    Ok((m, ids))
}

/// Parses a ratings stream against existing id tables; the matrix takes the
/// tables' dimensions. Returns the matrix and the number of skipped lines.
pub fn load_ratings_with<R: BufRead>(
    reader: R,
    mode: FeedbackMode,
    ids: &IdMaps,
    unknown: UnknownIds,
) -> Result<(RatingsMatrix, usize)> {
    let lines = parse_lines(reader)?;
    check_duplicates(&lines)?;
    build(&lines, mode, ids, unknown)
}

fn build(
    lines: &[RawLine],
    mode: FeedbackMode,
    ids: &IdMaps,
    unknown: UnknownIds,
) -> Result<(RatingsMatrix, usize)> {
    let mut skipped = 0;
    let mut triples = Vec::with_capacity(lines.len());
    for l in lines {
        match (ids.users.get(l.user), ids.items.get(l.item)) {
            (Some(user), Some(item)) => {
                if mode == FeedbackMode::Implicit && l.rating != 0.0 && l.rating != 1.0 {
                    return Err(Error::parse(l.line, "implicit ratings must be 0 or 1"));
                }
                triples.push(Triple {
                    user,
                    item,
                    rating: l.rating,
                })
            }
            _ if unknown == UnknownIds::Skip => skipped += 1,
            _ => {
                return Err(Error::Data(format!(
                    "line {}: id pair ({}, {}) not in mapping",
                    l.line, l.user, l.item
                )))
            }
        }
    }
    let m = RatingsMatrix::from_triples(ids.users.len(), ids.items.len(), mode, triples)?;
    Ok((m, skipped))
}
