use std::io::{BufRead, Write};

use rayon::prelude::*;

use super::filter::{estimate, BloomFilter, HashScheme};
use crate::data::{FeedbackMode, RatingsMatrix, Triple};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Node × bit boolean matrix `B`: row `i` holds the set bits of node `i`'s
/// Bloom filter after `depth` rounds of neighborhood propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct DnaEncoding {
    pub scheme: HashScheme,
    pub depth: usize,
    /// Saturation cap on a row's size estimate (`∞` disables it).
    pub theta: f64,
    rows: Vec<Vec<u32>>,
}

impl DnaEncoding {
    pub fn from_rows(scheme: HashScheme, depth: usize, theta: f64, rows: Vec<Vec<u32>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&b| b as usize >= scheme.c) {
                return Err(Error::Data(format!("row {i} of encoding is not a sorted bit set")));
            }
        }
        Ok(DnaEncoding {
            scheme,
            depth,
            theta,
            rows,
        })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn c(&self) -> usize {
        self.scheme.c
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Whether all hash positions of node `j` are set in row `i`.
    pub fn row_contains(&self, i: usize, j: u64) -> bool {
        let row = &self.rows[i];
        self.scheme.positions(j).all(|p| row.binary_search(&(p as u32)).is_ok())
    }

    /// Persisted form: a "GRAPH-DNA v1" header with `n c k d theta seed`, then
    /// one line per row listing its set-bit indices.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "GRAPH-DNA v1")?;
        writeln!(
            w,
            "n={} c={} k={} d={} theta={} seed={}",
            self.n(),
            self.scheme.c,
            self.scheme.k,
            self.depth,
            self.theta,
            self.scheme.seed
        )?;
        for row in &self.rows {
            let mut first = true;
            for b in row {
                if !first {
                    write!(w, " ")?;
                }
                write!(w, "{b}")?;
                first = false;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let magic = lines.next().transpose()?.unwrap_or_default();
        if magic.trim() != "GRAPH-DNA v1" {
            return Err(Error::parse(1, "missing 'GRAPH-DNA v1' header"));
        }
        let header = lines.next().transpose()?.ok_or_else(|| Error::parse(2, "missing parameters"))?;
        let get = |key: &str| -> Result<String> {
            header
                .split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .map(str::to_owned)
                .ok_or_else(|| Error::parse(2, format!("missing '{key}'")))
        };
        let num = |s: String, key: &str| -> Result<u64> {
            s.parse().map_err(|_| Error::parse(2, format!("bad '{key}'")))
        };
        let n = num(get("n")?, "n")? as usize;
        let c = num(get("c")?, "c")? as usize;
        let k = num(get("k")?, "k")? as usize;
        let depth = num(get("d")?, "d")? as usize;
        let seed = num(get("seed")?, "seed")?;
        let theta: f64 = get("theta")?
            .parse()
            .map_err(|_| Error::parse(2, "bad 'theta'"))?;
        let scheme = HashScheme::new(c, k, seed)?;
        let mut rows = Vec::with_capacity(n);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if rows.len() == n {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::parse(i + 3, "more rows than declared"));
            }
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<u32>().map_err(|_| Error::parse(i + 3, format!("bad bit '{t}'"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::Data(format!("expected {n} rows, found {}", rows.len())));
        }
        DnaEncoding::from_rows(scheme, depth, theta, rows)
    }
}

/// Graph DNA encoding.
///
/// Every node starts with a filter holding only itself. In each of `depth`
/// rounds a node unions in its direct neighbors' filters from the previous
/// round, stopping early once its own size estimate exceeds `theta`.
pub fn dna_encode(g: &Graph, c: usize, k: usize, depth: usize, theta: f64, seed: u64) -> Result<DnaEncoding> {
    if !(theta > 0.0) {
        return Err(Error::Config(format!("theta must be positive, got {theta}")));
    }
    let scheme = HashScheme::new(c, k, seed)?;
    let mut prev: Vec<BloomFilter> = (0..g.n())
        .map(|i| {
            let mut f = BloomFilter::new(scheme);
            f.add(i as u64);
            f
        })
        .collect();
    for _ in 0..depth {
        let next: Vec<BloomFilter> = (0..g.n())
            .into_par_iter()
            .map(|i| propagate(&prev, g, i, theta))
            .collect();
        prev = next;
    }
    let rows = prev.iter().map(BloomFilter::set_bits).collect();
    Ok(DnaEncoding {
        scheme,
        depth,
        theta,
        rows,
    })
}

fn propagate(prev: &[BloomFilter], g: &Graph, i: usize, theta: f64) -> BloomFilter {
    let mut f = prev[i].clone();
    let (c, k) = (f.scheme().c, f.scheme().k);
    let mut nnz = f.nnz();
    for &j in g.neighbors(i).0 {
        if estimate(c, k, nnz) > theta {
            break;
        }
        nnz = 0;
        for (a, b) in f.words_mut().iter_mut().zip(prev[j as usize].words()) {
            *a |= b;
            nnz += a.count_ones() as usize;
        }
    }
    f
}

/// The `(n + c)`-node graph `[[G, B], [Bᵀ, 0]]`: every set bit of row `i`
/// becomes a unit edge between node `i` and pseudo-node `n + bit`.
pub fn augment_graph(g: &Graph, b: &DnaEncoding) -> Result<Graph> {
    if g.n() != b.n() {
        return Err(Error::Dimension(format!(
            "graph has {} nodes but encoding has {} rows",
            g.n(),
            b.n()
        )));
    }
    let n = g.n();
    let pseudo = (0..n).flat_map(|i| {
        b.row(i)
            .iter()
            .map(move |&bit| (i as u32, (n + bit as usize) as u32, 1.0))
    });
    Graph::from_edges(n + b.c(), g.edges().chain(pseudo))
}

/// `B` as an implicit n×c matrix of ones.
pub fn bipartite_view(b: &DnaEncoding) -> RatingsMatrix {
    let triples = (0..b.n()).flat_map(|i| {
        b.row(i).iter().map(move |&bit| Triple {
            user: i as u32,
            item: bit,
            rating: 1.0,
        })
    });
    RatingsMatrix::from_triples(b.n(), b.c(), FeedbackMode::Implicit, triples)
        .expect("encoding rows are sorted bit sets")
}
