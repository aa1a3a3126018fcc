//! Undirected weighted side-information graph.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng as _;

use crate::data::IdMap;
use crate::error::{Error, Result};
use crate::matrix::FactorTable;
use crate::rng::Rng;

/// Symmetric adjacency lists without self loops; each node's neighbors are
/// sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    ptr: Vec<usize>,
    nbr: Vec<u32>,
    wt: Vec<f64>,
}

impl Graph {
    /// Builds from undirected edges. Self loops are dropped; an edge listed
    /// more than once (in either direction) keeps its first weight.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32, f64)>) -> Result<Graph> {
        let mut seen: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for (a, b, w) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::Data(format!("edge ({a}, {b}) outside graph of {n} nodes")));
            }
            if !w.is_finite() {
                return Err(Error::Data(format!("edge ({a}, {b}) has non-finite weight")));
            }
            if a == b {
                continue;
            }
            seen.entry((a.min(b), a.max(b))).or_insert(w);
        }
        let mut directed: Vec<(u32, u32, f64)> = Vec::with_capacity(2 * seen.len());
        for (&(a, b), &w) in &seen {
            directed.push((a, b, w));
            directed.push((b, a, w));
        }
        Ok(Self::from_directed_sorted(n, directed))
    }

    fn from_directed_sorted(n: usize, mut directed: Vec<(u32, u32, f64)>) -> Graph {
        directed.sort_unstable_by_key(|&(a, b, _)| (a, b));
        let mut ptr = vec![0usize; n + 1];
        for &(a, _, _) in &directed {
            ptr[a as usize + 1] += 1;
        }
        for i in 0..n {
            ptr[i + 1] += ptr[i];
        }
        Graph {
            ptr,
            nbr: directed.iter().map(|e| e.1).collect(),
            wt: directed.iter().map(|e| e.2).collect(),
        }
    }

    pub fn empty(n: usize) -> Graph {
        Graph {
            ptr: vec![0; n + 1],
            nbr: Vec::new(),
            wt: Vec::new(),
        }
    }

    /// Erdős–Rényi graph: every unordered pair is an edge with probability `p`.
    pub fn erdos_renyi(n: usize, p: f64, rng: &mut Rng) -> Graph {
        let mut edges = Vec::new();
        if p > 0.0 {
            for a in 0..n {
                for b in a + 1..n {
                    if rng.random::<f64>() < p {
                        edges.push((a as u32, b as u32, 1.0));
                    }
                }
            }
        }
        Graph::from_edges(n, edges).expect("generated edges are in range")
    }

    pub fn n(&self) -> usize {
        self.ptr.len() - 1
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.nbr.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.ptr[i], self.ptr[i + 1]);
        (&self.nbr[a..b], &self.wt[a..b])
    }

    pub fn degree(&self, i: usize) -> usize {
        self.ptr[i + 1] - self.ptr[i]
    }

    /// Undirected edges `(a, b, w)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..self.n()).flat_map(move |a| {
            let (nb, wt) = self.neighbors(a);
            nb.iter()
                .zip(wt)
                .filter(move |(&b, _)| (a as u32) < b)
                .map(move |(&b, &w)| (a as u32, b, w))
        })
    }

    /// Same edges on `n` nodes (`n >= self.n()`); the extra nodes are isolated.
    pub fn with_nodes(&self, n: usize) -> Graph {
        assert!(n >= self.n());
        let mut ptr = self.ptr.clone();
        let last = *ptr.last().unwrap();
        ptr.resize(n + 1, last);
        Graph {
            ptr,
            nbr: self.nbr.clone(),
            wt: self.wt.clone(),
        }
    }

    /// `Σ_{edges} w‖u_a − u_b‖²`, which equals `trace(Uᵀ Lap U)` with
    /// `Lap = D − W` (each undirected edge counted once).
    pub fn laplacian_quadratic(&self, u: &FactorTable) -> f64 {
        self.edges()
            .map(|(a, b, w)| {
                let (ua, ub) = (u.row(a as usize), u.row(b as usize));
                w * ua.iter().zip(ub).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
            })
            .sum()
    }

    /// `out += scale · Lap U` row by row: `(Lap U)_a = Σ_b w_ab (u_a − u_b)`.
    pub fn add_laplacian_product(&self, u: &FactorTable, scale: f64, out: &mut FactorTable) {
        for a in 0..self.n() {
            let (nb, wt) = self.neighbors(a);
            if nb.is_empty() {
                continue;
            }
            let r = u.rank();
            let mut acc = vec![0.0; r];
            let ua = u.row(a);
            for (&b, &w) in nb.iter().zip(wt) {
                let ub = u.row(b as usize);
                for t in 0..r {
                    acc[t] += w * (ua[t] - ub[t]);
                }
            }
            let oa = out.row_mut(a);
            for t in 0..r {
                oa[t] += scale * acc[t];
            }
        }
    }

    /// `Σ_d weights[d-1] · G^d` with the diagonal removed, where `G^d` counts
    /// walks of length `d` (edge weights multiply along the walk).
    pub fn power_sum(&self, weights: &[f64]) -> Graph {
        let n = self.n();
        let mut total: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); n];
        // current[i] holds row i of G^d.
        let mut current: Vec<BTreeMap<u32, f64>> = (0..n)
            .map(|i| {
                let (nb, wt) = self.neighbors(i);
                nb.iter().copied().zip(wt.iter().copied()).collect()
            })
            .collect();
        for (d, &coef) in weights.iter().enumerate() {
            if d > 0 {
                current = current
                    .iter()
                    .map(|row| {
                        let mut next = BTreeMap::new();
                        for (&k, &x) in row {
                            let (nb, wt) = self.neighbors(k as usize);
                            for (&j, &w) in nb.iter().zip(wt) {
                                *next.entry(j).or_insert(0.0) += x * w;
                            }
                        }
                        next
                    })
                    .collect();
            }
            if coef == 0.0 {
                continue;
            }
            for (i, row) in current.iter().enumerate() {
                for (&j, &x) in row {
                    if j as usize != i {
                        *total[i].entry(j).or_insert(0.0) += coef * x;
                    }
                }
            }
        }
        let directed = total
            .into_iter()
            .enumerate()
            .flat_map(|(i, row)| row.into_iter().map(move |(j, w)| (i as u32, j, w)))
            .collect();
        Graph::from_directed_sorted(n, directed)
    }

    /// Edge list: one "a b w" line per undirected edge, node indices (or
    /// external ids when `ids` is given).
    pub fn write<W: Write>(&self, mut w: W, ids: Option<&IdMap>) -> Result<()> {
        writeln!(w, "# nodes {}", self.n())?;
        for (a, b, wt) in self.edges() {
            let (a, b) = match ids {
                Some(m) => (m.external(a), m.external(b)),
                None => (a as u64, b as u64),
            };
            writeln!(w, "{a} {b} {wt}")?;
        }
        Ok(())
    }

    /// Reads "u v [w]" lines. Without `ids`, node ids are indices and the node
    /// count is the larger of the `# nodes N` header and max id + 1. With
    /// `ids`, external ids are translated and edges touching unknown ids are
    /// skipped.
    pub fn read<R: BufRead>(r: R, ids: Option<&IdMap>) -> Result<Graph> {
        let mut edges = Vec::new();
        let mut declared = 0usize;
        let mut max_id = None::<u64>;
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("# nodes") {
                declared = rest
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(n + 1, "bad '# nodes' header"))?;
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if fields.len() != 2 && fields.len() != 3 {
                return Err(Error::parse(n + 1, "expected 'u v [w]'"));
            }
            let a: u64 = fields[0]
                .parse()
                .map_err(|_| Error::parse(n + 1, format!("bad node id '{}'", fields[0])))?;
            let b: u64 = fields[1]
                .parse()
                .map_err(|_| Error::parse(n + 1, format!("bad node id '{}'", fields[1])))?;
            let w: f64 = match fields.get(2) {
                Some(s) => s
                    .parse()
                    .map_err(|_| Error::parse(n + 1, format!("bad weight '{s}'")))?,
                None => 1.0,
            };
            match ids {
                Some(m) => {
                    if let (Some(a), Some(b)) = (m.get(a), m.get(b)) {
                        edges.push((a, b, w));
                    }
                }
                None => {
                    if a > u32::MAX as u64 || b > u32::MAX as u64 {
                        return Err(Error::parse(n + 1, "node index out of range"));
                    }
                    max_id = Some(max_id.unwrap_or(0).max(a).max(b));
                    edges.push((a as u32, b as u32, w));
                }
            }
        }
        let n = match ids {
            Some(m) => m.len(),
            None => declared.max(max_id.map_or(0, |m| m as usize + 1)),
        };
        Graph::from_edges(n, edges)
    }
}
