//! Bloom filters and Graph DNA: multi-hop neighborhood sketches stacked into
//! a node × bit boolean matrix.

mod dna;
mod filter;

pub use dna::{augment_graph, bipartite_view, dna_encode, DnaEncoding};
pub use filter::{bloom_params, BloomFilter, HashScheme};
