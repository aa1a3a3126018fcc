mod common;

use cfrank::bloom::*;
use cfrank::graph::Graph;
use common::*;
use proptest::prelude::*;

#[test]
fn no_false_negatives_against_bfs() {
    for seed in 0..40 {
        for depth in 1..=3 {
            let t = dna_trial(seed, depth, 0.1);
            assert_eq!(t.false_negatives, 0, "seed {seed}, d={depth}");
        }
    }
}

#[test]
fn false_positive_rate_within_twice_configured() {
    let trials: Vec<DnaTrial> = (0..40).map(|s| dna_trial(1000 + s, 2, 0.1)).collect();
    let ok = trials.iter().filter(|t| t.fp_rate <= 2.0 * t.configured_fp).count();
    assert!(ok * 100 >= 95 * trials.len(), "{ok}/{}", trials.len());
}

#[test]
fn deep_encoding_of_connected_graph_covers_every_node() {
    let n = 12;
    let path = Graph::from_edges(n, (0..n as u32 - 1).map(|i| (i, i + 1, 1.0))).unwrap();
    let enc = dna_encode(&path, 256, 3, n, f64::INFINITY, 4).unwrap();
    for i in 0..n {
        for j in 0..n as u64 {
            assert!(enc.row_contains(i, j));
        }
    }
}

#[test]
fn rows_grow_monotonically_with_depth() {
    let mut g = cfrank::rng::seeded(3);
    let graph = random_graph(80, 0.04, false, &mut g);
    let mut prev: Option<DnaEncoding> = None;
    for depth in 0..4 {
        let enc = dna_encode(&graph, 200, 2, depth, f64::INFINITY, 1).unwrap();
        if let Some(p) = &prev {
            for i in 0..graph.n() {
                assert!(p.row(i).iter().all(|b| enc.row(i).binary_search(b).is_ok()));
            }
        }
        prev = Some(enc);
    }
}

#[test]
fn augmented_graph_block_structure() {
    let mut g = cfrank::rng::seeded(9);
    let graph = random_graph(30, 0.1, true, &mut g);
    let enc = dna_encode(&graph, 64, 2, 2, f64::INFINITY, 0).unwrap();
    let aug = augment_graph(&graph, &enc).unwrap();
    assert_eq!(aug.n(), 30 + 64);
    assert_eq!(aug.n_edges(), graph.n_edges() + enc.nnz());
    for i in 0..30 {
        let (nb, _) = aug.neighbors(i);
        let pseudo: Vec<u32> = nb.iter().filter(|&&b| b >= 30).map(|b| b - 30).collect();
        assert_eq!(pseudo, enc.row(i));
    }
}

proptest! {
    #[test]
    fn union_is_bitwise_or(xs in prop::collection::vec(any::<u64>(), 0..30), ys in prop::collection::vec(any::<u64>(), 0..30)) {
        let scheme = HashScheme::new(128, 3, 7).unwrap();
        let mut a = BloomFilter::new(scheme);
        let mut b = BloomFilter::new(scheme);
        xs.iter().for_each(|&x| a.add(x));
        ys.iter().for_each(|&y| b.add(y));
        let mut ab = a.clone();
        ab.union_with(&b).unwrap();
        for p in 0..128 {
            prop_assert_eq!(ab.bit(p), a.bit(p) || b.bit(p));
        }
        for x in xs.iter().chain(&ys) {
            prop_assert!(ab.contains(*x));
        }
    }
}
