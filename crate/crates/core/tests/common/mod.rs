#![allow(dead_code)]

use matching_skeleton::graph::{gen_random_bipartite, BipartiteGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 1000 graphs with `|P|, |Q| <= 12` and mixed densities.
pub fn small_corpus() -> Vec<BipartiteGraph> {
    (0..1000u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE ^ i);
            let p = rng.gen_range(1..=12);
            let q = rng.gen_range(0..=12);
            let prob = rng.gen_range(0.05..0.6);
            gen_random_bipartite(p, q, prob, i).unwrap()
        })
        .collect()
}

/// 100 graphs on 1000 + 1000 vertices, average degree between 0.5 and 6.
pub fn large_corpus() -> Vec<BipartiteGraph> {
    (0..100u64)
        .map(|i| {
            let prob = 0.0005 + 0.0055 * (i as f64) / 99.0;
            gen_random_bipartite(1000, 1000, prob, 7_000 + i).unwrap()
        })
        .collect()
}

/// Random graphs trimmed to at most 25 edges.
pub fn tiny_corpus() -> Vec<BipartiteGraph> {
    (0..1000u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF ^ i);
            let p = rng.gen_range(1..=9);
            let q = rng.gen_range(1..=9);
            let prob = rng.gen_range(0.1..0.7);
            let g = gen_random_bipartite(p, q, prob, 50_000 + i).unwrap();
            let mut kept = 0;
            g.filter_edges(|_| {
                kept += 1;
                kept <= 25
            })
        })
        .collect()
}
