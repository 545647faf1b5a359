#![allow(dead_code)]

use hierseed::corpus_io::{Corpus, DocId};
use hierseed::synth::{generate, SynthConfig, SynthData};
use hierseed::taxonomy::{NodeEntry, TaxonomyFile};
use hierseed::{SeedSet, Taxonomy};
use proptest::prelude::*;
use proptest::test_runner::FileFailurePersistence;

pub mod oracle;

/// `n` cases, with failing seeds saved next to the test file.
pub fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: Some(Box::new(FileFailurePersistence::WithSource("regressions"))),
        ..ProptestConfig::default()
    }
}

/// Tree built breadth-first: node `k` (in creation order) gets
/// `branch[k % branch.len()]` children until `depth` is reached.
pub fn tree_file(depth: usize, branch: &[usize], pivot: usize) -> TaxonomyFile {
    let mut nodes = vec![NodeEntry {
        id: "r".into(),
        parent: None,
    }];
    let mut frontier = vec!["r".to_string()];
    let mut k = 0;
    for _ in 0..depth {
        let mut next = Vec::new();
        for p in &frontier {
            let b = branch[k % branch.len()];
            k += 1;
            for c in 0..b {
                let id = format!("{p}.{c}");
                nodes.push(NodeEntry {
                    id: id.clone(),
                    parent: Some(p.clone()),
                });
                next.push(id);
            }
        }
        frontier = next;
    }
    TaxonomyFile {
        pivot: Some(pivot),
        nodes,
    }
}

pub fn arb_taxonomy() -> impl Strategy<Value = Taxonomy> {
    (1usize..=3, prop::collection::vec(1usize..=3, 1..6))
        .prop_flat_map(|(depth, branch)| (Just(depth), Just(branch), 1..=depth))
        .prop_map(|(depth, branch, pivot)| Taxonomy::from_file(&tree_file(depth, &branch, pivot), None).unwrap())
}

pub fn corpus(rows: &[Vec<f64>]) -> Corpus {
    Corpus::from_rows(
        rows.first().map_or(1, Vec::len),
        rows.iter()
            .enumerate()
            .map(|(i, r)| (DocId::new(format!("d{i}")), r.clone())),
    )
    .unwrap()
}

/// Small random synthetic instance for pipeline-level properties.
pub fn arb_synth() -> impl Strategy<Value = SynthConfig> {
    (
        2usize..=5,
        2usize..=3,
        2usize..=3,
        4usize..=12,
        0.1f64..1.5,
        0.0f64..0.6,
        any::<u64>(),
    )
        .prop_map(|(dim, b0, b1, docs, noise, imbalance, seed)| SynthConfig {
            dim,
            depth: 2,
            branching: vec![b0, b1],
            docs_per_leaf: docs,
            level_scale: vec![10.0, 3.0],
            noise_sigma: noise,
            imbalance,
            holdout_prob: 0.0,
            seeds_per_topic: 2,
            rng_seed: seed,
            pivot: 1,
        })
}

pub struct Instance {
    pub data: SynthData,
    pub taxonomy: Taxonomy,
    pub seeds: SeedSet,
}

pub fn instance(cfg: &SynthConfig) -> Instance {
    let data = generate(cfg).unwrap();
    let taxonomy = Taxonomy::from_file(&data.taxonomy, None).unwrap();
    let seeds = SeedSet::resolve(&data.seeds, &taxonomy, &data.seed_vectors).unwrap();
    Instance { data, taxonomy, seeds }
}

/// Median wall time of `f` over `reps` runs, in seconds.
pub fn median_secs(reps: usize, mut f: impl FnMut()) -> f64 {
    let mut v: Vec<f64> = (0..reps)
        .map(|_| {
            let t = std::time::Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .collect();
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}
