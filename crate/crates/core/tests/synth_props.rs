mod common;

use std::collections::BTreeSet;

use hierseed::corpus_io::{load_embeddings, load_gold, load_seeds, EmbeddingFormat};
use hierseed::geometry::{dist, sq_dist};
use hierseed::synth::{generate, write_to_dir, SynthConfig, FILES};
use hierseed::{Taxonomy, TopicId};
use proptest::prelude::*;

fn arb_config() -> impl Strategy<Value = SynthConfig> {
    (1usize..=3, 1usize..=8)
        .prop_flat_map(|(depth, docs)| {
            (
                1usize..=6,
                Just(depth),
                prop::collection::vec(1usize..=3, depth),
                Just(docs),
                prop::collection::vec(0.5f64..20.0, depth),
                0.0f64..2.0,
                0.0f64..=1.0,
                prop_oneof![Just(0.0), 0.0f64..=1.0],
                1..=docs,
                any::<u64>(),
                1..=depth,
            )
        })
        .prop_map(
            |(
                dim,
                depth,
                branching,
                docs_per_leaf,
                level_scale,
                noise_sigma,
                imbalance,
                holdout_prob,
                seeds_per_topic,
                rng_seed,
                pivot,
            )| SynthConfig {
                dim,
                depth,
                branching,
                docs_per_leaf,
                level_scale,
                noise_sigma,
                imbalance,
                holdout_prob,
                seeds_per_topic,
                rng_seed,
                pivot,
            },
        )
}

proptest! {
    #![proptest_config(common::cases(100))]

    #[test]
    fn emitted_files_validate(cfg in arb_config()) {
        let data = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_to_dir(&data, dir.path()).unwrap();

        let t = Taxonomy::load(dir.path().join("taxonomy.json")).unwrap();
        prop_assert_eq!(&t, &Taxonomy::from_file(&data.taxonomy, None).unwrap());
        prop_assert_eq!(t.pivot(), cfg.pivot);
        let corpus = load_embeddings(dir.path().join("embeddings.bin"), EmbeddingFormat::Binary).unwrap();
        let seed_vectors = load_embeddings(dir.path().join("seed_embeddings.bin"), EmbeddingFormat::Binary).unwrap();
        prop_assert_eq!(&corpus, &data.corpus);
        prop_assert_eq!(&seed_vectors, &data.seed_vectors);
        let seeds = load_seeds(dir.path().join("seeds.tsv"), &t, &seed_vectors).unwrap();
        let gold = load_gold(dir.path().join("gold.tsv"), &t.with_all_others()).unwrap();

        // every emitted topic at or below the pivot has seeds, none above
        for i in 0..t.len() {
            let n = seeds.get(t.id(i)).map_or(0, <[_]>::len);
            if t.level(i) >= cfg.pivot {
                prop_assert!(n >= 1 && n <= cfg.seeds_per_topic, "{}: {n} seeds", t.id(i));
            } else {
                prop_assert_eq!(n, 0);
            }
        }

        // documents: seeds are removed, the rest carry exactly one gold label
        let leaves: usize = cfg.branching.iter().product();
        prop_assert_eq!(corpus.len() + seed_vectors.len(), leaves * cfg.docs_per_leaf);
        let fit_ids: BTreeSet<_> = corpus.ids().iter().collect();
        prop_assert!(seed_vectors.ids().iter().all(|id| !fit_ids.contains(id)));
        prop_assert_eq!(gold.keys().collect::<BTreeSet<_>>(), fit_ids);
        prop_assert!(gold.values().all(|s| s.len() == 1));

        for (k, (id, label)) in data.gold.iter().enumerate() {
            let leaf = &data.nodes[data.source_leaf[k]];
            prop_assert_eq!(leaf.level, cfg.depth);
            prop_assert_eq!(id, &corpus.ids()[k]);
            let want = if leaf.held_out {
                TopicId::other_of(&data.nodes[leaf.parent.unwrap()].id)
            } else {
                leaf.id.clone()
            };
            prop_assert_eq!(label, &want);
        }
        if cfg.holdout_prob == 0.0 {
            prop_assert!(data.gold.iter().all(|(_, l)| !l.is_other()));
        }

        // geometry: children on a sphere of radius level_scale around the parent
        for n in &data.nodes {
            if let Some(p) = n.parent {
                let r = dist(&n.center, &data.nodes[p].center);
                let want = cfg.level_scale[n.level - 1];
                prop_assert!((r - want).abs() <= 1e-9 * want, "{r} vs {want}");
            }
        }
        // holdout never empties a parent
        for (p, _) in data.nodes.iter().enumerate() {
            let kids: Vec<_> = data.nodes.iter().filter(|n| n.parent == Some(p)).collect();
            prop_assert!(kids.is_empty() || kids.iter().any(|n| !n.held_out));
        }
    }

    #[test]
    fn same_seed_same_files(cfg in arb_config()) {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write_to_dir(&generate(&cfg).unwrap(), a.path()).unwrap();
        write_to_dir(&generate(&cfg).unwrap(), b.path()).unwrap();
        for name in FILES {
            let x = std::fs::read(a.path().join(name)).unwrap();
            let y = std::fs::read(b.path().join(name)).unwrap();
            prop_assert!(x == y, "{name} differs");
        }
    }

    #[test]
    fn small_noise_is_separable(cfg in arb_config()) {
        let min_scale = cfg.level_scale.iter().cloned().fold(f64::INFINITY, f64::min);
        let cfg = SynthConfig { noise_sigma: 1e-3 * min_scale, ..cfg };
        let data = generate(&cfg).unwrap();
        let leaves: Vec<usize> = (0..data.nodes.len()).filter(|&i| data.nodes[i].level == cfg.depth).collect();
        // random directions can put two leaves arbitrarily close; the
        // guarantee needs their gap to dominate the noise
        let gap = leaves
            .iter()
            .flat_map(|&a| leaves.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
            .map(|(a, b)| dist(&data.nodes[a].center, &data.nodes[b].center))
            .fold(f64::INFINITY, f64::min);
        let reach = cfg.noise_sigma * ((cfg.dim as f64).sqrt() + 6.0);
        prop_assume!(gap > 2.0 * reach);
        for (k, &src) in data.source_leaf.iter().enumerate() {
            let x = data.corpus.row(k);
            let nearest = leaves
                .iter()
                .copied()
                .min_by(|&a, &b| sq_dist(x, &data.nodes[a].center).total_cmp(&sq_dist(x, &data.nodes[b].center)))
                .unwrap();
            prop_assert_eq!(nearest, src);
        }
    }
}
