//! Seeded synthetic corpora: Gaussian blobs at the leaves of a random
//! taxonomy, with knobs for imbalance and held-out subtopics.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded through
//! `SeedableRng::seed_from_u64`; normal draws use `rand_distr::StandardNormal`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus_io::{encode_binary, write_atomic, write_pairs, Corpus, DocId};
use crate::error::{Error, Result};
use crate::geometry::norm;
use crate::taxonomy::{NodeEntry, TaxonomyFile, TopicId};

pub const GENERATOR: &str = "hierseed-synth/1 chacha8 seed_from_u64 standard-normal";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub dim: usize,
    pub depth: usize,
    /// Children per parent at each level, root first.
    pub branching: Vec<usize>,
    pub docs_per_leaf: usize,
    /// Distance from a parent center to its children at each level.
    pub level_scale: Vec<f64>,
    pub noise_sigma: f64,
    /// Fraction of each parent's children whose directions share a bias.
    pub imbalance: f64,
    /// Chance that a leaf is dropped from the emitted taxonomy.
    pub holdout_prob: f64,
    pub seeds_per_topic: usize,
    pub rng_seed: u64,
    /// Pivot level written into the taxonomy file.
    pub pivot: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dim: 16,
            depth: 2,
            branching: vec![3, 3],
            docs_per_leaf: 200,
            level_scale: vec![10.0, 3.0],
            noise_sigma: 0.3,
            imbalance: 0.0,
            holdout_prob: 0.0,
            seeds_per_topic: 4,
            rng_seed: 0,
            pivot: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.dim == 0 || self.depth == 0 || self.docs_per_leaf == 0 || self.seeds_per_topic == 0 {
            return bad("dim, depth, docs_per_leaf and seeds_per_topic must be positive".into());
        }
        if self.branching.len() != self.depth || self.level_scale.len() != self.depth {
            return bad(format!("branching and level_scale need {} entries", self.depth));
        }
        if self.branching.contains(&0) {
            return bad("branching entries must be positive".into());
        }
        if self.level_scale.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return bad("level_scale entries must be positive".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be non-negative".into());
        }
        for (name, v) in [("imbalance", self.imbalance), ("holdout_prob", self.holdout_prob)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1]"));
            }
        }
        if self.pivot < 1 || self.pivot > self.depth {
            return bad(format!("pivot {} outside 1..={}", self.pivot, self.depth));
        }
        let leaves: usize = self.branching.iter().product();
        if leaves.checked_mul(self.docs_per_leaf).is_none_or(|n| n > 50_000_000) {
            return bad("corpus too large".into());
        }
        if self.seeds_per_topic > self.docs_per_leaf {
            return bad("seeds_per_topic exceeds docs_per_leaf".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SynthNode {
    pub id: TopicId,
    pub parent: Option<usize>,
    pub level: usize,
    pub center: Vec<f64>,
    pub held_out: bool,
}

/// Generated data, in memory. Vectors are already rounded to `f32` so they
/// match what the binary files hold.
#[derive(Clone, Debug)]
pub struct SynthData {
    pub config: SynthConfig,
    /// Every generated topic, held-out ones included, in preorder.
    pub nodes: Vec<SynthNode>,
    pub taxonomy: TaxonomyFile,
    /// Fitting documents (seeds removed).
    pub corpus: Corpus,
    pub seed_vectors: Corpus,
    pub seeds: Vec<(DocId, TopicId)>,
    /// Leaf label per fitting document, or `<parent>::other` when held out.
    pub gold: Vec<(DocId, TopicId)>,
    /// Generating leaf (node index) per fitting document.
    pub source_leaf: Vec<usize>,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

fn round_f32(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = *x as f32 as f64);
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut nodes = vec![SynthNode {
        id: TopicId::new("root"),
        parent: None,
        level: 0,
        center: vec![0.0; cfg.dim],
        held_out: false,
    }];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];

    // centers, preorder
    let mut stack = vec![0usize];
    let mut order = Vec::new();
    while let Some(p) = stack.pop() {
        order.push(p);
        let level = nodes[p].level;
        if level == cfg.depth {
            continue;
        }
        let k = cfg.branching[level];
        let biased = (cfg.imbalance * k as f64).round() as usize;
        let bias = unit(gaussian(&mut rng, cfg.dim));
        let mut kids = Vec::with_capacity(k);
        for j in 0..k {
            let g = unit(gaussian(&mut rng, cfg.dim));
            let pulled: Vec<f64> = bias.iter().zip(&g).map(|(b, x)| b + x).collect();
            // opposite unit vectors cancel (always possible in 1-D)
            let dir = if j < biased && norm(&pulled) > 1e-9 {
                unit(pulled)
            } else {
                g
            };
            let center: Vec<f64> = nodes[p]
                .center
                .iter()
                .zip(&dir)
                .map(|(c, d)| c + cfg.level_scale[level] * d)
                .collect();
            let name = if p == 0 {
                format!("t{j}")
            } else {
                format!("{}.{j}", nodes[p].id)
            };
            nodes.push(SynthNode {
                id: TopicId::new(name),
                parent: Some(p),
                level: level + 1,
                center,
                held_out: false,
            });
            children.push(Vec::new());
            kids.push(nodes.len() - 1);
        }
        children[p] = kids.clone();
        stack.extend(kids.into_iter().rev());
    }
    let nodes_pre: Vec<usize> = order;

    // held-out leaves; each parent keeps its first child if all would go
    if cfg.holdout_prob > 0.0 {
        for &p in &nodes_pre {
            let kids = &children[p];
            if kids.is_empty() || nodes[kids[0]].level != cfg.depth {
                continue;
            }
            let drops: Vec<bool> = kids.iter().map(|_| rng.random::<f64>() < cfg.holdout_prob).collect();
            let all = drops.iter().all(|&d| d);
            for (i, (&c, d)) in kids.iter().zip(drops).enumerate() {
                nodes[c].held_out = d && !(all && i == 0);
            }
        }
    }

    // documents
    let mut docs: Vec<(DocId, Vec<f64>, usize)> = Vec::new();
    let mut docs_of: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for &leaf in &nodes_pre {
        if nodes[leaf].level != cfg.depth {
            continue;
        }
        for _ in 0..cfg.docs_per_leaf {
            let noise = gaussian(&mut rng, cfg.dim);
            let mut v: Vec<f64> = nodes[leaf]
                .center
                .iter()
                .zip(&noise)
                .map(|(c, n)| c + cfg.noise_sigma * n)
                .collect();
            round_f32(&mut v);
            let idx = docs.len();
            docs.push((DocId::new(format!("d{idx:07}")), v, leaf));
            let mut a = Some(leaf);
            while let Some(n) = a {
                docs_of[n].push(idx);
                a = nodes[n].parent;
            }
        }
    }

    // seeds for emitted topics at or below the pivot
    let mut seeds = Vec::new();
    let mut seed_docs = BTreeSet::new();
    for &t in &nodes_pre {
        if nodes[t].level < cfg.pivot || nodes[t].held_out {
            continue;
        }
        let pool = &docs_of[t];
        for i in sample(&mut rng, pool.len(), cfg.seeds_per_topic.min(pool.len())).into_vec() {
            let d = pool[i];
            seeds.push((docs[d].0.clone(), nodes[t].id.clone()));
            seed_docs.insert(d);
        }
    }

    let mut corpus = Corpus::new(cfg.dim);
    let mut seed_vectors = Corpus::new(cfg.dim);
    let mut gold = Vec::new();
    let mut source_leaf = Vec::new();
    for (i, (id, v, leaf)) in docs.iter().enumerate() {
        if seed_docs.contains(&i) {
            seed_vectors.push(id.clone(), v)?;
            continue;
        }
        corpus.push(id.clone(), v)?;
        let label = if nodes[*leaf].held_out {
            TopicId::other_of(&nodes[nodes[*leaf].parent.expect("leaves have parents")].id)
        } else {
            nodes[*leaf].id.clone()
        };
        gold.push((id.clone(), label));
        source_leaf.push(*leaf);
    }

    let taxonomy = TaxonomyFile {
        pivot: Some(cfg.pivot),
        nodes: nodes_pre
            .iter()
            .filter(|&&n| !nodes[n].held_out)
            .map(|&n| NodeEntry {
                id: nodes[n].id.to_string(),
                parent: nodes[n].parent.map(|p| nodes[p].id.to_string()),
            })
            .collect(),
    };
    let nodes = nodes_pre
        .iter()
        .map(|&n| {
            let mut s = nodes[n].clone();
            s.parent = s
                .parent
                .map(|p| nodes_pre.iter().position(|&q| q == p).expect("parent visited"));
            s
        })
        .collect::<Vec<_>>();
    let remap: BTreeMap<usize, usize> = nodes_pre.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let source_leaf = source_leaf.into_iter().map(|l| remap[&l]).collect();

    Ok(SynthData {
        config: cfg.clone(),
        nodes,
        taxonomy,
        corpus,
        seed_vectors,
        seeds,
        gold,
        source_leaf,
    })
}

#[derive(Serialize)]
struct Summary<'a> {
    generator: &'a str,
    config: &'a SynthConfig,
    n_fitting_docs: usize,
    n_seed_docs: usize,
    held_out: Vec<&'a TopicId>,
    centers: BTreeMap<&'a TopicId, &'a [f64]>,
}

#[derive(Serialize)]
struct TaxonomyOut<'a> {
    generator: &'a str,
    #[serde(flatten)]
    file: &'a TaxonomyFile,
}

pub const FILES: [&str; 6] = [
    "taxonomy.json",
    "embeddings.bin",
    "seed_embeddings.bin",
    "seeds.tsv",
    "gold.tsv",
    "synth.json",
];

/// Write the generated files into `dir` (created if missing).
pub fn write_to_dir(data: &SynthData, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let header = format!("generator: {GENERATOR}; rng_seed {}", data.config.rng_seed);
    let mut tax = serde_json::to_string_pretty(&TaxonomyOut {
        generator: GENERATOR,
        file: &data.taxonomy,
    })?;
    tax.push('\n');
    let summary = Summary {
        generator: GENERATOR,
        config: &data.config,
        n_fitting_docs: data.corpus.len(),
        n_seed_docs: data.seed_vectors.len(),
        held_out: data.nodes.iter().filter(|n| n.held_out).map(|n| &n.id).collect(),
        centers: data.nodes.iter().map(|n| (&n.id, n.center.as_slice())).collect(),
    };
    let mut summary = serde_json::to_string_pretty(&summary)?;
    summary.push('\n');
    let contents: [Vec<u8>; 6] = [
        tax.into_bytes(),
        encode_binary(&data.corpus)?,
        encode_binary(&data.seed_vectors)?,
        write_pairs(Some(&header), &data.seeds).into_bytes(),
        write_pairs(Some(&header), &data.gold).into_bytes(),
        summary.into_bytes(),
    ];
    for (name, bytes) in FILES.iter().zip(contents) {
        write_atomic(&dir.join(name), &bytes)?;
    }
    Ok(())
}
