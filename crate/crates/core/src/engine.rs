//! The fit loop: bottom-up representation updates, taxonomy extension,
//! pivot-level assignment, and top-down K-means, repeated until the
//! level-weighted objective stops improving.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{pivot_step, AssignConfig};
use crate::corpus_io::{AssignmentRecord, Corpus, SeedSet};
use crate::error::{Error, Result};
use crate::geometry::{dist, sq_dist};
use crate::representation::{bottom_up_update, extend_all, init_topics, LesSource, TopicState, WmWeights};
use crate::taxonomy::{Taxonomy, TopicId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iters: usize,
    /// Outer loop stops once the relative objective decrease drops below this.
    pub rel_tol: f64,
    pub kmeans_max_iters: usize,
    pub kmeans_rel_tol: f64,
    /// Stop after the first pivot-level assignment without touching the
    /// unlabeled documents beyond it.
    pub unfit: bool,
    /// Add Other children. Turning this off gives the no-Other ablation.
    pub other_nodes: bool,
    pub wm: WmWeights,
    pub assign: AssignConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iters: 20,
            rel_tol: 1e-4,
            kmeans_max_iters: 100,
            kmeans_rel_tol: 1e-6,
            unfit: false,
            other_nodes: true,
            wm: WmWeights::default(),
            assign: AssignConfig::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.kmeans_max_iters == 0 {
            return Err(Error::ConfigInvalid("iteration caps must be positive".into()));
        }
        if !(self.rel_tol > 0.0) || !(self.kmeans_rel_tol > 0.0) {
            return Err(Error::ConfigInvalid("tolerances must be positive".into()));
        }
        if !(self.assign.alpha >= 1.0 && self.assign.alpha.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "alpha {} must be >= 1",
                self.assign.alpha
            )));
        }
        self.wm.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FittedModel {
    /// Extended with Other nodes.
    pub taxonomy: Taxonomy,
    pub states: Vec<TopicState>,
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    /// 1-based iteration whose state was kept.
    pub best_iteration: usize,
    pub config: FitConfig,
}

/// `Σ_topics Σ_{d ∈ δ} λ(topic)·‖d - rep‖²` over topics that have a rep.
pub fn objective(taxonomy: &Taxonomy, states: &[TopicState], corpus: &Corpus) -> f64 {
    let per_topic: Vec<f64> = (0..states.len())
        .into_par_iter()
        .map(|t| match &states[t].rep {
            Some(rep) => {
                let level = taxonomy.level(t) as f64;
                states[t]
                    .assigned
                    .iter()
                    .map(|&d| level * sq_dist(corpus.row(d), rep))
                    .sum()
            }
            None => 0.0,
        })
        .collect();
    per_topic.iter().sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    /// Ascending document indices per center.
    pub clusters: Vec<Vec<usize>>,
    pub centers: Vec<Vec<f64>>,
    /// Centroid updates performed.
    pub iterations: usize,
    /// Within-cluster sum of squares after each assignment step.
    pub trace: Vec<f64>,
}

/// Nearest center (earlier index on ties) with its squared distance, and
/// the squared distance to the runner-up.
fn nearest2(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64, f64) {
    let (mut best, mut d1, mut d2) = (0, f64::INFINITY, f64::INFINITY);
    for (k, c) in centers.iter().enumerate() {
        let d = sq_dist(x, c);
        if d < d1 {
            (best, d1, d2) = (k, d, d1);
        } else if d < d2 {
            d2 = d;
        }
    }
    (best, d1, d2)
}

// Distance bounds carry rounding; a skip needs this much room.
const MARGIN: f64 = 1e-9;

/// Per-document Hamerly bounds: `upper` on the distance to its center,
/// `lower` on the distance to every other center.
#[derive(Clone, Copy)]
struct Bound {
    label: usize,
    upper: f64,
    lower: f64,
}

/// Running sums over one cluster's documents: raw coordinates for the
/// centroid, coordinates and squared norms relative to a reference
/// document for the cost.
#[derive(Clone)]
struct Members {
    raw: Vec<f64>,
    rel: Vec<f64>,
    sq: f64,
    n: usize,
}

impl Members {
    fn new(dim: usize) -> Self {
        Members {
            raw: vec![0.0; dim],
            rel: vec![0.0; dim],
            sq: 0.0,
            n: 0,
        }
    }
}

/// Lloyd iterations over `docs`, starting from `init`.
///
/// Stops when labels stop changing or the relative decrease of the
/// within-cluster sum of squares falls below `rel_tol`. Ties go to the
/// earlier center; an emptied cluster keeps its previous center.
///
/// A document is only left in place when its distance bounds prove the
/// center nearest with room to spare; every other case runs the full scan,
/// so labels match plain Lloyd on the same centers. Cluster sums move with the
/// documents that change label, and the cost comes from them in closed
/// form, so late iterations touching few documents are cheap.
pub fn kmeans_subtree(
    docs: &[usize],
    corpus: &Corpus,
    init: &[Vec<f64>],
    max_iters: usize,
    rel_tol: f64,
) -> KMeansResult {
    let k = init.len();
    let mut centers = init.to_vec();
    if docs.is_empty() || k == 0 {
        return KMeansResult {
            clusters: vec![Vec::new(); k],
            centers,
            iterations: 0,
            trace: Vec::new(),
        };
    }
    let dim = corpus.dim();
    // the cost uses sums relative to one document so it does not cancel
    // far from the origin
    let origin = corpus.row(docs[0]).to_vec();
    let centered = |d: usize| corpus.row(d).iter().zip(&origin).map(|(x, o)| x - o);
    let norms: Vec<f64> = docs.iter().map(|&d| centered(d).map(|v| v * v).sum()).collect();

    let scan: Vec<(usize, f64, f64)> = docs.par_iter().map(|&d| nearest2(corpus.row(d), &centers)).collect();
    let mut bounds: Vec<Bound> = scan
        .iter()
        .map(|&(label, d1, d2)| Bound {
            label,
            upper: d1.sqrt(),
            lower: d2.sqrt(),
        })
        .collect();
    let mut trace = vec![scan.iter().map(|s| s.1).sum::<f64>()];
    let mut members = vec![Members::new(dim); k];
    let move_doc = |i: usize, m: &mut Members, sign: f64| {
        let d = docs[i];
        for ((r, c), (x, v)) in m
            .raw
            .iter_mut()
            .zip(&mut m.rel)
            .zip(corpus.row(d).iter().zip(centered(d)))
        {
            *r += sign * x;
            *c += sign * v;
        }
        m.sq += sign * norms[i];
        if sign > 0.0 {
            m.n += 1;
        } else {
            m.n -= 1;
            if m.n == 0 {
                *m = Members::new(dim);
            }
        }
    };
    for (i, b) in bounds.iter().enumerate() {
        move_doc(i, &mut members[b.label], 1.0);
    }
    // centroids from the sums; returns how far each center moved
    let update = |centers: &mut [Vec<f64>], members: &[Members]| -> Vec<f64> {
        let mut moved = vec![0.0; k];
        for (j, m) in members.iter().enumerate() {
            if m.n > 0 {
                let c: Vec<f64> = m.raw.iter().map(|s| s / m.n as f64).collect();
                moved[j] = dist(&c, &centers[j]);
                centers[j] = c;
            }
        }
        moved
    };

    let mut iterations = 0;
    while iterations < max_iters {
        let moved = update(&mut centers, &members);
        iterations += 1;
        // largest move among the other centers, per label
        let mut top = (0, 0.0, 0.0);
        for (j, &m) in moved.iter().enumerate() {
            if m > top.1 {
                top = (j, m, top.1);
            } else if m > top.2 {
                top.2 = m;
            }
        }
        let half_gap: Vec<f64> = (0..k)
            .map(|j| {
                (0..k)
                    .filter(|&o| o != j)
                    .map(|o| dist(&centers[j], &centers[o]))
                    .fold(f64::INFINITY, f64::min)
                    / 2.0
            })
            .collect();
        let previous: Vec<usize> = bounds.iter().map(|b| b.label).collect();
        bounds.par_iter_mut().zip(docs.par_iter()).for_each(|(b, &d)| {
            b.upper += moved[b.label];
            b.lower -= if b.label == top.0 { top.2 } else { top.1 };
            let room = half_gap[b.label].max(b.lower) * (1.0 - MARGIN);
            if b.upper * (1.0 + MARGIN) < room {
                return;
            }
            b.upper = dist(corpus.row(d), &centers[b.label]);
            if b.upper * (1.0 + MARGIN) < room {
                return;
            }
            let (label, d1, d2) = nearest2(corpus.row(d), &centers);
            *b = Bound {
                label,
                upper: d1.sqrt(),
                lower: d2.sqrt(),
            };
        });
        let mut changed = 0;
        for (i, (b, &was)) in bounds.iter().zip(&previous).enumerate() {
            if b.label != was {
                changed += 1;
                move_doc(i, &mut members[was], -1.0);
                move_doc(i, &mut members[b.label], 1.0);
            }
        }
        // Σ‖x - c‖² = Σ‖x‖² - 2 c·Σx + n‖c‖², all about the reference
        let cost: f64 = centers
            .iter()
            .zip(&members)
            .map(|(c, m)| {
                let c: Vec<f64> = c.iter().zip(&origin).map(|(c, o)| c - o).collect();
                let cs: f64 = c.iter().zip(&m.rel).map(|(a, b)| a * b).sum();
                let cc: f64 = c.iter().map(|a| a * a).sum();
                (m.sq - 2.0 * cs + m.n as f64 * cc).max(0.0)
            })
            .sum();
        let prev = *trace.last().expect("non-empty");
        trace.push(cost);
        if changed == 0 {
            break;
        }
        if prev - cost <= rel_tol * prev {
            // labels moved a little: settle centers on them
            update(&mut centers, &members);
            break;
        }
    }
    let mut clusters = vec![Vec::new(); k];
    for (&d, b) in docs.iter().zip(&bounds) {
        clusters[b.label].push(d);
    }
    KMeansResult {
        clusters,
        centers,
        iterations,
        trace,
    }
}

/// E/M top-down: for each level from the pivot down, split every topic's
/// assigned set among its children and move the children to the centroids.
fn top_down(taxonomy: &Taxonomy, states: &mut [TopicState], corpus: &Corpus, cfg: &FitConfig) -> Result<()> {
    for level in taxonomy.pivot()..taxonomy.height() {
        for t in taxonomy.topics_at_level(level)? {
            let children = taxonomy.children(t).to_vec();
            if children.is_empty() {
                continue;
            }
            let init: Vec<Vec<f64>> = children
                .iter()
                .map(|&c| {
                    states[c]
                        .rep
                        .clone()
                        .ok_or_else(|| Error::NoRepresentation(taxonomy.id(c).to_string()))
                })
                .collect::<Result<_>>()?;
            let km = kmeans_subtree(
                &states[t].assigned,
                corpus,
                &init,
                cfg.kmeans_max_iters,
                cfg.kmeans_rel_tol,
            );
            for ((&c, cluster), center) in children.iter().zip(km.clusters).zip(km.centers) {
                states[c].assigned = cluster;
                states[c].rep = Some(center);
            }
        }
    }
    Ok(())
}

/// Topics above the pivot get the union of their pivot-level descendants.
fn derive_upper_sets(taxonomy: &Taxonomy, states: &mut [TopicState]) -> Result<()> {
    let pivot = taxonomy.pivot();
    for level in (0..pivot).rev() {
        for t in taxonomy.topics_at_level(level)? {
            let mut u: Vec<usize> = taxonomy
                .children(t)
                .iter()
                .flat_map(|&c| states[c].assigned.iter().copied())
                .collect();
            u.sort_unstable();
            u.dedup();
            states[t].assigned = u;
        }
    }
    Ok(())
}

fn clear_assignments(states: &mut [TopicState]) {
    for s in states {
        s.assigned.clear();
    }
}

/// Fit `corpus` to `taxonomy` from `seeds`.
pub fn fit(corpus: &Corpus, taxonomy: &Taxonomy, seeds: &SeedSet, cfg: &FitConfig) -> Result<FittedModel> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(d) = seeds.dim() {
        if d != corpus.dim() {
            return Err(Error::dim_mismatch("seed vectors", corpus.dim(), d));
        }
    }
    if taxonomy.topics_at_level(taxonomy.pivot())?.is_empty() {
        return Err(Error::NoPivotTopics);
    }
    let mut taxonomy = taxonomy.clone();
    let mut states = init_topics(&taxonomy, seeds)?;

    if cfg.unfit {
        bottom_up_update(&taxonomy, &mut states, &cfg.wm, LesSource::Disabled)?;
        if cfg.other_nodes {
            extend_all(&mut taxonomy, &mut states, LesSource::Disabled)?;
        }
        pivot_step(&taxonomy, &mut states, Some(seeds), corpus, &cfg.assign)?;
        let value = objective(&taxonomy, &states, corpus);
        derive_upper_sets(&taxonomy, &mut states)?;
        return Ok(FittedModel {
            taxonomy,
            states,
            objective_trace: vec![value],
            iterations_run: 1,
            best_iteration: 1,
            config: cfg.clone(),
        });
    }

    let les = LesSource::Corpus(corpus);
    let mut trace: Vec<f64> = Vec::new();
    let mut best: Option<(f64, usize, Taxonomy, Vec<TopicState>)> = None;
    for iter in 1..=cfg.max_iters {
        bottom_up_update(&taxonomy, &mut states, &cfg.wm, les)?;
        if cfg.other_nodes {
            extend_all(&mut taxonomy, &mut states, les)?;
        }
        // δ below the pivot is rebuilt from scratch by the top-down pass
        clear_assignments(&mut states);
        pivot_step(&taxonomy, &mut states, Some(seeds), corpus, &cfg.assign)?;
        top_down(&taxonomy, &mut states, corpus, cfg)?;
        let value = objective(&taxonomy, &states, corpus);
        let prev = trace.last().copied();
        trace.push(value);
        if best.as_ref().is_none_or(|b| value < b.0) {
            best = Some((value, iter, taxonomy.clone(), states.clone()));
        }
        match prev {
            Some(p) if value > p => break,
            Some(p) if p - value < cfg.rel_tol * p => break,
            None if value == 0.0 => break,
            _ => {}
        }
    }
    let (_, best_iteration, taxonomy, mut states) = best.expect("max_iters >= 1");
    derive_upper_sets(&taxonomy, &mut states)?;
    Ok(FittedModel {
        taxonomy,
        states,
        iterations_run: trace.len(),
        objective_trace: trace,
        best_iteration,
        config: cfg.clone(),
    })
}

impl FittedModel {
    pub fn rep(&self, topic: usize) -> Option<&[f64]> {
        self.states[topic].rep.as_deref()
    }

    pub fn threshold(&self, topic: usize) -> Option<f64> {
        self.states[topic].threshold
    }

    pub fn dim(&self) -> Option<usize> {
        self.states.iter().find_map(|s| s.rep.as_ref().map(Vec::len))
    }

    /// Path for one vector: the nearest pivot topic whose sphere contains it,
    /// then the nearest child at every level down to a leaf.
    pub fn infer_one(&self, x: &[f64]) -> (Vec<TopicId>, BTreeMap<TopicId, f64>) {
        let t = &self.taxonomy;
        let pivots = t.topics_at_level(t.pivot()).unwrap_or_default();
        let mut start: Option<(usize, f64)> = None;
        for p in pivots {
            let (Some(rep), Some(tau)) = (self.rep(p), self.threshold(p)) else {
                continue;
            };
            let d = dist(x, rep);
            if d <= tau && start.is_none_or(|s| d < s.1) {
                start = Some((p, d));
            }
        }
        let Some((mut cur, d0)) = start else {
            return (vec![TopicId::none()], BTreeMap::new());
        };
        let mut path = vec![t.id(cur).clone()];
        let mut distances = BTreeMap::from([(t.id(cur).clone(), d0)]);
        loop {
            let mut next: Option<(usize, f64)> = None;
            for &c in t.children(cur) {
                if let Some(rep) = self.rep(c) {
                    let d = dist(x, rep);
                    if next.is_none_or(|n| d < n.1) {
                        next = Some((c, d));
                    }
                }
            }
            let Some((c, d)) = next else { break };
            path.push(t.id(c).clone());
            distances.insert(t.id(c).clone(), d);
            cur = c;
        }
        (path, distances)
    }
}

/// Assign every document of `docs` to a path through the fitted taxonomy.
pub fn infer(model: &FittedModel, docs: &Corpus) -> Result<Vec<AssignmentRecord>> {
    if let Some(d) = model.dim() {
        if d != docs.dim() {
            return Err(Error::dim_mismatch("documents vs model", d, docs.dim()));
        }
    }
    Ok((0..docs.len())
        .into_par_iter()
        .map(|i| {
            let (path, distances) = model.infer_one(docs.row(i));
            AssignmentRecord {
                doc: docs.id(i).clone(),
                path,
                distances,
            }
        })
        .collect())
}
