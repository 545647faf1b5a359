//! Pivot-level thresholds, distance-based assignment, and overlap resolution.

use std::fmt;

use rayon::prelude::*;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::corpus_io::{Corpus, SeedSet};
use crate::error::{Error, Result};
use crate::geometry::dist;
use crate::representation::TopicState;
use crate::taxonomy::Taxonomy;

/// How documents shared by two pivot topics are resolved.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Eccentricity {
    /// Per-pair default setting: each shared document stays with its nearer
    /// topic only.
    #[default]
    Nearest,
    /// The same eccentricity for every topic.
    Fixed(f64),
}

impl Serialize for Eccentricity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Eccentricity::Nearest => s.serialize_str("nearest"),
            Eccentricity::Fixed(e) => s.serialize_f64(*e),
        }
    }
}

impl<'de> Deserialize<'de> for Eccentricity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Eccentricity;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str(r#""nearest" or a number in [0, 1]"#)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Eccentricity, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Eccentricity, E> {
                Eccentricity::fixed(v).map_err(E::custom)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Eccentricity, E> {
                self.visit_f64(v as f64)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Eccentricity, E> {
                self.visit_f64(v as f64)
            }
        }
        d.deserialize_any(V)
    }
}

impl std::str::FromStr for Eccentricity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "nearest" {
            return Ok(Eccentricity::Nearest);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::ConfigInvalid(format!("eccentricity `{s}`")))?;
        Eccentricity::fixed(v)
    }
}

impl Eccentricity {
    pub fn fixed(e: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&e) {
            Ok(Eccentricity::Fixed(e))
        } else {
            Err(Error::ConfigInvalid(format!("eccentricity {e} outside [0, 1]")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssignConfig {
    /// Growth factor for thresholds of topics that catch no document.
    pub alpha: f64,
    pub eccentricity: Eccentricity,
}

impl Default for AssignConfig {
    fn default() -> Self {
        AssignConfig {
            alpha: 1.1,
            eccentricity: Eccentricity::Nearest,
        }
    }
}

/// Assigned sets of the pivot topics (in pivot order) plus the leftovers.
#[derive(Clone, Debug, PartialEq)]
pub struct PivotAssignment {
    pub topics: Vec<usize>,
    /// Ascending document indices per entry of `topics`.
    pub sets: Vec<Vec<usize>>,
    pub unassigned: Vec<usize>,
}

impl PivotAssignment {
    fn recompute_unassigned(&mut self, n_docs: usize) {
        let mut covered = vec![false; n_docs];
        for s in &self.sets {
            for &d in s {
                covered[d] = true;
            }
        }
        self.unassigned = (0..n_docs).filter(|&d| !covered[d]).collect();
    }
}

fn rep<'a>(taxonomy: &Taxonomy, states: &'a [TopicState], t: usize) -> Result<&'a [f64]> {
    states[t]
        .rep
        .as_deref()
        .ok_or_else(|| Error::NoRepresentation(taxonomy.id(t).to_string()))
}

/// Threshold of a pivot topic: twice its farthest child when it has
/// children, else its nearest sibling; a topic with neither uses twice the
/// mean distance of its seeds.
pub fn topic_threshold(
    taxonomy: &Taxonomy,
    states: &[TopicState],
    seeds: Option<&SeedSet>,
    topic: usize,
) -> Result<f64> {
    let c = rep(taxonomy, states, topic)?;
    let children = taxonomy.children(topic);
    if !children.is_empty() {
        let mut far = 0.0f64;
        for &ch in children {
            far = far.max(dist(c, rep(taxonomy, states, ch)?));
        }
        return Ok(2.0 * far);
    }
    let siblings: Vec<usize> = taxonomy
        .node(topic)
        .parent
        .map(|p| taxonomy.children(p).iter().copied().filter(|&s| s != topic).collect())
        .unwrap_or_default();
    if !siblings.is_empty() {
        let mut near = f64::INFINITY;
        for s in siblings {
            near = near.min(dist(c, rep(taxonomy, states, s)?));
        }
        return Ok(near);
    }
    let seed_vecs = seeds
        .and_then(|s| s.get(taxonomy.id(topic)))
        .filter(|v| !v.is_empty())
        .ok_or_else(|| Error::MissingSeedsForTopic(vec![taxonomy.id(topic).to_string()]))?;
    let mean = seed_vecs.iter().map(|(_, v)| dist(v, c)).sum::<f64>() / seed_vecs.len() as f64;
    Ok(2.0 * mean)
}

/// Docs within each pivot topic's threshold (inclusive). A topic that
/// catches nothing grows its threshold to `alpha` times its nearest
/// document's distance when that document lies within twice the threshold.
/// Overlaps are kept; thresholds are written back into `states`.
pub fn assign_at_pivot(
    taxonomy: &Taxonomy,
    states: &mut [TopicState],
    corpus: &Corpus,
    alpha: f64,
) -> Result<PivotAssignment> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(Error::ConfigInvalid(format!("alpha {alpha} must be >= 1")));
    }
    let topics = taxonomy.topics_at_level(taxonomy.pivot())?;
    if topics.is_empty() {
        return Err(Error::NoPivotTopics);
    }
    let mut sets = Vec::with_capacity(topics.len());
    for &t in &topics {
        let c = rep(taxonomy, states, t)?;
        let tau = states[t]
            .threshold
            .ok_or_else(|| Error::NoRepresentation(taxonomy.id(t).to_string()))?;
        let dists: Vec<f64> = (0..corpus.len())
            .into_par_iter()
            .map(|i| dist(corpus.row(i), c))
            .collect();
        let mut set: Vec<usize> = (0..corpus.len()).filter(|&i| dists[i] <= tau).collect();
        if set.is_empty() {
            let nearest = dists.iter().copied().fold(f64::INFINITY, f64::min);
            if nearest <= 2.0 * tau {
                let grown = tau.max(alpha * nearest);
                states[t].threshold = Some(grown);
                set = (0..corpus.len()).filter(|&i| dists[i] <= grown).collect();
            }
        }
        sets.push(set);
    }
    let mut pa = PivotAssignment {
        topics,
        sets,
        unassigned: Vec::new(),
    };
    pa.recompute_unassigned(corpus.len());
    Ok(pa)
}

/// Default eccentricity of topic `i` against `j`:
/// `(τ_j - ½‖c_i - c_j‖) / (τ_i + τ_j - ‖c_i - c_j‖)`.
pub fn default_eccentricity(center_dist: f64, tau_i: f64, tau_j: f64) -> Result<f64> {
    let overlap = tau_i + tau_j - center_dist;
    if overlap <= 0.0 {
        return Err(Error::NoOverlap);
    }
    Ok((tau_j - 0.5 * center_dist) / overlap)
}

/// Whether a shared document at distance `d_i` from topic `i` stays in `i`
/// under eccentricity `e_i`.
pub fn keeps(d_i: f64, center_dist: f64, tau_i: f64, tau_j: f64, e_i: f64) -> bool {
    d_i <= center_dist - tau_j + e_i * (tau_i + tau_j - center_dist)
}

/// Resolve documents shared between pivot topics.
///
/// `Nearest` keeps each shared document only in its nearest containing topic
/// (earlier topic on exact ties), making the sets disjoint. `Fixed(e)` applies
/// the pairwise eccentricity test against every other containing topic and
/// keeps the document wherever all tests pass.
pub fn resolve_overlap(
    mut pa: PivotAssignment,
    taxonomy: &Taxonomy,
    states: &mut [TopicState],
    corpus: &Corpus,
    mode: Eccentricity,
) -> Result<PivotAssignment> {
    let k = pa.topics.len();
    let mut reps = Vec::with_capacity(k);
    let mut taus = Vec::with_capacity(k);
    for &t in &pa.topics {
        reps.push(rep(taxonomy, states, t)?.to_vec());
        taus.push(states[t].threshold.unwrap_or(0.0));
    }
    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); corpus.len()];
    for (slot, set) in pa.sets.iter().enumerate() {
        for &d in set {
            owners[d].push(slot);
        }
    }
    let mut keep: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (d, own) in owners.iter().enumerate() {
        match own.as_slice() {
            [] => {}
            [only] => keep[*only].push(d),
            many => {
                let x = corpus.row(d);
                let ds: Vec<f64> = many.iter().map(|&s| dist(x, &reps[s])).collect();
                match mode {
                    Eccentricity::Nearest => {
                        let mut best = 0;
                        for j in 1..many.len() {
                            if ds[j] < ds[best] {
                                best = j;
                            }
                        }
                        keep[many[best]].push(d);
                    }
                    Eccentricity::Fixed(e) => {
                        for (a, &si) in many.iter().enumerate() {
                            let ok = many.iter().all(|&sj| {
                                sj == si || {
                                    let cd = dist(&reps[si], &reps[sj]);
                                    keeps(ds[a], cd, taus[si], taus[sj], e)
                                }
                            });
                            if ok {
                                keep[si].push(d);
                            }
                        }
                    }
                }
            }
        }
    }
    if let Eccentricity::Fixed(e) = mode {
        for &t in &pa.topics {
            states[t].eccentricity = Some(e);
        }
    }
    pa.sets = keep;
    pa.recompute_unassigned(corpus.len());
    Ok(pa)
}

/// Compute thresholds for every pivot topic, assign, and resolve overlaps.
/// The resolved sets are written into `states`.
pub fn pivot_step(
    taxonomy: &Taxonomy,
    states: &mut [TopicState],
    seeds: Option<&SeedSet>,
    corpus: &Corpus,
    cfg: &AssignConfig,
) -> Result<PivotAssignment> {
    let topics = taxonomy.topics_at_level(taxonomy.pivot())?;
    let taus: Vec<f64> = topics
        .iter()
        .map(|&t| topic_threshold(taxonomy, states, seeds, t))
        .collect::<Result<_>>()?;
    for (&t, tau) in topics.iter().zip(taus) {
        states[t].threshold = Some(tau);
    }
    let pa = assign_at_pivot(taxonomy, states, corpus, cfg.alpha)?;
    let pa = resolve_overlap(pa, taxonomy, states, corpus, cfg.eccentricity)?;
    for (&t, set) in pa.topics.iter().zip(&pa.sets) {
        states[t].assigned = set.clone();
    }
    Ok(pa)
}
