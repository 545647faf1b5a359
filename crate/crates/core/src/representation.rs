//! Topic vectors: seed initialization, bottom-up weighted-mean updates,
//! degree of imbalance, and Other-category placement.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus_io::{Corpus, SeedSet};
use crate::error::{Error, Result};
use crate::geometry::{approx_les, centroid, dist, equidistant_points, norm, weighted_mean};
use crate::taxonomy::{NodeKind, Taxonomy};

/// Per-topic learned state, indexed in parallel with the taxonomy arena.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TopicState {
    pub rep: Option<Vec<f64>>,
    /// Membership radius; pivot-level topics only.
    pub threshold: Option<f64>,
    /// Indices into the fitting corpus, ascending.
    pub assigned: Vec<usize>,
    pub eccentricity: Option<f64>,
}

/// Weights of the bottom-up weighted mean. Each child gets `1/|children|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WmWeights {
    pub self_weight: f64,
    pub les_weight: f64,
}

impl Default for WmWeights {
    fn default() -> Self {
        WmWeights {
            self_weight: 1.0,
            les_weight: 4.0,
        }
    }
}

impl WmWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !ok(self.self_weight) || !ok(self.les_weight) {
            return Err(Error::ConfigInvalid(
                "weighted-mean weights must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Seed centroids for every user topic at or below the pivot.
pub fn init_topics(taxonomy: &Taxonomy, seeds: &SeedSet) -> Result<Vec<TopicState>> {
    let mut states = vec![TopicState::default(); taxonomy.len()];
    let mut missing = Vec::new();
    for (i, node) in taxonomy.nodes().iter().enumerate() {
        if node.kind != NodeKind::User || node.level < taxonomy.pivot() {
            continue;
        }
        match seeds.get(&node.id) {
            Some(s) if !s.is_empty() => {
                let vecs: Vec<&[f64]> = s.iter().map(|(_, v)| v.as_slice()).collect();
                states[i].rep = Some(centroid(&vecs)?);
            }
            _ => missing.push(node.id.to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingSeedsForTopic(missing));
    }
    Ok(states)
}

fn unit_directions<C: AsRef<[f64]>>(parent: &[f64], children: &[C], parent_name: &str) -> Result<Vec<Vec<f64>>> {
    children
        .iter()
        .map(|c| {
            let c = c.as_ref();
            if c.len() != parent.len() {
                return Err(Error::dim_mismatch("child representation", parent.len(), c.len()));
            }
            let diff: Vec<f64> = c.iter().zip(parent).map(|(a, b)| a - b).collect();
            let n = norm(&diff);
            if n == 0.0 {
                return Err(Error::CoincidentChild(parent_name.to_string()));
            }
            Ok(diff.into_iter().map(|x| x / n).collect())
        })
        .collect()
}

/// `η = mean of unit(child - parent)`; zero for a balanced child set.
pub fn degree_of_imbalance<C: AsRef<[f64]>>(parent: &[f64], children: &[C]) -> Result<Vec<f64>> {
    if children.is_empty() {
        return Err(Error::EmptyInput);
    }
    let units = unit_directions(parent, children, "parent")?;
    centroid(&units)
}

/// Other-category vector `c - η·‖Σ(c_j - c)‖` for user children `children`.
pub fn other_category<C: AsRef<[f64]>>(parent: &[f64], children: &[C]) -> Result<Vec<f64>> {
    let eta = degree_of_imbalance(parent, children)?;
    let mut sum = vec![0.0; parent.len()];
    for c in children {
        for ((s, x), p) in sum.iter_mut().zip(c.as_ref()).zip(parent) {
            *s += x - p;
        }
    }
    let magnitude = norm(&sum);
    Ok(parent.iter().zip(&eta).map(|(p, e)| p - e * magnitude).collect())
}

/// Where LES candidates come from.
#[derive(Clone, Copy, Debug)]
pub enum LesSource<'a> {
    /// No unlabeled data: LES terms are skipped.
    Disabled,
    Corpus(&'a Corpus),
}

/// Candidate documents for the LES of `topic`'s children.
///
/// Pivot-and-below topics use their own assigned set; topics above the pivot
/// use the union of their children's sets. Before any assignment exists the
/// pool is every document inside the ball around the children's centroid
/// that reaches the farthest child.
pub fn candidate_pool(
    taxonomy: &Taxonomy,
    states: &[TopicState],
    corpus: &Corpus,
    topic: usize,
    child_reps: &[&[f64]],
) -> Result<Vec<usize>> {
    let mut pool: Vec<usize> = if taxonomy.level(topic) >= taxonomy.pivot() {
        states[topic].assigned.clone()
    } else {
        let mut u: Vec<usize> = taxonomy
            .children(topic)
            .iter()
            .flat_map(|&c| states[c].assigned.iter().copied())
            .collect();
        u.sort_unstable();
        u.dedup();
        u
    };
    if pool.is_empty() {
        let center = centroid(child_reps)?;
        let radius = child_reps.iter().map(|c| dist(c, &center)).fold(0.0, f64::max);
        pool = (0..corpus.len())
            .into_par_iter()
            .filter(|&i| dist(corpus.row(i), &center) <= radius)
            .collect();
    }
    Ok(pool)
}

fn les_center(
    taxonomy: &Taxonomy,
    states: &[TopicState],
    corpus: &Corpus,
    topic: usize,
    child_reps: &[&[f64]],
) -> Result<Option<Vec<f64>>> {
    let pool = candidate_pool(taxonomy, states, corpus, topic, child_reps)?;
    if pool.is_empty() {
        return Ok(None);
    }
    // documents first, then the exact equidistant points of the children
    let exact = equidistant_points(child_reps);
    let mut candidates: Vec<&[f64]> = pool.iter().map(|&i| corpus.row(i)).collect();
    candidates.extend(exact.iter().map(Vec::as_slice));
    Ok(Some(approx_les(child_reps, &candidates)?.center))
}

fn child_reps<'s>(taxonomy: &Taxonomy, states: &'s [TopicState], children: &[usize]) -> Result<Vec<&'s [f64]>> {
    children
        .iter()
        .map(|&c| {
            states[c]
                .rep
                .as_deref()
                .ok_or_else(|| Error::NoRepresentation(taxonomy.id(c).to_string()))
        })
        .collect()
}

/// New representation of one topic from itself, its children, and (with at
/// least three children) the LES of its children.
fn updated_rep(
    taxonomy: &Taxonomy,
    states: &[TopicState],
    weights: &WmWeights,
    les: LesSource<'_>,
    topic: usize,
) -> Result<Option<Vec<f64>>> {
    let children = taxonomy.children(topic);
    if children.is_empty() {
        return Ok(None);
    }
    let own = states[topic]
        .rep
        .as_deref()
        .ok_or_else(|| Error::NoRepresentation(taxonomy.id(topic).to_string()))?;
    let reps = child_reps(taxonomy, states, children)?;

    let mut points: Vec<&[f64]> = Vec::with_capacity(reps.len() + 2);
    let mut w: Vec<f64> = Vec::with_capacity(reps.len() + 2);
    points.push(own);
    w.push(weights.self_weight);
    let child_w = 1.0 / reps.len() as f64;
    for r in &reps {
        points.push(r);
        w.push(child_w);
    }
    let les_center = match les {
        LesSource::Corpus(corpus) if reps.len() >= 3 && weights.les_weight > 0.0 => {
            les_center(taxonomy, states, corpus, topic, &reps)?
        }
        _ => None,
    };
    if let Some(c) = &les_center {
        points.push(c);
        w.push(weights.les_weight);
    }
    weighted_mean(&points, &w).map(Some)
}

/// Bottom-up weighted-mean pass over levels `height - 1` down to the pivot.
/// Topics within a level are updated in parallel against the previous
/// level's values.
pub fn bottom_up_update(
    taxonomy: &Taxonomy,
    states: &mut [TopicState],
    weights: &WmWeights,
    les: LesSource<'_>,
) -> Result<()> {
    weights.validate()?;
    for level in (taxonomy.pivot()..taxonomy.height()).rev() {
        let topics = taxonomy.topics_at_level(level)?;
        let snapshot: &[TopicState] = states;
        let updates: Vec<(usize, Option<Vec<f64>>)> = topics
            .par_iter()
            .map(|&t| updated_rep(taxonomy, snapshot, weights, les, t).map(|r| (t, r)))
            .collect::<Result<_>>()?;
        for (t, rep) in updates {
            if let Some(rep) = rep {
                states[t].rep = Some(rep);
            }
        }
    }
    Ok(())
}

/// Add (or refresh) the Other child of every eligible parent, deepest first.
///
/// Parents at the pivot level or below use their own representation. Parents
/// one level above the pivot have none, so the LES of their user children
/// stands in; they are skipped when that LES cannot be formed (fewer than
/// three user children, or no unlabeled data).
pub fn extend_all(taxonomy: &mut Taxonomy, states: &mut Vec<TopicState>, les: LesSource<'_>) -> Result<()> {
    for parent in taxonomy.extension_candidates() {
        let user: Vec<usize> = taxonomy.user_children(parent).collect();
        let reps = child_reps(taxonomy, states, &user)?;
        let parent_rep: Vec<f64> = if taxonomy.level(parent) >= taxonomy.pivot() {
            states[parent]
                .rep
                .clone()
                .ok_or_else(|| Error::NoRepresentation(taxonomy.id(parent).to_string()))?
        } else {
            let LesSource::Corpus(corpus) = les else {
                continue;
            };
            if reps.len() < 3 {
                continue;
            }
            match les_center(taxonomy, states, corpus, parent, &reps)? {
                Some(c) => c,
                None => continue,
            }
        };
        let other = other_category(&parent_rep, &reps).map_err(|e| match e {
            Error::CoincidentChild(_) => Error::CoincidentChild(taxonomy.id(parent).to_string()),
            e => e,
        })?;
        let idx = match taxonomy.other_child(parent) {
            Some(o) => o,
            None => {
                let o = taxonomy.add_other_child(parent)?;
                states.resize(taxonomy.len(), TopicState::default());
                o
            }
        };
        states[idx].rep = Some(other);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::DocId;
    use crate::taxonomy::TaxonomyFile;

    fn approx(a: &[f64], b: &[f64], tol: f64) {
        assert!(dist(a, b) <= tol, "{a:?} vs {b:?}");
    }

    fn taxonomy(pivot: usize) -> Taxonomy {
        let file: TaxonomyFile = serde_json::from_str(
            r#"{"nodes":[{"id":"r","parent":null},{"id":"a","parent":"r"},
            {"id":"a1","parent":"a"},{"id":"a2","parent":"a"},{"id":"a3","parent":"a"},
            {"id":"b","parent":"r"},{"id":"b1","parent":"b"},{"id":"b2","parent":"b"}]}"#,
        )
        .unwrap();
        Taxonomy::from_file(&file, Some(pivot)).unwrap()
    }

    fn seeds(t: &Taxonomy, per_topic: &[(&str, Vec<Vec<f64>>)]) -> SeedSet {
        let mut pairs = Vec::new();
        let mut rows = Vec::new();
        for (topic, vs) in per_topic {
            for (k, v) in vs.iter().enumerate() {
                let id = DocId::new(format!("{topic}-{k}"));
                pairs.push((id.clone(), (*topic).into()));
                rows.push((id, v.clone()));
            }
        }
        let c = Corpus::from_rows(2, rows).unwrap();
        SeedSet::resolve(&pairs, t, &c).unwrap()
    }

    #[test]
    fn init_from_seed_means() {
        let t = taxonomy(2);
        let s = seeds(
            &t,
            &[
                ("a1", vec![vec![0.0, 0.0], vec![2.0, 0.0]]),
                ("a2", vec![vec![5.0, 5.0]]),
                ("a3", vec![vec![1.0, 1.0]]),
                ("b1", vec![vec![1.0, 1.0]]),
                ("b2", vec![vec![1.0, 1.0]]),
            ],
        );
        let states = init_topics(&t, &s).unwrap();
        assert_eq!(
            states[t.get(&"a1".into()).unwrap()].rep.as_deref(),
            Some(&[1.0, 0.0][..])
        );
        assert_eq!(
            states[t.get(&"a2".into()).unwrap()].rep.as_deref(),
            Some(&[5.0, 5.0][..])
        );
        // above the pivot: left for derivation
        assert!(states[t.get(&"a".into()).unwrap()].rep.is_none());
    }

    #[test]
    fn imbalance_examples() {
        let z = [0.0, 0.0];
        let opposite = [vec![1.0, 0.0], vec![-2.0, 0.0], vec![0.0, 3.0], vec![0.0, -1.0]];
        approx(&degree_of_imbalance(&z, &opposite).unwrap(), &[0.0, 0.0], 1e-15);
        approx(&degree_of_imbalance(&z, &[vec![1.0, 0.0]]).unwrap(), &[1.0, 0.0], 0.0);
        approx(
            &degree_of_imbalance(&z, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
            &[0.5, 0.5],
            0.0,
        );
        assert!(matches!(
            degree_of_imbalance(&z, &[vec![0.0, 0.0]]),
            Err(Error::CoincidentChild(_))
        ));
    }

    #[test]
    fn other_examples() {
        let z = [0.0, 0.0];
        let sym = [vec![1.0, 0.0], vec![-1.0, 0.0]];
        approx(&other_category(&z, &sym).unwrap(), &z, 0.0);
        // η = (0.5, 0.5), ‖Σ‖ = √2
        let o = other_category(&z, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        approx(&o, &[-h, -h], 1e-12);
        let o = other_category(&z, &[vec![2.0, 0.0]]).unwrap();
        approx(&o, &[-2.0, 0.0], 1e-15);
    }

    fn states_with(t: &Taxonomy, reps: &[(&str, Vec<f64>)]) -> Vec<TopicState> {
        let mut s = vec![TopicState::default(); t.len()];
        for (id, r) in reps {
            s[t.get(&(*id).into()).unwrap()].rep = Some(r.clone());
        }
        s
    }

    #[test]
    fn bottom_up_collapses_to_centroid() {
        let t = taxonomy(1);
        let mut s = states_with(
            &t,
            &[
                ("a", vec![9.0, 9.0]),
                ("a1", vec![0.0, 0.0]),
                ("a2", vec![3.0, 0.0]),
                ("a3", vec![0.0, 3.0]),
                ("b", vec![0.0, 0.0]),
                ("b1", vec![1.0, 1.0]),
                ("b2", vec![3.0, 1.0]),
            ],
        );
        let w = WmWeights {
            self_weight: 0.0,
            les_weight: 0.0,
        };
        bottom_up_update(&t, &mut s, &w, LesSource::Disabled).unwrap();
        approx(s[t.get(&"a".into()).unwrap()].rep.as_ref().unwrap(), &[1.0, 1.0], 1e-15);
        approx(s[t.get(&"b".into()).unwrap()].rep.as_ref().unwrap(), &[2.0, 1.0], 1e-15);
    }

    #[test]
    fn two_children_skip_les() {
        let t = taxonomy(1);
        let mut s = states_with(
            &t,
            &[
                ("a", vec![0.0, 0.0]),
                ("a1", vec![1.0, 0.0]),
                ("a2", vec![-1.0, 0.0]),
                ("a3", vec![0.0, 1.0]),
                ("b", vec![0.0, 3.0]),
                ("b1", vec![1.0, 0.0]),
                ("b2", vec![3.0, 0.0]),
            ],
        );
        let corpus = Corpus::from_rows(2, [(DocId::new("far"), vec![100.0, 100.0])]).unwrap();
        bottom_up_update(&t, &mut s, &WmWeights::default(), LesSource::Corpus(&corpus)).unwrap();
        // b: (1·(0,3) + ½(1,0) + ½(3,0)) / 2
        approx(s[t.get(&"b".into()).unwrap()].rep.as_ref().unwrap(), &[1.0, 1.5], 1e-15);
    }

    #[test]
    fn three_children_use_les() {
        let t = taxonomy(1);
        let p = [vec![-1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let mut s = states_with(
            &t,
            &[
                ("a", vec![0.0, 3.0]),
                ("a1", p[0].clone()),
                ("a2", p[1].clone()),
                ("a3", p[2].clone()),
                ("b", vec![0.0, 0.0]),
                ("b1", vec![1.0, 0.0]),
                ("b2", vec![3.0, 0.0]),
            ],
        );
        let a = t.get(&"a".into()).unwrap();
        let corpus = Corpus::from_rows(
            2,
            [
                (DocId::new("x"), vec![0.5, 0.5]),
                (DocId::new("cc"), vec![0.0, 0.0]),
                (DocId::new("y"), vec![-0.3, 0.2]),
            ],
        )
        .unwrap();
        s[a].assigned = vec![0, 1, 2];
        bottom_up_update(&t, &mut s, &WmWeights::default(), LesSource::Corpus(&corpus)).unwrap();
        // (self + centroid + 4·circumcenter) / 6, circumcenter = (0,0)
        let cent = [0.0, 1.0 / 3.0];
        let want = [(0.0 + cent[0]) / 6.0, (3.0 + cent[1]) / 6.0];
        approx(s[a].rep.as_ref().unwrap(), &want, 1e-15);
    }

    #[test]
    fn extend_adds_then_refreshes() {
        let mut t = taxonomy(2);
        let mut s = states_with(
            &t,
            &[
                ("a1", vec![-1.0, 0.0]),
                ("a2", vec![1.0, 0.0]),
                ("a3", vec![0.0, 1.0]),
                ("b1", vec![5.0, 0.0]),
                ("b2", vec![7.0, 0.0]),
            ],
        );
        let corpus = Corpus::from_rows(
            2,
            [(DocId::new("c"), vec![0.0, 0.0]), (DocId::new("e"), vec![0.1, 0.4])],
        )
        .unwrap();
        let n = t.len();
        extend_all(&mut t, &mut s, LesSource::Corpus(&corpus)).unwrap();
        // a has three user children and gets an Other; b has two and is skipped
        assert_eq!(t.len(), n + 1);
        let a = t.get(&"a".into()).unwrap();
        let other = t.other_child(a).unwrap();
        // LES stand-in is the circumcenter (0,0); children balanced along x,
        // η = (0, 1/3), ‖Σ‖ = 1 → other = (0, -1/3)
        approx(s[other].rep.as_ref().unwrap(), &[0.0, -1.0 / 3.0], 1e-15);
        assert!(s[a].rep.is_none());

        s[t.get(&"a3".into()).unwrap()].rep = Some(vec![0.0, 2.0]);
        extend_all(&mut t, &mut s, LesSource::Corpus(&corpus)).unwrap();
        assert_eq!(t.len(), n + 1);
        assert_eq!(t.children(a).len(), 4);
    }

    #[test]
    fn extend_below_pivot_uses_own_rep() {
        let mut t = taxonomy(1);
        let mut s = states_with(
            &t,
            &[
                ("a", vec![0.0, 0.0]),
                ("a1", vec![1.0, 0.0]),
                ("a2", vec![-1.0, 0.0]),
                ("a3", vec![0.0, 1.0]),
                ("b", vec![10.0, 0.0]),
                ("b1", vec![11.0, 0.0]),
                ("b2", vec![9.0, 0.0]),
            ],
        );
        extend_all(&mut t, &mut s, LesSource::Disabled).unwrap();
        let b = t.get(&"b".into()).unwrap();
        let ob = t.other_child(b).unwrap();
        // symmetric children: Other sits on the parent
        approx(s[ob].rep.as_ref().unwrap(), &[10.0, 0.0], 0.0);
        // root sits above the pivot and needs LES, disabled here
        assert!(t.other_child(t.root()).is_none());
    }
}
