//! B³ and V-measure, flat and per taxonomy level.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::corpus_io::{AssignmentRecord, DocId, GoldLabels};
use crate::error::{Error, Result};
use crate::taxonomy::{Taxonomy, TopicId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct B3 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VMeasure {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v: f64,
}

fn harmonic(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        // rounding can push the mean one ulp past the larger input
        (2.0 * a * b / (a + b)).min(a.max(b))
    }
}

/// Joint counts over (pred, gold) with the marginals, all keyed by dense
/// label indices in first-seen order.
struct Contingency {
    n: f64,
    cells: Vec<((usize, usize), f64)>,
    pred: Vec<f64>,
    gold: Vec<f64>,
}

fn dense<L: Eq + Hash>(labels: &[L]) -> (Vec<usize>, usize) {
    let mut ids: HashMap<&L, usize> = HashMap::new();
    let out = labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(l).or_insert(next)
        })
        .collect();
    (out, ids.len())
}

fn contingency<P: Eq + Hash, G: Eq + Hash>(pred: &[P], gold: &[G]) -> Result<Contingency> {
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    if pred.len() != gold.len() {
        return Err(Error::IdSetMismatch(format!(
            "{} predictions vs {} gold labels",
            pred.len(),
            gold.len()
        )));
    }
    let (p, np) = dense(pred);
    let (g, ng) = dense(gold);
    let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut pm = vec![0.0; np];
    let mut gm = vec![0.0; ng];
    for (&a, &b) in p.iter().zip(&g) {
        *cells.entry((a, b)).or_default() += 1.0;
        pm[a] += 1.0;
        gm[b] += 1.0;
    }
    Ok(Contingency {
        n: pred.len() as f64,
        cells: cells.into_iter().collect(),
        pred: pm,
        gold: gm,
    })
}

/// B³ over items, where `pred[i]` and `gold[i]` label item `i`.
pub fn b3<P: Eq + Hash, G: Eq + Hash>(pred: &[P], gold: &[G]) -> Result<B3> {
    let c = contingency(pred, gold)?;
    // Σ_d |C(d) ∩ L(d)| / |C(d)| = Σ_cells n_ij² / n_i
    let mut p = 0.0;
    let mut r = 0.0;
    for &((i, j), nij) in &c.cells {
        p += nij * nij / c.pred[i];
        r += nij * nij / c.gold[j];
    }
    let precision = p / c.n;
    let recall = r / c.n;
    Ok(B3 {
        precision,
        recall,
        f1: harmonic(precision, recall),
    })
}

fn entropy(marginal: &[f64], n: f64) -> f64 {
    -marginal
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| (m / n) * (m / n).ln())
        .sum::<f64>()
}

/// Homogeneity, completeness and V (β = 1), entropies in nats.
pub fn v_measure<P: Eq + Hash, G: Eq + Hash>(pred: &[P], gold: &[G]) -> Result<VMeasure> {
    let c = contingency(pred, gold)?;
    let h_gold = entropy(&c.gold, c.n);
    let h_pred = entropy(&c.pred, c.n);
    let mut h_gold_given_pred = 0.0;
    let mut h_pred_given_gold = 0.0;
    for &((i, j), nij) in &c.cells {
        let joint = nij / c.n;
        h_gold_given_pred -= joint * (nij / c.pred[i]).ln();
        h_pred_given_gold -= joint * (nij / c.gold[j]).ln();
    }
    let homogeneity = if h_gold == 0.0 {
        1.0
    } else {
        1.0 - h_gold_given_pred / h_gold
    };
    let completeness = if h_pred == 0.0 {
        1.0
    } else {
        1.0 - h_pred_given_gold / h_pred
    };
    Ok(VMeasure {
        homogeneity,
        completeness,
        v: harmonic(homogeneity, completeness),
    })
}

fn aligned<'a, L>(pred: &'a BTreeMap<DocId, L>, gold: &'a BTreeMap<DocId, L>) -> Result<(Vec<&'a L>, Vec<&'a L>)> {
    if pred.len() != gold.len() || pred.keys().zip(gold.keys()).any(|(a, b)| a != b) {
        let missing = gold.keys().find(|k| !pred.contains_key(*k));
        let extra = pred.keys().find(|k| !gold.contains_key(*k));
        return Err(Error::IdSetMismatch(format!(
            "first gold doc without prediction: {missing:?}; first predicted doc without gold: {extra:?}"
        )));
    }
    Ok((pred.values().collect(), gold.values().collect()))
}

/// [`b3`] keyed by document.
pub fn b3_docs<L: Eq + Hash>(pred: &BTreeMap<DocId, L>, gold: &BTreeMap<DocId, L>) -> Result<B3> {
    let (p, g) = aligned(pred, gold)?;
    b3(&p, &g)
}

/// [`v_measure`] keyed by document.
pub fn v_measure_docs<L: Eq + Hash>(pred: &BTreeMap<DocId, L>, gold: &BTreeMap<DocId, L>) -> Result<VMeasure> {
    let (p, g) = aligned(pred, gold)?;
    v_measure(&p, &g)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub b3_precision: f64,
    pub b3_recall: f64,
    pub b3_f1: f64,
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
}

impl Scores {
    fn new(b: B3, v: VMeasure) -> Self {
        Scores {
            b3_precision: b.precision,
            b3_recall: b.recall,
            b3_f1: b.f1,
            homogeneity: v.homogeneity,
            completeness: v.completeness,
            v_measure: v.v,
        }
    }

    fn fields(&self) -> [f64; 6] {
        [
            self.b3_precision,
            self.b3_recall,
            self.b3_f1,
            self.homogeneity,
            self.completeness,
            self.v_measure,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelScores {
    pub level: usize,
    pub n_docs: usize,
    /// Scored items after multi-label expansion.
    pub n_items: usize,
    #[serde(flatten)]
    pub scores: Scores,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_level: Vec<LevelScores>,
    /// Unweighted mean over levels.
    pub averaged: Scores,
}

impl EvalReport {
    pub fn table(&self) -> String {
        const HEAD: [&str; 6] = ["b3_p", "b3_r", "b3_f1", "hom", "comp", "v"];
        let mut out = format!("{:<8} {:>7}", "level", "items");
        for h in HEAD {
            let _ = write!(out, " {h:>7}");
        }
        out.push('\n');
        let mut row = |label: String, items: String, s: &Scores| {
            let _ = write!(out, "{label:<8} {items:>7}");
            for v in s.fields() {
                let _ = write!(out, " {v:>7.4}");
            }
            out.push('\n');
        };
        for l in &self.per_level {
            row(l.level.to_string(), l.n_items.to_string(), &l.scores);
        }
        row("avg".into(), "-".into(), &self.averaged);
        out
    }
}

/// Predicted label of `rec` at `level`.
fn predicted_at(rec: &AssignmentRecord, t: &Taxonomy, level: usize) -> TopicId {
    if rec.is_none() {
        return TopicId::none();
    }
    let pivot = t.pivot();
    if level >= pivot {
        return rec.path.get(level - pivot).cloned().unwrap_or_else(TopicId::none);
    }
    rec.path
        .first()
        .and_then(|first| t.get(first))
        .and_then(|i| t.ancestor_at_level(i, level))
        .map(|a| t.id(a).clone())
        .unwrap_or_else(TopicId::none)
}

/// Score `assignments` against `gold` at each level from `from_level`
/// (default: the pivot) to the bottom of the taxonomy.
///
/// Every gold document needs an assignment; assignments for documents
/// without gold labels are ignored. Other ids in either input are resolved
/// against `taxonomy` extended with every possible Other child.
pub fn evaluate_hierarchical(
    assignments: &[AssignmentRecord],
    gold: &GoldLabels,
    taxonomy: &Taxonomy,
    from_level: Option<usize>,
) -> Result<EvalReport> {
    if gold.is_empty() {
        return Err(Error::EmptyInput);
    }
    let t = taxonomy.with_all_others();
    let from = from_level.unwrap_or(t.pivot());
    if from > t.height() {
        return Err(Error::LevelOutOfRange {
            level: from,
            height: t.height(),
        });
    }
    let by_doc: HashMap<&DocId, &AssignmentRecord> = assignments.iter().map(|r| (&r.doc, r)).collect();
    let mut items: Vec<(&AssignmentRecord, usize)> = Vec::new();
    for (doc, labels) in gold {
        let rec = by_doc
            .get(doc)
            .ok_or_else(|| Error::IdSetMismatch(format!("gold document `{doc}` has no assignment")))?;
        for l in labels {
            let g = t.get(l).ok_or_else(|| Error::UnknownTopic(l.to_string()))?;
            items.push((rec, g));
        }
    }

    let mut per_level = Vec::new();
    for level in from..=t.height() {
        let pred: Vec<TopicId> = items.iter().map(|(r, _)| predicted_at(r, &t, level)).collect();
        let gold_l: Vec<TopicId> = items
            .iter()
            .map(|&(_, g)| {
                t.ancestor_at_level(g, level)
                    .map(|a| t.id(a).clone())
                    .unwrap_or_else(TopicId::none)
            })
            .collect();
        per_level.push(LevelScores {
            level,
            n_docs: gold.len(),
            n_items: items.len(),
            scores: Scores::new(b3(&pred, &gold_l)?, v_measure(&pred, &gold_l)?),
        });
    }
    let k = per_level.len() as f64;
    let mean = |f: fn(&Scores) -> f64| per_level.iter().map(|l| f(&l.scores)).sum::<f64>() / k;
    let averaged = Scores {
        b3_precision: mean(|s| s.b3_precision),
        b3_recall: mean(|s| s.b3_recall),
        b3_f1: mean(|s| s.b3_f1),
        homogeneity: mean(|s| s.homogeneity),
        completeness: mean(|s| s.completeness),
        v_measure: mean(|s| s.v_measure),
    };
    Ok(EvalReport { per_level, averaged })
}
