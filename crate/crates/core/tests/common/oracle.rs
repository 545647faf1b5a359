//! Brute-force clustering scores, written from the textbook definitions
//! with no shared code: B³ by per-item counting, V-measure by explicit
//! entropies over label lists.

pub fn b3<A: PartialEq, B: PartialEq>(pred: &[A], gold: &[B]) -> (f64, f64, f64) {
    let n = pred.len();
    let (mut p, mut r) = (0.0, 0.0);
    for i in 0..n {
        let same_pred = (0..n).filter(|&j| pred[j] == pred[i]).count() as f64;
        let same_gold = (0..n).filter(|&j| gold[j] == gold[i]).count() as f64;
        let both = (0..n).filter(|&j| pred[j] == pred[i] && gold[j] == gold[i]).count() as f64;
        p += both / same_pred;
        r += both / same_gold;
    }
    let (p, r) = (p / n as f64, r / n as f64);
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

fn distinct<T: PartialEq + Clone>(xs: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for x in xs {
        if !out.contains(x) {
            out.push(x.clone());
        }
    }
    out
}

/// `H(X)` in nats.
fn h<T: PartialEq + Clone>(xs: &[T]) -> f64 {
    let n = xs.len() as f64;
    distinct(xs)
        .iter()
        .map(|v| xs.iter().filter(|x| *x == v).count() as f64 / n)
        .map(|q| -q * q.ln())
        .sum()
}

/// `H(X | Y)` in nats.
fn h_given<X: PartialEq + Clone, Y: PartialEq + Clone>(xs: &[X], ys: &[Y]) -> f64 {
    let n = xs.len() as f64;
    let mut total = 0.0;
    for y in distinct(ys) {
        let sub: Vec<X> = xs
            .iter()
            .zip(ys)
            .filter(|(_, b)| **b == y)
            .map(|(a, _)| a.clone())
            .collect();
        total += sub.len() as f64 / n * h(&sub);
    }
    total
}

pub fn v_measure<A: PartialEq + Clone, B: PartialEq + Clone>(pred: &[A], gold: &[B]) -> (f64, f64, f64) {
    let hc = h(gold);
    let hk = h(pred);
    let homogeneity = if hc == 0.0 { 1.0 } else { 1.0 - h_given(gold, pred) / hc };
    let completeness = if hk == 0.0 { 1.0 } else { 1.0 - h_given(pred, gold) / hk };
    let v = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    (homogeneity, completeness, v)
}
