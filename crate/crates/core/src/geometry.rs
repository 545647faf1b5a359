//! Vector kernels and the approximate largest empty sphere.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_dims<P: AsRef<[f64]>>(points: &[P]) -> Result<usize> {
    let d = points.first().ok_or(Error::EmptyInput)?.as_ref().len();
    for p in points {
        if p.as_ref().len() != d {
            return Err(Error::dim_mismatch("point set", d, p.as_ref().len()));
        }
    }
    Ok(d)
}

/// `Σ wᵢ pᵢ / Σ wᵢ`.
pub fn weighted_mean<P: AsRef<[f64]>>(points: &[P], weights: &[f64]) -> Result<Vec<f64>> {
    let d = check_dims(points)?;
    if weights.len() != points.len() {
        return Err(Error::dim_mismatch("weights", points.len(), weights.len()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::ZeroTotalWeight);
    }
    let mut out = vec![0.0; d];
    for (p, &w) in points.iter().zip(weights) {
        for (o, x) in out.iter_mut().zip(p.as_ref()) {
            *o += w * x;
        }
    }
    out.iter_mut().for_each(|o| *o /= total);
    Ok(out)
}

pub fn centroid<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<f64>> {
    weighted_mean(points, &vec![1.0; points.len()])
}

/// Outcome of a largest-empty-sphere search.
#[derive(Clone, Debug, PartialEq)]
pub struct LesResult {
    pub center: Vec<f64>,
    /// Index of the chosen candidate (or grid point for the oracle).
    pub candidate: usize,
    /// Distance from `center` to the nearest input point.
    pub radius: f64,
    pub supporting_triple: [usize; 3],
    /// `max - min` of the three distances to the supporting triple.
    pub spread: f64,
}

/// Every 3-subset of `0..n` in lexicographic order.
pub fn triples(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                out.push([a, b, c]);
            }
        }
    }
    out
}

fn pairs(n: usize) -> Vec<[usize; 2]> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| [a, b])).collect()
}

/// Solve the small dense system `a x = b` by Gaussian elimination with
/// partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Center of the circle through `a`, `b`, `c` in their plane; `None` when
/// the three are collinear.
pub fn circumcenter(a: &[f64], b: &[f64], c: &[f64]) -> Option<Vec<f64>> {
    let u: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let v: Vec<f64> = c.iter().zip(a).map(|(x, y)| x - y).collect();
    let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).sum::<f64>();
    let (uu, uv, vv) = (dot(&u, &u), dot(&u, &v), dot(&v, &v));
    // scale-free collinearity test before the fixed-epsilon solve
    if uu * vv - uv * uv <= 1e-12 * uu * vv {
        return None;
    }
    let st = solve(vec![vec![1.0, uv / uu], vec![uv / vv, 1.0]], vec![0.5, 0.5])?;
    Some((0..a.len()).map(|k| a[k] + st[0] * u[k] + st[1] * v[k]).collect())
}

/// Point of the segment `a`-`b` equidistant from `p` and `q`; `None` when
/// the bisector misses the segment or runs parallel to it.
pub fn bisector_on_segment(a: &[f64], b: &[f64], p: &[f64], q: &[f64]) -> Option<Vec<f64>> {
    let dot = |x: &mut dyn Iterator<Item = (f64, f64)>| x.map(|(u, v)| u * v).sum::<f64>();
    let e: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let w: Vec<f64> = q.iter().zip(p).map(|(x, y)| x - y).collect();
    // a - midpoint(p, q)
    let am: Vec<f64> = (0..a.len()).map(|k| a[k] - 0.5 * (p[k] + q[k])).collect();
    let ew = dot(&mut e.iter().copied().zip(w.iter().copied()));
    if ew.abs() <= 1e-12 * norm(&e) * norm(&w) {
        return None;
    }
    let t = -dot(&mut am.iter().copied().zip(w.iter().copied())) / ew;
    (0.0..=1.0)
        .contains(&t)
        .then(|| (0..a.len()).map(|k| a[k] + t * e[k]).collect())
}

/// Whether `x` lies in the simplex spanned by `vertices` (within `eps`).
fn in_simplex(x: &[f64], vertices: &[&[f64]], eps: f64) -> bool {
    let base = vertices[0];
    if vertices.len() == 1 {
        return dist(x, base) <= eps;
    }
    let edges: Vec<Vec<f64>> = vertices[1..]
        .iter()
        .map(|v| v.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let rhs: Vec<f64> = x.iter().zip(base).map(|(a, b)| a - b).collect();
    let m = edges.len();
    let gram: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let proj: Vec<f64> = edges
        .iter()
        .map(|e| e.iter().zip(&rhs).map(|(a, b)| a * b).sum())
        .collect();
    let Some(coef) = solve(gram, proj) else {
        return false;
    };
    if coef.iter().any(|&c| c < -eps) || coef.iter().sum::<f64>() > 1.0 + eps {
        return false;
    }
    let recon: Vec<f64> = (0..x.len())
        .map(|k| base[k] + coef.iter().zip(&edges).map(|(c, e)| c * e[k]).sum::<f64>())
        .collect();
    dist(&recon, x) <= eps
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Convex-hull membership via simplices of at most `d + 1` points.
pub fn in_convex_hull<P: AsRef<[f64]>>(x: &[f64], points: &[P], eps: f64) -> bool {
    let d = x.len();
    (1..=(d + 1).min(points.len())).any(|k| {
        subsets(points.len(), k).into_iter().any(|s| {
            let verts: Vec<&[f64]> = s.iter().map(|&i| points[i].as_ref()).collect();
            in_simplex(x, &verts, eps)
        })
    })
}

/// Orthonormal frame of the affine span of a point set.
struct AffineFrame {
    origin: Vec<f64>,
    basis: Vec<Vec<f64>>,
    /// The points in frame coordinates.
    local: Vec<Vec<f64>>,
    eps: f64,
}

impl AffineFrame {
    fn new<P: AsRef<[f64]>>(points: &[P]) -> Self {
        let origin = points[0].as_ref().to_vec();
        let scale = points.iter().map(|p| dist(p.as_ref(), &origin)).fold(0.0, f64::max);
        let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for p in &points[1..] {
            let mut v: Vec<f64> = p.as_ref().iter().zip(&origin).map(|(a, b)| a - b).collect();
            // two passes of Gram-Schmidt for stability
            for _ in 0..2 {
                for b in &basis {
                    let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
                }
            }
            let n = norm(&v);
            if n > tol {
                basis.push(v.into_iter().map(|x| x / n).collect());
            }
        }
        let mut frame = AffineFrame {
            origin,
            basis,
            local: Vec::new(),
            eps: 1e-9 * scale.max(1e-300),
        };
        frame.local = points.iter().map(|p| frame.coords(p.as_ref())).collect();
        frame
    }

    fn coords(&self, x: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|b| b.iter().zip(x).zip(&self.origin).map(|((u, a), o)| u * (a - o)).sum())
            .collect()
    }

    fn lift(&self, local: &[f64]) -> Vec<f64> {
        let mut out = self.origin.clone();
        for (c, b) in local.iter().zip(&self.basis) {
            out.iter_mut().zip(b).for_each(|(o, u)| *o += c * u);
        }
        out
    }

    fn contains(&self, local: &[f64]) -> bool {
        if self.local.len() == self.basis.len() + 1 {
            let verts: Vec<&[f64]> = self.local.iter().map(Vec::as_slice).collect();
            in_simplex(local, &verts, self.eps)
        } else {
            in_convex_hull(local, &self.local, self.eps)
        }
    }
}

/// Best triple spread of `x` against `points`: `(spread, triple index)`.
fn best_spread<P: AsRef<[f64]>>(points: &[P], tri: &[[usize; 3]], x: &[f64]) -> (f64, usize, f64) {
    let ds: Vec<f64> = points.iter().map(|p| dist(p.as_ref(), x)).collect();
    let radius = ds.iter().copied().fold(f64::INFINITY, f64::min);
    let mut best = (f64::INFINITY, 0usize);
    for (ti, t) in tri.iter().enumerate() {
        let (a, b, c) = (ds[t[0]], ds[t[1]], ds[t[2]]);
        let s = a.max(b).max(c) - a.min(b).min(c);
        if s < best.0 {
            best = (s, ti);
        }
    }
    (best.0, best.1, radius)
}

/// Exact equidistant points of `points`: the circumcenter of every triple,
/// then every point where the bisector of two points crosses the segment
/// between two points. Appended to the candidates of [`approx_les`] they
/// make it exact in the plane (the optimum is a circumcenter inside the
/// hull or a bisector crossing on its boundary).
pub fn equidistant_points<P: AsRef<[f64]>>(points: &[P]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for t in triples(points.len()) {
        if let Some(c) = circumcenter(points[t[0]].as_ref(), points[t[1]].as_ref(), points[t[2]].as_ref()) {
            out.push(c);
        }
    }
    let pair = pairs(points.len());
    for [k, l] in &pair {
        for [i, j] in &pair {
            let (a, b) = (points[*k].as_ref(), points[*l].as_ref());
            if let Some(x) = bisector_on_segment(a, b, points[*i].as_ref(), points[*j].as_ref()) {
                out.push(x);
            }
        }
    }
    out
}

/// Approximate LES over `points`, searching `candidates`.
///
/// The center is restricted to the convex hull of `points`. Each candidate
/// is projected onto their affine span and kept if the projection lands in
/// the hull; the kept point farthest from its nearest input point wins
/// (earlier first on ties). Cost is `O(|points|·d·|candidates| + |points|³·d)`.
pub fn approx_les<P, C>(points: &[P], candidates: &[C]) -> Result<LesResult>
where
    P: AsRef<[f64]> + Sync,
    C: AsRef<[f64]> + Sync,
{
    if points.len() < 3 {
        return Err(Error::NotEnoughTopics(points.len()));
    }
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let d = check_dims(points)?;
    if let Some(c) = candidates.iter().find(|c| c.as_ref().len() != d) {
        return Err(Error::dim_mismatch("LES candidate", d, c.as_ref().len()));
    }
    let tri = triples(points.len());
    let frame = AffineFrame::new(points);

    // projected point and its radius for candidates that land in the hull
    let radius_of = |y: &[f64]| points.iter().map(|p| dist(p.as_ref(), y)).fold(f64::INFINITY, f64::min);
    let inside: Vec<Option<(Vec<f64>, f64)>> = candidates
        .par_iter()
        .map(|x| {
            let local = frame.coords(x.as_ref());
            frame.contains(&local).then(|| {
                let y = frame.lift(&local);
                let r = radius_of(&y);
                (y, r)
            })
        })
        .collect();
    let mut best: Option<(usize, &[f64], f64)> = None;
    for (i, (y, r)) in inside
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.as_ref().map(|v| (i, v)))
    {
        if best.is_none_or(|b| *r > b.2) {
            best = Some((i, y, *r));
        }
    }
    let (candidate, center, _) = best.ok_or(Error::NoCandidates)?;
    let center = center.to_vec();
    let (spread, ti, radius) = best_spread(points, &tri, &center);
    Ok(LesResult {
        center,
        candidate,
        radius,
        supporting_triple: tri[ti],
        spread,
    })
}

/// Brute-force LES for low dimensions, used to check [`approx_les`].
pub mod oracle {
    use super::*;

    pub use super::in_convex_hull;

    /// Regular grid with `resolution` points per axis over `[lo, hi]`.
    pub fn grid(lo: &[f64], hi: &[f64], resolution: usize) -> Vec<Vec<f64>> {
        let d = lo.len();
        let steps = resolution.max(2);
        let axis = |k: usize, i: usize| lo[k] + (hi[k] - lo[k]) * i as f64 / (steps - 1) as f64;
        let total = steps.pow(d as u32);
        (0..total)
            .map(|mut flat| {
                let mut p = vec![0.0; d];
                for k in 0..d {
                    p[k] = axis(k, flat % steps);
                    flat /= steps;
                }
                p
            })
            .collect()
    }

    /// Exhaustive grid argmax of the distance to the nearest point, restricted
    /// to the convex hull of `points`. Ties go to the earlier grid point.
    pub fn les_oracle<P: AsRef<[f64]>>(points: &[P], lo: &[f64], hi: &[f64], resolution: usize) -> Result<LesResult> {
        let d = check_dims(points)?;
        if d > 3 {
            return Err(Error::DimTooHigh(d));
        }
        if lo.len() != d || hi.len() != d {
            return Err(Error::dim_mismatch("bounding box", d, lo.len().min(hi.len())));
        }
        let scale = (0..d).map(|k| hi[k] - lo[k]).fold(0.0, f64::max).max(1.0);
        let eps = 1e-9 * scale;
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for (i, x) in grid(lo, hi, resolution).into_iter().enumerate() {
            if !in_convex_hull(&x, points, eps) {
                continue;
            }
            let r = points
                .iter()
                .map(|p| dist(p.as_ref(), &x))
                .fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|b| r > b.1) {
                best = Some((i, r, x));
            }
        }
        let (candidate, radius, center) = best.ok_or(Error::NoCandidates)?;
        let mut near: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (dist(p.as_ref(), &center), i))
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let take = near.len().min(3);
        let mut triple = [0usize; 3];
        for (slot, n) in triple.iter_mut().zip(&near[..take]) {
            *slot = n.1;
        }
        let spread = if take == 3 { near[2].0 - near[0].0 } else { 0.0 };
        Ok(LesResult {
            center,
            candidate,
            radius,
            supporting_triple: triple,
            spread,
        })
    }
}
