//! Brute-force oracles for small instances, written without the core
//! solvers so they can cross-check them.

use ndarray::{Array1, Array2, ArrayView1};

use bilevel_core::model::{FeasibleRegion, Halfspace, RegionKind};
use bilevel_core::{Error, Result};

use crate::geometry::solve_small;

const FEAS_TOL: f64 = 1e-9;

/// Rows `(a, b)` of `{x : ⟨a, x⟩ ≤ b}` describing a polyhedral region. The
/// ℓ₁ ball uses all `2ⁿ` sign rows.
pub fn inequality_rows(region: &FeasibleRegion) -> Result<Vec<(Array1<f64>, f64)>> {
    match region.kind() {
        RegionKind::L1Ball { radius } => {
            let n = region.dimension();
            if n > 12 {
                return Err(Error::Unsupported("ℓ1 facet list too large".into()));
            }
            Ok((0..1usize << n)
                .map(|mask| (Array1::from_shape_fn(n, |i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }), *radius))
                .collect())
        }
        RegionKind::Polytope(p) => Ok(p.halfspaces()),
        _ => Err(Error::Unsupported("region is not polyhedral".into())),
    }
}

/// Vertices of `{x : ⟨aᵢ, x⟩ ≤ bᵢ}` from every `n`-subset of rows.
pub fn enumerate_vertices(rows: &[(Array1<f64>, f64)], n: usize) -> Vec<Array1<f64>> {
    let m = rows.len();
    let mut out: Vec<Array1<f64>> = Vec::new();
    if m < n {
        return out;
    }
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let a = Array2::from_shape_fn((n, n), |(i, j)| rows[pick[i]].0[j]);
        let b = Array1::from_iter(pick.iter().map(|&i| rows[i].1));
        if let Some(x) = solve_small(a, b) {
            let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let feasible = rows.iter().all(|(r, c)| r.dot(&x) - c <= FEAS_TOL * scale);
            if feasible && !out.iter().any(|v| (v - &x).iter().all(|d| d.abs() <= 1e-9 * scale)) {
                out.push(x);
            }
        }
        // Next combination in lexicographic order.
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if pick[i] < m - n + i {
                break;
            }
        }
        pick[i] += 1;
        for j in i + 1..n {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

/// `min ⟨c, x⟩` over the vertex list, lowest index on ties.
pub fn best_vertex(vertices: &[Array1<f64>], c: ArrayView1<'_, f64>) -> Option<(f64, Array1<f64>)> {
    let mut best: Option<(f64, Array1<f64>)> = None;
    for v in vertices {
        let val = c.dot(v);
        if best.as_ref().is_none_or(|(b, _)| val < *b) {
            best = Some((val, v.clone()));
        }
    }
    best
}

/// `min cᵀx` s.t. `Ax ≤ b, x ≥ 0` by vertex enumeration; `None` when
/// infeasible. Assumes the feasible set is bounded.
pub fn brute_lp(c: ArrayView1<'_, f64>, a: &Array2<f64>, b: ArrayView1<'_, f64>) -> Option<(f64, Array1<f64>)> {
    let n = c.len();
    let mut rows: Vec<(Array1<f64>, f64)> = a.rows().into_iter().zip(b).map(|(r, v)| (r.to_owned(), *v)).collect();
    for i in 0..n {
        let mut e = Array1::zeros(n);
        e[i] = -1.0;
        rows.push((e, 0.0));
    }
    best_vertex(&enumerate_vertices(&rows, n), c)
}

/// Number of angles in the circle grid.
pub const CIRCLE_GRID: usize = 100_000;

/// `min ⟨c, s⟩` over `Z ∩ H` (or `Z` when `cut` is `None`), by vertex
/// enumeration on polyhedral regions and by a 10⁵-point circle grid plus the
/// chord endpoints for one 2-D disc. Returns the optimal value and point;
/// `None` when the intersection is empty.
pub fn brute_lmo(region: &FeasibleRegion, cut: Option<&Halfspace>, c: ArrayView1<'_, f64>) -> Result<Option<(f64, Array1<f64>)>> {
    let n = region.dimension();
    match region.kind() {
        RegionKind::BallProduct { column_dim: 2, radii } if radii.len() == 1 => Ok(disc_lmo(radii[0], cut, c)),
        RegionKind::BallProduct { .. } => Err(Error::Unsupported("brute force covers a single 2-D disc".into())),
        _ => {
            let mut rows = inequality_rows(region)?;
            if let Some(h) = cut {
                rows.push((h.normal.clone(), h.offset));
            }
            Ok(best_vertex(&enumerate_vertices(&rows, n), c))
        }
    }
}

fn disc_lmo(r: f64, cut: Option<&Halfspace>, c: ArrayView1<'_, f64>) -> Option<(f64, Array1<f64>)> {
    let inside = |p: &Array1<f64>| cut.is_none_or(|h| h.residual(p.view()) <= FEAS_TOL * (1.0 + r));
    let mut best: Option<(f64, Array1<f64>)> = None;
    let mut consider = |p: Array1<f64>| {
        if inside(&p) {
            let v = c.dot(&p);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, p));
            }
        }
    };
    for i in 0..CIRCLE_GRID {
        let t = std::f64::consts::TAU * i as f64 / CIRCLE_GRID as f64;
        consider(Array1::from(vec![r * t.cos(), r * t.sin()]));
    }
    if let Some(h) = cut {
        let nn = h.normal.dot(&h.normal);
        if nn > 0.0 {
            // Chord endpoints: foot of the line from the origin ± half-chord.
            let foot = &h.normal * (h.offset / nn);
            let rest = r * r - foot.dot(&foot);
            if rest >= 0.0 {
                let tangent = Array1::from(vec![-h.normal[1], h.normal[0]]) / nn.sqrt();
                let half = rest.sqrt();
                consider(&foot + &(&tangent * half));
                consider(&foot - &(&tangent * half));
            }
        }
    }
    best
}

/// Euclidean projection onto the ℓ₁ ball by enumerating faces: every sign
/// pattern on every support gives a candidate projection onto its affine
/// hull, kept when it lies on that face.
pub fn l1_projection_faces(v: ArrayView1<'_, f64>, radius: f64) -> Array1<f64> {
    let n = v.len();
    if v.iter().map(|x| x.abs()).sum::<f64>() <= radius {
        return v.to_owned();
    }
    let mut best: Option<(f64, Array1<f64>)> = None;
    for support in 1..1usize << n {
        let idx: Vec<usize> = (0..n).filter(|i| support >> i & 1 == 1).collect();
        for signs in 0..1usize << idx.len() {
            let sigma: Vec<f64> = (0..idx.len()).map(|j| if signs >> j & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let dot: f64 = idx.iter().zip(&sigma).map(|(&i, s)| s * v[i]).sum();
            let shift = (dot - radius) / idx.len() as f64;
            let mut x = Array1::zeros(n);
            let mut ok = true;
            for (&i, s) in idx.iter().zip(&sigma) {
                x[i] = v[i] - s * shift;
                if s * x[i] < 0.0 {
                    ok = false;
                }
            }
            if ok {
                let d = (&x - &v).mapv(|t| t * t).sum();
                if best.as_ref().is_none_or(|(b, _)| d < *b) {
                    best = Some((d, x));
                }
            }
        }
    }
    best.map(|(_, x)| x).expect("the vertex faces always give a candidate")
}

/// Euclidean projection onto `{x : ⟨aᵢ, x⟩ ≤ bᵢ}` by enumerating every set of
/// at most `n` rows: `v` is projected onto the affine hull of each set and
/// the nearest feasible candidate wins.
pub fn active_set_projection(rows: &[(Array1<f64>, f64)], v: ArrayView1<'_, f64>) -> Option<Array1<f64>> {
    let n = v.len();
    let scale = 1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let feasible = |x: &Array1<f64>| rows.iter().all(|(a, b)| a.dot(x) - b <= FEAS_TOL * scale);
    let mut best: Option<(f64, Array1<f64>)> = None;
    let mut consider = |x: Array1<f64>| {
        if feasible(&x) {
            let d = (&x - &v).mapv(|t| t * t).sum();
            if best.as_ref().is_none_or(|(b, _)| d < *b) {
                best = Some((d, x));
            }
        }
    };
    consider(v.to_owned());
    let mut subsets: Vec<Vec<usize>> = (0..rows.len()).map(|i| vec![i]).collect();
    for _ in 0..n {
        let mut next = Vec::new();
        for set in &subsets {
            // x = v − Aᵀμ with A A ᵀμ = A v − b.
            let k = set.len();
            let gram = Array2::from_shape_fn((k, k), |(i, j)| rows[set[i]].0.dot(&rows[set[j]].0));
            let rhs = Array1::from_iter(set.iter().map(|&i| rows[i].0.dot(&v) - rows[i].1));
            if let Some(mu) = solve_small(gram, rhs) {
                let mut x = v.to_owned();
                for (&i, m) in set.iter().zip(&mu) {
                    x.scaled_add(-m, &rows[i].0);
                }
                consider(x);
            }
            if k < n {
                for j in set[k - 1] + 1..rows.len() {
                    let mut s = set.clone();
                    s.push(j);
                    next.push(s);
                }
            }
        }
        subsets = next;
    }
    best.map(|(_, x)| x)
}

/// Projection onto the disc of `radius` by scanning the boundary circle and
/// refining the best angle by bisection.
pub fn disc_projection_scan(v: ArrayView1<'_, f64>, radius: f64) -> Array1<f64> {
    if v.dot(&v).sqrt() <= radius {
        return v.to_owned();
    }
    let at = |t: f64| Array1::from(vec![radius * t.cos(), radius * t.sin()]);
    let dist = |t: f64| (&at(t) - &v).mapv(|d| d * d).sum();
    let step = std::f64::consts::TAU / CIRCLE_GRID as f64;
    let best = (0..CIRCLE_GRID)
        .map(|i| i as f64 * step)
        .min_by(|a, b| dist(*a).total_cmp(&dist(*b)))
        .expect("nonempty grid");
    // ⟨at(t), v⟩ is maximal where its derivative changes sign from + to −.
    let slope = |t: f64| -v[0] * t.sin() + v[1] * t.cos();
    let (mut lo, mut hi) = (best - step, best + step);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}
