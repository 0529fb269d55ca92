//! Convex-hull helpers for small vertex lists.

use ndarray::{Array1, Array2, ArrayView1};

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: ArrayView1<'_, f64>) -> Array1<f64> {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.mapv(|x| (x - theta).max(0.0))
}

/// `Σ wᵢ vᵢ`.
pub fn combine(vertices: &[Array1<f64>], weights: ArrayView1<'_, f64>) -> Array1<f64> {
    let mut out = Array1::zeros(vertices[0].len());
    for (v, w) in vertices.iter().zip(weights.iter()) {
        out.scaled_add(*w, v);
    }
    out
}

/// Solves a small square system by Gaussian elimination with partial
/// pivoting; `None` when numerically singular.
pub fn solve_small(mut a: Array2<f64>, mut b: Array1<f64>) -> Option<Array1<f64>> {
    let n = b.len();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[[i, col]].abs().total_cmp(&a[[j, col]].abs()))?;
        if a[[piv, col]].abs() <= 1e-12 * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap([piv, k], [col, k]);
            }
            b.swap(piv, col);
        }
        for r in col + 1..n {
            let factor = a[[r, col]] / a[[col, col]];
            if factor != 0.0 {
                for k in col..n {
                    a[[r, k]] -= factor * a[[col, k]];
                }
                b[r] -= factor * b[col];
            }
        }
    }
    let mut x = Array1::zeros(n);
    for r in (0..n).rev() {
        let mut acc = b[r];
        for k in r + 1..n {
            acc -= a[[r, k]] * x[k];
        }
        x[r] = acc / a[[r, r]];
    }
    Some(x)
}

/// Distance from `x` to the convex hull of `vertices`, by trying the affine
/// projection onto every vertex subset and keeping those with nonnegative
/// barycentric weights. Meant for a handful of vertices.
pub fn distance_to_hull(vertices: &[Array1<f64>], x: ArrayView1<'_, f64>) -> f64 {
    nearest_in_hull(vertices, x).1
}

/// Nearest hull point and its distance.
pub fn nearest_in_hull(vertices: &[Array1<f64>], x: ArrayView1<'_, f64>) -> (Array1<f64>, f64) {
    assert!(!vertices.is_empty() && vertices.len() <= 16, "hull helpers expect 1..=16 vertices");
    let mut best = (vertices[0].clone(), f64::INFINITY);
    for mask in 1u32..(1 << vertices.len()) {
        let subset: Vec<&Array1<f64>> = (0..vertices.len()).filter(|i| mask & (1 << i) != 0).map(|i| &vertices[i]).collect();
        let Some(p) = affine_projection(&subset, x) else { continue };
        let dist = (&p - &x).mapv(|d| d * d).sum().sqrt();
        if dist < best.1 {
            best = (p, dist);
        }
    }
    best
}

/// Projection of `x` onto the affine hull of `pts` when its barycentric
/// weights are all nonnegative.
fn affine_projection(pts: &[&Array1<f64>], x: ArrayView1<'_, f64>) -> Option<Array1<f64>> {
    let base = pts[0];
    let k = pts.len() - 1;
    if k == 0 {
        return Some(base.clone());
    }
    let dirs: Vec<Array1<f64>> = pts[1..].iter().map(|p| *p - base).collect();
    let mut gram = Array2::zeros((k, k));
    let mut rhs = Array1::zeros(k);
    let rel = &x - base;
    for i in 0..k {
        for j in 0..k {
            gram[[i, j]] = dirs[i].dot(&dirs[j]);
        }
        rhs[i] = dirs[i].dot(&rel);
    }
    let t = solve_small(gram, rhs)?;
    let w0 = 1.0 - t.sum();
    if w0 < -1e-12 || t.iter().any(|v| *v < -1e-12) {
        return None;
    }
    let mut p = base.clone();
    for (d, ti) in dirs.iter().zip(t.iter()) {
        p.scaled_add(*ti, d);
    }
    Some(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn simplex_projection_sums_to_one() {
        let p = project_simplex(array![0.4, 0.9, -0.2].view());
        assert!((p.sum() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|v| *v >= 0.0));
        assert_eq!(project_simplex(array![0.25, 0.75].view()), array![0.25, 0.75]);
    }

    #[test]
    fn distance_to_segment() {
        let seg = [array![0.5, 0.5], array![1.0, 0.0]];
        let d = distance_to_hull(&seg, array![0.0, 5.0 / 6.0].view());
        assert!((d - (0.25f64 + 1.0 / 9.0).sqrt()).abs() < 1e-12);
        assert!(distance_to_hull(&seg, array![0.75, 0.25].view()) < 1e-15);
        let d = distance_to_hull(&seg, array![0.5, 0.0].view());
        assert!((d - 0.5f64.sqrt() / 2.0).abs() < 1e-12);
    }
}
