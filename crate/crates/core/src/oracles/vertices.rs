//! Vertex enumeration and diameter bounds for small polytopes.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::Polytope;
use crate::oracles::simplex::{simplex_solve, LpProblem, LpSolution, LpStatus};

/// Above this many candidate bases the diameter falls back to the bounding box.
const MAX_ENUMERATED_BASES: u64 = 200_000;
const VERTEX_TOL: f64 = 1e-9;

/// `min cᵀx` over the polytope, splitting free variables when needed.
pub(crate) fn polytope_lp(poly: &Polytope, c: &Array1<f64>, extra: Option<(&Array1<f64>, f64)>) -> Result<LpSolution> {
    let n = poly.dimension();
    let extra_rows = usize::from(extra.is_some());
    let m = poly.a.nrows() + extra_rows;
    let mut a = Array2::zeros((m, n));
    let mut b = Array1::zeros(m);
    a.slice_mut(ndarray::s![..poly.a.nrows(), ..]).assign(&poly.a);
    b.slice_mut(ndarray::s![..poly.a.nrows()]).assign(&poly.b);
    if let Some((normal, offset)) = extra {
        a.row_mut(m - 1).assign(normal);
        b[m - 1] = offset;
    }
    if poly.nonnegative {
        return simplex_solve(&LpProblem::new(c.clone(), a, b)?);
    }
    // x = x⁺ − x⁻.
    let mut split_a = Array2::zeros((m, 2 * n));
    split_a.slice_mut(ndarray::s![.., ..n]).assign(&a);
    split_a.slice_mut(ndarray::s![.., n..]).assign(&(-&a));
    let mut split_c = Array1::zeros(2 * n);
    split_c.slice_mut(ndarray::s![..n]).assign(c);
    split_c.slice_mut(ndarray::s![n..]).assign(&(-c));
    let sol = simplex_solve(&LpProblem::new(split_c, split_a, b)?)?;
    let point = &sol.point.slice(ndarray::s![..n]) - &sol.point.slice(ndarray::s![n..]);
    let value = if sol.status == LpStatus::Optimal { c.dot(&point) } else { sol.value };
    Ok(LpSolution {
        point,
        value,
        status: sol.status,
    })
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u64) / (i as u64 + 1);
    }
    acc
}

/// Solves a square system by Gaussian elimination with partial pivoting.
fn solve_square(mut m: Array2<f64>, mut rhs: Array1<f64>) -> Option<Array1<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let (piv, val) = (col..n)
            .map(|r| (r, m[[r, col]].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if val < 1e-12 {
            return None;
        }
        if piv != col {
            for j in 0..n {
                m.swap([piv, j], [col, j]);
            }
            rhs.swap(piv, col);
        }
        for r in col + 1..n {
            let f = m[[r, col]] / m[[col, col]];
            if f != 0.0 {
                for j in col..n {
                    m[[r, j]] -= f * m[[col, j]];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut x = Array1::zeros(n);
    for r in (0..n).rev() {
        let mut s = rhs[r];
        for j in r + 1..n {
            s -= m[[r, j]] * x[j];
        }
        x[r] = s / m[[r, r]];
    }
    Some(x)
}

/// All vertices of a small polytope, by intersecting every `d`-subset of its
/// defining hyperplanes. Returns `Unsupported` when that is too many subsets.
pub fn polytope_vertices(poly: &Polytope) -> Result<Vec<Array1<f64>>> {
    let d = poly.dimension();
    let rows = poly.halfspaces();
    let m = rows.len();
    if m < d {
        return Ok(Vec::new());
    }
    if binomial(m, d) > MAX_ENUMERATED_BASES {
        return Err(Error::Unsupported(format!(
            "vertex enumeration over {m} constraints in dimension {d} is too large"
        )));
    }
    let mut vertices: Vec<Array1<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let mut mat = Array2::zeros((d, d));
        let mut rhs = Array1::zeros(d);
        for (r, &i) in idx.iter().enumerate() {
            mat.row_mut(r).assign(&rows[i].0);
            rhs[r] = rows[i].1;
        }
        if let Some(x) = solve_square(mat, rhs) {
            let scale = x.iter().fold(1.0f64, |s, v| s.max(v.abs()));
            if poly.violation(x.view()) <= VERTEX_TOL * scale
                && !vertices
                    .iter()
                    .any(|v| (v - &x).iter().all(|e| e.abs() <= VERTEX_TOL * scale))
            {
                vertices.push(x);
            }
        }
        // Next combination in lexicographic order.
        let mut pos = d;
        while pos > 0 && idx[pos - 1] == m - d + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        idx[pos - 1] += 1;
        for j in pos..d {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(vertices)
}

/// ℓ₂ diameter bound: exact from vertices when enumerable, otherwise the
/// diagonal of the LP bounding box. Rejects empty and unbounded polytopes.
pub(crate) fn polytope_diameter(poly: &Polytope) -> Result<f64> {
    let n = poly.dimension();
    let mut lo = Array1::zeros(n);
    let mut hi = Array1::zeros(n);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut c = Array1::zeros(n);
            c[i] = sign;
            let sol = polytope_lp(poly, &c, None)?;
            match sol.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => return Err(Error::Infeasible("polytope is empty".into())),
                LpStatus::Unbounded => {
                    return Err(Error::Config("polytope is unbounded; regions must be compact".into()))
                }
            }
            if sign > 0.0 {
                lo[i] = sol.value;
            } else {
                hi[i] = -sol.value;
            }
        }
    }
    let box_diag = (&hi - &lo).mapv(|v| v * v).sum().sqrt();
    match polytope_vertices(poly) {
        Ok(vs) if !vs.is_empty() => {
            let mut best: f64 = 0.0;
            for (i, u) in vs.iter().enumerate() {
                for v in &vs[i + 1..] {
                    best = best.max((u - v).mapv(|e| e * e).sum().sqrt());
                }
            }
            Ok(best.min(box_diag))
        }
        _ => Ok(box_diag),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> Polytope {
        Polytope::new(array![[1.0, 1.0], [4.0, 6.0]], array![1.0, 5.0], true).unwrap()
    }

    #[test]
    fn toy_polytope_has_four_vertices() {
        let mut vs = polytope_vertices(&toy()).unwrap();
        vs.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let expected = [[0.0, 0.0], [0.0, 5.0 / 6.0], [0.5, 0.5], [1.0, 0.0]];
        assert_eq!(vs.len(), 4);
        for (v, e) in vs.iter().zip(expected.iter()) {
            assert!((v[0] - e[0]).abs() < 1e-12 && (v[1] - e[1]).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn toy_diameter_is_longest_vertex_pair() {
        let d = polytope_diameter(&toy()).unwrap();
        let expected = (1.0f64 + 25.0 / 36.0).sqrt();
        assert!((d - expected).abs() < 1e-12);
    }

    #[test]
    fn unbounded_polytope_is_rejected() {
        let p = Polytope::new(array![[1.0, -1.0]], array![0.0], true).unwrap();
        assert!(matches!(polytope_diameter(&p), Err(Error::Config(_))));
    }

    #[test]
    fn empty_polytope_is_rejected() {
        let p = Polytope::new(array![[1.0], [-1.0]], array![0.0, -1.0], false).unwrap();
        assert!(matches!(polytope_diameter(&p), Err(Error::Infeasible(_))));
    }
}
