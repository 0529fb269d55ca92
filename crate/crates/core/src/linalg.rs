//! Small dense helpers.

use ndarray::{Array1, Array2, ArrayView1};

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 100_000;
/// Above this size eigenvalues come from power iteration.
const DENSE_EIGEN_MAX: usize = 1000;

/// Largest eigenvalue of a symmetric matrix. Small matrices use a dense
/// symmetric eigensolver; larger ones power iteration on `P + σI`, with `σ` a
/// Gershgorin shift that makes the spectrum nonnegative.
pub fn sym_lambda_max(p: &Array2<f64>) -> f64 {
    let n = p.nrows();
    if n == 0 {
        return 0.0;
    }
    if n <= DENSE_EIGEN_MAX {
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (p[[i, j]] + p[[j, i]]));
        return m.symmetric_eigenvalues().max();
    }
    let shift = p
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if shift == 0.0 {
        return 0.0;
    }
    let apply = |v: &Array1<f64>| p.dot(v) + v * shift;
    power_iterate(n, apply) - shift
}

/// `λ_max(AᵀA)` without forming the Gram matrix when `A` is wide.
pub fn gram_lambda_max(a: &Array2<f64>) -> f64 {
    if a.ncols().min(a.nrows()) <= DENSE_EIGEN_MAX {
        let gram = if a.ncols() <= a.nrows() { a.t().dot(a) } else { a.dot(&a.t()) };
        return sym_lambda_max(&gram).max(0.0);
    }
    if a.ncols() <= a.nrows() {
        power_iterate(a.ncols(), |v| a.t().dot(&a.dot(v)))
    } else {
        power_iterate(a.nrows(), |v| a.dot(&a.t().dot(v)))
    }
}

fn power_iterate(n: usize, apply: impl Fn(&Array1<f64>) -> Array1<f64>) -> f64 {
    // Deterministic start with every coordinate nonzero.
    let mut v = Array1::from_iter((0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64));
    v /= norm(v.view());
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = apply(&v);
        let next = v.dot(&w);
        let wn = norm(w.view());
        if wn == 0.0 {
            return 0.0;
        }
        v = w / wn;
        if (next - lambda).abs() <= POWER_TOL * next.abs().max(1e-300) {
            return next.max(wn).max(lambda);
        }
        lambda = next;
    }
    lambda
}

pub fn norm(v: ArrayView1<'_, f64>) -> f64 {
    v.dot(&v).sqrt()
}

pub fn l1_norm(v: ArrayView1<'_, f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn lambda_max_of_diagonal() {
        let p = array![[3.0, 0.0], [0.0, 1.0]];
        assert!((sym_lambda_max(&p) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn lambda_max_handles_negative_spectrum() {
        let p = array![[-5.0, 0.0], [0.0, -1.0]];
        assert!((sym_lambda_max(&p) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn gram_lambda_max_wide_and_tall_agree() {
        let a = array![[1.0, 2.0, 0.0], [0.0, 1.0, 1.0]];
        let tall = a.t().to_owned();
        let wide = gram_lambda_max(&a);
        let from_tall = gram_lambda_max(&tall);
        assert!((wide - from_tall).abs() < 1e-9);
        let exact = sym_lambda_max(&a.t().dot(&a));
        assert!((wide - exact).abs() < 1e-9);
    }

    #[test]
    fn power_iteration_matches_dense_eigenvalues() {
        let a = Array2::from_shape_fn((5, 5), |(i, j)| ((i * 3 + j * 5) % 7) as f64 - 3.0);
        let p = &a + &a.t();
        let shift = p.rows().into_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let power = power_iterate(5, |v| p.dot(v) + v * shift) - shift;
        assert!((power - sym_lambda_max(&p)).abs() < 1e-6 * shift);
    }
}
