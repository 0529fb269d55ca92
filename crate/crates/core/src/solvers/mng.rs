//! Minimal norm gradient method for convex quadratic upper objectives.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::model::{BilevelInstance, QuadraticForm, SolveOutcome, SolverConfig};
use crate::oracles::project;
use crate::solvers::baselines::{known_positive, run_projected, MngConfig};

const CASE_TOL: f64 = 1e-9;

/// `x⁺ = argmin f` over `Q_k ∩ W_k` with
/// `Q_k = {z : ⟨G, x_k − z⟩ ≥ ‖G‖²·3/(4M)}` for the gradient mapping
/// `G = M[x_k − Π_Z(x_k − ∇g/M)]` and `W_k = {z : ⟨∇f(x_k), z − x_k⟩ ≥ 0}`.
/// Iterates are not projected onto `Z`.
pub fn mng(instance: &BilevelInstance, cfg: &MngConfig, x0: ArrayView1<'_, f64>, run: &SolverConfig) -> Result<SolveOutcome> {
    if !(cfg.m > 0.0 && cfg.m.is_finite()) {
        return Err(Error::Config(format!("MNG constant must be positive, got {}", cfg.m)));
    }
    if let Ok(lg) = known_positive(instance.lower.lipschitz_grad(), "lower") {
        if cfg.m < lg * (1.0 - 1e-12) {
            return Err(Error::Config(format!("MNG constant {} is below L_g = {lg}", cfg.m)));
        }
    }
    let form = instance
        .upper
        .quadratic_form()
        .ok_or_else(|| Error::Config("MNG needs an explicit quadratic upper objective".into()))?;
    let region = &instance.region;
    run_projected(instance, x0, run, |_, x, _, grad_f, _, grad_g| {
        let shifted = project(region, (x - &(grad_g / cfg.m)).view())?;
        let mapping = (x - &shifted) * cfg.m;
        let cuts = [
            (mapping.clone(), mapping.dot(x) - 0.75 / cfg.m * mapping.dot(&mapping)),
            (-grad_f, -grad_f.dot(x)),
        ];
        minimize_over_halfspaces(&form, &cuts)
    })
}

/// Minimizes a convex quadratic over at most two halfspaces `⟨a, z⟩ ≤ b` by
/// trying every active set and keeping the best feasible candidate. A zero
/// normal with `b ≥ 0` is dropped as vacuous.
pub fn minimize_over_halfspaces(form: &QuadraticForm, cuts: &[(Array1<f64>, f64)]) -> Result<Array1<f64>> {
    let mut live = Vec::new();
    for (a, b) in cuts {
        let na = a.dot(a).sqrt();
        if na == 0.0 {
            if *b < -CASE_TOL {
                return Err(Error::OracleFailure("empty MNG subproblem".into()));
            }
            continue;
        }
        live.push((a, *b, na));
    }
    let n = form.dimension();
    let mut best: Option<(f64, Array1<f64>)> = None;
    for mask in 0u32..(1 << live.len()) {
        let active: Vec<_> = live.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, c)| c).collect();
        let Some(z) = solve_kkt(form, &active, n) else { continue };
        let feasible = live.iter().all(|(a, b, na)| a.dot(&z) - b <= CASE_TOL * na.max(1.0) * (1.0 + b.abs()));
        if !feasible {
            continue;
        }
        let value = form.value(z.view());
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, z));
        }
    }
    best.map(|(_, z)| z).ok_or_else(|| Error::OracleFailure("every MNG active set is infeasible".into()))
}

/// Min-norm least-squares solution of the equality-constrained KKT system;
/// `None` when the system is inconsistent.
fn solve_kkt(form: &QuadraticForm, active: &[&(&Array1<f64>, f64, f64)], n: usize) -> Option<Array1<f64>> {
    let m = active.len();
    let size = n + m;
    let mut kkt = DMatrix::<f64>::zeros(size, size);
    let mut rhs = DVector::<f64>::zeros(size);
    for i in 0..n {
        for j in 0..n {
            kkt[(i, j)] = form.hessian[[i, j]];
        }
        rhs[i] = -form.linear[i];
    }
    for (r, (a, b, _)) in active.iter().enumerate() {
        for i in 0..n {
            kkt[(n + r, i)] = a[i];
            kkt[(i, n + r)] = a[i];
        }
        rhs[n + r] = *b;
    }
    let svd = kkt.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-12 * size as f64;
    let sol = svd.solve(&rhs, eps).ok()?;
    let residual = (&kkt * &sol - &rhs).norm();
    if residual > 1e-8 * (1.0 + rhs.norm()) * (1.0 + smax) {
        return None;
    }
    Some(Array1::from_iter(sol.iter().take(n).copied()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn halfspace_pushes_the_minimizer_to_its_boundary() {
        let form = QuadraticForm::new(Array2::eye(2), array![0.0, 0.0], 0.0).unwrap();
        let z = minimize_over_halfspaces(&form, &[(array![-1.0, 0.0], -1.0)]).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-10 && z[1].abs() < 1e-10, "{z:?}");
    }

    #[test]
    fn vacuous_cut_leaves_the_unconstrained_minimizer() {
        let form = QuadraticForm::new(Array2::eye(2), array![-1.0, 2.0], 0.0).unwrap();
        let z = minimize_over_halfspaces(&form, &[(array![0.0, 0.0], 0.0)]).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-10 && (z[1] + 2.0).abs() < 1e-10);
    }

    #[test]
    fn singular_hessian_uses_min_norm_solution() {
        // f = ½z₁², minimized over z₂ ≥ 1: any (0, t ≥ 1) is optimal.
        let form = QuadraticForm::new(array![[1.0, 0.0], [0.0, 0.0]], array![0.0, 0.0], 0.0).unwrap();
        let z = minimize_over_halfspaces(&form, &[(array![0.0, -1.0], -1.0)]).unwrap();
        assert!(z[0].abs() < 1e-10 && z[1] >= 1.0 - 1e-10, "{z:?}");
    }
}
