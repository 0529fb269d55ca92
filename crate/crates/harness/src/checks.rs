//! Runtime checks of the convergence guarantees against recorded traces.

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use bilevel_core::linalg::norm;
use bilevel_core::model::{check_membership, cutting_plane_from, evaluate, BilevelInstance, FeasibleRegion, Schedule, SolveOutcome, SmoothOracle};
use bilevel_core::{Error, Result};

use crate::geometry::combine;
use crate::hoelder::{extreme_points, random_weights};
use crate::metrics::true_fw_gap;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn from_result(name: impl Into<String>, r: Result<CheckResult>) -> Self {
        let name = name.into();
        match r {
            Ok(mut c) => {
                c.name = name;
                c
            }
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

fn iterates(outcome: &SolveOutcome) -> Result<Vec<&Array1<f64>>> {
    outcome
        .trace
        .iter()
        .map(|r| r.iterate.as_ref())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Config("check needs a trace recorded with iterates".into()))
}

fn lipschitz(oracle: &dyn SmoothOracle, which: &str) -> Result<f64> {
    oracle
        .lipschitz_grad()
        .ok_or_else(|| Error::Config(format!("{which} Lipschitz constant unknown")))
}

/// Per-step improvement bounds of a CG-BiO trace:
/// `f_{k+1} ≤ f_k − γ_k·gap_k + ½γ_k²L_f D²` and
/// `g_{k+1} ≤ (1 − γ_k)g_k + γ_k g_0 + ½γ_k²L_g D²`.
pub fn lemma2_check(instance: &BilevelInstance, outcome: &SolveOutcome, schedule: &Schedule, slack: f64) -> Result<CheckResult> {
    let lf = lipschitz(instance.upper.as_ref(), "upper")?;
    let lg = lipschitz(instance.lower.as_ref(), "lower")?;
    let d2 = instance.region.diameter().powi(2);
    let g0 = outcome.trace[0].g_val;
    let mut worst_f = f64::NEG_INFINITY;
    let mut worst_g = f64::NEG_INFINITY;
    for w in outcome.trace.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let gamma = schedule.step(a.k);
        let rhs_f = a.f_val - gamma * a.surrogate_f_gap + 0.5 * gamma * gamma * lf * d2;
        let rhs_g = (1.0 - gamma) * a.g_val + gamma * g0 + 0.5 * gamma * gamma * lg * d2;
        worst_f = worst_f.max(b.f_val - rhs_f);
        worst_g = worst_g.max(b.g_val - rhs_g);
    }
    let passed = outcome.trace.len() < 2 || (worst_f <= slack && worst_g <= slack);
    Ok(CheckResult::new(
        "lemma2",
        passed,
        format!("{} steps, worst f excess {worst_f:e}, worst g excess {worst_g:e}", outcome.trace.len().saturating_sub(1)),
    ))
}

/// Every sampled point of the optimal face satisfies every cut generated from
/// the trace's iterates, with residuals relative to `|b| + ‖a‖‖p‖`.
pub fn lemma1_check(instance: &BilevelInstance, outcome: &SolveOutcome, samples: usize, seed: u64, slack: f64) -> Result<CheckResult> {
    let vertices = instance
        .reference
        .lower_solution_vertices
        .as_deref()
        .ok_or_else(|| Error::Unsupported("lemma 1 check needs the optimal face".into()))?;
    let xs = iterates(outcome)?;
    let g = instance.lower.as_ref();
    let g0 = evaluate(g, xs[0].view())?.0;
    let cuts = xs.iter().map(|x| cutting_plane_from(g, g0, x.view())).collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Array1<f64>> = vertices.to_vec();
    while points.len() < samples.max(vertices.len()) {
        points.push(combine(vertices, random_weights(&mut rng, vertices.len()).view()));
    }
    let mut worst = f64::NEG_INFINITY;
    for p in &points {
        for h in &cuts {
            let scale = h.offset.abs() + norm(h.normal.view()) * norm(p.view());
            worst = worst.max(h.residual(p.view()) / scale.max(1.0));
        }
    }
    Ok(CheckResult::new(
        "lemma1",
        worst <= slack,
        format!("{} points x {} cuts, worst relative residual {worst:e}", points.len(), cuts.len()),
    ))
}

/// `f(x_K) − f* ≤ 2L_f D²/(K+1)` for `K ≥ 1` and
/// `g(x_K) − g* ≤ 2L_g D²/(K+1) + ε_g/2` for `K ≥ 0`.
pub fn theorem1_check(instance: &BilevelInstance, outcome: &SolveOutcome, f_star: f64, g_star: f64, eps_g: f64, slack: f64) -> Result<CheckResult> {
    let lf = lipschitz(instance.upper.as_ref(), "upper")?;
    let lg = lipschitz(instance.lower.as_ref(), "lower")?;
    let d2 = instance.region.diameter().powi(2);
    let mut worst_f = f64::NEG_INFINITY;
    let mut worst_g = f64::NEG_INFINITY;
    for row in &outcome.trace {
        let k1 = (row.k + 1) as f64;
        if row.k >= 1 {
            worst_f = worst_f.max(row.f_val - f_star - 2.0 * lf * d2 / k1);
        }
        worst_g = worst_g.max(row.g_val - g_star - 2.0 * lg * d2 / k1 - 0.5 * eps_g);
    }
    Ok(CheckResult::new(
        "theorem1",
        worst_f <= slack && worst_g <= slack,
        format!("K ≤ {}, worst f excess {worst_f:e}, worst g excess {worst_g:e}", outcome.iterations()),
    ))
}

/// Iteration count `⌈2(f(x₀) − f̲)·max{L_f D²/ε_f², L_g D²/(ε_f ε_g)}⌉`.
pub fn theorem2_iterations(instance: &BilevelInstance, f_x0: f64, f_lower: f64, eps_f: f64, eps_g: f64) -> Result<usize> {
    let lf = lipschitz(instance.upper.as_ref(), "upper")?;
    let lg = lipschitz(instance.lower.as_ref(), "lower")?;
    let d2 = instance.region.diameter().powi(2);
    let k = 2.0 * (f_x0 - f_lower).max(0.0) * (lf * d2 / (eps_f * eps_f)).max(lg * d2 / (eps_f * eps_g));
    if !k.is_finite() || k > 1e9 {
        return Err(Error::Config(format!("theorem iteration count {k:e} is out of range")));
    }
    Ok((k.ceil() as usize).max(1))
}

/// `min_k gap_k ≤ ε_f` over rows `0..K` and `g(x_{k*}) − g* ≤ ε_g` at the
/// minimizing row.
pub fn theorem2_check(outcome: &SolveOutcome, k_budget: usize, g_star: f64, eps_f: f64, eps_g: f64) -> Result<CheckResult> {
    let rows = &outcome.trace[..outcome.trace.len().min(k_budget.max(1))];
    let (k_star, row) = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.surrogate_f_gap.is_finite())
        .min_by(|a, b| a.1.surrogate_f_gap.total_cmp(&b.1.surrogate_f_gap))
        .ok_or_else(|| Error::Config("trace has no finite gaps".into()))?;
    let g_excess = row.g_val - g_star;
    Ok(CheckResult::new(
        "theorem2",
        row.surrogate_f_gap <= eps_f && g_excess <= eps_g,
        format!("K = {k_budget}, k* = {k_star}, gap {:e}, g excess {g_excess:e}", row.surrogate_f_gap),
    ))
}

/// Lower bound on `min_Z f`: grid minimum of `f(y) − ‖∇f(y)‖ρ − ½L_f ρ²` over a
/// `per_axis` grid on the bounding box of `Z`, `ρ` the grid covering radius.
/// Dimension ≤ 3.
pub fn grid_lower_bound(f: &dyn SmoothOracle, region: &FeasibleRegion, per_axis: usize) -> Result<f64> {
    let n = region.dimension();
    if n > 3 || per_axis < 2 {
        return Err(Error::Unsupported("grid lower bound needs dimension ≤ 3 and at least 2 points per axis".into()));
    }
    let lf = lipschitz(f, "upper")?;
    let ext = extreme_points(region)?;
    let lo = Array1::from_shape_fn(n, |j| ext.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min));
    let hi = Array1::from_shape_fn(n, |j| ext.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max));
    let h = (&hi - &lo) / (per_axis - 1) as f64;
    let rho = 0.5 * h.dot(&h).sqrt();
    let mut best = f64::INFINITY;
    for idx in 0..per_axis.pow(n as u32) {
        let mut rest = idx;
        let y = Array1::from_shape_fn(n, |j| {
            let i = rest % per_axis;
            rest /= per_axis;
            lo[j] + h[j] * i as f64
        });
        let (v, grad) = evaluate(f, y.view())?;
        best = best.min(v - grad.dot(&grad).sqrt() * rho - 0.5 * lf * rho * rho);
    }
    Ok(best)
}

/// `true FW gap ≤ surrogate gap + slack` at every recorded iterate.
pub fn surrogate_domination_check(instance: &BilevelInstance, outcome: &SolveOutcome, slack: f64) -> Result<CheckResult> {
    let xs = iterates(outcome)?;
    let mut worst = f64::NEG_INFINITY;
    for (x, row) in xs.iter().zip(&outcome.trace) {
        worst = worst.max(true_fw_gap(instance, x.view())? - row.surrogate_f_gap);
    }
    Ok(CheckResult::new("surrogate_domination", worst <= slack, format!("worst excess {worst:e}")))
}

/// Every recorded iterate lies in `Z` within `tol`.
pub fn feasibility_check(instance: &BilevelInstance, outcome: &SolveOutcome, tol: f64) -> Result<CheckResult> {
    let xs = iterates(outcome)?;
    let outside = xs.iter().filter(|x| !check_membership(&instance.region, x.view(), tol)).count();
    Ok(CheckResult::new("feasibility", outside == 0, format!("{outside} of {} iterates outside Z", xs.len())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use bilevel_core::model::SolverConfig;
    use bilevel_core::problems::toy_problem;
    use bilevel_core::solvers::cg_bio;
    use ndarray::array;

    fn toy_run(stop: bool) -> (BilevelInstance, SolveOutcome, SolverConfig) {
        let inst = toy_problem();
        let cfg = SolverConfig {
            eps_f: 1e-5,
            eps_g: 1e-5,
            max_iters: 200,
            record_iterates: true,
            stop_on_criterion: stop,
            timing: false,
            ..SolverConfig::default()
        };
        let run = cg_bio(&inst, array![0.5, 0.5].view(), &cfg).unwrap();
        (inst, run, cfg)
    }

    #[test]
    fn toy_passes_every_check() {
        let (inst, run, cfg) = toy_run(false);
        assert!(lemma2_check(&inst, &run, &cfg.schedule, 1e-8).unwrap().passed);
        assert!(lemma1_check(&inst, &run, 500, 1, 1e-10).unwrap().passed);
        assert!(theorem1_check(&inst, &run, -0.08, -1.0, cfg.eps_g, 1e-8).unwrap().passed);
        assert!(surrogate_domination_check(&inst, &run, 1e-8).unwrap().passed);
        assert!(feasibility_check(&inst, &run, 1e-9).unwrap().passed);
    }

    #[test]
    fn lemma2_detects_a_tampered_trace() {
        let (inst, mut run, cfg) = toy_run(true);
        run.trace[3].f_val += 1.0;
        assert!(!lemma2_check(&inst, &run, &cfg.schedule, 1e-8).unwrap().passed);
    }

    #[test]
    fn grid_bound_is_below_the_minimum() {
        let inst = toy_problem();
        let lb = grid_lower_bound(inst.upper.as_ref(), &inst.region, 101).unwrap();
        // min over Z of ½x₁² − ½x₁ + 0.1x₂ is −0.125 at (0.5, 0).
        assert!(lb <= -0.125 && lb > -0.13, "{lb}");
    }

    #[test]
    fn theorem2_iteration_count() {
        let inst = toy_problem();
        let d2 = inst.region.diameter().powi(2);
        let k = theorem2_iterations(&inst, 0.1, -0.125, 0.1, 0.1).unwrap();
        assert_eq!(k, (2.0 * 0.225 * d2 / 0.01f64).ceil() as usize);
    }
}
