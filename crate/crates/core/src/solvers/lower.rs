//! Single-objective conditional gradient and the lower-level warm start.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::model::{evaluate, BilevelInstance, FeasibleRegion, Schedule, SmoothOracle, SolveOutcome, SolverConfig, StopReason, TraceRecorder};
use crate::oracles::lmo;

/// How standard CG picks its step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSearch {
    /// Use the configured schedule.
    #[default]
    Schedule,
    /// Sufficient decrease on the quadratic upper model with an adaptive
    /// curvature estimate.
    Backtracking,
    /// Closed-form minimizer along the segment; needs an oracle that reports
    /// directional curvature.
    Exact,
}

const BACKTRACK_GROW: f64 = 2.0;
const BACKTRACK_SHRINK: f64 = 0.9;
const BACKTRACK_MAX_TRIES: usize = 60;

/// Frank-Wolfe on one objective. Row `k` stores the value and FW gap at
/// `x_k`; the run stops when the gap drops to `config.eps_f` (if enabled) or
/// after `config.max_iters` steps. The FW gap goes in `surrogate_f_gap`;
/// `g_val` and `surrogate_g_gap` are NaN.
pub fn standard_cg(
    oracle: &dyn SmoothOracle,
    region: &FeasibleRegion,
    x_start: ArrayView1<'_, f64>,
    config: &SolverConfig,
    line_search: LineSearch,
) -> Result<SolveOutcome> {
    Ok(run_cg(oracle, region, x_start, config, line_search)?.0)
}

/// The run plus the iterate with the smallest FW gap seen.
fn run_cg(
    oracle: &dyn SmoothOracle,
    region: &FeasibleRegion,
    x_start: ArrayView1<'_, f64>,
    config: &SolverConfig,
    line_search: LineSearch,
) -> Result<(SolveOutcome, Array1<f64>)> {
    config.validate()?;
    check_dim(region.dimension(), oracle.dimension())?;
    check_dim(region.dimension(), x_start.len())?;
    let mut x = x_start.to_owned();
    let mut rec = TraceRecorder::new(config.timing, config.record_iterates);
    let mut curvature = oracle.lipschitz_grad().filter(|l| *l > 0.0).unwrap_or(1.0);
    let mut best = (f64::INFINITY, x.clone());
    for k in 0..=config.max_iters {
        let step = (|| -> Result<Option<f64>> {
            let (value, grad) = evaluate(oracle, x.view())?;
            let s = lmo(region, grad.view())?;
            let d = &s - &x;
            let gap = -grad.dot(&d);
            rec.push(k, value, f64::NAN, gap, f64::NAN, &x);
            if gap < best.0 {
                best = (gap, x.clone());
            }
            if config.stop_on_criterion && gap <= config.eps_f {
                return Ok(None);
            }
            if k == config.max_iters {
                return Ok(None);
            }
            let gamma = match line_search {
                LineSearch::Schedule => config.schedule.step(k),
                LineSearch::Exact => {
                    let q = oracle.directional_curvature(x.view(), d.view()).ok_or_else(|| {
                        Error::Config("exact line search needs an oracle with known curvature".into())
                    })?;
                    if q > 0.0 {
                        (gap / q).clamp(0.0, 1.0)
                    } else if gap > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                LineSearch::Backtracking => backtrack(oracle, &x, &d, value, gap, &mut curvature)?,
            };
            x = &x + &(&d * gamma);
            Ok(Some(gamma))
        })();
        match step {
            Ok(Some(_)) => {}
            Ok(None) => break,
            Err(e @ Error::Config(_)) => return Err(e),
            Err(e) if rec.is_empty() => return Err(e),
            Err(e) => return Ok((rec.finish(x, StopReason::OracleFailure(e.to_string())), best.1)),
        }
    }
    let met = is_converged(&rec, config);
    Ok((rec.finish(x, if met { StopReason::CriterionMet } else { StopReason::BudgetExhausted }), best.1))
}

fn is_converged(rec: &TraceRecorder, config: &SolverConfig) -> bool {
    config.stop_on_criterion && rec.last().is_some_and(|row| row.surrogate_f_gap <= config.eps_f)
}

fn backtrack(oracle: &dyn SmoothOracle, x: &Array1<f64>, d: &Array1<f64>, value: f64, gap: f64, curvature: &mut f64) -> Result<f64> {
    let dd = d.dot(d);
    if dd == 0.0 || gap <= 0.0 {
        return Ok(0.0);
    }
    let mut l = (*curvature * BACKTRACK_SHRINK).max(f64::MIN_POSITIVE);
    for _ in 0..BACKTRACK_MAX_TRIES {
        let gamma = (gap / (l * dd)).min(1.0);
        let trial = x + &(d * gamma);
        let trial_value = oracle.value(trial.view())?;
        if trial_value <= value - gamma * gap + 0.5 * gamma * gamma * l * dd {
            *curvature = l;
            return Ok(gamma);
        }
        l *= BACKTRACK_GROW;
    }
    Err(Error::OracleFailure("backtracking line search found no sufficient decrease".into()))
}

/// Warm start for the bilevel solvers, with its FW-gap certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerStart {
    pub point: Array1<f64>,
    /// `⟨∇g(x₀), x₀ − s⟩` over `Z`, an upper bound on `g(x₀) − g*`.
    pub certificate: f64,
    /// Whether `certificate ≤ ε_g/2`.
    pub certified: bool,
    pub iterations: usize,
}

/// Standard CG on `g` with `γ_k = 2/(k+2)` from the region's anchor point,
/// stopping once the FW gap certifies `g(x) − g* ≤ ε_g/2`.
pub fn initialize_lower(instance: &BilevelInstance, eps_g: f64, max_iters: usize) -> Result<LowerStart> {
    let start = instance.region.anchor()?;
    initialize_lower_from(instance, start.view(), eps_g, max_iters, LineSearch::Schedule)
}

/// As [`initialize_lower`] from a chosen start and step rule. When the budget
/// runs out the iterate with the smallest gap is returned uncertified.
pub fn initialize_lower_from(
    instance: &BilevelInstance,
    start: ArrayView1<'_, f64>,
    eps_g: f64,
    max_iters: usize,
    line_search: LineSearch,
) -> Result<LowerStart> {
    if !(eps_g > 0.0) {
        return Err(Error::Config("eps_g must be positive".into()));
    }
    let config = SolverConfig {
        eps_f: 0.5 * eps_g,
        eps_g,
        max_iters: max_iters.max(1),
        schedule: Schedule::Harmonic { shift: 2 },
        timing: false,
        ..SolverConfig::default()
    };
    let (run, point) = run_cg(instance.lower.as_ref(), &instance.region, start, &config, line_search)?;
    if let StopReason::OracleFailure(msg) = &run.stop_reason {
        return Err(Error::OracleFailure(msg.clone()));
    }
    let best = run.best();
    Ok(LowerStart {
        certificate: best.surrogate_f_gap,
        certified: best.surrogate_f_gap <= 0.5 * eps_g,
        iterations: run.iterations(),
        point,
    })
}

/// FW gap of `oracle` over `region` at `x`.
pub fn fw_gap(oracle: &dyn SmoothOracle, region: &FeasibleRegion, x: ArrayView1<'_, f64>) -> Result<f64> {
    let (_, grad) = evaluate(oracle, x)?;
    let s = lmo(region, grad.view())?;
    Ok(grad.dot(&(&x - &s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{Linear, Quadratic};
    use crate::model::FeasibleRegion;
    use ndarray::{array, Array2};
    use std::sync::Arc;

    fn toy() -> BilevelInstance {
        let f = Quadratic::new(array![[1.0, 0.0], [0.0, 0.0]], array![-0.5, 0.1], 0.0).unwrap();
        let g = Linear::new(array![-1.0, -1.0], 0.0);
        let z = FeasibleRegion::polytope(array![[1.0, 1.0], [4.0, 6.0]], array![1.0, 5.0], true).unwrap();
        BilevelInstance::new("toy", Arc::new(f), Arc::new(g), z).unwrap()
    }

    #[test]
    fn boundary_quadratic_converges_to_the_box_edge() {
        let f = Quadratic::new(Array2::eye(1), array![-2.0], 2.0).unwrap();
        let z = FeasibleRegion::boxed(1, -1.0, 1.0).unwrap();
        let config = SolverConfig {
            eps_f: 1e-6,
            max_iters: 5000,
            ..SolverConfig::default()
        };
        let run = standard_cg(&f, &z, array![0.0].view(), &config, LineSearch::Schedule).unwrap();
        assert!((run.final_point[0] - 1.0).abs() < 1e-3);
        assert!(run.last().surrogate_f_gap < 1e-2);
        let exact = standard_cg(&f, &z, array![0.0].view(), &config, LineSearch::Exact).unwrap();
        assert_eq!(exact.stop_reason, StopReason::CriterionMet);
        assert!((exact.final_point[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn toy_lower_level_is_certified_after_one_step() {
        let inst = toy();
        let start = initialize_lower(&inst, 1e-5, 100).unwrap();
        assert!(start.certified);
        assert_eq!(start.iterations, 1);
        assert!(start.certificate.abs() < 1e-12);
        assert!((inst.lower.value(start.point.view()).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_lower_level_needs_no_steps() {
        let z = FeasibleRegion::l1_ball(2, 1.0).unwrap();
        let f = Linear::new(array![1.0, 0.0], 0.0);
        let g = Linear::new(array![0.0, 0.0], 3.0);
        let inst = BilevelInstance::new("flat", Arc::new(f), Arc::new(g), z).unwrap();
        let start = initialize_lower(&inst, 1e-4, 10).unwrap();
        assert!(start.certified);
        assert_eq!(start.iterations, 0);
        assert_eq!(start.point, array![0.0, 0.0]);
    }

    #[test]
    fn backtracking_decreases_the_objective() {
        let f = Quadratic::new(array![[2.0, 0.5], [0.5, 1.0]], array![-0.5, 0.15], 0.0).unwrap();
        let z = FeasibleRegion::l1_ball(2, 1.0).unwrap();
        let config = SolverConfig {
            eps_f: 1e-4,
            max_iters: 5000,
            ..SolverConfig::default()
        };
        let run = standard_cg(&f, &z, array![0.0, 0.0].view(), &config, LineSearch::Backtracking).unwrap();
        assert_eq!(run.stop_reason, StopReason::CriterionMet);
        for pair in run.trace.windows(2) {
            assert!(pair[1].f_val <= pair[0].f_val + 1e-15);
        }
    }
}
