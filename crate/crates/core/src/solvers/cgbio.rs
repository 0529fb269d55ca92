//! Cutting-plane conditional gradient for simple bilevel problems.

use ndarray::ArrayView1;

use crate::error::{check_dim, Error, Result};
use crate::model::{cutting_plane_parts, evaluate, BilevelInstance, SolveOutcome, SolverConfig, StopReason, TraceRecorder};
use crate::oracles::{halfspace_lmo, lmo};
use crate::solvers::lower::fw_gap;

/// Runs CG-BiO from `x0`.
///
/// `x0` must lie in `Z` and carry a lower-level FW gap of at most `ε_g/2`;
/// this is checked with one LMO call before the first iteration. Row `k`
/// holds `f(x_k)`, `g(x_k)` and both surrogate gaps at `x_k`. The run stops at
/// the first `k` with `⟨∇f, x_k − s_k⟩ ≤ ε_f` and `⟨∇g, x_k − s_k⟩ ≤ ε_g/2`
/// (unless disabled), otherwise after `max_iters` steps.
pub fn cg_bio(instance: &BilevelInstance, x0: ArrayView1<'_, f64>, config: &SolverConfig) -> Result<SolveOutcome> {
    config.validate()?;
    check_dim(instance.dimension(), x0.len())?;
    let region = &instance.region;
    if !crate::model::check_membership(region, x0, region.tolerance().max(1e-8)) {
        return Err(Error::Config("starting point lies outside the feasible region".into()));
    }
    let certificate = fw_gap(instance.lower.as_ref(), region, x0)?;
    if certificate > 0.5 * config.eps_g {
        return Err(Error::Config(format!(
            "starting point is not certified: lower-level FW gap {certificate:e} exceeds eps_g/2 = {:e}",
            0.5 * config.eps_g
        )));
    }
    cg_bio_unchecked(instance, x0, config)
}

/// [`cg_bio`] without the warm-start certificate check, for callers that
/// certified `x0` by other means.
pub fn cg_bio_unchecked(instance: &BilevelInstance, x0: ArrayView1<'_, f64>, config: &SolverConfig) -> Result<SolveOutcome> {
    run(instance, x0, config, true)
}

/// Standard CG on the upper level over all of `Z`, ignoring `g` except in the
/// trace. Stops on `⟨∇f, x_k − s_k⟩ ≤ ε_f` alone.
pub fn cg_upper(instance: &BilevelInstance, x0: ArrayView1<'_, f64>, config: &SolverConfig) -> Result<SolveOutcome> {
    check_dim(instance.dimension(), x0.len())?;
    if !crate::model::check_membership(&instance.region, x0, instance.region.tolerance().max(1e-8)) {
        return Err(Error::Config("starting point lies outside the feasible region".into()));
    }
    run(instance, x0, config, false)
}

fn run(instance: &BilevelInstance, x0: ArrayView1<'_, f64>, config: &SolverConfig, with_cut: bool) -> Result<SolveOutcome> {
    config.validate()?;
    check_dim(instance.dimension(), x0.len())?;
    let f = instance.upper.as_ref();
    let g = instance.lower.as_ref();
    let region = &instance.region;
    let mut rec = TraceRecorder::new(config.timing, config.record_iterates);
    let mut x = x0.to_owned();
    let g0 = evaluate(g, x.view())?.0;
    for k in 0..=config.max_iters {
        let step = (|| -> Result<bool> {
            let (f_val, grad_f) = evaluate(f, x.view())?;
            let (g_val, grad_g) = evaluate(g, x.view())?;
            let s = if with_cut {
                let cut = cutting_plane_parts(grad_g.clone(), g0, g_val, x.view());
                halfspace_lmo(region, &cut, grad_f.view())?
            } else {
                lmo(region, grad_f.view())?
            };
            let d = &s - &x;
            let gap_f = -grad_f.dot(&d);
            let gap_g = -grad_g.dot(&d);
            rec.push(k, f_val, g_val, gap_f, gap_g, &x);
            if config.stop_on_criterion && gap_f <= config.eps_f && (!with_cut || gap_g <= 0.5 * config.eps_g) {
                return Ok(true);
            }
            if k == config.max_iters {
                return Ok(false);
            }
            let gamma = config.schedule.step(k);
            x = &x + &(&d * gamma);
            Ok(false)
        })();
        match step {
            Ok(true) => return Ok(rec.finish(x, StopReason::CriterionMet)),
            Ok(false) => {}
            Err(e) if rec.is_empty() => return Err(e),
            Err(e) => return Ok(rec.finish(x, StopReason::OracleFailure(e.to_string()))),
        }
    }
    Ok(rec.finish(x, StopReason::BudgetExhausted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{Linear, Quadratic};
    use crate::model::{FeasibleRegion, Schedule};
    use ndarray::array;
    use std::sync::Arc;

    fn toy() -> BilevelInstance {
        let f = Quadratic::new(array![[1.0, 0.0], [0.0, 0.0]], array![-0.5, 0.1], 0.0).unwrap();
        let g = Linear::new(array![-1.0, -1.0], 0.0);
        let z = FeasibleRegion::polytope(array![[1.0, 1.0], [4.0, 6.0]], array![1.0, 5.0], true).unwrap();
        BilevelInstance::new("toy", Arc::new(f), Arc::new(g), z).unwrap()
    }

    fn config(eps: f64) -> SolverConfig {
        SolverConfig {
            eps_f: eps,
            eps_g: eps,
            max_iters: 1000,
            schedule: Schedule::Harmonic { shift: 2 },
            timing: false,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn toy_stops_near_the_bilevel_optimum() {
        let run = cg_bio(&toy(), array![0.5, 0.5].view(), &config(1e-5)).unwrap();
        assert_eq!(run.stop_reason, StopReason::CriterionMet);
        assert!(run.iterations() <= 40, "{}", run.iterations());
        let x = &run.final_point;
        assert!(((x[0] - 0.6).powi(2) + (x[1] - 0.4).powi(2)).sqrt() < 1e-2, "{x:?}");
    }

    #[test]
    fn uncertified_start_is_rejected() {
        let err = cg_bio(&toy(), array![0.0, 0.0].view(), &config(1e-5)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn aligned_objectives_stop_immediately() {
        let g = Linear::new(array![-1.0, -1.0], 0.0);
        let z = FeasibleRegion::polytope(array![[1.0, 1.0], [4.0, 6.0]], array![1.0, 5.0], true).unwrap();
        let inst = BilevelInstance::new("same", Arc::new(g.clone()), Arc::new(g), z).unwrap();
        let run = cg_bio(&inst, array![1.0, 0.0].view(), &config(1e-6)).unwrap();
        assert_eq!(run.stop_reason, StopReason::CriterionMet);
        assert_eq!(run.iterations(), 0);
        assert_eq!(run.final_point, array![1.0, 0.0]);
    }

    #[test]
    fn upper_only_run_leaves_the_optimal_face() {
        // f alone is minimized at (0.5, 0), where g = −0.5.
        let cfg = SolverConfig {
            stop_on_criterion: false,
            ..config(1e-5)
        };
        let run = cg_upper(&toy(), array![0.5, 0.5].view(), &cfg).unwrap();
        let last = run.last();
        assert!((last.f_val + 0.125).abs() < 1e-3, "{}", last.f_val);
        assert!(last.g_val > -0.6);
    }
}
