//! Invariant suites: each group runs its instances and returns one
//! [`CheckResult`] per property checked.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bilevel_core::linalg::norm;
use bilevel_core::model::{
    evaluate, BilevelInstance, FeasibleRegion, Halfspace, Schedule, SmoothOracle, SolveOutcome, SolverConfig,
};
use bilevel_core::oracles::simplex::{simplex_solve, LpProblem, LpStatus};
use bilevel_core::oracles::{halfspace_lmo, lmo, project};
use bilevel_core::problems::{
    dictionary_problem, fair_synthetic, random_polytope_instance, regression_synthetic, toy_problem, DictLearnSpec,
    FairSpec, LowerKind, RandomSpec, RegressionSpec,
};
use bilevel_core::solvers::{a_irg, big_sam, cg_bio, dbgd, AIrgConfig, BigSamConfig, DbgdConfig};
use bilevel_core::{Error, Result};

use crate::brute::{active_set_projection, inequality_rows, brute_lmo, brute_lp, disc_projection_scan, l1_projection_faces};
use crate::checks::{
    grid_lower_bound, lemma1_check, lemma2_check, surrogate_domination_check, theorem1_check, theorem2_check,
    theorem2_iterations, CheckResult,
};
use crate::experiments::{family_defaults, prepare, run_solver, Family, InstanceSpec, SolverKind};
use crate::hoelder::{corollary1_eps_g, hoelder_estimate, proposition1_check, random_weights};

/// Group names accepted by [`run_group`].
pub const GROUPS: [&str; 8] = ["lemma1", "lemma2", "theorem1", "theorem2", "prop1", "oracles", "gradients", "experiments"];

/// Sizes of every suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    pub random_instances: usize,
    pub k_max: usize,
    pub lemma1_samples: usize,
    pub oracle_instances: usize,
    pub gradient_points: usize,
    pub prop1_samples: usize,
    pub experiment_iters: usize,
}

impl Default for Scale {
    fn default() -> Self {
        Self {
            random_instances: 20,
            k_max: 500,
            lemma1_samples: 10_000,
            oracle_instances: 100,
            gradient_points: 100,
            prop1_samples: 1000,
            experiment_iters: 1000,
        }
    }
}

/// A CG-BiO run kept for the per-step checks.
#[derive(Debug, Clone)]
pub struct CgRun {
    pub label: String,
    pub instance: BilevelInstance,
    pub outcome: SolveOutcome,
    pub schedule: Schedule,
}

fn ok(label: impl Into<String>, r: Result<CheckResult>) -> CheckResult {
    CheckResult::from_result(label, r)
}

/// The toy plus seeded random 2-D and 3-D polytope instances, alternating
/// linear and squared lower levels.
pub fn convex_suite_specs(count: usize) -> Vec<InstanceSpec> {
    let mut specs = vec![InstanceSpec::Toy];
    for i in 0..count {
        specs.push(InstanceSpec::Random(RandomSpec {
            dim: 2 + i % 2,
            seed: i as u64,
            lower: if i % 4 < 2 { LowerKind::Linear } else { LowerKind::Squared },
        }));
    }
    specs
}

const CONVEX_EPS_G: f64 = 1e-6;
const SLACK: f64 = 1e-8;

/// Theorem 1 bounds at every `K ≤ k_max` plus surrogate domination, on the
/// convex suite. Returns the runs for the per-step checks.
pub fn theorem1_group(scale: &Scale) -> (Vec<CheckResult>, Vec<CgRun>) {
    let mut checks = Vec::new();
    let mut runs = Vec::new();
    for spec in convex_suite_specs(scale.random_instances) {
        let label = spec.to_string();
        let r = (|| -> Result<(CheckResult, CheckResult, CgRun)> {
            let p = prepare(&spec, CONVEX_EPS_G)?;
            let cfg = SolverConfig {
                eps_f: 1e-12,
                eps_g: CONVEX_EPS_G,
                max_iters: scale.k_max,
                schedule: Schedule::Harmonic { shift: 2 },
                record_iterates: true,
                stop_on_criterion: false,
                timing: false,
                rng_seed: 0,
            };
            let outcome = cg_bio(&p.instance, p.x0.view(), &cfg)?;
            let f_star = p.references.f_star.ok_or_else(|| Error::Unsupported("no f*".into()))?;
            let g_star = p.references.g_star.ok_or_else(|| Error::Unsupported("no g*".into()))?;
            let t1 = theorem1_check(&p.instance, &outcome, f_star, g_star, CONVEX_EPS_G, SLACK)?;
            let dom = surrogate_domination_check(&p.instance, &outcome, SLACK)?;
            Ok((
                t1,
                dom,
                CgRun {
                    label: label.clone(),
                    instance: p.instance,
                    outcome,
                    schedule: cfg.schedule,
                },
            ))
        })();
        match r {
            Ok((t1, dom, run)) => {
                checks.push(ok(format!("theorem1 {label}"), Ok(t1)));
                checks.push(ok(format!("surrogate_domination {label}"), Ok(dom)));
                runs.push(run);
            }
            Err(e) => checks.push(CheckResult::new(format!("theorem1 {label}"), false, format!("error: {e}"))),
        }
    }
    (checks, runs)
}

/// Per-step improvement inequalities on each run.
pub fn lemma2_group(runs: &[CgRun]) -> Vec<CheckResult> {
    runs.iter()
        .map(|r| ok(format!("lemma2 {}", r.label), lemma2_check(&r.instance, &r.outcome, &r.schedule, SLACK)))
        .collect()
}

/// Face samples against the cuts of CG-BiO and projection-baseline iterates
/// on the convex suite.
pub fn lemma1_group(scale: &Scale) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for (i, spec) in convex_suite_specs(scale.random_instances).into_iter().enumerate() {
        let label = spec.to_string();
        let r = (|| -> Result<CheckResult> {
            let p = prepare(&spec, CONVEX_EPS_G)?;
            let cfg = SolverConfig {
                eps_g: CONVEX_EPS_G,
                max_iters: scale.k_max.min(200),
                record_iterates: true,
                stop_on_criterion: false,
                timing: false,
                ..SolverConfig::default()
            };
            let mut runs = vec![cg_bio(&p.instance, p.x0.view(), &cfg)?];
            let lf = p.instance.upper.lipschitz_grad().filter(|l| *l > 0.0).unwrap_or(1.0);
            let lg = p.instance.lower.lipschitz_grad().filter(|l| *l > 0.0).unwrap_or(lf);
            let bs = BigSamConfig {
                eta_f: 1.0 / lf,
                eta_g: 1.0 / lg,
                gamma: 10.0,
            };
            runs.push(big_sam(&p.instance, &bs, p.x0.view(), &cfg)?);
            runs.push(a_irg(&p.instance, &AIrgConfig { gamma0: 0.01, eta0: 1.0 }, p.x0.view(), &cfg)?);
            runs.push(dbgd(&p.instance, &DbgdConfig { step: 0.01, ..DbgdConfig::default() }, p.x0.view(), &cfg)?);
            let mut passed = true;
            let mut details = Vec::new();
            for (j, run) in runs.iter().enumerate() {
                let c = lemma1_check(&p.instance, run, scale.lemma1_samples, (i * 7 + j) as u64, 1e-10)?;
                passed &= c.passed;
                details.push(c.detail);
            }
            let c = CheckResult::new("lemma1", passed, details.join("; "));
            Ok(c)
        })();
        out.push(ok(format!("lemma1 {label}"), r));
    }
    out
}

/// Instance used for the non-convex rate check: two features so that `f̲`
/// comes from a grid of the ℓ₁ ball.
pub fn theorem2_spec() -> FairSpec {
    FairSpec {
        n: 200,
        d: 2,
        seed: 0,
        radius: 10.0,
        ..FairSpec::default()
    }
}

const THEOREM2_GRID: usize = 401;

/// Constant-step CG-BiO for `K` from the rate formula on the two-feature
/// fair instance, for each tolerance.
pub fn theorem2_group(eps_list: &[f64]) -> (Vec<CheckResult>, Vec<CgRun>) {
    let mut checks = Vec::new();
    let mut runs = Vec::new();
    for &eps in eps_list {
        let label = format!("fair:d=2,eps={eps}");
        let r = (|| -> Result<(CheckResult, CgRun)> {
            let spec = InstanceSpec::Fair(theorem2_spec());
            let p = prepare(&spec, eps)?;
            let inst = &p.instance;
            let f_lower = grid_lower_bound(inst.upper.as_ref(), &inst.region, THEOREM2_GRID)?.max(0.0);
            let f_x0 = inst.upper.value(p.x0.view())?;
            let k = theorem2_iterations(inst, f_x0, f_lower, eps, eps)?;
            let lf = inst.upper.lipschitz_grad().unwrap_or(0.0);
            let lg = inst.lower.lipschitz_grad().unwrap_or(0.0);
            let schedule = Schedule::nonconvex_constant(eps, eps, lf, lg, inst.region.diameter());
            let cfg = SolverConfig {
                eps_f: eps,
                eps_g: eps,
                max_iters: k,
                schedule,
                stop_on_criterion: false,
                timing: false,
                ..SolverConfig::default()
            };
            let outcome = cg_bio(inst, p.x0.view(), &cfg)?;
            let g_star = p.references.g_star.ok_or_else(|| Error::Unsupported("no g*".into()))?;
            let mut c = theorem2_check(&outcome, k, g_star, eps, eps)?;
            c.detail = format!("{}, f̲ = {f_lower:e}, γ = {schedule}", c.detail);
            Ok((
                c,
                CgRun {
                    label: label.clone(),
                    instance: p.instance.clone(),
                    outcome,
                    schedule,
                },
            ))
        })();
        match r {
            Ok((c, run)) => {
                checks.push(ok(format!("theorem2 {label}"), Ok(c)));
                runs.push(run);
            }
            Err(e) => checks.push(CheckResult::new(format!("theorem2 {label}"), false, format!("error: {e}"))),
        }
    }
    (checks, runs)
}

/// Error-bound lower bound on the toy and the tolerance that turns it into
/// `|f − f*| ≤ ε_f`.
pub fn proposition1_group(scale: &Scale) -> (Vec<CheckResult>, Vec<CgRun>) {
    let mut checks = Vec::new();
    let mut runs = Vec::new();
    let inst = toy_problem();
    let params = match hoelder_estimate(&inst, 201, 1.0) {
        Ok(p) => p,
        Err(e) => return (vec![CheckResult::new("prop1 toy", false, format!("error: {e}"))], runs),
    };
    let m_expect = 0.26f64.sqrt();
    checks.push(CheckResult::new(
        "prop1 toy constants",
        (params.m - m_expect).abs() <= 1e-9 && params.alpha > 0.0,
        format!("α = {:.6}, M = {:.6}", params.alpha, params.m),
    ));
    let r = proposition1_check(&inst, &params, 1e-3, scale.prop1_samples, 11).map(|rep| {
        CheckResult::new(
            "prop1",
            rep.passed,
            format!("{} samples, bound {:e}, worst margin {:e}", rep.samples, rep.bound, rep.worst_margin),
        )
    });
    checks.push(ok("prop1 toy eps_g=1e-3", r));

    let eps_f = 1e-3;
    let r = (|| -> Result<(CheckResult, CgRun)> {
        let eps_g = corollary1_eps_g(&params, eps_f);
        let p = prepare(&InstanceSpec::Toy, eps_g)?;
        let cfg = SolverConfig {
            eps_f,
            eps_g,
            max_iters: 100_000,
            schedule: Schedule::Harmonic { shift: 2 },
            timing: false,
            ..SolverConfig::default()
        };
        let outcome = cg_bio(&p.instance, p.x0.view(), &cfg)?;
        let f_star = p.references.f_star.unwrap_or(-0.08);
        let err = (outcome.last().f_val - f_star).abs();
        Ok((
            CheckResult::new(
                "corollary1",
                err <= eps_f,
                format!("ε_g = {eps_g:e}, stop {} at k = {}, |f − f*| = {err:e}", outcome.stop_reason, outcome.iterations()),
            ),
            CgRun {
                label: "toy corollary1".into(),
                instance: p.instance,
                outcome,
                schedule: cfg.schedule,
            },
        ))
    })();
    match r {
        Ok((c, run)) => {
            checks.push(c);
            runs.push(run);
        }
        Err(e) => checks.push(CheckResult::new("corollary1 toy", false, format!("error: {e}"))),
    }
    (checks, runs)
}

/// A random point of `Z`: a convex combination of LMO outputs for random
/// directions.
pub fn random_point(region: &FeasibleRegion, rng: &mut impl Rng) -> Result<Array1<f64>> {
    let n = region.dimension();
    let mut x = Array1::zeros(n);
    let w = random_weights(rng, 4);
    for wi in w {
        let c = Array1::from_shape_fn(n, |_| rng.random::<f64>() * 2.0 - 1.0);
        x = x + lmo(region, c.view())? * wi;
    }
    Ok(x)
}

fn gaussian(rng: &mut impl Rng, n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| {
        // Box–Muller.
        let u: f64 = 1.0 - rng.random::<f64>();
        let v: f64 = rng.random();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    })
}

/// Tolerance scaled by the objective's magnitude.
fn close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * scale.max(1.0)
}

/// LMO, cut LMO, simplex and projections against brute force.
pub fn oracle_group(scale: &Scale) -> Vec<CheckResult> {
    let n = scale.oracle_instances;
    vec![
        ok("oracles lmo", lmo_checks(n)),
        ok("oracles halfspace_lmo", halfspace_checks(n)),
        ok("oracles simplex", simplex_checks(n)),
        ok("oracles projection", projection_checks(n)),
    ]
}

fn tally(name: &str, failures: Vec<String>, total: usize) -> CheckResult {
    let detail = if failures.is_empty() {
        format!("{total} cases")
    } else {
        format!("{} of {total} failed; first: {}", failures.len(), failures[0])
    };
    CheckResult::new(name, failures.is_empty(), detail)
}

fn random_region(i: usize, rng: &mut ChaCha8Rng) -> Result<FeasibleRegion> {
    if i % 2 == 0 {
        FeasibleRegion::l1_ball(2 + i % 4, rng.random_range(0.5..2.0))
    } else {
        Ok(random_polytope_instance(&RandomSpec {
            dim: 2 + (i / 2) % 2,
            seed: 1000 + i as u64,
            lower: LowerKind::Linear,
        })?
        .region)
    }
}

fn lmo_checks(count: usize) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut failures = Vec::new();
    for i in 0..count {
        let region = random_region(i, &mut rng)?;
        let c = gaussian(&mut rng, region.dimension());
        let s = lmo(&region, c.view())?;
        let (best, _) = brute_lmo(&region, None, c.view())?.ok_or_else(|| Error::Infeasible("empty region".into()))?;
        let val = c.dot(&s);
        if !close(val, best, 1e-8, best.abs()) || region.violation(s.view()) > 1e-9 {
            failures.push(format!("case {i}: lmo {val:e} vs brute {best:e}"));
        }
    }
    Ok(tally("lmo", failures, count))
}

fn halfspace_checks(count: usize) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut failures = Vec::new();
    for i in 0..count {
        let region = if i % 3 == 2 {
            FeasibleRegion::ball_product(2, vec![rng.random_range(0.5..2.0)])?
        } else {
            random_region(i, &mut rng)?
        };
        let n = region.dimension();
        let p = random_point(&region, &mut rng)?;
        let normal = gaussian(&mut rng, n);
        let h = Halfspace::new(normal.clone(), normal.dot(&p) + 0.2 * rng.random::<f64>());
        let c = gaussian(&mut rng, n);
        let s = halfspace_lmo(&region, &h, c.view())?;
        let (best, _) = brute_lmo(&region, Some(&h), c.view())?.ok_or_else(|| Error::Infeasible("empty cut".into()))?;
        let val = c.dot(&s);
        let scale = norm(c.view()) * region.diameter();
        let inside = region.violation(s.view()) <= 1e-9 && h.residual(s.view()) <= 1e-9 * scale.max(1.0);
        if !close(val, best, 1e-8, scale) || !inside {
            failures.push(format!("case {i}: halfspace_lmo {val:e} vs brute {best:e}, inside {inside}"));
        }
    }
    Ok(tally("halfspace_lmo", failures, count))
}

fn simplex_checks(count: usize) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut failures = Vec::new();
    let mut infeasible = 0;
    for i in 0..count {
        let n = rng.random_range(2..=4);
        let m = rng.random_range(1..=4);
        let mut a = Array2::from_shape_fn((m + 1, n), |_| rng.random_range(-1.0..1.5));
        let mut b = Array1::from_shape_fn(m + 1, |_| rng.random_range(-0.3..1.5));
        // Final row keeps the feasible set bounded.
        a.row_mut(m).fill(1.0);
        b[m] = 3.0;
        let c = gaussian(&mut rng, n);
        let sol = simplex_solve(&LpProblem::new(c.clone(), a.clone(), b.clone())?)?;
        match (sol.status, brute_lp(c.view(), &a, b.view())) {
            (LpStatus::Optimal, Some((best, _))) => {
                let feasible = a.dot(&sol.point).iter().zip(&b).all(|(l, r)| l - r <= 1e-9) && sol.point.iter().all(|v| *v >= -1e-9);
                if !close(sol.value, best, 1e-8, best.abs()) || !feasible {
                    failures.push(format!("case {i}: simplex {:e} vs brute {best:e}", sol.value));
                }
            }
            (LpStatus::Infeasible, None) => infeasible += 1,
            (status, brute) => failures.push(format!("case {i}: status {status:?} vs brute {:?}", brute.map(|b| b.0))),
        }
    }
    let mut c = tally("simplex", failures, count);
    c.detail = format!("{} ({infeasible} infeasible)", c.detail);
    Ok(c)
}

fn projection_checks(count: usize) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut failures = Vec::new();
    for i in 0..count {
        let (region, v, reference) = match i % 3 {
            0 => {
                let dim = 2 + i % 5;
                let r = rng.random_range(0.5..2.0);
                let v = gaussian(&mut rng, dim) * 1.5;
                let region = FeasibleRegion::l1_ball(dim, r)?;
                let reference = l1_projection_faces(v.view(), r);
                (region, v, reference)
            }
            1 => {
                let region = random_region(2 * i + 1, &mut rng)?;
                let v = gaussian(&mut rng, region.dimension());
                let reference = active_set_projection(&inequality_rows(&region)?, v.view())
                    .ok_or_else(|| Error::Infeasible("no feasible face".into()))?;
                (region, v, reference)
            }
            _ => {
                let r = rng.random_range(0.5..2.0);
                let region = FeasibleRegion::ball_product(2, vec![r])?;
                let v = gaussian(&mut rng, 2) * 2.0;
                let reference = disc_projection_scan(v.view(), r);
                (region, v, reference)
            }
        };
        let p = project(&region, v.view())?;
        let err = norm((&p - &reference).view());
        if err > 1e-6 {
            failures.push(format!("case {i}: projection differs by {err:e}"));
        }
    }
    Ok(tally("projection", failures, count))
}

const FD_STEP: f64 = 1e-6;
const FD_REL_TOL: f64 = 1e-4;
const FD_FLOOR: f64 = 1e-8;

/// Largest relative error `‖∇ − ∇_FD‖/‖∇‖` over `points` random points of `Z`.
pub fn gradient_error(oracle: &dyn SmoothOracle, region: &FeasibleRegion, points: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = oracle.dimension();
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let x = random_point(region, &mut rng)?;
        let (_, grad) = evaluate(oracle, x.view())?;
        let mut fd = Array1::zeros(n);
        let mut xp = x.clone();
        for i in 0..n {
            let xi = x[i];
            xp[i] = xi + FD_STEP;
            let up = oracle.value(xp.view())?;
            xp[i] = xi - FD_STEP;
            let down = oracle.value(xp.view())?;
            xp[i] = xi;
            fd[i] = (up - down) / (2.0 * FD_STEP);
        }
        worst = worst.max(norm((&grad - &fd).view()) / norm(grad.view()).max(FD_FLOOR));
    }
    Ok(worst)
}

/// Largest relative error of `⟨∇h(x), d⟩` against a central difference along
/// random unit directions `d`.
pub fn directional_error(oracle: &dyn SmoothOracle, region: &FeasibleRegion, points: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = oracle.dimension();
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let x = random_point(region, &mut rng)?;
        let mut d = gaussian(&mut rng, n);
        d /= norm(d.view());
        let (_, grad) = evaluate(oracle, x.view())?;
        let exact = grad.dot(&d);
        let up = oracle.value((&x + &(&d * FD_STEP)).view())?;
        let down = oracle.value((&x - &(&d * FD_STEP)).view())?;
        let fd = (up - down) / (2.0 * FD_STEP);
        worst = worst.max((exact - fd).abs() / exact.abs().max(FD_FLOOR));
    }
    Ok(worst)
}

fn gradient_result(name: &str, inst: &BilevelInstance, points: usize, directional: bool) -> CheckResult {
    let r = (|| -> Result<CheckResult> {
        let check = if directional { directional_error } else { gradient_error };
        let ef = check(inst.upper.as_ref(), &inst.region, points, 1)?;
        let eg = check(inst.lower.as_ref(), &inst.region, points, 2)?;
        Ok(CheckResult::new(
            name,
            ef <= FD_REL_TOL && eg <= FD_REL_TOL,
            format!("{points} points, worst relative error f {ef:e}, g {eg:e}"),
        ))
    })();
    ok(name, r)
}

/// Reduced dictionary spec for full finite-difference gradients.
pub fn small_dictionary_spec() -> DictLearnSpec {
    DictLearnSpec {
        signal_dim: 6,
        true_dict_size: 10,
        old_dict_size: 8,
        new_dict_size: 4,
        shared: 2,
        n_old: 30,
        n_new: 20,
        sparsity: 2,
        pretrain_iters: 300,
        ..DictLearnSpec::default()
    }
}

/// Analytic gradients of every family against central differences.
pub fn gradient_group(scale: &Scale) -> Vec<CheckResult> {
    let pts = scale.gradient_points;
    let mut out = vec![gradient_result("gradients toy", &toy_problem(), pts, false)];
    let random = random_polytope_instance(&RandomSpec {
        dim: 3,
        seed: 5,
        lower: LowerKind::Squared,
    });
    out.push(match random {
        Ok(inst) => gradient_result("gradients random", &inst, pts, false),
        Err(e) => CheckResult::new("gradients random", false, format!("error: {e}")),
    });
    out.push(match regression_synthetic(&RegressionSpec::default()) {
        Ok(p) => gradient_result("gradients regression", &p.instance, pts, false),
        Err(e) => CheckResult::new("gradients regression", false, format!("error: {e}")),
    });
    out.push(match fair_synthetic(&FairSpec::default()) {
        Ok(p) => gradient_result("gradients fair", &p.instance, pts, false),
        Err(e) => CheckResult::new("gradients fair", false, format!("error: {e}")),
    });
    out.push(match dictionary_problem(&small_dictionary_spec()) {
        Ok(p) => gradient_result("gradients dict (reduced, full)", &p.instance, pts, false),
        Err(e) => CheckResult::new("gradients dict (reduced, full)", false, format!("error: {e}")),
    });
    out.push(match dictionary_problem(&DictLearnSpec::default()) {
        Ok(p) => gradient_result("gradients dict (default, directional)", &p.instance, pts, true),
        Err(e) => CheckResult::new("gradients dict (default, directional)", false, format!("error: {e}")),
    });
    out
}

/// Final values of one experiment run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standing {
    pub f: f64,
    pub g_gap: f64,
}

/// Fixed-budget comparison on regression and dictionary learning. Returns the
/// per-solver standings and the CG-BiO runs.
pub fn experiments_group(scale: &Scale) -> (Vec<CheckResult>, Vec<CgRun>) {
    let mut checks = Vec::new();
    let mut runs = Vec::new();
    let cases = [
        ("regression", InstanceSpec::Regression(RegressionSpec::default())),
        ("dict", InstanceSpec::Dict(DictLearnSpec::default())),
    ];
    for (name, spec) in cases {
        let r = (|| -> Result<Vec<CheckResult>> {
            let p = prepare(&spec, 1e-4)?;
            let mut settings = family_defaults(p.family, &p.instance)?;
            settings.run.max_iters = scale.experiment_iters;
            settings.run.stop_on_criterion = false;
            settings.run.timing = false;
            let g_star = p.references.g_star.ok_or_else(|| Error::Unsupported("no g*".into()))?;
            let stand = |solver: SolverKind| -> Result<(Standing, SolveOutcome)> {
                let o = run_solver(&p, solver, &settings)?;
                let last = o.last();
                Ok((
                    Standing {
                        f: last.f_val,
                        g_gap: last.g_val - g_star,
                    },
                    o,
                ))
            };
            let (cg, cg_run) = stand(SolverKind::CgBio)?;
            runs.push(CgRun {
                label: format!("{name} experiment"),
                instance: p.instance.clone(),
                outcome: cg_run,
                schedule: settings.run.schedule,
            });
            let (db, _) = stand(SolverKind::Dbgd)?;
            let (bs, _) = stand(SolverKind::BigSam)?;
            let (ai, _) = stand(SolverKind::AIrg)?;
            let mut v = vec![
                CheckResult::new(
                    format!("{name}: g-gap cg-bio < dbgd"),
                    cg.g_gap < db.g_gap,
                    format!("{:e} vs {:e}", cg.g_gap, db.g_gap),
                ),
                CheckResult::new(
                    format!("{name}: f cg-bio < big-sam"),
                    cg.f < bs.f,
                    format!("{:e} vs {:e}", cg.f, bs.f),
                ),
                CheckResult::new(format!("{name}: f cg-bio < a-irg"), cg.f < ai.f, format!("{:e} vs {:e}", cg.f, ai.f)),
            ];
            if p.family == Family::Dict {
                let (up, _) = stand(SolverKind::CgUpper)?;
                v.push(CheckResult::new(
                    format!("{name}: g-gap cg-upper ≥ 10 × cg-bio"),
                    up.g_gap >= 10.0 * cg.g_gap,
                    format!("{:e} vs {:e}", up.g_gap, cg.g_gap),
                ));
            }
            Ok(v)
        })();
        match r {
            Ok(v) => checks.extend(v),
            Err(e) => checks.push(CheckResult::new(format!("{name} experiment"), false, format!("error: {e}"))),
        }
    }
    (checks, runs)
}

/// Runs one named group. `lemma2` checks every CG-BiO run of the theorem,
/// proposition and experiment groups.
pub fn run_group(name: &str, scale: &Scale) -> Result<Vec<CheckResult>> {
    Ok(match name {
        "theorem1" => theorem1_group(scale).0,
        "lemma1" => lemma1_group(scale),
        "lemma2" => {
            let mut runs = theorem1_group(scale).1;
            runs.extend(theorem2_group(&[0.1]).1);
            runs.extend(proposition1_group(scale).1);
            runs.extend(experiments_group(scale).1);
            lemma2_group(&runs)
        }
        "theorem2" => theorem2_group(&[0.1, 0.01]).0,
        "prop1" => proposition1_group(scale).0,
        "oracles" => oracle_group(scale),
        "gradients" => gradient_group(scale),
        "experiments" => experiments_group(scale).0,
        other => return Err(Error::Config(format!("unknown verification group `{other}`; expected one of {}", GROUPS.join(", ")))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scale {
        Scale {
            random_instances: 3,
            k_max: 60,
            lemma1_samples: 200,
            oracle_instances: 9,
            gradient_points: 3,
            prop1_samples: 50,
            experiment_iters: 20,
        }
    }

    #[test]
    fn small_convex_suites_pass() {
        let (checks, runs) = theorem1_group(&small());
        assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
        let l2 = lemma2_group(&runs);
        assert!(l2.iter().all(|c| c.passed), "{l2:#?}");
        let l1 = lemma1_group(&small());
        assert!(l1.iter().all(|c| c.passed), "{l1:#?}");
    }

    #[test]
    fn small_oracle_suite_passes() {
        let checks = oracle_group(&small());
        assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
    }

    #[test]
    fn unknown_group_is_rejected() {
        assert!(run_group("nope", &small()).is_err());
    }
}
