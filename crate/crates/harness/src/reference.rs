//! Reference optima used to measure gaps.

use ndarray::{Array1, ArrayView1};

use bilevel_core::model::{evaluate, BilevelInstance, SmoothOracle, SolverConfig, StopReason};
use bilevel_core::oracles::lmo;
use bilevel_core::solvers::{standard_cg, LineSearch};
use bilevel_core::{Error, Result};

use crate::geometry::{combine, project_simplex};

/// How `g*` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerMethod {
    /// Linear `g`, minimized by one call to the linear minimization oracle.
    Exact,
    /// Long-run CG stopped by its FW-gap certificate.
    Certified,
}

/// `lower_bound ≤ g* ≤ value`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerReference {
    pub value: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub point: Array1<f64>,
    pub method: LowerMethod,
    pub converged: bool,
    pub iterations: usize,
}

/// Estimates `g*`: exactly for linear `g`, otherwise by
/// standard CG until the FW gap is at most `tol` (exact line search when the
/// oracle supports it, backtracking otherwise).
pub fn reference_lower(instance: &BilevelInstance, tol: f64, max_iters: usize) -> Result<LowerReference> {
    let g = instance.lower.as_ref();
    let region = &instance.region;
    let linear = g.quadratic_form().filter(|q| q.hessian.iter().all(|v| *v == 0.0));
    if let Some(form) = linear {
        let s = lmo(region, form.linear.view())?;
        let value = g.value(s.view())?;
        return Ok(LowerReference {
            value,
            lower_bound: value,
            gap: 0.0,
            point: s,
            method: LowerMethod::Exact,
            converged: true,
            iterations: 0,
        });
    }
    let start = region.anchor()?;
    let search = if g.directional_curvature(start.view(), start.view()).is_some() {
        LineSearch::Exact
    } else {
        LineSearch::Backtracking
    };
    let config = SolverConfig {
        eps_f: tol,
        max_iters,
        timing: false,
        ..SolverConfig::default()
    };
    let run = standard_cg(g, region, start.view(), &config, search)?;
    if let StopReason::OracleFailure(msg) = &run.stop_reason {
        return Err(Error::OracleFailure(msg.clone()));
    }
    let last = run.last();
    Ok(LowerReference {
        value: last.f_val,
        lower_bound: last.f_val - last.surrogate_f_gap.max(0.0),
        gap: last.surrogate_f_gap,
        point: run.final_point.clone(),
        method: LowerMethod::Certified,
        converged: run.stop_reason == StopReason::CriterionMet,
        iterations: run.iterations(),
    })
}

/// Minimizer of `f` over the known optimal face of `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilevelReference {
    pub f_star: f64,
    pub x_star: Array1<f64>,
    /// FW gap of `f` over the face at `x_star` (convex case), so
    /// `f_star − certificate ≤ f* ≤ f_star`.
    pub certificate: f64,
}

const GOLDEN_ITERS: usize = 200;
const GRID_REFINE: usize = 4;

/// Minimizes `f` over the convex hull of the instance's lower-level face.
///
/// Segments use derivative bisection for convex `f` and a grid at resolution
/// `tol` refined by golden-section search otherwise; larger faces use projected gradient on barycentric
/// weights until the FW gap over the vertices is at most `tol`, convex `f`
/// only.
pub fn reference_bilevel(instance: &BilevelInstance, tol: f64) -> Result<BilevelReference> {
    let vertices = instance
        .reference
        .lower_solution_vertices
        .as_ref()
        .filter(|v| !v.is_empty())
        .ok_or_else(|| Error::Unsupported("instance has no lower-level face description".into()))?;
    let f = instance.upper.as_ref();
    let (x_star, f_star) = match vertices.len() {
        1 => (vertices[0].clone(), f.value(vertices[0].view())?),
        2 => segment_minimum(f, &vertices[0], &vertices[1], instance.upper_convex, tol)?,
        _ if instance.upper_convex => face_minimum(f, vertices, tol)?,
        _ => return Err(Error::Unsupported("non-convex upper level over a face with more than two vertices".into())),
    };
    let certificate = face_fw_gap(f, vertices, x_star.view())?;
    Ok(BilevelReference {
        f_star,
        x_star,
        certificate,
    })
}

/// `max_v ⟨∇f(x), x − v⟩` over the listed vertices.
pub fn face_fw_gap(f: &dyn SmoothOracle, vertices: &[Array1<f64>], x: ArrayView1<'_, f64>) -> Result<f64> {
    let (_, grad) = evaluate(f, x)?;
    Ok(vertices.iter().map(|v| grad.dot(&(&x - v))).fold(f64::NEG_INFINITY, f64::max))
}

fn segment_minimum(f: &dyn SmoothOracle, a: &Array1<f64>, b: &Array1<f64>, convex: bool, tol: f64) -> Result<(Array1<f64>, f64)> {
    let at = |t: f64| a + &((b - a) * t);
    let value = |t: f64| f.value(at(t).view());
    let (mut lo, mut hi) = (0.0, 1.0);
    if !convex {
        let steps = ((1.0 / tol.max(1e-7)).ceil() as usize).max(2);
        let mut best = (0.0, value(0.0)?);
        for i in 1..=steps {
            let t = i as f64 / steps as f64;
            let v = value(t)?;
            if v < best.1 {
                best = (t, v);
            }
        }
        let h = 1.0 / steps as f64;
        lo = (best.0 - GRID_REFINE as f64 * h).max(0.0);
        hi = (best.0 + GRID_REFINE as f64 * h).min(1.0);
    }
    if convex {
        // Bisection on the sign of the directional derivative; resolves `t`
        // to machine precision where golden section stalls near √ε.
        let dir = b - a;
        let slope = |t: f64| -> Result<f64> { Ok(evaluate(f, at(t).view())?.1.dot(&dir)) };
        if slope(0.0)? >= 0.0 {
            return Ok((a.clone(), value(0.0)?));
        }
        if slope(1.0)? <= 0.0 {
            return Ok((b.clone(), value(1.0)?));
        }
        for _ in 0..GOLDEN_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if slope(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        return Ok((at(t), value(t)?));
    }
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (value(x1)?, value(x2)?);
    for _ in 0..GOLDEN_ITERS {
        if hi - lo <= f64::EPSILON {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = value(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = value(x2)?;
        }
    }
    let mut best = (0.5 * (lo + hi), value(0.5 * (lo + hi))?);
    for t in [0.0, 1.0, lo, hi] {
        let v = value(t)?;
        if v < best.1 {
            best = (t, v);
        }
    }
    Ok((at(best.0), best.1))
}

fn face_minimum(f: &dyn SmoothOracle, vertices: &[Array1<f64>], tol: f64) -> Result<(Array1<f64>, f64)> {
    let lf = f
        .lipschitz_grad()
        .ok_or_else(|| Error::Config("face minimization needs a known upper Lipschitz constant".into()))?;
    let k = vertices.len();
    let spread = vertices.iter().map(|v| v.dot(v)).sum::<f64>();
    let step = 1.0 / (lf * spread).max(1e-12);
    let mut w = Array1::from_elem(k, 1.0 / k as f64);
    for _ in 0..1_000_000 {
        let x = combine(vertices, w.view());
        let (_, grad) = evaluate(f, x.view())?;
        let gap = vertices.iter().map(|v| grad.dot(&(&x - v))).fold(f64::NEG_INFINITY, f64::max);
        if gap <= tol {
            break;
        }
        let gw = Array1::from_iter(vertices.iter().map(|v| grad.dot(v)));
        w = project_simplex((&w - &(gw * step)).view());
    }
    let x = combine(vertices, w.view());
    let value = f.value(x.view())?;
    Ok((x, value))
}
