//! Hölderian error-bound constants and the lower-bound check they imply.

use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bilevel_core::model::{evaluate, BilevelInstance, FeasibleRegion, RegionKind};
use bilevel_core::oracles::{lmo, polytope_vertices};
use bilevel_core::{Error, Result};

use crate::geometry::{combine, distance_to_hull};
use crate::metrics::true_fw_gap;
use crate::reference::{reference_bilevel, reference_lower};

/// `g(x) − g* ≥ (α/r)·dist(x, X*_g)^r` on `Z`, and `M = max ‖∇f‖₂` over `X*_g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoelderParams {
    pub alpha: f64,
    pub order: f64,
    pub m: f64,
}

impl HoelderParams {
    pub fn new(alpha: f64, order: f64, m: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || !(order >= 1.0) || !(m >= 0.0) {
            return Err(Error::Config(format!("invalid Hölder parameters α={alpha}, r={order}, M={m}")));
        }
        Ok(Self { alpha, order, m })
    }

    /// `(r ε_g / α)^{1/r}`, the distance to `X*_g` allowed by `g`-gap `ε_g`.
    pub fn radius(&self, eps_g: f64) -> f64 {
        (self.order * eps_g.max(0.0) / self.alpha).powf(1.0 / self.order)
    }
}

/// Threshold from the error bound below which a point two levels apart in
/// `ε_g` cannot push `f` below `f*`.
pub fn proposition1_bound(params: &HoelderParams, eps_g: f64, convex: bool, lf: f64) -> f64 {
    let rho = params.radius(eps_g);
    let mut bound = -params.m * rho;
    if !convex {
        bound -= lf * rho * rho;
    }
    bound
}

/// `ε_g = (α/r)(ε_f/M)^r`, the lower tolerance that makes `|f − f*| ≤ ε_f`
/// follow from the upper-level guarantee.
pub fn corollary1_eps_g(params: &HoelderParams, eps_f: f64) -> f64 {
    if params.m == 0.0 {
        return f64::INFINITY;
    }
    params.alpha / params.order * (eps_f / params.m).powf(params.order)
}

fn face(instance: &BilevelInstance) -> Result<&[Array1<f64>]> {
    instance
        .reference
        .lower_solution_vertices
        .as_deref()
        .filter(|v| !v.is_empty())
        .ok_or_else(|| Error::Unsupported("Hölder estimation needs the optimal face as a vertex list".into()))
}

/// Points of `Z` whose hull is `Z` (polytopes) or that span its bounding box
/// (other regions).
pub fn extreme_points(region: &FeasibleRegion) -> Result<Vec<Array1<f64>>> {
    if let RegionKind::Polytope(p) = region.kind() {
        return polytope_vertices(p);
    }
    let n = region.dimension();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut c = Array1::zeros(n);
            c[i] = sign;
            out.push(lmo(region, c.view())?);
        }
    }
    Ok(out)
}

fn lower_optimum(instance: &BilevelInstance) -> Result<f64> {
    match instance.reference.g_star {
        Some(g) => Ok(g),
        None => Ok(reference_lower(instance, 1e-12, 1_000_000)?.value),
    }
}

const EXCLUSION: f64 = 1e-6;

/// Grid estimate of `α` for order `r` and of `M`.
///
/// `α` is the minimum of `r(g(x) − g*)/dist(x, X*_g)^r` over a
/// `resolution`-per-axis grid of the bounding box of `Z`, the extreme points
/// of `Z` and `resolution` points on every chord between them; points within
/// 1e-6 of the face are skipped. `M` is the maximum gradient norm over a grid
/// on every pair of face vertices.
pub fn hoelder_estimate(instance: &BilevelInstance, resolution: usize, order: f64) -> Result<HoelderParams> {
    let n = instance.dimension();
    if n > 3 {
        return Err(Error::Unsupported(format!("Hölder grid needs dimension ≤ 3, got {n}")));
    }
    if resolution < 2 {
        return Err(Error::Config("grid resolution must be at least 2".into()));
    }
    let vertices = face(instance)?;
    let g_star = lower_optimum(instance)?;
    let region = &instance.region;
    let extremes = extreme_points(region)?;

    let mut candidates: Vec<Array1<f64>> = extremes.clone();
    for (i, a) in extremes.iter().enumerate() {
        for b in &extremes[i + 1..] {
            for s in 1..resolution {
                let t = s as f64 / resolution as f64;
                candidates.push(a + &((b - a) * t));
            }
        }
    }
    let lo = Array1::from_shape_fn(n, |j| extremes.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min));
    let hi = Array1::from_shape_fn(n, |j| extremes.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max));
    let total = resolution.pow(n as u32);
    for idx in 0..total {
        let mut rest = idx;
        let x = Array1::from_shape_fn(n, |j| {
            let i = rest % resolution;
            rest /= resolution;
            lo[j] + (hi[j] - lo[j]) * i as f64 / (resolution - 1) as f64
        });
        if region.violation(x.view()) <= 0.0 {
            candidates.push(x);
        }
    }

    let mut alpha = f64::INFINITY;
    for x in &candidates {
        let dist = distance_to_hull(vertices, x.view());
        if dist <= EXCLUSION {
            continue;
        }
        let excess = (instance.lower.value(x.view())? - g_star).max(0.0);
        alpha = alpha.min(order * excess / dist.powf(order));
    }
    if !alpha.is_finite() {
        return Err(Error::Unsupported("no grid point of Z lies off the optimal face".into()));
    }

    let mut m: f64 = 0.0;
    let mut face_points: Vec<Array1<f64>> = vertices.to_vec();
    for (i, a) in vertices.iter().enumerate() {
        for b in &vertices[i + 1..] {
            for s in 1..resolution {
                face_points.push(a + &((b - a) * (s as f64 / resolution as f64)));
            }
        }
    }
    for p in &face_points {
        let (_, grad) = evaluate(instance.upper.as_ref(), p.view())?;
        m = m.max(grad.dot(&grad).sqrt());
    }
    HoelderParams::new(alpha, order, m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposition1Report {
    pub passed: bool,
    pub samples: usize,
    pub bound: f64,
    /// Smallest `f(x) − f* − bound` (convex) or `gap(x) − bound` over samples.
    pub worst_margin: f64,
}

const BISECTIONS: usize = 60;

/// Samples points with `g(x) − g* ≤ ε_g` on random chords from the optimal
/// face into `Z` and checks the error-bound lower bound at each, slack 1e-8.
pub fn proposition1_check(
    instance: &BilevelInstance,
    params: &HoelderParams,
    eps_g: f64,
    samples: usize,
    seed: u64,
) -> Result<Proposition1Report> {
    let vertices = face(instance)?;
    let g_star = lower_optimum(instance)?;
    let f_star = match instance.reference.f_star {
        Some(v) => v,
        None => reference_bilevel(instance, 1e-12)?.f_star,
    };
    let lf = instance.upper.lipschitz_grad().unwrap_or(f64::INFINITY);
    let convex = instance.upper_convex;
    let bound = proposition1_bound(params, eps_g, convex, lf);
    let extremes = extreme_points(&instance.region)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let p = combine(vertices, random_weights(&mut rng, vertices.len()).view());
        let q = combine(&extremes, random_weights(&mut rng, extremes.len()).view());
        let excess = |t: f64| -> Result<f64> { Ok(instance.lower.value((&p + &((&q - &p) * t)).view())? - g_star) };
        let t_max = if excess(1.0)? <= eps_g {
            1.0
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..BISECTIONS {
                let mid = 0.5 * (lo + hi);
                if excess(mid)? <= eps_g {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let x = &p + &((&q - &p) * (t_max * rng.random::<f64>()));
        let margin = if convex {
            instance.upper.value(x.view())? - f_star - bound
        } else {
            true_fw_gap(instance, x.view())? - bound
        };
        worst = worst.min(margin);
    }
    if samples > 0 && !worst.is_finite() {
        return Err(Error::OracleFailure("no usable near-optimal samples".into()));
    }
    Ok(Proposition1Report {
        passed: samples == 0 || worst >= -1e-8,
        samples,
        bound,
        worst_margin: worst,
    })
}

/// Uniform point of the probability simplex.
pub fn random_weights(rng: &mut impl Rng, k: usize) -> Array1<f64> {
    let e = Array1::from_shape_fn(k, |_| -(1.0 - rng.random::<f64>()).ln());
    let s = e.sum();
    e / s
}

/// `dist(x, X*_g)` through the instance's face vertices.
pub fn distance_to_face(instance: &BilevelInstance, x: ArrayView1<'_, f64>) -> Result<f64> {
    Ok(distance_to_hull(face(instance)?, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use bilevel_core::functions::Linear;
    use bilevel_core::model::Reference;
    use bilevel_core::problems::toy_problem;
    use ndarray::array;
    use std::sync::Arc;

    #[test]
    fn toy_constants() {
        let p = hoelder_estimate(&toy_problem(), 101, 1.0).unwrap();
        assert!((p.m - 0.26f64.sqrt()).abs() < 1e-12);
        let edge = (1.0 / 6.0) / (0.25f64 + 1.0 / 9.0).sqrt();
        assert!(p.alpha > 0.0 && (p.alpha - edge).abs() < 1e-9, "{}", p.alpha);
    }

    #[test]
    fn segment_inside_face_has_no_exterior() {
        // Z = {x ≥ 0, x₁ + x₂ ≤ 1, −x₁ − x₂ ≤ −1}, g constant on Z.
        let region = FeasibleRegion::polytope(array![[1.0, 1.0], [-1.0, -1.0]], array![1.0, -1.0], true).unwrap();
        let g = Linear::new(array![-1.0, -1.0], 0.0);
        let f = Linear::new(array![1.0, 0.0], 0.0);
        let inst = BilevelInstance::new("seg", Arc::new(f), Arc::new(g), region)
            .unwrap()
            .with_reference(Reference {
                g_star: Some(-1.0),
                f_star: Some(0.0),
                lower_solution_vertices: Some(vec![array![1.0, 0.0], array![0.0, 1.0]]),
                x_star: Some(array![0.0, 1.0]),
            });
        assert!(matches!(hoelder_estimate(&inst, 11, 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn toy_proposition1_holds() {
        let inst = toy_problem();
        let p = hoelder_estimate(&inst, 101, 1.0).unwrap();
        for eps in [0.0, 1e-3, 10.0] {
            let report = proposition1_check(&inst, &p, eps, 200, 3).unwrap();
            assert!(report.passed, "{eps}: {report:?}");
        }
    }

    #[test]
    fn corollary_tolerance() {
        let p = HoelderParams::new(0.5, 1.0, 2.0).unwrap();
        assert!((corollary1_eps_g(&p, 1e-3) - 0.5 * 5e-4).abs() < 1e-18);
        assert!((p.radius(corollary1_eps_g(&p, 1e-3)) * p.m - 1e-3).abs() < 1e-15);
    }
}
