//! Seeded small polytope instances with a known face of lower-level
//! minimizers.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{Linear, Quadratic};
use crate::model::{BilevelInstance, FeasibleRegion, Reference};
use crate::oracles::{lmo, polytope_vertices};

/// Shape of the lower-level objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerKind {
    /// `g(x) = −⟨aᵢ, x⟩`.
    Linear,
    /// `g(x) = ½(⟨aᵢ, x⟩ − τ)²` with `τ` beyond the face.
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub dim: usize,
    pub seed: u64,
    pub lower: LowerKind,
}

/// `Z = {x ≥ 0, Ax ≤ b}` with positive rows, a strongly convex quadratic `f`
/// and `g` minimized exactly on the face `Z ∩ {⟨aᵢ, x⟩ = max_Z ⟨aᵢ, ·⟩}` for
/// a random row `i`. The reference lists the face's vertices and `g*`.
pub fn random_polytope_instance(spec: &RandomSpec) -> Result<BilevelInstance> {
    if !(2..=3).contains(&spec.dim) {
        return Err(Error::Config(format!("random instances are 2- or 3-dimensional, got {}", spec.dim)));
    }
    let d = spec.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rows = d + rng.random_range(0..=2);
    let a = Array2::from_shape_fn((rows, d), |_| rng.random_range(0.1..1.5));
    let b = Array1::from_shape_fn(rows, |_| rng.random_range(0.5..1.5));
    let region = FeasibleRegion::polytope(a.clone(), b, true)?;
    let poly = region.as_polytope().expect("polytope region").clone();

    let row = rng.random_range(0..rows);
    let normal = a.row(row).to_owned();
    let top = lmo(&region, (-&normal).view())?;
    let peak = normal.dot(&top);
    let tol = 1e-9 * peak.abs().max(1.0);
    let face: Vec<Array1<f64>> = polytope_vertices(&poly)?
        .into_iter()
        .filter(|v| (normal.dot(v) - peak).abs() <= tol)
        .collect();

    let (lower, g_star): (Arc<dyn crate::model::SmoothOracle>, f64) = match spec.lower {
        LowerKind::Linear => (Arc::new(Linear::new(-&normal, 0.0)), -peak),
        LowerKind::Squared => {
            let tau = peak + rng.random_range(0.05..0.5);
            let mut outer = Array2::zeros((d, d));
            for i in 0..d {
                for j in 0..d {
                    outer[[i, j]] = normal[i] * normal[j];
                }
            }
            let q = Quadratic::new(outer, &normal * -tau, 0.5 * tau * tau)?;
            (Arc::new(q), 0.5 * (peak - tau) * (peak - tau))
        }
    };

    let basis = Array2::from_shape_fn((d, d), |_| rng.sample::<f64, _>(StandardNormal));
    let hessian = basis.t().dot(&basis) + Array2::<f64>::eye(d) * 0.1;
    let linear = Array1::from_shape_fn(d, |_| rng.sample::<f64, _>(StandardNormal));
    let upper = Quadratic::new(hessian, linear, 0.0)?;

    let name = format!("random:dim={},seed={},lower={:?}", d, spec.seed, spec.lower).to_lowercase();
    Ok(BilevelInstance::new(name, Arc::new(upper), lower, region)?
        .with_reference(Reference {
            g_star: Some(g_star),
            lower_solution_vertices: Some(face),
            ..Reference::default()
        })
        .with_convex_upper(true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_membership;

    #[test]
    fn face_vertices_attain_g_star() {
        for seed in 0..20 {
            for lower in [LowerKind::Linear, LowerKind::Squared] {
                let inst = random_polytope_instance(&RandomSpec { dim: 2 + (seed as usize % 2), seed, lower }).unwrap();
                let g_star = inst.reference.g_star.unwrap();
                let face = inst.reference.lower_solution_vertices.as_ref().unwrap();
                assert!(!face.is_empty());
                for v in face {
                    assert!(check_membership(&inst.region, v.view(), 1e-9));
                    assert!((inst.lower.value(v.view()).unwrap() - g_star).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = RandomSpec {
            dim: 3,
            seed: 7,
            lower: LowerKind::Squared,
        };
        let a = random_polytope_instance(&spec).unwrap();
        let b = random_polytope_instance(&spec).unwrap();
        assert_eq!(a.region, b.region);
        assert_eq!(a.reference, b.reference);
    }
}
