//! Two-variable instance with a segment of lower-level minimizers.

use std::sync::Arc;

use ndarray::array;

use crate::functions::{Linear, Quadratic};
use crate::model::{BilevelInstance, FeasibleRegion, Reference};

/// `f(x) = ½x₁² − ½x₁ + 0.1x₂`, `g(x) = −x₁ − x₂` over
/// `Z = {x ≥ 0, x₁ + x₂ ≤ 1, 4x₁ + 6x₂ ≤ 5}`.
///
/// `X*_g` is the segment from `(0.5, 0.5)` to `(1, 0)`; the bilevel solution
/// is `(0.6, 0.4)` with `f* = −0.08` and `g* = −1`.
pub fn toy_problem() -> BilevelInstance {
    let f = Quadratic::new(array![[1.0, 0.0], [0.0, 0.0]], array![-0.5, 0.1], 0.0).expect("valid quadratic");
    let g = Linear::new(array![-1.0, -1.0], 0.0);
    let region = FeasibleRegion::polytope(array![[1.0, 1.0], [4.0, 6.0]], array![1.0, 5.0], true).expect("bounded polytope");
    BilevelInstance::new("toy", Arc::new(f), Arc::new(g), region)
        .expect("matching dimensions")
        .with_reference(Reference {
            g_star: Some(-1.0),
            f_star: Some(-0.08),
            lower_solution_vertices: Some(vec![array![0.5, 0.5], array![1.0, 0.0]]),
            x_star: Some(array![0.6, 0.4]),
        })
        .with_convex_upper(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values_are_consistent() {
        let inst = toy_problem();
        for v in inst.reference.lower_solution_vertices.as_ref().unwrap() {
            assert_eq!(inst.lower.value(v.view()).unwrap(), -1.0);
        }
        let x = inst.reference.x_star.clone().unwrap();
        assert!((inst.upper.value(x.view()).unwrap() + 0.08).abs() < 1e-15);
        assert_eq!(inst.upper.lipschitz_grad(), Some(1.0));
        assert_eq!(inst.lower.lipschitz_grad(), Some(0.0));
    }
}
