use ndarray::{Array1, ArrayView1};

use crate::error::{check_dim, Result};
use crate::model::oracle::{evaluate, SmoothOracle};

/// `{s : ⟨normal, s⟩ ≤ offset}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Array1<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Array1<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    pub fn dimension(&self) -> usize {
        self.normal.len()
    }

    /// `⟨normal, x⟩ − offset`; nonpositive inside.
    pub fn residual(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.normal.dot(&x) - self.offset
    }

    pub fn contains(&self, x: ArrayView1<'_, f64>, tol: f64) -> bool {
        self.residual(x) <= tol
    }
}

/// The cut `{s : ⟨∇g(x_k), s − x_k⟩ ≤ g(x₀) − g(x_k)}`.
///
/// Every minimizer of `g` over the region lies in it whenever `g(x₀) ≥ g*`.
pub fn cutting_plane(g: &dyn SmoothOracle, x0: ArrayView1<'_, f64>, xk: ArrayView1<'_, f64>) -> Result<Halfspace> {
    check_dim(g.dimension(), x0.len())?;
    let g0 = evaluate(g, x0)?.0;
    cutting_plane_from(g, g0, xk)
}

/// [`cutting_plane`] with `g(x₀)` already known.
pub fn cutting_plane_from(g: &dyn SmoothOracle, g0: f64, xk: ArrayView1<'_, f64>) -> Result<Halfspace> {
    let (gk, grad) = evaluate(g, xk)?;
    Ok(cutting_plane_parts(grad, g0, gk, xk))
}

pub(crate) fn cutting_plane_parts(grad: Array1<f64>, g0: f64, gk: f64, xk: ArrayView1<'_, f64>) -> Halfspace {
    let offset = grad.dot(&xk) + (g0 - gk);
    Halfspace { normal: grad, offset }
}
