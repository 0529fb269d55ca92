use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{check_dim, Error, Result};

/// A differentiable function evaluated as a black box.
///
/// Implementations return the value and gradient together; solvers never ask
/// for one without the other except through [`SmoothOracle::value`].
pub trait SmoothOracle: Send + Sync + fmt::Debug {
    fn dimension(&self) -> usize;

    fn eval(&self, x: ArrayView1<'_, f64>) -> Result<(f64, Array1<f64>)>;

    fn value(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        Ok(self.eval(x)?.0)
    }

    /// ℓ₂ Lipschitz constant of the gradient, `None` when unknown.
    fn lipschitz_grad(&self) -> Option<f64>;

    /// `dᵀ∇²h(x)d` when the function is exactly quadratic along every line.
    /// Enables exact line search.
    fn directional_curvature(&self, _x: ArrayView1<'_, f64>, _d: ArrayView1<'_, f64>) -> Option<f64> {
        None
    }

    /// Explicit quadratic representation, for solvers that need one (MNG).
    fn quadratic_form(&self) -> Option<QuadraticForm> {
        None
    }
}

pub type Oracle = Arc<dyn SmoothOracle>;

/// Evaluates `oracle` at `x`, rejecting wrong-length input, wrong-length
/// gradients and non-finite output.
pub fn evaluate(oracle: &dyn SmoothOracle, x: ArrayView1<'_, f64>) -> Result<(f64, Array1<f64>)> {
    check_dim(oracle.dimension(), x.len())?;
    let (value, grad) = oracle.eval(x)?;
    if grad.len() != oracle.dimension() {
        return Err(Error::OracleFailure(format!(
            "gradient has length {} but oracle dimension is {}",
            grad.len(),
            oracle.dimension()
        )));
    }
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::OracleFailure("non-finite value or gradient".into()));
    }
    Ok((value, grad))
}

/// `½ xᵀPx + qᵀx + c` with symmetric `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub hessian: Array2<f64>,
    pub linear: Array1<f64>,
    pub constant: f64,
}

impl QuadraticForm {
    pub fn new(hessian: Array2<f64>, linear: Array1<f64>, constant: f64) -> Result<Self> {
        let n = linear.len();
        if hessian.nrows() != n || hessian.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: hessian.nrows(),
            });
        }
        Ok(Self {
            hessian,
            linear,
            constant,
        })
    }

    pub fn dimension(&self) -> usize {
        self.linear.len()
    }

    pub fn value(&self, x: ArrayView1<'_, f64>) -> f64 {
        0.5 * x.dot(&self.hessian.dot(&x)) + self.linear.dot(&x) + self.constant
    }

    pub fn gradient(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        self.hessian.dot(&x) + &self.linear
    }
}
