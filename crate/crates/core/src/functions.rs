//! Closed-form oracles used across problem families.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg::{gram_lambda_max, sym_lambda_max};
use crate::model::{QuadraticForm, SmoothOracle};

/// `⟨c, x⟩ + constant`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub coeffs: Array1<f64>,
    pub constant: f64,
}

impl Linear {
    pub fn new(coeffs: Array1<f64>, constant: f64) -> Self {
        Self { coeffs, constant }
    }
}

impl SmoothOracle for Linear {
    fn dimension(&self) -> usize {
        self.coeffs.len()
    }

    fn eval(&self, x: ArrayView1<'_, f64>) -> Result<(f64, Array1<f64>)> {
        Ok((self.coeffs.dot(&x) + self.constant, self.coeffs.clone()))
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        Some(0.0)
    }

    fn directional_curvature(&self, _x: ArrayView1<'_, f64>, _d: ArrayView1<'_, f64>) -> Option<f64> {
        Some(0.0)
    }

    fn quadratic_form(&self) -> Option<QuadraticForm> {
        let n = self.coeffs.len();
        Some(QuadraticForm {
            hessian: Array2::zeros((n, n)),
            linear: self.coeffs.clone(),
            constant: self.constant,
        })
    }
}

/// `½ xᵀPx + qᵀx + c`; `P` must be symmetric.
#[derive(Debug, Clone)]
pub struct Quadratic {
    form: QuadraticForm,
    lipschitz: f64,
}

impl Quadratic {
    pub fn new(hessian: Array2<f64>, linear: Array1<f64>, constant: f64) -> Result<Self> {
        let form = QuadraticForm::new(hessian, linear, constant)?;
        let asym = (&form.hessian - &form.hessian.t()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = form.hessian.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if asym > 1e-12 * scale {
            return Err(Error::Config("quadratic hessian must be symmetric".into()));
        }
        let lipschitz = sym_lambda_max(&form.hessian).abs().max(sym_lambda_max(&(-&form.hessian)).abs());
        Ok(Self { form, lipschitz })
    }

    pub fn form(&self) -> &QuadraticForm {
        &self.form
    }
}

impl SmoothOracle for Quadratic {
    fn dimension(&self) -> usize {
        self.form.dimension()
    }

    fn eval(&self, x: ArrayView1<'_, f64>) -> Result<(f64, Array1<f64>)> {
        let px = self.form.hessian.dot(&x);
        let value = 0.5 * x.dot(&px) + self.form.linear.dot(&x) + self.form.constant;
        Ok((value, px + &self.form.linear))
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        Some(self.lipschitz)
    }

    fn directional_curvature(&self, _x: ArrayView1<'_, f64>, d: ArrayView1<'_, f64>) -> Option<f64> {
        Some(d.dot(&self.form.hessian.dot(&d)))
    }

    fn quadratic_form(&self) -> Option<QuadraticForm> {
        Some(self.form.clone())
    }
}

/// `scale · ½‖Ax − b‖²`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: Array2<f64>,
    b: Array1<f64>,
    scale: f64,
    lipschitz: f64,
}

impl LeastSquares {
    pub fn new(a: Array2<f64>, b: Array1<f64>, scale: f64) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::Dimension {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if !(scale > 0.0) {
            return Err(Error::Config("least-squares scale must be positive".into()));
        }
        if a.iter().all(|v| *v == 0.0) {
            return Err(Error::Data("least-squares design matrix is all zero".into()));
        }
        let lipschitz = scale * gram_lambda_max(&a);
        Ok(Self { a, b, scale, lipschitz })
    }

    pub fn design(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn targets(&self) -> &Array1<f64> {
        &self.b
    }
}

impl SmoothOracle for LeastSquares {
    fn dimension(&self) -> usize {
        self.a.ncols()
    }

    fn eval(&self, x: ArrayView1<'_, f64>) -> Result<(f64, Array1<f64>)> {
        let r = self.a.dot(&x) - &self.b;
        let value = 0.5 * self.scale * r.dot(&r);
        let grad = self.a.t().dot(&r) * self.scale;
        Ok((value, grad))
    }

    fn value(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        let r = self.a.dot(&x) - &self.b;
        Ok(0.5 * self.scale * r.dot(&r))
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        Some(self.lipschitz)
    }

    fn directional_curvature(&self, _x: ArrayView1<'_, f64>, d: ArrayView1<'_, f64>) -> Option<f64> {
        let ad = self.a.dot(&d);
        Some(self.scale * ad.dot(&ad))
    }

    fn quadratic_form(&self) -> Option<QuadraticForm> {
        Some(QuadraticForm {
            hessian: self.a.t().dot(&self.a) * self.scale,
            linear: self.a.t().dot(&self.b) * -self.scale,
            constant: 0.5 * self.scale * self.b.dot(&self.b),
        })
    }
}
