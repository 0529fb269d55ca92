//! Sparse logistic regression with a squared-covariance fairness objective.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::linalg::gram_lambda_max;
use crate::model::{BilevelInstance, FeasibleRegion, SmoothOracle};
use crate::problems::data::{minmax_scale, split_dataset, Dataset, DatasetSplit, DEFAULT_FRACTIONS};

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + eᵗ)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Mean logistic loss `(1/n) Σ log(1 + e^{tᵢ}) − yᵢtᵢ` with `tᵢ = xᵢᵀβ` and
/// labels in `{0, 1}`.
#[derive(Debug, Clone)]
pub struct LogisticLoss {
    x: Array2<f64>,
    y: Array1<f64>,
    lipschitz: f64,
}

impl LogisticLoss {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        check_dim(x.nrows(), y.len())?;
        if y.is_empty() {
            return Err(Error::Data("logistic loss needs at least one sample".into()));
        }
        if y.iter().any(|v| *v != 0.0 && *v != 1.0) {
            return Err(Error::Data("logistic labels must be 0 or 1".into()));
        }
        let lipschitz = 0.25 * gram_lambda_max(&x) / y.len() as f64;
        Ok(Self { x, y, lipschitz })
    }
}

impl SmoothOracle for LogisticLoss {
    fn dimension(&self) -> usize {
        self.x.ncols()
    }

    fn eval(&self, beta: ArrayView1<'_, f64>) -> Result<(f64, Array1<f64>)> {
        let n = self.y.len() as f64;
        let t = self.x.dot(&beta);
        let value = t.iter().zip(&self.y).map(|(t, y)| softplus(*t) - y * t).sum::<f64>() / n;
        let resid = Array1::from_iter(t.iter().zip(&self.y).map(|(t, y)| sigmoid(*t) - y));
        Ok((value, self.x.t().dot(&resid) / n))
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

/// `f(β) = c(β)²` with `c(β) = (1/n) Σ (vᵢ − v̄)·σ(xᵢᵀβ)`.
#[derive(Debug, Clone)]
pub struct CovarianceSquared {
    x: Array2<f64>,
    weights: Array1<f64>,
    lipschitz: f64,
}

impl CovarianceSquared {
    pub fn new(x: Array2<f64>, sensitive: ArrayView1<'_, f64>) -> Result<Self> {
        check_dim(x.nrows(), sensitive.len())?;
        let n = sensitive.len() as f64;
        if sensitive.is_empty() {
            return Err(Error::Data("covariance objective needs at least one sample".into()));
        }
        let mean = sensitive.sum() / n;
        let weights = sensitive.mapv(|v| v - mean);
        if weights.iter().all(|w| w.abs() <= 1e-15 * mean.abs().max(1.0)) {
            return Err(Error::Data(
                "sensitive attribute is constant, so the covariance objective is identically zero".into(),
            ));
        }
        // |c| ≤ B0, ‖∇c‖ ≤ B1, ‖∇²c‖ ≤ B2 from |σ − ½| ≤ ½, σ' ≤ ¼, |σ''| ≤ 1/(6√3).
        let mut b0 = 0.0;
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for (row, w) in x.rows().into_iter().zip(&weights) {
            let sq = row.dot(&row);
            b0 += 0.5 * w.abs();
            b1 += 0.25 * w.abs() * sq.sqrt();
            b2 += w.abs() * sq / (6.0 * 3f64.sqrt());
        }
        let (b0, b1, b2) = (b0 / n, b1 / n, b2 / n);
        Ok(Self {
            x,
            weights,
            lipschitz: 2.0 * b1 * b1 + 2.0 * b0 * b2,
        })
    }

    /// The covariance `c(β)` itself.
    pub fn covariance(&self, beta: ArrayView1<'_, f64>) -> f64 {
        let t = self.x.dot(&beta);
        t.iter().zip(&self.weights).map(|(t, w)| w * sigmoid(*t)).sum::<f64>() / self.weights.len() as f64
    }
}

impl SmoothOracle for CovarianceSquared {
    fn dimension(&self) -> usize {
        self.x.ncols()
    }

    fn eval(&self, beta: ArrayView1<'_, f64>) -> Result<(f64, Array1<f64>)> {
        let n = self.weights.len() as f64;
        let t = self.x.dot(&beta);
        let mut c = 0.0;
        let mut coef = Array1::zeros(t.len());
        for (i, (t, w)) in t.iter().zip(&self.weights).enumerate() {
            let s = sigmoid(*t);
            c += w * s;
            coef[i] = w * s * (1.0 - s);
        }
        c /= n;
        let grad_c = self.x.t().dot(&coef) / n;
        Ok((c * c, grad_c * (2.0 * c)))
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairSpec {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub radius: f64,
    /// Mean shift of the correlated features between the two groups.
    pub group_shift: f64,
}

impl Default for FairSpec {
    fn default() -> Self {
        Self {
            n: 500,
            d: 10,
            seed: 0,
            radius: 100.0,
            group_shift: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FairProblem {
    pub instance: BilevelInstance,
    pub split: DatasetSplit,
}

/// Lower level: logistic loss on the training part over `‖β‖₁ ≤ radius`.
/// Upper level: squared covariance between predictions and the sensitive
/// attribute on the same rows.
pub fn fair_classification_problem(split: &DatasetSplit, radius: f64) -> Result<BilevelInstance> {
    let train = &split.train;
    let sensitive = train
        .sensitive
        .as_ref()
        .ok_or_else(|| Error::Data("fair classification needs a sensitive attribute".into()))?;
    let d = train.features.ncols();
    let lower = LogisticLoss::new(train.features.clone(), train.targets.clone())?;
    let upper = CovarianceSquared::new(train.features.clone(), sensitive.view())?;
    let region = FeasibleRegion::l1_ball(d, radius)?;
    BilevelInstance::new("fair", Arc::new(upper), Arc::new(lower), region)
}

/// Binary group `v`, Gaussian features with the first half shifted by
/// `group_shift` in group 1, scaled to `[0, 1]`, and labels drawn from a
/// random logistic model. `v` is not a feature.
pub fn fair_synthetic(spec: &FairSpec) -> Result<FairProblem> {
    if spec.n < 5 || spec.d == 0 {
        return Err(Error::Config("fair synthetic data needs n ≥ 5 and d ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let v = Array1::from_shape_fn(spec.n, |_| if rng.random::<f64>() < 0.5 { 0.0 } else { 1.0 });
    let shifted = spec.d.div_ceil(2);
    let mut x = Array2::from_shape_fn((spec.n, spec.d), |_| rng.sample::<f64, _>(StandardNormal));
    for (mut row, vi) in x.rows_mut().into_iter().zip(&v) {
        for j in 0..shifted {
            row[j] += spec.group_shift * vi;
        }
    }
    minmax_scale(&mut x);
    let w = Array1::from_shape_fn(spec.d, |_| 3.0 * rng.sample::<f64, _>(StandardNormal));
    let centre = x.mean_axis(ndarray::Axis(0)).expect("nonempty").dot(&w);
    let y = Array1::from_iter(x.rows().into_iter().map(|row| {
        let p = sigmoid(row.dot(&w) - centre);
        if rng.random::<f64>() < p {
            1.0
        } else {
            0.0
        }
    }));
    let data = Dataset::new(x, y, Some(v))?;
    let split = split_dataset(&data, DEFAULT_FRACTIONS, spec.seed)?;
    let mut instance = fair_classification_problem(&split, spec.radius)?;
    instance.name = format!("fair:n={},d={}", spec.n, spec.d);
    Ok(FairProblem { instance, split })
}
