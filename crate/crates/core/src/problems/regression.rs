//! Over-parameterized least squares: validation loss over the training
//! minimizers inside an ℓ₁ ball.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::functions::LeastSquares;
use crate::model::{BilevelInstance, FeasibleRegion, Reference};
use crate::problems::data::{split_sizes, Dataset, DatasetSplit, DEFAULT_FRACTIONS};

/// Seeded synthetic data with a planted `β̄` inside the ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionSpec {
    /// Total rows before the 60/20/20 split.
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub radius: f64,
    /// `‖β̄‖₁` as a fraction of the radius.
    pub planted_fraction: f64,
    /// Noise on validation and test targets; training targets are exact. The
    /// default keeps validation rows from being interpolated inside the ball
    /// together with the training rows, so the upper level is not solved by
    /// every lower-level minimizer.
    pub noise: f64,
}

impl Default for RegressionSpec {
    fn default() -> Self {
        Self {
            n: 100,
            d: 150,
            seed: 0,
            radius: 1.0,
            planted_fraction: 0.5,
            noise: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegressionProblem {
    pub instance: BilevelInstance,
    pub split: DatasetSplit,
    pub planted: Array1<f64>,
}

/// Builds `f = ½‖A_val β − b_val‖²`, `g = ½‖A_tr β − b_tr‖²` over
/// `‖β‖₁ ≤ radius`.
pub fn regression_problem(split: &DatasetSplit, radius: f64) -> Result<BilevelInstance> {
    if split.train.is_empty() || split.validation.is_empty() {
        return Err(Error::Data("regression needs nonempty training and validation parts".into()));
    }
    let d = split.train.features.ncols();
    let lower = LeastSquares::new(split.train.features.clone(), split.train.targets.clone(), 1.0)?;
    let upper = LeastSquares::new(split.validation.features.clone(), split.validation.targets.clone(), 1.0)?;
    let region = FeasibleRegion::l1_ball(d, radius)?;
    Ok(BilevelInstance::new("regression", Arc::new(upper), Arc::new(lower), region)?.with_convex_upper(true))
}

/// Gaussian design with entries of variance `1/n_train` and training targets
/// `A_tr β̄`, so `g* = 0` whenever `‖β̄‖₁ ≤ radius`.
pub fn regression_synthetic(spec: &RegressionSpec) -> Result<RegressionProblem> {
    let sizes = split_sizes(spec.n, DEFAULT_FRACTIONS)?;
    if spec.d <= sizes[0] {
        return Err(Error::Config(format!(
            "synthetic regression must be over-parameterized: d = {} but {} training rows",
            spec.d, sizes[0]
        )));
    }
    if !(spec.planted_fraction > 0.0 && spec.planted_fraction <= 1.0) {
        return Err(Error::Config("planted fraction must lie in (0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let entry = Normal::new(0.0, 1.0 / (sizes[0].max(1) as f64).sqrt()).map_err(|e| Error::Config(e.to_string()))?;
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let mut planted: Array1<f64> = Array1::from_shape_fn(spec.d, |_| std.sample(&mut rng));
    let l1: f64 = planted.iter().map(|v| v.abs()).sum();
    planted.mapv_inplace(|v| v * spec.planted_fraction * spec.radius / l1);

    let part = |rows: usize, noisy: bool, rng: &mut ChaCha8Rng| -> Result<Dataset> {
        let a = Array2::from_shape_fn((rows, spec.d), |_| entry.sample(rng));
        let mut b = a.dot(&planted);
        if noisy && spec.noise > 0.0 {
            b.mapv_inplace(|v| v + spec.noise * rng.sample::<f64, _>(rand_distr::StandardNormal));
        }
        Dataset::new(a, b, None)
    };
    let train = part(sizes[0], false, &mut rng)?;
    let validation = part(sizes[1], true, &mut rng)?;
    let test = part(sizes[2], true, &mut rng)?;
    let split = DatasetSplit {
        train,
        validation,
        test,
        fractions: DEFAULT_FRACTIONS,
    };
    let mut instance = regression_problem(&split, spec.radius)?;
    instance.name = format!("regression:n={},d={}", spec.n, spec.d);
    instance.reference = Reference {
        g_star: Some(0.0),
        ..Reference::default()
    };
    Ok(RegressionProblem { instance, split, planted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gram_lambda_max;

    #[test]
    fn planted_point_interpolates_the_training_rows() {
        let p = regression_synthetic(&RegressionSpec {
            n: 60,
            d: 100,
            ..RegressionSpec::default()
        })
        .unwrap();
        assert!(p.instance.lower.value(p.planted.view()).unwrap() < 1e-20);
        assert!((p.planted.iter().map(|v| v.abs()).sum::<f64>() - 0.5).abs() < 1e-12);
        assert_eq!(p.split.train.len(), 36);
    }

    #[test]
    fn lower_gradient_at_zero_is_minus_a_transpose_b() {
        let p = regression_synthetic(&RegressionSpec::default()).unwrap();
        let (_, grad) = p.instance.lower.eval(Array1::zeros(150).view()).unwrap();
        let expect = -p.split.train.features.t().dot(&p.split.train.targets);
        assert!((&grad - &expect).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn lipschitz_constants_are_gram_eigenvalues() {
        let p = regression_synthetic(&RegressionSpec::default()).unwrap();
        let lg = gram_lambda_max(&p.split.train.features);
        assert!((p.instance.lower.lipschitz_grad().unwrap() - lg).abs() <= 1e-12 * lg);
    }

    #[test]
    fn under_parameterized_spec_is_rejected() {
        let spec = RegressionSpec {
            n: 100,
            d: 50,
            ..RegressionSpec::default()
        };
        assert!(matches!(regression_synthetic(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn zero_design_is_rejected() {
        let data = Dataset::new(Array2::zeros((3, 4)), Array1::zeros(3), None).unwrap();
        let split = DatasetSplit {
            train: data.clone(),
            validation: data.clone(),
            test: data,
            fractions: DEFAULT_FRACTIONS,
        };
        assert!(matches!(regression_problem(&split, 1.0), Err(Error::Data(_))));
    }
}
