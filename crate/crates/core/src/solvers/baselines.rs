//! Projection-based baselines: BiG-SAM, a-IRG and DBGD.
//!
//! Trace rows carry `f` and `g` at each iterate; the surrogate gaps are NaN
//! since these methods never solve a cutting-plane subproblem.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::model::{evaluate, BilevelInstance, SolveOutcome, SolverConfig, StopReason, TraceRecorder};
use crate::oracles::project;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigSamConfig {
    pub eta_f: f64,
    pub eta_g: f64,
    /// `α_k = min{γ/k, 1}`.
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AIrgConfig {
    /// `γ_k = γ₀/√(k+1)`.
    pub gamma0: f64,
    /// `η_k = η₀/(k+1)^{1/4}`.
    pub eta0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbgdConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Lower bound on `g*`.
    pub g_hat: f64,
    pub step: f64,
    /// Below this `‖∇g‖²` the multiplier is zero.
    pub grad_floor: f64,
}

impl Default for DbgdConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            g_hat: 0.0,
            step: 1e-3,
            grad_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MngConfig {
    /// Gradient-mapping constant, at least `L_g`.
    pub m: f64,
}

/// Hyperparameters for all baselines at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub big_sam: BigSamConfig,
    pub a_irg: AIrgConfig,
    pub dbgd: DbgdConfig,
    pub mng: Option<MngConfig>,
}

impl BigSamConfig {
    /// Steps `2/L_f` and `1/L_g` from the oracles' Lipschitz constants.
    pub fn from_lipschitz(instance: &BilevelInstance, gamma: f64) -> Result<Self> {
        let lf = known_positive(instance.upper.lipschitz_grad(), "upper")?;
        let lg = known_positive(instance.lower.lipschitz_grad(), "lower")?;
        Ok(Self {
            eta_f: 2.0 / lf,
            eta_g: 1.0 / lg,
            gamma,
        })
    }

    pub fn validate(&self) -> Result<()> {
        positive(&[("eta_f", self.eta_f), ("eta_g", self.eta_g), ("gamma", self.gamma)])
    }
}

impl AIrgConfig {
    pub fn validate(&self) -> Result<()> {
        positive(&[("gamma0", self.gamma0)])?;
        if !(self.eta0 >= 0.0 && self.eta0.is_finite()) {
            return Err(Error::Config(format!("eta0 must be nonnegative, got {}", self.eta0)));
        }
        Ok(())
    }
}

impl DbgdConfig {
    pub fn validate(&self) -> Result<()> {
        positive(&[("alpha", self.alpha), ("beta", self.beta), ("step", self.step), ("grad_floor", self.grad_floor)])?;
        if !self.g_hat.is_finite() {
            return Err(Error::Config("g_hat must be finite".into()));
        }
        Ok(())
    }
}

pub(crate) fn known_positive(l: Option<f64>, which: &str) -> Result<f64> {
    match l {
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => Err(Error::Config(format!("{which}-level Lipschitz constant must be positive, got {v}"))),
        None => Err(Error::Config(format!("{which}-level Lipschitz constant is unknown"))),
    }
}

fn positive(items: &[(&str, f64)]) -> Result<()> {
    for (name, v) in items {
        if !(*v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// Shared driver: evaluates both levels at `x_k`, records the row and asks
/// `update` for `x_{k+1}`.
pub(crate) fn run_projected<F>(
    instance: &BilevelInstance,
    x0: ArrayView1<'_, f64>,
    run: &SolverConfig,
    mut update: F,
) -> Result<SolveOutcome>
where
    F: FnMut(usize, &Array1<f64>, f64, &Array1<f64>, f64, &Array1<f64>) -> Result<Array1<f64>>,
{
    check_dim(instance.dimension(), x0.len())?;
    if run.max_iters == 0 {
        return Err(Error::Config("max_iters must be positive".into()));
    }
    let mut rec = TraceRecorder::new(run.timing, run.record_iterates);
    let mut x = x0.to_owned();
    for k in 0..=run.max_iters {
        let step = (|| -> Result<Option<Array1<f64>>> {
            let (f_val, grad_f) = evaluate(instance.upper.as_ref(), x.view())?;
            let (g_val, grad_g) = evaluate(instance.lower.as_ref(), x.view())?;
            rec.push(k, f_val, g_val, f64::NAN, f64::NAN, &x);
            if k == run.max_iters {
                return Ok(None);
            }
            let next = update(k, &x, f_val, &grad_f, g_val, &grad_g)?;
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::OracleFailure(format!("iterate diverged at step {k}")));
            }
            Ok(Some(next))
        })();
        match step {
            Ok(Some(next)) => x = next,
            Ok(None) => break,
            Err(e) if rec.is_empty() => return Err(e),
            Err(e) => return Ok(rec.finish(x, StopReason::OracleFailure(e.to_string()))),
        }
    }
    Ok(rec.finish(x, StopReason::BudgetExhausted))
}

/// `y = Π_Z(x − η_g∇g)`, `z = x − η_f∇f`, `x⁺ = α z + (1−α) y` with
/// `α = min{γ/(k+1), 1}`. The combination is not projected, so iterates may
/// leave `Z`.
pub fn big_sam(instance: &BilevelInstance, cfg: &BigSamConfig, x0: ArrayView1<'_, f64>, run: &SolverConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    let region = &instance.region;
    run_projected(instance, x0, run, |k, x, _, grad_f, _, grad_g| {
        let y = project(region, (x - &(grad_g * cfg.eta_g)).view())?;
        let z = x - &(grad_f * cfg.eta_f);
        let alpha = (cfg.gamma / (k + 1) as f64).min(1.0);
        Ok(&y + &((&z - &y) * alpha))
    })
}

/// `x⁺ = Π_Z(x − γ_k(∇g + η_k∇f))`.
pub fn a_irg(instance: &BilevelInstance, cfg: &AIrgConfig, x0: ArrayView1<'_, f64>, run: &SolverConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    let region = &instance.region;
    run_projected(instance, x0, run, |k, x, _, grad_f, _, grad_g| {
        let t = (k + 1) as f64;
        let gamma = cfg.gamma0 / t.sqrt();
        let eta = cfg.eta0 / t.powf(0.25);
        project(region, (x - &((grad_g + &(grad_f * eta)) * gamma)).view())
    })
}

/// `λ = max{(φ − ⟨∇f, ∇g⟩)/‖∇g‖², 0}` with `φ = min{α(g − ĝ), β‖∇g‖²}`.
pub fn dbgd_multiplier(cfg: &DbgdConfig, g_val: f64, grad_f: ArrayView1<'_, f64>, grad_g: ArrayView1<'_, f64>) -> f64 {
    let sq = grad_g.dot(&grad_g);
    if sq < cfg.grad_floor {
        return 0.0;
    }
    let phi = (cfg.alpha * (g_val - cfg.g_hat)).min(cfg.beta * sq);
    ((phi - grad_f.dot(&grad_g)) / sq).max(0.0)
}

/// `x⁺ = Π_Z(x − step·(∇f + λ∇g))`.
pub fn dbgd(instance: &BilevelInstance, cfg: &DbgdConfig, x0: ArrayView1<'_, f64>, run: &SolverConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    let region = &instance.region;
    run_projected(instance, x0, run, |_, x, _, grad_f, g_val, grad_g| {
        let lambda = dbgd_multiplier(cfg, g_val, grad_f.view(), grad_g.view());
        project(region, (x - &((grad_f + &(grad_g * lambda)) * cfg.step)).view())
    })
}
