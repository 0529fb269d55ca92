use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step-size rule `γ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// `2 / (k + shift)`.
    Harmonic { shift: u32 },
    Constant { gamma: f64 },
    /// `min(1, scale / √(k+1))`.
    InvSqrt { scale: f64 },
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Schedule::Harmonic { shift } if shift < 2 => {
                Err(Error::Config(format!("harmonic shift must be at least 2, got {shift}")))
            }
            Schedule::Constant { gamma } if !(gamma > 0.0 && gamma <= 1.0) => {
                Err(Error::Config(format!("constant step must lie in (0, 1], got {gamma}")))
            }
            Schedule::InvSqrt { scale } if !(scale > 0.0 && scale.is_finite()) => {
                Err(Error::Config(format!("inv-sqrt scale must be positive, got {scale}")))
            }
            _ => Ok(()),
        }
    }

    pub fn step(&self, k: usize) -> f64 {
        step_size(self, k)
    }

    /// Constant step `min{ε_f/(L_f D²), ε_g/(L_g D²)}` for non-convex upper
    /// objectives, clamped into (0, 1]. Vanishing constants impose no limit.
    pub fn nonconvex_constant(eps_f: f64, eps_g: f64, lf: f64, lg: f64, diameter: f64) -> Self {
        let d2 = diameter * diameter;
        let mut gamma: f64 = 1.0;
        if lf * d2 > 0.0 {
            gamma = gamma.min(eps_f / (lf * d2));
        }
        if lg * d2 > 0.0 {
            gamma = gamma.min(eps_g / (lg * d2));
        }
        Schedule::Constant {
            gamma: gamma.max(f64::MIN_POSITIVE),
        }
    }

    /// Parses `harmonic:c`, `constant:g` or `inv-sqrt:c0`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, arg) = text
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("schedule `{text}` must look like kind:value")))?;
        let bad = |_| Error::Config(format!("bad schedule parameter in `{text}`"));
        let schedule = match kind {
            "harmonic" => Schedule::Harmonic {
                shift: arg.parse().map_err(bad)?,
            },
            "constant" => Schedule::Constant {
                gamma: arg.parse().map_err(|_| Error::Config(format!("bad schedule parameter in `{text}`")))?,
            },
            "inv-sqrt" => Schedule::InvSqrt {
                scale: arg.parse().map_err(|_| Error::Config(format!("bad schedule parameter in `{text}`")))?,
            },
            other => return Err(Error::Config(format!("unknown schedule kind `{other}`"))),
        };
        schedule.validate()?;
        Ok(schedule)
    }
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Schedule::Harmonic { shift } => write!(f, "harmonic:{shift}"),
            Schedule::Constant { gamma } => write!(f, "constant:{gamma}"),
            Schedule::InvSqrt { scale } => write!(f, "inv-sqrt:{scale}"),
        }
    }
}

pub fn step_size(schedule: &Schedule, k: usize) -> f64 {
    match *schedule {
        Schedule::Harmonic { shift } => 2.0 / (k as f64 + shift as f64),
        Schedule::Constant { gamma } => gamma,
        Schedule::InvSqrt { scale } => (scale / ((k + 1) as f64).sqrt()).min(1.0),
    }
}

/// Settings shared by the conditional-gradient solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps_f: f64,
    pub eps_g: f64,
    pub max_iters: usize,
    pub schedule: Schedule,
    pub rng_seed: u64,
    /// Keep every iterate in the trace.
    pub record_iterates: bool,
    /// Apply the two-gap stopping test; off to run the full budget.
    pub stop_on_criterion: bool,
    /// Record wall-clock nanoseconds; off for byte-reproducible traces.
    pub timing: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_f: 1e-4,
            eps_g: 1e-4,
            max_iters: 1000,
            schedule: Schedule::Harmonic { shift: 2 },
            rng_seed: 0,
            record_iterates: false,
            stop_on_criterion: true,
            timing: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_f > 0.0) || !(self.eps_g > 0.0) {
            return Err(Error::Config("target accuracies must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        self.schedule.validate()
    }
}
