//! Instance and solver identifiers, per-family defaults and single runs.

use std::fmt;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use bilevel_core::model::{BilevelInstance, Schedule, SolveOutcome, SolverConfig};
use bilevel_core::problems::dictionary::DictionaryData;
use bilevel_core::problems::{
    dictionary_problem, fair_classification_problem, fair_synthetic, random_polytope_instance, regression_problem,
    regression_synthetic, toy_problem, DatasetSplit, DictLearnSpec, FairSpec, LowerKind, RandomSpec, RegressionSpec,
};
use bilevel_core::solvers::{
    a_irg, big_sam, cg_bio, cg_bio_unchecked, cg_upper, dbgd, initialize_lower_from, mng, AIrgConfig, BaselineConfig,
    BigSamConfig, DbgdConfig, LineSearch, MngConfig,
};
use bilevel_core::{Error, Result};

use crate::persist::RunRecord;
use crate::reference::{reference_bilevel, reference_lower};

/// Warm-start budget for the lower level.
pub const WARM_START_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Toy,
    Regression,
    Fair,
    Dict,
    Random,
}

/// A generated instance, written `family:key=value,...`.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    Toy,
    Regression(RegressionSpec),
    Fair(FairSpec),
    Dict(DictLearnSpec),
    Random(RandomSpec),
}

impl InstanceSpec {
    /// Parses an instance id. `seed` fills in the generator seed when the id
    /// does not set one.
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        let (family, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut pairs: Vec<(&str, &str)> = Vec::new();
        for item in rest.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("instance parameter `{item}` must look like key=value")))?;
            pairs.push((k.trim(), v.trim()));
        }
        let bad = |k: &str, v: &str| Error::Config(format!("bad value `{v}` for instance parameter `{k}`"));
        macro_rules! set {
            ($target:expr, $k:expr, $v:expr) => {
                $target = $v.parse().map_err(|_| bad($k, $v))?
            };
        }
        let unknown = |k: &str| Error::Config(format!("unknown parameter `{k}` for instance family `{family}`"));
        match family {
            "toy" => match pairs.first() {
                None => Ok(InstanceSpec::Toy),
                Some((k, _)) => Err(unknown(k)),
            },
            "regression" => {
                let mut s = RegressionSpec { seed, ..RegressionSpec::default() };
                for (k, v) in pairs {
                    match k {
                        "n" => set!(s.n, k, v),
                        "d" => set!(s.d, k, v),
                        "seed" => set!(s.seed, k, v),
                        "radius" => set!(s.radius, k, v),
                        "noise" => set!(s.noise, k, v),
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(InstanceSpec::Regression(s))
            }
            "fair" => {
                let mut s = FairSpec { seed, ..FairSpec::default() };
                for (k, v) in pairs {
                    match k {
                        "n" => set!(s.n, k, v),
                        "d" => set!(s.d, k, v),
                        "seed" => set!(s.seed, k, v),
                        "radius" => set!(s.radius, k, v),
                        "shift" => set!(s.group_shift, k, v),
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(InstanceSpec::Fair(s))
            }
            "dict" => {
                let mut s = DictLearnSpec { seed, ..DictLearnSpec::default() };
                for (k, v) in pairs {
                    match k {
                        "seed" => set!(s.seed, k, v),
                        "pretrain_iters" => set!(s.pretrain_iters, k, v),
                        "radius" => set!(s.l1_radius, k, v),
                        "n_old" => set!(s.n_old, k, v),
                        "n_new" => set!(s.n_new, k, v),
                        _ => return Err(unknown(k)),
                    }
                }
                s.validate()?;
                Ok(InstanceSpec::Dict(s))
            }
            "random" => {
                let mut s = RandomSpec {
                    dim: 2,
                    seed,
                    lower: LowerKind::Linear,
                };
                for (k, v) in pairs {
                    match k {
                        "dim" => set!(s.dim, k, v),
                        "seed" => set!(s.seed, k, v),
                        "lower" => {
                            s.lower = match v {
                                "linear" => LowerKind::Linear,
                                "squared" => LowerKind::Squared,
                                _ => return Err(bad(k, v)),
                            }
                        }
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(InstanceSpec::Random(s))
            }
            other => Err(Error::Config(format!("unknown instance family `{other}`"))),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            InstanceSpec::Toy => Family::Toy,
            InstanceSpec::Regression(_) => Family::Regression,
            InstanceSpec::Fair(_) => Family::Fair,
            InstanceSpec::Dict(_) => Family::Dict,
            InstanceSpec::Random(_) => Family::Random,
        }
    }
}

impl fmt::Display for InstanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceSpec::Toy => f.write_str("toy"),
            InstanceSpec::Regression(s) => write!(f, "regression:n={},d={},seed={},radius={}", s.n, s.d, s.seed, s.radius),
            InstanceSpec::Fair(s) => write!(f, "fair:n={},d={},seed={},radius={}", s.n, s.d, s.seed, s.radius),
            InstanceSpec::Dict(s) => write!(f, "dict:seed={},pretrain_iters={}", s.seed, s.pretrain_iters),
            InstanceSpec::Random(s) => {
                let lower = match s.lower {
                    LowerKind::Linear => "linear",
                    LowerKind::Squared => "squared",
                };
                write!(f, "random:dim={},seed={},lower={lower}", s.dim, s.seed)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "cg-bio")]
    CgBio,
    /// Standard CG on `f` over `Z`, ignoring the lower level.
    #[serde(rename = "cg-upper")]
    CgUpper,
    #[serde(rename = "big-sam")]
    BigSam,
    #[serde(rename = "a-irg")]
    AIrg,
    #[serde(rename = "dbgd")]
    Dbgd,
    #[serde(rename = "mng")]
    Mng,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::CgBio,
        SolverKind::CgUpper,
        SolverKind::BigSam,
        SolverKind::AIrg,
        SolverKind::Dbgd,
        SolverKind::Mng,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            SolverKind::CgBio => "cg-bio",
            SolverKind::CgUpper => "cg-upper",
            SolverKind::BigSam => "big-sam",
            SolverKind::AIrg => "a-irg",
            SolverKind::Dbgd => "dbgd",
            SolverKind::Mng => "mng",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.id() == text)
            .ok_or_else(|| Error::Config(format!("unknown solver `{text}`")))
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.id())
    }
}

/// Optional overrides of the family defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    /// `harmonic:c`, `constant:g` or `inv-sqrt:c0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_on_criterion: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_iterates: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<bool>,
}

/// Everything a run depends on besides the instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub run: SolverConfig,
    pub baselines: BaselineConfig,
}

/// Reference values attached to a prepared instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct References {
    pub f_star: Option<f64>,
    pub g_star: Option<f64>,
}

/// Family-specific data kept for metrics.
#[derive(Debug, Clone)]
pub enum Extras {
    None,
    Split(DatasetSplit),
    Dictionary(Box<DictionaryData>),
}

/// An instance with its common starting point.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub id: String,
    pub family: Family,
    pub instance: BilevelInstance,
    pub x0: Array1<f64>,
    /// Lower-level FW gap at `x0`.
    pub certificate: f64,
    pub references: References,
    pub extras: Extras,
}

/// Defaults for each family.
pub fn family_defaults(family: Family, instance: &BilevelInstance) -> Result<Settings> {
    let lg = instance.lower.lipschitz_grad();
    let g_hat = instance.reference.g_star.unwrap_or(0.0);
    let dbgd_step = |step: f64| DbgdConfig {
        step,
        g_hat,
        ..DbgdConfig::default()
    };
    let (eps, schedule, big_sam_cfg, a_irg_cfg, dbgd_cfg, mng_cfg) = match family {
        Family::Toy => (
            1e-5,
            Schedule::Harmonic { shift: 2 },
            BigSamConfig { eta_f: 1.0, eta_g: 1.0, gamma: 10.0 },
            AIrgConfig { gamma0: 0.01, eta0: 1.0 },
            dbgd_step(0.01),
            Some(MngConfig { m: 1.0 }),
        ),
        Family::Random => (
            1e-6,
            Schedule::Harmonic { shift: 2 },
            BigSamConfig::from_lipschitz(instance, 10.0).unwrap_or(BigSamConfig { eta_f: 1.0, eta_g: 1.0, gamma: 10.0 }),
            AIrgConfig { gamma0: 0.01, eta0: 1.0 },
            dbgd_step(0.01),
            Some(MngConfig { m: lg.unwrap_or(1.0).max(1.0) }),
        ),
        Family::Regression => (
            1e-4,
            Schedule::Harmonic { shift: 12 },
            BigSamConfig::from_lipschitz(instance, 10.0)?,
            AIrgConfig { gamma0: 0.01, eta0: 1.0 },
            dbgd_step(1e-4),
            lg.map(|m| MngConfig { m }),
        ),
        Family::Fair => (
            1e-4,
            Schedule::InvSqrt { scale: 0.005 },
            BigSamConfig { eta_f: 0.1, eta_g: 0.1, gamma: 1.0 },
            AIrgConfig { gamma0: 5.0, eta0: 0.1 },
            dbgd_step(0.08),
            None,
        ),
        Family::Dict => (
            1e-4,
            Schedule::InvSqrt { scale: 0.3 },
            BigSamConfig { eta_f: 0.1, eta_g: 0.1, gamma: 10.0 },
            AIrgConfig { gamma0: 0.01, eta0: 1.0 },
            dbgd_step(0.1),
            None,
        ),
    };
    Ok(Settings {
        run: SolverConfig {
            eps_f: eps,
            eps_g: eps,
            max_iters: 1000,
            schedule,
            ..SolverConfig::default()
        },
        baselines: BaselineConfig {
            big_sam: big_sam_cfg,
            a_irg: a_irg_cfg,
            dbgd: dbgd_cfg,
            mng: mng_cfg,
        },
    })
}

impl Settings {
    pub fn apply(&mut self, cell: &CellConfig) -> Result<()> {
        let run = &mut self.run;
        if let Some(v) = cell.eps_f {
            run.eps_f = v;
        }
        if let Some(v) = cell.eps_g {
            run.eps_g = v;
        }
        if let Some(v) = cell.max_iters {
            run.max_iters = v;
        }
        if let Some(s) = &cell.schedule {
            run.schedule = Schedule::parse(s)?;
        }
        if let Some(v) = cell.stop_on_criterion {
            run.stop_on_criterion = v;
        }
        if let Some(v) = cell.record_iterates {
            run.record_iterates = v;
        }
        if let Some(v) = cell.timing {
            run.timing = v;
        }
        run.validate()
    }
}

/// Builds the instance, its references and the shared warm start.
pub fn prepare(spec: &InstanceSpec, eps_g: f64) -> Result<Prepared> {
    let id = spec.to_string();
    let family = spec.family();
    match spec {
        InstanceSpec::Toy => finish(id, family, toy_problem(), eps_g, LineSearch::Schedule, Extras::None),
        InstanceSpec::Random(s) => finish(id, family, random_polytope_instance(s)?, eps_g, LineSearch::Schedule, Extras::None),
        InstanceSpec::Regression(s) => {
            let p = regression_synthetic(s)?;
            finish(id, family, p.instance, eps_g, LineSearch::Schedule, Extras::Split(p.split))
        }
        InstanceSpec::Fair(s) => {
            let p = fair_synthetic(s)?;
            finish(id, family, p.instance, eps_g, LineSearch::Backtracking, Extras::Split(p.split))
        }
        InstanceSpec::Dict(s) => {
            let p = dictionary_problem(s)?;
            let certificate = bilevel_core::solvers::fw_gap(p.instance.lower.as_ref(), &p.instance.region, p.x0.view())?;
            let references = References {
                f_star: None,
                g_star: p.instance.reference.g_star,
            };
            Ok(Prepared {
                id,
                family,
                instance: p.instance,
                x0: p.x0,
                certificate,
                references,
                extras: Extras::Dictionary(Box::new(p.data)),
            })
        }
    }
}

/// Regression or fair classification on a loaded dataset split.
pub fn prepare_split(family: Family, id: impl Into<String>, split: DatasetSplit, radius: f64, eps_g: f64) -> Result<Prepared> {
    let (instance, search) = match family {
        Family::Regression => (regression_problem(&split, radius)?, LineSearch::Schedule),
        Family::Fair => (fair_classification_problem(&split, radius)?, LineSearch::Backtracking),
        _ => return Err(Error::Config("only regression and fair classification read datasets".into())),
    };
    let id = id.into();
    let mut instance = instance;
    instance.name = id.clone();
    finish(id, family, instance, eps_g, search, Extras::Split(split))
}

fn finish(id: String, family: Family, instance: BilevelInstance, eps_g: f64, search: LineSearch, extras: Extras) -> Result<Prepared> {
    let start = instance.region.anchor()?;
    let warm = initialize_lower_from(&instance, start.view(), eps_g, WARM_START_ITERS, search)?;
    let references = references(&instance)?;
    Ok(Prepared {
        id,
        family,
        instance,
        x0: warm.point,
        certificate: warm.certificate,
        references,
        extras,
    })
}

const LOWER_REF_TOL: f64 = 1e-9;
const LOWER_REF_ITERS: usize = 200_000;

fn references(instance: &BilevelInstance) -> Result<References> {
    let g_star = match instance.reference.g_star {
        Some(g) => Some(g),
        None => Some(reference_lower(instance, LOWER_REF_TOL, LOWER_REF_ITERS)?.lower_bound),
    };
    let f_star = match instance.reference.f_star {
        Some(f) => Some(f),
        None if instance.reference.lower_solution_vertices.is_some() => Some(reference_bilevel(instance, 1e-12)?.f_star),
        None => None,
    };
    Ok(References { f_star, g_star })
}

/// Runs one solver from the prepared start. CG-BiO falls back to the
/// unchecked entry point when the warm start missed its certificate within
/// the budget.
pub fn run_solver(prepared: &Prepared, solver: SolverKind, settings: &Settings) -> Result<SolveOutcome> {
    let inst = &prepared.instance;
    let x0 = prepared.x0.view();
    let run = &settings.run;
    let b = &settings.baselines;
    match solver {
        SolverKind::CgBio if prepared.certificate <= 0.5 * run.eps_g => cg_bio(inst, x0, run),
        SolverKind::CgBio => cg_bio_unchecked(inst, x0, run),
        SolverKind::CgUpper => cg_upper(inst, x0, run),
        SolverKind::BigSam => big_sam(inst, &b.big_sam, x0, run),
        SolverKind::AIrg => a_irg(inst, &b.a_irg, x0, run),
        SolverKind::Dbgd => dbgd(inst, &b.dbgd, x0, run),
        SolverKind::Mng => {
            let cfg = b
                .mng
                .ok_or_else(|| Error::Unsupported(format!("MNG is not configured for {}", prepared.id)))?;
            mng(inst, &cfg, x0, run)
        }
    }
}

/// Lower-level tolerance used when a run does not set one.
pub fn default_eps_g(family: Family) -> f64 {
    match family {
        Family::Toy => 1e-5,
        Family::Random => 1e-6,
        _ => 1e-4,
    }
}

/// Family defaults with the run's tolerance, seed and overrides applied.
pub fn cell_settings(prepared: &Prepared, eps_g: f64, seed: u64, cell: &CellConfig) -> Result<Settings> {
    let mut settings = family_defaults(prepared.family, &prepared.instance)?;
    settings.run.eps_g = eps_g;
    settings.run.rng_seed = seed;
    settings.apply(cell)?;
    Ok(settings)
}

/// Prepares, runs and packages one cell.
pub fn run_cell(instance: &str, solver: SolverKind, cell: &CellConfig, seed: u64) -> Result<RunRecord> {
    let spec = InstanceSpec::parse(instance, seed)?;
    // The warm start depends on ε_g, so resolve it before building anything.
    let eps_g = cell.eps_g.unwrap_or_else(|| default_eps_g(spec.family()));
    let prepared = prepare(&spec, eps_g)?;
    let settings = cell_settings(&prepared, eps_g, seed, cell)?;
    let outcome = run_solver(&prepared, solver, &settings)?;
    Ok(RunRecord::new(&prepared, solver, &settings, seed, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use bilevel_core::model::StopReason;

    #[test]
    fn instance_ids_round_trip() {
        for text in ["toy", "regression:n=60,d=100,seed=3,radius=1", "random:dim=3,seed=7,lower=squared", "fair:n=200,d=2,seed=1,radius=10"] {
            let spec = InstanceSpec::parse(text, 0).unwrap();
            assert_eq!(InstanceSpec::parse(&spec.to_string(), 99).unwrap(), spec);
        }
        assert!(InstanceSpec::parse("toy:n=3", 0).is_err());
        assert!(InstanceSpec::parse("regression:q=1", 0).is_err());
        assert!(InstanceSpec::parse("nope", 0).is_err());
    }

    #[test]
    fn default_seed_fills_in() {
        match InstanceSpec::parse("random:dim=2", 5).unwrap() {
            InstanceSpec::Random(s) => assert_eq!(s.seed, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn toy_cell_meets_the_criterion() {
        let rec = run_cell("toy", SolverKind::CgBio, &CellConfig::default(), 0).unwrap();
        assert_eq!(rec.outcome.stop_reason, StopReason::CriterionMet);
        assert!(rec.outcome.iterations() <= 40);
    }

    #[test]
    fn every_solver_runs_on_the_toy() {
        let cell = CellConfig {
            max_iters: Some(50),
            timing: Some(false),
            ..CellConfig::default()
        };
        for s in SolverKind::ALL {
            let rec = run_cell("toy", s, &cell, 0).unwrap();
            assert!(!rec.outcome.trace.is_empty(), "{s}");
        }
    }
}
