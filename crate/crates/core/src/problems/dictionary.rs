//! Dictionary learning: synthetic data, the pretraining problem and the
//! bilevel dictionary-expansion problem.
//!
//! Flattened layout: the dictionary block first, column-major, then the
//! coefficient block, column-major.

use std::sync::Arc;

use ndarray::{s, Array1, Array2, ArrayView1, ShapeBuilder};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::linalg::sym_lambda_max;
use crate::model::{BilevelInstance, FeasibleRegion, Reference, Schedule, SmoothOracle, SolverConfig, StopReason};
use crate::solvers::{fw_gap, standard_cg, LineSearch};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DictLearnSpec {
    pub signal_dim: usize,
    pub true_dict_size: usize,
    pub old_dict_size: usize,
    pub new_dict_size: usize,
    pub shared: usize,
    pub n_old: usize,
    pub n_new: usize,
    pub sparsity: usize,
    pub coeff_min: f64,
    pub coeff_max: f64,
    pub noise_sigma: f64,
    pub l1_radius: f64,
    pub seed: u64,
    /// Joint CG steps with `γ_k = 1/√(k+1)` during pretraining.
    pub pretrain_iters: usize,
    /// FW-gap target of the dictionary-only refinement.
    pub refine_tol: f64,
    pub refine_max_iters: usize,
}

impl Default for DictLearnSpec {
    fn default() -> Self {
        Self {
            signal_dim: 25,
            true_dict_size: 50,
            old_dict_size: 40,
            new_dict_size: 20,
            shared: 10,
            n_old: 250,
            n_new: 200,
            sparsity: 5,
            coeff_min: 0.2,
            coeff_max: 1.0,
            noise_sigma: 0.01,
            l1_radius: 3.0,
            seed: 0,
            pretrain_iters: 10_000,
            refine_tol: 1e-6,
            refine_max_iters: 100_000,
        }
    }
}

impl DictLearnSpec {
    pub fn validate(&self) -> Result<()> {
        let s = self;
        if s.shared > s.old_dict_size.min(s.new_dict_size) {
            return Err(Error::Config("shared atoms exceed a sub-dictionary size".into()));
        }
        if s.old_dict_size + s.new_dict_size - s.shared > s.true_dict_size {
            return Err(Error::Config("sub-dictionaries do not fit in the true dictionary".into()));
        }
        if s.sparsity > s.old_dict_size.min(s.new_dict_size) {
            return Err(Error::Config("sparsity exceeds a sub-dictionary size".into()));
        }
        if s.signal_dim == 0 || s.n_old == 0 || s.n_new == 0 || s.true_dict_size <= s.old_dict_size {
            return Err(Error::Config("dictionary sizes must be positive and the expansion nontrivial".into()));
        }
        if !(0.0 < s.coeff_min && s.coeff_min <= s.coeff_max) || !(s.l1_radius > 0.0) || s.noise_sigma < 0.0 {
            return Err(Error::Config("invalid coefficient range, noise or radius".into()));
        }
        Ok(())
    }
}

/// Ground truth and the two datasets (one signal per column).
#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryData {
    pub truth: Array2<f64>,
    pub old_atoms: Vec<usize>,
    pub new_atoms: Vec<usize>,
    pub old_signals: Array2<f64>,
    pub new_signals: Array2<f64>,
}

/// Column-major matrix from a flat slice.
pub fn unflatten(v: ArrayView1<'_, f64>, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_vec((rows, cols).f(), v.to_vec()).expect("slice length matches shape")
}

/// Column-major flattening.
pub fn flatten(m: &Array2<f64>) -> Array1<f64> {
    Array1::from_iter(m.t().iter().copied())
}

pub fn dictionary_data(spec: &DictLearnSpec) -> Result<DictionaryData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = spec.signal_dim;
    let mut truth = Array2::from_shape_fn((m, spec.true_dict_size), |_| rng.sample::<f64, _>(StandardNormal));
    for mut col in truth.columns_mut() {
        let norm = col.dot(&col).sqrt();
        col.mapv_inplace(|v| v / norm);
    }
    let mut perm: Vec<usize> = (0..spec.true_dict_size).collect();
    perm.shuffle(&mut rng);
    let old_atoms = perm[..spec.old_dict_size].to_vec();
    let start = spec.old_dict_size - spec.shared;
    let new_atoms = perm[start..start + spec.new_dict_size].to_vec();
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let signals = |atoms: &[usize], count: usize, rng: &mut ChaCha8Rng| {
        let mut out = Array2::zeros((m, count));
        let mut slots: Vec<usize> = (0..atoms.len()).collect();
        for mut col in out.columns_mut() {
            slots.shuffle(rng);
            for &slot in &slots[..spec.sparsity] {
                let mag = rng.random_range(spec.coeff_min..=spec.coeff_max);
                let coef = if rng.random::<bool>() { mag } else { -mag };
                col.scaled_add(coef, &truth.column(atoms[slot]));
            }
            for v in col.iter_mut() {
                *v += noise.sample(rng);
            }
        }
        out
    };
    let old_signals = signals(&old_atoms, spec.n_old, &mut rng);
    let new_signals = signals(&new_atoms, spec.n_new, &mut rng);
    Ok(DictionaryData {
        truth,
        old_atoms,
        new_atoms,
        old_signals,
        new_signals,
    })
}

/// `(1/2n) ‖A − DX‖²_F` over the flattened `(D, X)`, `D ∈ ℝ^{m×p}`,
/// `X ∈ ℝ^{p×n}`.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    signals: Array2<f64>,
    atoms: usize,
    lipschitz: f64,
}

impl Reconstruction {
    /// `radius` is the ℓ₁ bound on coefficient columns; the Lipschitz bound
    /// holds over unit-norm atoms and ℓ₁-bounded coefficients.
    pub fn new(signals: Array2<f64>, atoms: usize, radius: f64) -> Self {
        let n = signals.ncols() as f64;
        let frob = signals.iter().map(|v| v * v).sum::<f64>().sqrt();
        let lipschitz = (2.0 * (radius * radius * n).max(atoms as f64) + frob + radius * n.sqrt()) / n;
        Self {
            signals,
            atoms,
            lipschitz,
        }
    }

    fn split(&self, z: ArrayView1<'_, f64>) -> (Array2<f64>, Array2<f64>) {
        let (m, n, p) = (self.signals.nrows(), self.signals.ncols(), self.atoms);
        (unflatten(z.slice(s![..m * p]), m, p), unflatten(z.slice(s![m * p..]), p, n))
    }
}

impl SmoothOracle for Reconstruction {
    fn dimension(&self) -> usize {
        self.atoms * (self.signals.nrows() + self.signals.ncols())
    }

    fn eval(&self, z: ArrayView1<'_, f64>) -> Result<(f64, Array1<f64>)> {
        check_dim(self.dimension(), z.len())?;
        let n = self.signals.ncols() as f64;
        let (d, x) = self.split(z);
        let r = d.dot(&x) - &self.signals;
        let value = 0.5 * r.iter().map(|v| v * v).sum::<f64>() / n;
        let gd = r.dot(&x.t()) / n;
        let gx = d.t().dot(&r) / n;
        let mut grad = Array1::zeros(z.len());
        grad.slice_mut(s![..gd.len()]).assign(&flatten(&gd));
        grad.slice_mut(s![gd.len()..]).assign(&flatten(&gx));
        Ok((value, grad))
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

/// `(1/2n) ‖A − D[:, :p] X̂‖²_F` as a function of a flattened vector whose
/// first `m·q` entries hold `D ∈ ℝ^{m×q}`; the remaining `tail` entries are
/// ignored. Columns past `p` meet zero coefficients.
#[derive(Debug, Clone)]
pub struct FrozenCodeLoss {
    signals: Array2<f64>,
    codes: Array2<f64>,
    columns: usize,
    tail: usize,
    lipschitz: f64,
}

impl FrozenCodeLoss {
    pub fn new(signals: Array2<f64>, codes: Array2<f64>, columns: usize, tail: usize) -> Result<Self> {
        check_dim(signals.ncols(), codes.ncols())?;
        if codes.nrows() > columns {
            return Err(Error::Config("more frozen coefficient rows than dictionary columns".into()));
        }
        let n = signals.ncols() as f64;
        let lipschitz = sym_lambda_max(&codes.dot(&codes.t())) / n;
        Ok(Self {
            signals,
            codes,
            columns,
            tail,
            lipschitz,
        })
    }

    fn residual(&self, z: ArrayView1<'_, f64>) -> Array2<f64> {
        let (m, p) = (self.signals.nrows(), self.codes.nrows());
        unflatten(z.slice(s![..m * p]), m, p).dot(&self.codes) - &self.signals
    }
}

impl SmoothOracle for FrozenCodeLoss {
    fn dimension(&self) -> usize {
        self.signals.nrows() * self.columns + self.tail
    }

    fn eval(&self, z: ArrayView1<'_, f64>) -> Result<(f64, Array1<f64>)> {
        check_dim(self.dimension(), z.len())?;
        let n = self.signals.ncols() as f64;
        let r = self.residual(z);
        let value = 0.5 * r.iter().map(|v| v * v).sum::<f64>() / n;
        let gd = flatten(&(r.dot(&self.codes.t()) / n));
        let mut grad = Array1::zeros(z.len());
        grad.slice_mut(s![..gd.len()]).assign(&gd);
        Ok((value, grad))
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        Some(self.lipschitz)
    }

    fn directional_curvature(&self, _x: ArrayView1<'_, f64>, d: ArrayView1<'_, f64>) -> Option<f64> {
        let (m, p) = (self.signals.nrows(), self.codes.nrows());
        let ed = unflatten(d.slice(s![..m * p]), m, p).dot(&self.codes);
        Some(ed.iter().map(|v| v * v).sum::<f64>() / self.signals.ncols() as f64)
    }
}

/// `∏ {‖d_j‖₂ ≤ 1} × ∏ {‖x_k‖₁ ≤ δ}`.
pub fn dictionary_region(signal_dim: usize, atoms: usize, samples: usize, radius: f64) -> Result<FeasibleRegion> {
    let mut blocks = vec![FeasibleRegion::ball_product(signal_dim, vec![1.0; atoms])?];
    let l1 = FeasibleRegion::l1_ball(atoms, radius)?;
    blocks.extend(std::iter::repeat_n(l1, samples));
    FeasibleRegion::product(blocks)
}

/// Pretrained dictionary and codes for the old data.
#[derive(Debug, Clone, PartialEq)]
pub struct Pretrained {
    pub dictionary: Array2<f64>,
    pub codes: Array2<f64>,
    /// FW gap in the dictionary block after refinement.
    pub certificate: f64,
}

/// Joint CG on `(D, X)` for `pretrain_iters` steps from random unit atoms and
/// zero codes, then dictionary-only CG with exact line search until the FW
/// gap reaches `refine_tol`.
pub fn pretrain(data: &DictionaryData, spec: &DictLearnSpec) -> Result<Pretrained> {
    let (m, p, n) = (spec.signal_dim, spec.old_dict_size, spec.n_old);
    let joint = Reconstruction::new(data.old_signals.clone(), p, spec.l1_radius);
    let region = dictionary_region(m, p, n, spec.l1_radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_0001);
    let mut d0 = Array2::from_shape_fn((m, p), |_| rng.sample::<f64, _>(StandardNormal));
    for mut col in d0.columns_mut() {
        let norm = col.dot(&col).sqrt();
        col.mapv_inplace(|v| v / norm);
    }
    let mut z0 = Array1::zeros(joint.dimension());
    z0.slice_mut(s![..m * p]).assign(&flatten(&d0));
    let joint_cfg = SolverConfig {
        max_iters: spec.pretrain_iters.max(1),
        schedule: Schedule::InvSqrt { scale: 1.0 },
        stop_on_criterion: false,
        timing: false,
        ..SolverConfig::default()
    };
    let run = standard_cg(&joint, &region, z0.view(), &joint_cfg, LineSearch::Schedule)?;
    if let StopReason::OracleFailure(msg) = run.stop_reason {
        return Err(Error::OracleFailure(msg));
    }
    let z = run.final_point;
    let codes = unflatten(z.slice(s![m * p..]), p, n);
    let dict_only = FrozenCodeLoss::new(data.old_signals.clone(), codes.clone(), p, 0)?;
    let balls = FeasibleRegion::ball_product(m, vec![1.0; p])?;
    let refine_cfg = SolverConfig {
        eps_f: spec.refine_tol,
        max_iters: spec.refine_max_iters.max(1),
        timing: false,
        ..SolverConfig::default()
    };
    let refined = standard_cg(&dict_only, &balls, z.slice(s![..m * p]), &refine_cfg, LineSearch::Exact)?;
    let certificate = fw_gap(&dict_only, &balls, refined.final_point.view())?;
    Ok(Pretrained {
        dictionary: unflatten(refined.final_point.view(), m, p),
        codes,
        certificate,
    })
}

#[derive(Debug, Clone)]
pub struct DictionaryProblem {
    pub data: DictionaryData,
    pub pretrained: Pretrained,
    pub instance: BilevelInstance,
    /// `[D̂, 0]` with random ℓ₁-normalized codes.
    pub x0: Array1<f64>,
}

/// Bilevel instance over `(D̃ ∈ ℝ^{m×q}, X̃ ∈ ℝ^{q×n′})`: upper level is the
/// reconstruction error on the new signals, lower level the error on the old
/// signals with the pretrained codes zero-padded.
pub fn dictionary_bilevel(data: &DictionaryData, pretrained: &Pretrained, spec: &DictLearnSpec) -> Result<(BilevelInstance, Array1<f64>)> {
    let (m, q, n_new) = (spec.signal_dim, spec.true_dict_size, spec.n_new);
    let upper = Reconstruction::new(data.new_signals.clone(), q, spec.l1_radius);
    let lower = FrozenCodeLoss::new(data.old_signals.clone(), pretrained.codes.clone(), q, q * n_new)?;
    let region = dictionary_region(m, q, n_new, spec.l1_radius)?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_0002);
    let mut dict = Array2::zeros((m, q));
    dict.slice_mut(s![.., ..spec.old_dict_size]).assign(&pretrained.dictionary);
    let mut codes = Array2::from_shape_fn((q, n_new), |_| rng.sample::<f64, _>(StandardNormal));
    for mut col in codes.columns_mut() {
        let l1: f64 = col.iter().map(|v| v.abs()).sum();
        col.mapv_inplace(|v| v * spec.l1_radius / l1);
    }
    let mut x0 = Array1::zeros(upper.dimension());
    x0.slice_mut(s![..m * q]).assign(&flatten(&dict));
    x0.slice_mut(s![m * q..]).assign(&flatten(&codes));

    let g0 = lower.value(x0.view())?;
    let gap = fw_gap(&lower, &region, x0.view())?;
    let instance = BilevelInstance::new("dict", Arc::new(upper), Arc::new(lower), region)?.with_reference(Reference {
        g_star: Some(g0 - gap.max(0.0)),
        ..Reference::default()
    });
    Ok((instance, x0))
}

/// Data generation, pretraining and the bilevel instance in one call.
pub fn dictionary_problem(spec: &DictLearnSpec) -> Result<DictionaryProblem> {
    let data = dictionary_data(spec)?;
    let pretrained = pretrain(&data, spec)?;
    let (instance, x0) = dictionary_bilevel(&data, &pretrained, spec)?;
    Ok(DictionaryProblem {
        data,
        pretrained,
        instance,
        x0,
    })
}

/// The dictionary block of a flattened bilevel point.
pub fn dictionary_block(z: ArrayView1<'_, f64>, signal_dim: usize, atoms: usize) -> Array2<f64> {
    unflatten(z.slice(s![..signal_dim * atoms]), signal_dim, atoms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DictLearnSpec {
        DictLearnSpec {
            signal_dim: 6,
            true_dict_size: 10,
            old_dict_size: 8,
            new_dict_size: 4,
            shared: 2,
            n_old: 30,
            n_new: 20,
            sparsity: 2,
            pretrain_iters: 300,
            refine_tol: 1e-6,
            ..DictLearnSpec::default()
        }
    }

    #[test]
    fn default_shapes() {
        let spec = DictLearnSpec::default();
        let data = dictionary_data(&spec).unwrap();
        assert_eq!(data.truth.dim(), (25, 50));
        assert_eq!(data.old_signals.dim(), (25, 250));
        assert_eq!(data.new_signals.dim(), (25, 200));
        let shared = data.old_atoms.iter().filter(|a| data.new_atoms.contains(a)).count();
        assert_eq!(shared, 10);
        for col in data.truth.columns() {
            assert!((col.dot(&col) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flatten_round_trips_column_major() {
        let m = ndarray::array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let v = flatten(&m);
        assert_eq!(v.to_vec(), vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(unflatten(v.view(), 2, 3), m);
    }

    #[test]
    fn lower_gradient_has_zero_code_block() {
        let spec = small();
        let p = dictionary_problem(&spec).unwrap();
        let (_, grad) = p.instance.lower.eval(p.x0.view()).unwrap();
        let dict_len = spec.signal_dim * spec.true_dict_size;
        assert!(grad.slice(s![dict_len..]).iter().all(|v| *v == 0.0));
        assert!(p.pretrained.certificate <= 1e-6);
    }

    #[test]
    fn start_point_is_feasible_and_certified() {
        let spec = small();
        let p = dictionary_problem(&spec).unwrap();
        assert!(crate::model::check_membership(&p.instance.region, p.x0.view(), 1e-9));
        let gap = fw_gap(p.instance.lower.as_ref(), &p.instance.region, p.x0.view()).unwrap();
        assert!(gap <= 1e-6);
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let spec = DictLearnSpec {
            shared: 30,
            ..DictLearnSpec::default()
        };
        assert!(matches!(dictionary_data(&spec), Err(Error::Config(_))));
    }
}
