//! Evaluation metrics for finished runs.

use ndarray::{Array2, ArrayView1};

use bilevel_core::model::BilevelInstance;
use bilevel_core::problems::fair::sigmoid;
use bilevel_core::problems::Dataset;
use bilevel_core::{Error, Result};

use crate::reference::face_fw_gap;

/// `max_{s ∈ X*_g} ⟨∇f(x), x − s⟩`, evaluated over the vertices of the
/// known optimal face.
pub fn true_fw_gap(instance: &BilevelInstance, x: ArrayView1<'_, f64>) -> Result<f64> {
    let vertices = instance
        .reference
        .lower_solution_vertices
        .as_ref()
        .filter(|v| !v.is_empty())
        .ok_or_else(|| Error::Unsupported("true FW gap needs the optimal face as a vertex list".into()))?;
    face_fw_gap(instance.upper.as_ref(), vertices, x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairnessMetrics {
    /// Percent in `[0, 100]`.
    pub p_rule: f64,
    pub accuracy: f64,
}

/// p%-rule of the positive-prediction rates across the two sensitive groups
/// and 0/1 accuracy. One zero rate gives 0, two zero rates give 100.
pub fn fairness_metrics(beta: ArrayView1<'_, f64>, data: &Dataset) -> Result<FairnessMetrics> {
    let sensitive = data
        .sensitive
        .as_ref()
        .ok_or_else(|| Error::Data("p%-rule needs a sensitive attribute".into()))?;
    if beta.len() != data.features.ncols() {
        return Err(Error::Dimension {
            expected: data.features.ncols(),
            got: beta.len(),
        });
    }
    let mut counts = [[0usize; 2]; 2];
    let mut correct = 0usize;
    for ((row, y), v) in data.features.rows().into_iter().zip(&data.targets).zip(sensitive) {
        let positive = sigmoid(row.dot(&beta)) > 0.5;
        let group = if *v == 0.0 {
            0
        } else if *v == 1.0 {
            1
        } else {
            return Err(Error::Data(format!("sensitive attribute must be 0 or 1, got {v}")));
        };
        counts[group][0] += 1;
        counts[group][1] += positive as usize;
        correct += (positive == (*y == 1.0)) as usize;
    }
    if counts[0][0] == 0 || counts[1][0] == 0 {
        return Err(Error::Data("both sensitive groups must be present".into()));
    }
    let rate = |g: usize| counts[g][1] as f64 / counts[g][0] as f64;
    Ok(FairnessMetrics {
        p_rule: p_rule(rate(0), rate(1)),
        accuracy: correct as f64 / data.len() as f64,
    })
}

/// `100·min(a/b, b/a)` with the zero-rate conventions.
pub fn p_rule(a: f64, b: f64) -> f64 {
    match (a == 0.0, b == 0.0) {
        (true, true) => 100.0,
        (true, false) | (false, true) => 0.0,
        _ => 100.0 * (a / b).min(b / a),
    }
}

const RECOVERY_THRESHOLD: f64 = 0.9;

/// Fraction of truth columns matched by some learned column with
/// `|⟨d*_i, d_j⟩| > 0.9` after normalizing both.
pub fn recovery_rate(learned: &Array2<f64>, truth: &Array2<f64>) -> f64 {
    if truth.ncols() == 0 {
        return 0.0;
    }
    let unit = |m: &Array2<f64>| {
        let mut m = m.clone();
        for mut c in m.columns_mut() {
            let n = c.dot(&c).sqrt();
            if n > 0.0 {
                c /= n;
            }
        }
        m
    };
    let (l, t) = (unit(learned), unit(truth));
    let overlap = t.t().dot(&l);
    let hits = overlap
        .rows()
        .into_iter()
        .filter(|r| r.iter().any(|v| v.abs() > RECOVERY_THRESHOLD))
        .count();
    hits as f64 / truth.ncols() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use bilevel_core::problems::toy_problem;
    use ndarray::{array, Array1};

    #[test]
    fn toy_true_gap_examples() {
        let inst = toy_problem();
        assert!((true_fw_gap(&inst, array![1.0, 0.0].view()).unwrap() - 0.2).abs() < 1e-15);
        assert!(true_fw_gap(&inst, array![0.6, 0.4].view()).unwrap().abs() < 1e-9);
    }

    #[test]
    fn p_rule_conventions() {
        assert_eq!(p_rule(0.3, 0.3), 100.0);
        assert_eq!(p_rule(0.25, 0.5), 50.0);
        assert_eq!(p_rule(0.0, 0.3), 0.0);
        assert_eq!(p_rule(0.0, 0.0), 100.0);
    }

    #[test]
    fn fairness_on_hand_data() {
        // Group 0: predictions +,-,-,- ; group 1: +,+,-,-.
        let x = array![[1.0], [-1.0], [-1.0], [-1.0], [1.0], [1.0], [-1.0], [-1.0]];
        let y = array![1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0];
        let v = array![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let data = Dataset::new(x, y, Some(v)).unwrap();
        let m = fairness_metrics(array![2.0].view(), &data).unwrap();
        assert_eq!(m.p_rule, 50.0);
        assert_eq!(m.accuracy, 7.0 / 8.0);
    }

    #[test]
    fn recovery_examples() {
        let truth = Array2::from_shape_fn((4, 4), |(i, j)| (i == j) as u8 as f64);
        assert_eq!(recovery_rate(&truth, &truth), 1.0);
        let orth = Array2::from_shape_fn((4, 2), |(i, j)| (i == j + 2) as u8 as f64);
        let first = truth.slice(ndarray::s![.., 0..2]).to_owned();
        assert_eq!(recovery_rate(&orth, &first), 0.0);
        let mut half = Array2::zeros((4, 4));
        half.column_mut(0).assign(&(truth.column(0).to_owned() * 3.0));
        half.column_mut(1).assign(&truth.column(1));
        half.column_mut(2).assign(&Array1::from_elem(4, 0.5));
        assert_eq!(recovery_rate(&half, &truth), 0.5);
    }
}
