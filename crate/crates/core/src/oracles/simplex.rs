//! Dense two-phase simplex for `min cᵀx s.t. Ax ≤ b, x ≥ 0`.
//!
//! Bland's rule is used for both entering and leaving variables, so the
//! method terminates on degenerate problems. Sized for the handful of rows
//! that cutting-plane subproblems produce.

// Indexed loops read better than iterator chains for tableau updates.
#![allow(clippy::needless_range_loop)]

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
const FEASIBILITY_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub c: Array1<f64>,
    pub a: Array2<f64>,
    pub b: Array1<f64>,
}

impl LpProblem {
    pub fn new(c: Array1<f64>, a: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::Dimension {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if a.ncols() != c.len() {
            return Err(Error::Dimension {
                expected: a.ncols(),
                got: c.len(),
            });
        }
        Ok(Self { c, a, b })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// Basic feasible solution when optimal; zeros otherwise.
    pub point: Array1<f64>,
    pub value: f64,
    pub status: LpStatus,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Reduced costs; the last entry is minus the objective value.
    cost: Vec<f64>,
    width: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[col];
            if factor != 0.0 {
                for (v, pv) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= factor * pv;
                }
                row[col] = 0.0;
            }
        }
        let factor = self.cost[col];
        if factor != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(pivot_row.iter()) {
                *v -= factor * pv;
            }
            self.cost[col] = 0.0;
        }
        self.basis[r] = col;
    }

    fn run(&mut self, allowed: usize, pivots: &mut usize) -> Result<Phase> {
        loop {
            let Some(col) = (0..allowed).find(|&j| self.cost[j] < -PIVOT_TOL) else {
                return Ok(Phase::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let coef = self.rows[i][col];
                if coef <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= PIVOT_TOL * br.abs().max(1.0);
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Ok(Phase::Unbounded);
            };
            self.pivot(r, col);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(Error::OracleFailure("simplex pivot limit exceeded".into()));
            }
        }
    }
}

/// Solves `min cᵀx s.t. Ax ≤ b, x ≥ 0`.
///
/// Infeasible and unbounded problems are reported through
/// [`LpSolution::status`]; `Err` is reserved for malformed input.
pub fn simplex_solve(lp: &LpProblem) -> Result<LpSolution> {
    let (m, n) = lp.a.dim();
    if lp.a.ncols() != lp.c.len() || lp.a.nrows() != lp.b.len() {
        return Err(Error::Dimension {
            expected: n,
            got: lp.c.len(),
        });
    }
    if lp.c.iter().chain(lp.a.iter()).chain(lp.b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::OracleFailure("LP data must be finite".into()));
    }

    let negative: Vec<usize> = (0..m).filter(|&i| lp.b[i] < 0.0).collect();
    let n_art = negative.len();
    let width = n + m + n_art;
    let mut rows = vec![vec![0.0; width + 1]; m];
    let mut basis = vec![0usize; m];
    let mut art_index = 0;
    for i in 0..m {
        let sign = if lp.b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            rows[i][j] = sign * lp.a[[i, j]];
        }
        rows[i][n + i] = sign;
        rows[i][width] = sign * lp.b[i];
        if sign < 0.0 {
            rows[i][n + m + art_index] = 1.0;
            basis[i] = n + m + art_index;
            art_index += 1;
        } else {
            basis[i] = n + i;
        }
    }

    let mut tab = Tableau {
        rows,
        basis,
        cost: vec![0.0; width + 1],
        width,
    };
    let mut pivots = 0;

    if n_art > 0 {
        for j in n + m..width {
            tab.cost[j] = 1.0;
        }
        for &i in &negative {
            for j in 0..=width {
                tab.cost[j] -= tab.rows[i][j];
            }
        }
        tab.run(width, &mut pivots)?;
        let infeasibility = -tab.cost[width];
        let scale = lp.b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok(LpSolution {
                point: Array1::zeros(n),
                value: f64::NAN,
                status: LpStatus::Infeasible,
            });
        }
        // Drive artificial variables out of the basis; rows where that is
        // impossible are redundant and dropped.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= n + m {
                let col = (0..n + m)
                    .filter(|&j| tab.rows[i][j].abs() > PIVOT_TOL)
                    .max_by(|&a, &b| tab.rows[i][a].abs().total_cmp(&tab.rows[i][b].abs()));
                match col {
                    Some(j) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    // Phase two over original and slack columns only.
    tab.cost = vec![0.0; width + 1];
    for j in 0..n {
        tab.cost[j] = lp.c[j];
    }
    for i in 0..tab.rows.len() {
        let cb = if tab.basis[i] < n { lp.c[tab.basis[i]] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..=width {
                tab.cost[j] -= cb * tab.rows[i][j];
            }
        }
    }
    match tab.run(n + m, &mut pivots)? {
        Phase::Unbounded => Ok(LpSolution {
            point: Array1::zeros(n),
            value: f64::NEG_INFINITY,
            status: LpStatus::Unbounded,
        }),
        Phase::Optimal => {
            let mut point = Array1::zeros(n);
            for (i, &bv) in tab.basis.iter().enumerate() {
                if bv < n {
                    point[bv] = tab.rhs(i).max(0.0);
                }
            }
            let value = lp.c.dot(&point);
            Ok(LpSolution {
                point,
                value,
                status: LpStatus::Optimal,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn toy_lower_level_value_is_minus_one() {
        let lp = LpProblem::new(array![-1.0, -1.0], array![[1.0, 1.0], [4.0, 6.0]], array![1.0, 5.0]).unwrap();
        let sol = simplex_solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        // x₁ ≤ −1 together with x₁ ≥ 0.
        let lp = LpProblem::new(array![1.0], array![[1.0]], array![-1.0]).unwrap();
        assert_eq!(simplex_solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn missing_upper_bound_is_unbounded() {
        let lp = LpProblem::new(array![-1.0], Array2::zeros((0, 1)), Array1::zeros(0)).unwrap();
        assert_eq!(simplex_solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn phase_one_handles_lower_bound_rows() {
        // min x₁ + x₂ s.t. x₁ + x₂ ≥ 1 (written −x₁ − x₂ ≤ −1), x₁ ≤ 3.
        let lp = LpProblem::new(array![1.0, 2.0], array![[-1.0, -1.0], [1.0, 0.0]], array![-1.0, 3.0]).unwrap();
        let sol = simplex_solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!((sol.point[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equality_rows_are_dropped() {
        // x₁ + x₂ = 1 written twice as a pair of inequalities.
        let a = array![[1.0, 1.0], [-1.0, -1.0], [2.0, 2.0], [-2.0, -2.0]];
        let lp = LpProblem::new(array![1.0, 0.0], a, array![1.0, -1.0, 2.0, -2.0]).unwrap();
        let sol = simplex_solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.value.abs() < 1e-12);
        assert!((sol.point[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_shape_mismatch() {
        assert!(LpProblem::new(array![1.0], array![[1.0, 2.0]], array![1.0]).is_err());
    }
}
