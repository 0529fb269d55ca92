use ndarray::{s, Array1, ArrayView1};

use crate::error::{check_dim, Error, Result};
use crate::model::{FeasibleRegion, Polytope, RegionKind};

/// Sweep cap for Dykstra's alternating projections.
pub const DYKSTRA_MAX_SWEEPS: usize = 100_000;
const DYKSTRA_TOL: f64 = 1e-12;

/// Euclidean projection onto `Z`.
pub fn project(region: &FeasibleRegion, v: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    check_dim(region.dimension(), v.len())?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::OracleFailure("cannot project a non-finite point".into()));
    }
    match region.kind() {
        RegionKind::L1Ball { radius } => Ok(project_l1_ball(v, *radius)),
        RegionKind::BallProduct { column_dim, radii } => Ok(project_ball_product(v, *column_dim, radii)),
        RegionKind::Polytope(poly) => project_polytope(poly, v),
        RegionKind::Product(blocks) => {
            let mut out = Array1::zeros(v.len());
            for (block, range) in blocks.iter().zip(region.block_ranges()) {
                let piece = project(block, v.slice(s![range.clone()]))?;
                out.slice_mut(s![range]).assign(&piece);
            }
            Ok(out)
        }
    }
}

/// Soft-thresholding at the sorted-magnitude threshold.
pub fn project_l1_ball(v: ArrayView1<'_, f64>, radius: f64) -> Array1<f64> {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_owned();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cumsum += m;
        let t = (cumsum - radius) / (j as f64 + 1.0);
        if m > t {
            theta = t;
        } else {
            break;
        }
    }
    v.mapv(|x| x.signum() * (x.abs() - theta).max(0.0))
}

/// Rescales each column whose norm exceeds its radius.
pub fn project_ball_product(v: ArrayView1<'_, f64>, column_dim: usize, radii: &[f64]) -> Array1<f64> {
    let mut out = v.to_owned();
    for (j, &r) in radii.iter().enumerate() {
        let mut col = out.slice_mut(s![j * column_dim..(j + 1) * column_dim]);
        let norm = col.dot(&col).sqrt();
        if norm > r {
            col.mapv_inplace(|x| x * r / norm);
        }
    }
    out
}

/// Exact projection by a dual active-set method, falling back to Dykstra's
/// alternating projections if the active set cycles.
pub fn project_polytope(poly: &Polytope, v: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    check_dim(poly.dimension(), v.len())?;
    if poly.violation(v) <= 0.0 {
        return Ok(v.to_owned());
    }
    let halves = poly.halfspaces();
    match dual_active_set(&halves, v)? {
        Some(x) => Ok(x),
        None => dykstra(poly, &halves, v),
    }
}

/// Goldfarb–Idnani iterations for `min ½‖x − v‖²` over `{aᵢᵀx ≤ bᵢ}`:
/// start from `v` and repeatedly add the most violated constraint, dropping
/// active ones whose multipliers would turn negative. `None` on cycling.
fn dual_active_set(halves: &[(Array1<f64>, f64)], v: ArrayView1<'_, f64>) -> Result<Option<Array1<f64>>> {
    let n = v.len();
    let scale = v.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let tol = 1e-12 * scale;
    let mut x = v.to_owned();
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let cap = 20 * (halves.len() + n) + 100;
    let mut steps = 0;
    loop {
        let mut worst = (tol, None);
        for (i, (a, b)) in halves.iter().enumerate() {
            let s = (a.dot(&x) - b) / a.dot(a).sqrt().max(f64::MIN_POSITIVE);
            if s > worst.0 && !active.contains(&i) {
                worst = (s, Some(i));
            }
        }
        let Some(p) = worst.1 else { return Ok(Some(x)) };
        let ap = &halves[p].0;
        let mut up = 0.0;
        loop {
            steps += 1;
            if steps > cap {
                return Ok(None);
            }
            let (z, r) = null_step(halves, &active, ap)?;
            let zz = z.dot(ap);
            let slack = ap.dot(&x) - halves[p].1;
            let t2 = if zz > 1e-14 * ap.dot(ap) { slack / zz } else { f64::INFINITY };
            let mut t1 = (f64::INFINITY, usize::MAX);
            for (j, &rj) in r.iter().enumerate() {
                if rj > 0.0 && u[j] / rj < t1.0 {
                    t1 = (u[j] / rj, j);
                }
            }
            if !t1.0.is_finite() && !t2.is_finite() {
                return Err(Error::Infeasible("polytope is empty".into()));
            }
            let t = t1.0.min(t2);
            if t2.is_finite() {
                x.scaled_add(-t, &z);
            }
            for (uj, rj) in u.iter_mut().zip(&r) {
                *uj -= t * rj;
            }
            up += t;
            if t2 <= t1.0 {
                active.push(p);
                u.push(up);
                break;
            }
            active.remove(t1.1);
            u.remove(t1.1);
        }
    }
}

/// Projection of `a` onto the null space of the active normals and the
/// coefficients `r` with `a = Pa + Nᵀr`.
fn null_step(halves: &[(Array1<f64>, f64)], active: &[usize], a: &Array1<f64>) -> Result<(Array1<f64>, Vec<f64>)> {
    if active.is_empty() {
        return Ok((a.clone(), Vec::new()));
    }
    let k = active.len();
    let gram = nalgebra::DMatrix::from_fn(k, k, |i, j| halves[active[i]].0.dot(&halves[active[j]].0));
    let rhs = nalgebra::DVector::from_fn(k, |i, _| halves[active[i]].0.dot(a));
    let r = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::OracleFailure("dependent active constraints in projection".into()))?;
    let mut z = a.clone();
    for (i, &idx) in active.iter().enumerate() {
        z.scaled_add(-r[i], &halves[idx].0);
    }
    Ok((z, r.iter().copied().collect()))
}

fn dykstra(poly: &Polytope, halves: &[(Array1<f64>, f64)], v: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    let norms: Vec<f64> = halves.iter().map(|(a, _)| a.dot(a)).collect();
    let mut x = v.to_owned();
    let mut incr = vec![Array1::<f64>::zeros(v.len()); halves.len()];
    let scale = v.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    for _ in 0..DYKSTRA_MAX_SWEEPS {
        let prev = x.clone();
        for (i, (a, b)) in halves.iter().enumerate() {
            if norms[i] == 0.0 {
                continue;
            }
            let y = &x + &incr[i];
            let excess = a.dot(&y) - b;
            let next = if excess > 0.0 { &y - &(a * (excess / norms[i])) } else { y.clone() };
            incr[i] = &y - &next;
            x = next;
        }
        let moved = (&x - &prev).mapv(|d| d * d).sum().sqrt();
        if moved <= DYKSTRA_TOL * scale && poly.violation(x.view()) <= DYKSTRA_TOL * scale {
            return Ok(x);
        }
    }
    Err(Error::OracleFailure("polytope projection did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn l1_projection_soft_thresholds() {
        let p = project_l1_ball(array![3.0, -1.0, 0.5].view(), 1.0);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] == 0.0 && p[2] == 0.0);
        let p = project_l1_ball(array![1.0, 1.0].view(), 1.0);
        assert_eq!(p, array![0.5, 0.5]);
        let inside = array![0.2, -0.3];
        assert_eq!(project_l1_ball(inside.view(), 1.0), inside);
    }

    #[test]
    fn ball_projection_scales_columns() {
        let p = project_ball_product(array![3.0, 4.0, 0.1, 0.0].view(), 2, &[1.0, 1.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        assert_eq!(p[2], 0.1);
    }

    #[test]
    fn toy_polytope_projection() {
        let poly = Polytope::new(array![[1.0, 1.0], [4.0, 6.0]], array![1.0, 5.0], true).unwrap();
        let p = project_polytope(&poly, array![2.0, 0.0].view()).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-9 && p[1].abs() < 1e-9, "{p:?}");
        let p = project_polytope(&poly, array![1.0, 1.0].view()).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-9 && (p[1] - 0.5).abs() < 1e-9, "{p:?}");
        let p = project_polytope(&poly, array![-1.0, -1.0].view()).unwrap();
        assert!(p[0].abs() < 1e-9 && p[1].abs() < 1e-9);
    }
}
