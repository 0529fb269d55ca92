//! Linear minimization over `Z` and over `Z ∩ H`, Euclidean projections,
//! and the simplex solver behind the polyhedral cases.

mod projection;
pub mod simplex;
pub mod vertices;

use ndarray::{s, Array1, Array2, ArrayView1};

use crate::error::{check_dim, Error, Result};
use crate::model::{FeasibleRegion, Halfspace, RegionKind};
use crate::oracles::simplex::{simplex_solve, LpProblem, LpStatus};
use crate::oracles::vertices::polytope_lp;

pub use projection::{project, project_ball_product, project_l1_ball, project_polytope, DYKSTRA_MAX_SWEEPS};
pub use simplex::{LpProblem as Lp, LpSolution, LpStatus as Status};
pub use vertices::polytope_vertices;

/// Residual tolerance for the ball-product multiplier search.
pub const KKT_RESIDUAL_TOL: f64 = 1e-10;
const KKT_MAX_DOUBLINGS: usize = 200;
const KKT_MAX_BISECTIONS: usize = 400;

/// `argmin_{s ∈ Z} ⟨c, s⟩`, ties broken toward the lowest index.
pub fn lmo(region: &FeasibleRegion, c: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    check_dim(region.dimension(), c.len())?;
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::OracleFailure("LMO direction must be finite".into()));
    }
    match region.kind() {
        RegionKind::L1Ball { radius } => Ok(l1_vertex(c, *radius)),
        RegionKind::BallProduct { column_dim, radii } => {
            let mut out = Array1::zeros(c.len());
            for (j, &r) in radii.iter().enumerate() {
                let range = j * column_dim..(j + 1) * column_dim;
                out.slice_mut(s![range.clone()]).assign(&ball_point(c.slice(s![range]), r));
            }
            Ok(out)
        }
        RegionKind::Polytope(poly) => {
            let sol = polytope_lp(poly, &c.to_owned(), None)?;
            match sol.status {
                LpStatus::Optimal => Ok(sol.point),
                LpStatus::Infeasible => Err(Error::OracleFailure("polytope region is empty".into())),
                LpStatus::Unbounded => Err(Error::OracleFailure("polytope region is unbounded".into())),
            }
        }
        RegionKind::Product(blocks) => {
            let mut out = Array1::zeros(c.len());
            for (block, range) in blocks.iter().zip(region.block_ranges()) {
                let piece = lmo(block, c.slice(s![range.clone()]))?;
                out.slice_mut(s![range]).assign(&piece);
            }
            Ok(out)
        }
    }
}

fn l1_vertex(c: ArrayView1<'_, f64>, radius: f64) -> Array1<f64> {
    let mut best = 0;
    for (i, v) in c.iter().enumerate() {
        if v.abs() > c[best].abs() {
            best = i;
        }
    }
    let mut out = Array1::zeros(c.len());
    out[best] = if c[best] < 0.0 { radius } else { -radius };
    out
}

/// `−r·u/‖u‖`, or `−r·e₁` when `u = 0`.
fn ball_point(u: ArrayView1<'_, f64>, radius: f64) -> Array1<f64> {
    let norm = u.dot(&u).sqrt();
    if norm == 0.0 {
        let mut out = Array1::zeros(u.len());
        out[0] = -radius;
        out
    } else {
        u.mapv(|v| -radius * v / norm)
    }
}

/// `argmin ⟨c, s⟩` over `Z ∩ {s : ⟨a, s⟩ ≤ b}`.
///
/// When the plain LMO answer already satisfies the cut it is returned
/// unchanged, so a cut containing the whole region reproduces [`lmo`].
pub fn halfspace_lmo(region: &FeasibleRegion, h: &Halfspace, c: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    check_dim(region.dimension(), h.dimension())?;
    let base = lmo(region, c)?;
    if h.residual(base.view()) <= 0.0 {
        return Ok(base);
    }
    if h.normal.iter().any(|v| !v.is_finite()) || !h.offset.is_finite() {
        return Err(Error::OracleFailure("cutting plane must be finite".into()));
    }
    cut_lmo(region, h.normal.view(), h.offset, c, base)
}

fn cut_lmo(
    region: &FeasibleRegion,
    normal: ArrayView1<'_, f64>,
    offset: f64,
    c: ArrayView1<'_, f64>,
    base: Array1<f64>,
) -> Result<Array1<f64>> {
    match region.kind() {
        RegionKind::L1Ball { radius } => l1_cut_lmo(normal, offset, c, *radius),
        RegionKind::BallProduct { column_dim, radii } => {
            let cols: Vec<BallColumn> = radii
                .iter()
                .enumerate()
                .map(|(j, &r)| BallColumn {
                    start: j * column_dim,
                    len: *column_dim,
                    radius: r,
                })
                .collect();
            let mut out = base;
            ball_cut_lmo(&cols, normal, offset, c, &mut out)?;
            Ok(out)
        }
        RegionKind::Polytope(poly) => {
            let sol = polytope_lp(poly, &c.to_owned(), Some((&normal.to_owned(), offset)))?;
            match sol.status {
                LpStatus::Optimal => Ok(sol.point),
                LpStatus::Infeasible => Err(Error::Infeasible("region does not meet the cutting plane".into())),
                LpStatus::Unbounded => Err(Error::OracleFailure("polytope region is unbounded".into())),
            }
        }
        RegionKind::Product(blocks) => {
            let ranges = region.block_ranges();
            let touched: Vec<usize> = ranges
                .iter()
                .enumerate()
                .filter(|(_, r)| normal.slice(s![(*r).clone()]).iter().any(|v| *v != 0.0))
                .map(|(i, _)| i)
                .collect();
            match touched.as_slice() {
                [] => Err(Error::Infeasible("cutting plane with zero normal excludes every point".into())),
                [only] => {
                    let range = ranges[*only].clone();
                    let block_base = base.slice(s![range.clone()]).to_owned();
                    let piece = cut_lmo(
                        &blocks[*only],
                        normal.slice(s![range.clone()]),
                        offset,
                        c.slice(s![range.clone()]),
                        block_base,
                    )?;
                    let mut out = base;
                    out.slice_mut(s![range]).assign(&piece);
                    Ok(out)
                }
                many => {
                    let mut cols = Vec::new();
                    for &i in many {
                        match blocks[i].kind() {
                            RegionKind::BallProduct { column_dim, radii } => {
                                for (j, &r) in radii.iter().enumerate() {
                                    cols.push(BallColumn {
                                        start: ranges[i].start + j * column_dim,
                                        len: *column_dim,
                                        radius: r,
                                    });
                                }
                            }
                            _ => {
                                return Err(Error::Unsupported(
                                    "cutting plane spanning several non-ball product blocks".into(),
                                ))
                            }
                        }
                    }
                    let mut out = base;
                    ball_cut_lmo(&cols, normal, offset, c, &mut out)?;
                    Ok(out)
                }
            }
        }
    }
}

/// LP over the split `s = s⁺ − s⁻` with rows `Σ(s⁺ + s⁻) ≤ λ` and
/// `⟨a, s⁺ − s⁻⟩ ≤ b`.
fn l1_cut_lmo(normal: ArrayView1<'_, f64>, offset: f64, c: ArrayView1<'_, f64>, radius: f64) -> Result<Array1<f64>> {
    let d = c.len();
    let mut cost = Array1::zeros(2 * d);
    let mut a = Array2::zeros((2, 2 * d));
    for i in 0..d {
        cost[i] = c[i];
        cost[d + i] = -c[i];
        a[[0, i]] = 1.0;
        a[[0, d + i]] = 1.0;
        a[[1, i]] = normal[i];
        a[[1, d + i]] = -normal[i];
    }
    let lp = LpProblem::new(cost, a, ndarray::array![radius, offset])?;
    let sol = simplex_solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(&sol.point.slice(s![..d]) - &sol.point.slice(s![d..])),
        LpStatus::Infeasible => Err(Error::Infeasible("l1 ball does not meet the cutting plane".into())),
        LpStatus::Unbounded => Err(Error::OracleFailure("bounded LP reported unbounded".into())),
    }
}

#[derive(Debug, Clone, Copy)]
struct BallColumn {
    start: usize,
    len: usize,
    radius: f64,
}

/// Writes `s(μ)` into the ball columns of `out`; returns `⟨a, s(μ)⟩` over them.
fn ball_candidate(
    cols: &[BallColumn],
    normal: ArrayView1<'_, f64>,
    c: ArrayView1<'_, f64>,
    mu: f64,
    out: &mut Array1<f64>,
) -> f64 {
    let mut dot = 0.0;
    for col in cols {
        let range = col.start..col.start + col.len;
        let u = &c.slice(s![range.clone()]) + &(&normal.slice(s![range.clone()]) * mu);
        let point = ball_point(u.view(), col.radius);
        dot += point.dot(&normal.slice(s![range.clone()]));
        out.slice_mut(s![range]).assign(&point);
    }
    dot
}

/// Minimizes the Lagrangian `⟨c + μa, s⟩` column by column and searches
/// `μ ≥ 0` so the cut is active. `⟨a, s(μ)⟩` is nonincreasing in `μ`.
fn ball_cut_lmo(
    cols: &[BallColumn],
    normal: ArrayView1<'_, f64>,
    offset: f64,
    c: ArrayView1<'_, f64>,
    out: &mut Array1<f64>,
) -> Result<()> {
    // Contribution of coordinates outside the ball columns is fixed.
    let mut mask = Array1::<f64>::ones(normal.len());
    for col in cols {
        mask.slice_mut(s![col.start..col.start + col.len]).fill(0.0);
    }
    let fixed = (&normal * &mask).dot(&*out);
    let target = offset - fixed;

    let mut min_dot = 0.0;
    for col in cols {
        let a = normal.slice(s![col.start..col.start + col.len]);
        min_dot -= col.radius * a.dot(&a).sqrt();
    }
    let scale = target.abs().max(min_dot.abs()).max(1.0);
    if min_dot > target + KKT_RESIDUAL_TOL * scale {
        return Err(Error::Infeasible("ball product does not meet the cutting plane".into()));
    }

    let mut scratch = out.clone();
    if ball_candidate(cols, normal, c, 0.0, &mut scratch) <= target {
        *out = scratch;
        return Ok(());
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    loop {
        let dot = ball_candidate(cols, normal, c, hi, &mut scratch);
        if dot <= target {
            break;
        }
        if target - min_dot <= KKT_RESIDUAL_TOL * scale {
            // Only the cut's minimizer over the balls is feasible (μ → ∞).
            let zero_c = Array1::zeros(c.len());
            ball_candidate(cols, normal, zero_c.view(), 1.0, &mut scratch);
            *out = scratch;
            return Ok(());
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > KKT_MAX_DOUBLINGS {
            return Err(Error::OracleFailure("no bracket for the cutting-plane multiplier".into()));
        }
    }

    let mut best = scratch.clone();
    let mut best_dot = ball_candidate(cols, normal, c, hi, &mut best);
    for _ in 0..KKT_MAX_BISECTIONS {
        if target - best_dot <= KKT_RESIDUAL_TOL * scale || hi - lo <= f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let dot = ball_candidate(cols, normal, c, mid, &mut scratch);
        if dot > target {
            lo = mid;
        } else {
            hi = mid;
            best.assign(&scratch);
            best_dot = dot;
        }
    }
    *out = best;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy_region() -> FeasibleRegion {
        FeasibleRegion::polytope(array![[1.0, 1.0], [4.0, 6.0]], array![1.0, 5.0], true).unwrap()
    }

    #[test]
    fn l1_lmo_picks_largest_magnitude() {
        let z = FeasibleRegion::l1_ball(2, 1.0).unwrap();
        let s = lmo(&z, array![1.0, -2.0].view()).unwrap();
        assert_eq!(s, array![0.0, 1.0]);
        assert_eq!(array![1.0, -2.0].dot(&s), -2.0);
    }

    #[test]
    fn l1_lmo_breaks_ties_toward_lowest_index() {
        let z = FeasibleRegion::l1_ball(2, 2.0).unwrap();
        assert_eq!(lmo(&z, array![3.0, 3.0].view()).unwrap(), array![-2.0, 0.0]);
    }

    #[test]
    fn toy_polytope_lmo_hits_an_optimal_vertex() {
        let s = lmo(&toy_region(), array![-1.0, -1.0].view()).unwrap();
        assert!((s[0] + s[1] - 1.0).abs() < 1e-12);
        let at_vertex = (s[0] - 1.0).abs() < 1e-12 || (s[0] - 0.5).abs() < 1e-12;
        assert!(at_vertex, "{s:?}");
    }

    #[test]
    fn toy_cut_lmo_moves_to_the_far_endpoint() {
        let h = Halfspace::new(array![-1.0, -1.0], -1.0);
        let s = halfspace_lmo(&toy_region(), &h, array![0.0, 0.1].view()).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12 && s[1].abs() < 1e-12, "{s:?}");
    }

    #[test]
    fn inactive_cut_reproduces_plain_lmo() {
        let z = FeasibleRegion::l1_ball(2, 1.0).unwrap();
        let h = Halfspace::new(array![1.0, 0.0], 1.0);
        let c = array![1.0, 0.0];
        assert_eq!(halfspace_lmo(&z, &h, c.view()).unwrap(), lmo(&z, c.view()).unwrap());
        assert_eq!(halfspace_lmo(&z, &h, c.view()).unwrap(), array![-1.0, 0.0]);
    }

    #[test]
    fn l1_cut_lmo_solves_the_split_lp() {
        // min s₁ over the unit l1 ball with s₁ ≥ −0.25.
        let z = FeasibleRegion::l1_ball(2, 1.0).unwrap();
        let h = Halfspace::new(array![-1.0, 0.0], 0.25);
        let s = halfspace_lmo(&z, &h, array![1.0, 0.0].view()).unwrap();
        assert!((s[0] + 0.25).abs() < 1e-12, "{s:?}");
        assert!(s.iter().map(|v| v.abs()).sum::<f64>() <= 1.0 + 1e-12);
    }

    #[test]
    fn ball_cut_lmo_matches_the_circle_chord() {
        let z = FeasibleRegion::ball_product(2, vec![1.0]).unwrap();
        let h = Halfspace::new(array![0.0, -1.0], -0.5);
        let s = halfspace_lmo(&z, &h, array![1.0, 0.0].view()).unwrap();
        assert!((s[0] + 3f64.sqrt() / 2.0).abs() < 1e-8, "{s:?}");
        assert!((s[1] - 0.5).abs() < 1e-8, "{s:?}");
    }

    #[test]
    fn ball_lmo_zero_column_uses_first_axis() {
        let z = FeasibleRegion::ball_product(2, vec![1.0, 2.0]).unwrap();
        let s = lmo(&z, array![0.0, 0.0, 3.0, 4.0].view()).unwrap();
        assert_eq!(s, array![-1.0, 0.0, -1.2, -1.6]);
    }

    #[test]
    fn disjoint_cut_is_infeasible() {
        let z = FeasibleRegion::l1_ball(2, 1.0).unwrap();
        let h = Halfspace::new(array![1.0, 0.0], -2.0);
        assert!(matches!(halfspace_lmo(&z, &h, array![1.0, 0.0].view()), Err(Error::Infeasible(_))));
        let ball = FeasibleRegion::ball_product(2, vec![1.0]).unwrap();
        assert!(matches!(halfspace_lmo(&ball, &h, array![1.0, 0.0].view()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn product_cut_touching_one_block_leaves_others_at_lmo() {
        let z = FeasibleRegion::product(vec![
            FeasibleRegion::ball_product(2, vec![1.0]).unwrap(),
            FeasibleRegion::l1_ball(2, 3.0).unwrap(),
        ])
        .unwrap();
        let h = Halfspace::new(array![0.0, -1.0, 0.0, 0.0], -0.5);
        let c = array![1.0, 0.0, 0.0, -1.0];
        let s = halfspace_lmo(&z, &h, c.view()).unwrap();
        assert!((s[0] + 3f64.sqrt() / 2.0).abs() < 1e-8);
        assert!((s[1] - 0.5).abs() < 1e-8);
        assert_eq!(s[2], 0.0);
        assert_eq!(s[3], 3.0);
    }

    #[test]
    fn lmo_rejects_wrong_dimension() {
        let z = FeasibleRegion::l1_ball(3, 1.0).unwrap();
        assert!(matches!(lmo(&z, array![1.0].view()), Err(Error::Dimension { .. })));
    }
}
