use ndarray::{Array1, Array2};
use proptest::prelude::*;

use bilevel_core::functions::{Linear, Quadratic};
use bilevel_core::linalg::norm;
use bilevel_core::model::{cutting_plane, step_size, FeasibleRegion, Halfspace, Schedule};
use bilevel_core::oracles::simplex::{simplex_solve, LpProblem, LpStatus};
use bilevel_core::oracles::{halfspace_lmo, lmo, project};

fn vec_in(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, n)
}

/// ℓ₁ balls, disc products and small random polytopes around the origin.
fn region() -> impl Strategy<Value = FeasibleRegion> {
    prop_oneof![
        (2usize..6, 0.2f64..3.0).prop_map(|(n, r)| FeasibleRegion::l1_ball(n, r).unwrap()),
        (1usize..4, 0.2f64..3.0).prop_map(|(k, r)| FeasibleRegion::ball_product(2, vec![r; k]).unwrap()),
        (2usize..4).prop_flat_map(|n| (Just(n), vec_in(n * 5, -1.0, 1.0), vec_in(5, 0.1, 1.0))).prop_map(|(n, a, b)| {
            let a = Array2::from_shape_vec((5, n), a).unwrap();
            let eye = Array2::<f64>::eye(n);
            // A box row pair per axis keeps the set bounded.
            let a = ndarray::concatenate![ndarray::Axis(0), a, eye, -&eye];
            let b = ndarray::concatenate![ndarray::Axis(0), Array1::from(b), Array1::from_elem(2 * n, 2.0)];
            FeasibleRegion::polytope(a, b, false).unwrap()
        }),
    ]
}

fn with_direction() -> impl Strategy<Value = (FeasibleRegion, Vec<f64>, Vec<Vec<f64>>)> {
    region().prop_flat_map(|z| {
        let n = z.dimension();
        (Just(z), vec_in(n, -2.0, 2.0), prop::collection::vec(vec_in(n, -2.0, 2.0), 26))
    })
}

/// About 10³ feasible probes: LMO outputs and pairwise convex combinations.
fn probes(z: &FeasibleRegion, dirs: &[Vec<f64>], extra: &Array1<f64>) -> Vec<Array1<f64>> {
    let mut pts: Vec<Array1<f64>> = dirs.iter().map(|d| lmo(z, Array1::from(d.clone()).view()).unwrap()).collect();
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for t in [0.25, 0.5, 0.9] {
                pts.push(&pts[i] * t + &pts[j] * (1.0 - t));
            }
        }
    }
    pts.push(extra.clone());
    pts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lmo_beats_feasible_probes((z, c, dirs) in with_direction()) {
        let c = Array1::from(c);
        let s = lmo(&z, c.view()).unwrap();
        prop_assert!(z.violation(s.view()) <= 1e-9);
        let anchor = z.anchor().unwrap();
        for p in probes(&z, &dirs, &anchor) {
            prop_assert!(c.dot(&s) <= c.dot(&p) + 1e-8, "{} > {}", c.dot(&s), c.dot(&p));
        }
    }

    #[test]
    fn halfspace_lmo_beats_probes_inside_the_cut((z, c, dirs) in with_direction(), w in 0.0f64..1.0) {
        let c = Array1::from(c);
        let anchor = z.anchor().unwrap();
        let a = Array1::from(dirs[0].clone());
        // The cut passes through a feasible point, so Z ∩ H is nonempty.
        let inner = &anchor * w + &lmo(&z, (-&a).view()).unwrap() * (1.0 - w);
        let h = Halfspace::new(a.clone(), a.dot(&inner));
        let s = halfspace_lmo(&z, &h, c.view()).unwrap();
        let scale = 1.0 + norm(a.view()) * z.diameter();
        prop_assert!(z.violation(s.view()) <= 1e-9);
        prop_assert!(h.residual(s.view()) <= 1e-9 * scale);
        for p in probes(&z, &dirs, &inner) {
            if h.residual(p.view()) <= 0.0 {
                prop_assert!(c.dot(&s) <= c.dot(&p) + 1e-8 * (1.0 + norm(c.view()) * z.diameter()));
            }
        }
    }

    #[test]
    fn inactive_cut_changes_nothing((z, c, dirs) in with_direction()) {
        let c = Array1::from(c);
        let a = Array1::from(dirs[0].clone());
        let top = a.dot(&lmo(&z, (-&a).view()).unwrap());
        let h = Halfspace::new(a, top + 1.0);
        prop_assert_eq!(halfspace_lmo(&z, &h, c.view()).unwrap(), lmo(&z, c.view()).unwrap());
    }

    #[test]
    fn ball_cut_is_tight_or_unneeded(k in 1usize..4, r in 0.2f64..3.0, c in vec_in(8, -2.0, 2.0), a in vec_in(8, -2.0, 2.0), off in -0.5f64..0.5) {
        let n = 2 * k;
        let z = FeasibleRegion::ball_product(2, vec![r; k]).unwrap();
        let c = Array1::from(c[..n].to_vec());
        let a = Array1::from(a[..n].to_vec());
        let h = Halfspace::new(a.clone(), off * norm(a.view()) * r);
        let s = halfspace_lmo(&z, &h, c.view()).unwrap();
        let free = lmo(&z, c.view()).unwrap();
        let scale = norm(a.view()) * r * k as f64 + 1.0;
        let res = h.residual(s.view());
        if h.residual(free.view()) < 0.0 {
            prop_assert!((&s - &free).iter().all(|d| d.abs() <= 1e-9), "{s:?} vs {free:?}");
        } else {
            prop_assert!(res.abs() <= 1e-8 * scale, "residual {res:e}");
        }
    }

    #[test]
    fn simplex_matches_basis_enumeration(n in 1usize..=6, m in 1usize..=6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = Array2::from_shape_fn((m, n), |_| rng.random_range(-1.0..1.0));
        let mut b = Array1::from_shape_fn(m, |_| rng.random_range(-0.2..1.0));
        a.row_mut(m - 1).fill(1.0);
        b[m - 1] = 2.0;
        let c = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
        let sol = simplex_solve(&LpProblem::new(c.clone(), a.clone(), b.clone()).unwrap()).unwrap();
        let best = enumerate(&c, &a, &b);
        match (sol.status, best) {
            (LpStatus::Optimal, Some(v)) => prop_assert!((sol.value - v).abs() <= 1e-8 * (1.0 + v.abs()), "{} vs {v}", sol.value),
            (LpStatus::Infeasible, None) => {}
            (s, v) => prop_assert!(false, "status {s:?} vs enumeration {v:?}"),
        }
    }

    #[test]
    fn projection_is_idempotent_and_nonexpansive(z in region(), u in vec_in(6, -4.0, 4.0), v in vec_in(6, -4.0, 4.0)) {
        let n = z.dimension();
        let u = Array1::from(u[..n.min(6)].to_vec());
        let v = Array1::from(v[..n.min(6)].to_vec());
        prop_assume!(u.len() == n);
        let pu = project(&z, u.view()).unwrap();
        let pv = project(&z, v.view()).unwrap();
        let again = project(&z, pu.view()).unwrap();
        prop_assert!(norm((&again - &pu).view()) <= 1e-10);
        prop_assert!(norm((&pu - &pv).view()) <= norm((&u - &v).view()) + 1e-10);
        prop_assert!(z.violation(pu.view()) <= 1e-9);
    }

    #[test]
    fn cut_ignores_constant_shifts(h in vec_in(4, -1.0, 1.0), q in vec_in(2, -1.0, 1.0), x0 in vec_in(2, -1.0, 1.0), xk in vec_in(2, -1.0, 1.0), shift in -10.0f64..10.0) {
        let m = Array2::from_shape_vec((2, 2), h).unwrap();
        let hess = m.t().dot(&m);
        let g = Quadratic::new(hess.clone(), Array1::from(q.clone()), 0.0).unwrap();
        let g2 = Quadratic::new(hess, Array1::from(q), shift).unwrap();
        let (x0, xk) = (Array1::from(x0), Array1::from(xk));
        let a = cutting_plane(&g, x0.view(), xk.view()).unwrap();
        let b = cutting_plane(&g2, x0.view(), xk.view()).unwrap();
        prop_assert_eq!(&a.normal, &b.normal);
        prop_assert!((a.offset - b.offset).abs() <= 1e-12 * (1.0 + shift.abs()));
    }

    #[test]
    fn quadratic_gradient_is_lipschitz(h in vec_in(9, -1.0, 1.0), x in vec_in(3, -2.0, 2.0), y in vec_in(3, -2.0, 2.0)) {
        use bilevel_core::model::SmoothOracle;
        let m = Array2::from_shape_vec((3, 3), h).unwrap();
        let g = Quadratic::new(m.t().dot(&m), Array1::zeros(3), 0.0).unwrap();
        let l = g.lipschitz_grad().unwrap();
        let (x, y) = (Array1::from(x), Array1::from(y));
        let d = norm((&g.eval(x.view()).unwrap().1 - &g.eval(y.view()).unwrap().1).view());
        prop_assert!(d <= l * norm((&x - &y).view()) + 1e-10);
    }

    #[test]
    fn linear_cut_contains_the_lower_level_minimizers(c in vec_in(2, -1.0, 1.0), w in 0.0f64..1.0) {
        // g linear over the unit ℓ₁ ball: every minimizer satisfies the cut
        // built at any feasible point.
        let z = FeasibleRegion::l1_ball(2, 1.0).unwrap();
        let c = Array1::from(c);
        let g = Linear::new(c.clone(), 0.0);
        let best = lmo(&z, c.view()).unwrap();
        let x0 = &best * w;
        let xk = lmo(&z, (-&c).view()).unwrap() * (1.0 - w);
        let h = cutting_plane(&g, x0.view(), xk.view()).unwrap();
        prop_assert!(h.residual(best.view()) <= 1e-12);
    }
}

#[test]
fn harmonic_step_times_k_plus_two_is_two() {
    let s = Schedule::Harmonic { shift: 2 };
    for k in 0..=1_000_000usize {
        // Exact up to the rounding of the final product.
        let p = step_size(&s, k) * (k + 2) as f64;
        assert!((p - 2.0).abs() <= 2.0 * f64::EPSILON, "k = {k}: {p}");
    }
}

/// Best objective over every basic solution of `{Ax ≤ b, x ≥ 0}`.
fn enumerate(c: &Array1<f64>, a: &Array2<f64>, b: &Array1<f64>) -> Option<f64> {
    let (m, n) = a.dim();
    let mut rows: Vec<(Array1<f64>, f64)> = (0..m).map(|i| (a.row(i).to_owned(), b[i])).collect();
    for j in 0..n {
        let mut e = Array1::zeros(n);
        e[j] = -1.0;
        rows.push((e, 0.0));
    }
    let total = rows.len();
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| rows[pick[i]].0[j]);
        let rhs = nalgebra::DVector::from_fn(n, |i, _| rows[pick[i]].1);
        if let Some(x) = mat.lu().solve(&rhs) {
            let x = Array1::from_iter(x.iter().copied());
            if x.iter().all(|v| v.is_finite()) && rows.iter().all(|(r, v)| r.dot(&x) - v <= 1e-9) {
                let val = c.dot(&x);
                if best.is_none_or(|b| val < b) {
                    best = Some(val);
                }
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < total - n + i {
                break;
            }
        }
        pick[i] += 1;
        for j in i + 1..n {
            pick[j] = pick[j - 1] + 1;
        }
    }
}
