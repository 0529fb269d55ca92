use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{check_dim, Error, Result};
use crate::oracles::vertices::polytope_diameter;

/// Absolute tolerance used by membership tests unless overridden.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// `{x : Ax ≤ b}`, optionally intersected with the nonnegative orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    pub nonnegative: bool,
}

impl Polytope {
    pub fn new(a: Array2<f64>, b: Array1<f64>, nonnegative: bool) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::Dimension {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Config("polytope data must be finite".into()));
        }
        Ok(Self { a, b, nonnegative })
    }

    pub fn dimension(&self) -> usize {
        self.a.ncols()
    }

    /// Largest constraint violation (0 when feasible).
    pub fn violation(&self, x: ArrayView1<'_, f64>) -> f64 {
        let ax = self.a.dot(&x);
        let mut worst: f64 = 0.0;
        for (lhs, rhs) in ax.iter().zip(self.b.iter()) {
            worst = worst.max(lhs - rhs);
        }
        if self.nonnegative {
            for &xi in x.iter() {
                worst = worst.max(-xi);
            }
        }
        worst
    }

    /// Every defining inequality as `(normal, offset)`, including `-xᵢ ≤ 0`
    /// rows when the orthant constraint is on.
    pub fn halfspaces(&self) -> Vec<(Array1<f64>, f64)> {
        let n = self.dimension();
        let mut rows: Vec<(Array1<f64>, f64)> = self
            .a
            .rows()
            .into_iter()
            .zip(self.b.iter())
            .map(|(r, &b)| (r.to_owned(), b))
            .collect();
        if self.nonnegative {
            for i in 0..n {
                let mut e = Array1::zeros(n);
                e[i] = -1.0;
                rows.push((e, 0.0));
            }
        }
        rows
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegionKind {
    /// `{x : ‖x‖₁ ≤ radius}`.
    L1Ball { radius: f64 },
    /// Columns of a column-major matrix, each in an ℓ₂ ball of its own radius.
    BallProduct { column_dim: usize, radii: Vec<f64> },
    Polytope(Polytope),
    /// Cartesian product; blocks occupy consecutive coordinate ranges.
    Product(Vec<FeasibleRegion>),
}

/// Convex compact set `Z` with a known ℓ₂ diameter bound.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleRegion {
    kind: RegionKind,
    dimension: usize,
    diameter: f64,
    tol: f64,
}

impl FeasibleRegion {
    pub fn l1_ball(dimension: usize, radius: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("region dimension must be positive".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!("l1 radius must be positive, got {radius}")));
        }
        Ok(Self {
            kind: RegionKind::L1Ball { radius },
            dimension,
            diameter: 2.0 * radius,
            tol: DEFAULT_MEMBERSHIP_TOL,
        })
    }

    pub fn ball_product(column_dim: usize, radii: Vec<f64>) -> Result<Self> {
        if column_dim == 0 || radii.is_empty() {
            return Err(Error::Config("ball product needs at least one nonempty column".into()));
        }
        if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::Config("ball radii must be positive".into()));
        }
        let diameter = 2.0 * radii.iter().map(|r| r * r).sum::<f64>().sqrt();
        Ok(Self {
            dimension: column_dim * radii.len(),
            kind: RegionKind::BallProduct { column_dim, radii },
            diameter,
            tol: DEFAULT_MEMBERSHIP_TOL,
        })
    }

    /// Fails when the polytope is empty or unbounded.
    pub fn polytope(a: Array2<f64>, b: Array1<f64>, nonnegative: bool) -> Result<Self> {
        let poly = Polytope::new(a, b, nonnegative)?;
        if poly.dimension() == 0 {
            return Err(Error::Config("region dimension must be positive".into()));
        }
        let diameter = polytope_diameter(&poly)?;
        Ok(Self {
            dimension: poly.dimension(),
            kind: RegionKind::Polytope(poly),
            // A single point still gets a positive bound so D² never vanishes.
            diameter: diameter.max(f64::MIN_POSITIVE),
            tol: DEFAULT_MEMBERSHIP_TOL,
        })
    }

    /// `[lo, hi]^n` as a polytope.
    pub fn boxed(dimension: usize, lo: f64, hi: f64) -> Result<Self> {
        let mut a = Array2::zeros((2 * dimension, dimension));
        let mut b = Array1::zeros(2 * dimension);
        for i in 0..dimension {
            a[[2 * i, i]] = 1.0;
            b[2 * i] = hi;
            a[[2 * i + 1, i]] = -1.0;
            b[2 * i + 1] = -lo;
        }
        Self::polytope(a, b, false)
    }

    pub fn product(blocks: Vec<FeasibleRegion>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Config("product region needs at least one block".into()));
        }
        let dimension = blocks.iter().map(|b| b.dimension).sum();
        let diameter = blocks.iter().map(|b| b.diameter * b.diameter).sum::<f64>().sqrt();
        let tol = blocks.iter().map(|b| b.tol).fold(0.0, f64::max);
        Ok(Self {
            kind: RegionKind::Product(blocks),
            dimension,
            diameter,
            tol,
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn kind(&self) -> &RegionKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// ℓ₂ diameter bound `D`.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn as_polytope(&self) -> Option<&Polytope> {
        match &self.kind {
            RegionKind::Polytope(p) => Some(p),
            _ => None,
        }
    }

    /// Coordinate ranges of product blocks; a non-product region is one block.
    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        match &self.kind {
            RegionKind::Product(blocks) => {
                let mut start = 0;
                blocks
                    .iter()
                    .map(|b| {
                        let r = start..start + b.dimension;
                        start += b.dimension;
                        r
                    })
                    .collect()
            }
            _ => vec![0..self.dimension],
        }
    }

    /// Largest violation of any defining constraint (0 when inside).
    pub fn violation(&self, x: ArrayView1<'_, f64>) -> f64 {
        match &self.kind {
            RegionKind::L1Ball { radius } => (x.iter().map(|v| v.abs()).sum::<f64>() - radius).max(0.0),
            RegionKind::BallProduct { column_dim, radii } => radii
                .iter()
                .enumerate()
                .map(|(j, r)| {
                    let col = x.slice(ndarray::s![j * column_dim..(j + 1) * column_dim]);
                    (col.dot(&col).sqrt() - r).max(0.0)
                })
                .fold(0.0, f64::max),
            RegionKind::Polytope(p) => p.violation(x),
            RegionKind::Product(blocks) => {
                let mut worst: f64 = 0.0;
                for (block, range) in blocks.iter().zip(self.block_ranges()) {
                    worst = worst.max(block.violation(x.slice(ndarray::s![range])));
                }
                worst
            }
        }
    }

    /// A deterministic feasible point (origin for balls, an LP vertex for polytopes).
    pub fn anchor(&self) -> Result<Array1<f64>> {
        match &self.kind {
            RegionKind::L1Ball { .. } | RegionKind::BallProduct { .. } => Ok(Array1::zeros(self.dimension)),
            RegionKind::Polytope(_) => crate::oracles::lmo(self, Array1::zeros(self.dimension).view()),
            RegionKind::Product(blocks) => {
                let mut out = Array1::zeros(self.dimension);
                for (block, range) in blocks.iter().zip(self.block_ranges()) {
                    out.slice_mut(ndarray::s![range]).assign(&block.anchor()?);
                }
                Ok(out)
            }
        }
    }
}

/// True iff `x` satisfies every constraint of `region` within additive `tol`.
pub fn check_membership(region: &FeasibleRegion, x: ArrayView1<'_, f64>, tol: f64) -> bool {
    if check_dim(region.dimension(), x.len()).is_err() {
        return false;
    }
    x.iter().all(|v| v.is_finite()) && region.violation(x) <= tol
}
