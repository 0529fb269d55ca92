use ndarray::Array1;

use crate::error::{Error, Result};
use crate::model::oracle::Oracle;
use crate::model::region::FeasibleRegion;

/// Known facts about an instance, used by reference checks and metrics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Reference {
    pub g_star: Option<f64>,
    pub f_star: Option<f64>,
    /// Vertices of the lower-level solution set, when it is a polytope face.
    pub lower_solution_vertices: Option<Vec<Array1<f64>>>,
    pub x_star: Option<Array1<f64>>,
}

/// `min f(x) s.t. x ∈ argmin_{z ∈ Z} g(z)`.
#[derive(Debug, Clone)]
pub struct BilevelInstance {
    pub name: String,
    pub upper: Oracle,
    pub lower: Oracle,
    pub region: FeasibleRegion,
    pub reference: Reference,
    /// Whether the upper objective is known to be convex (selects the schedule regime).
    pub upper_convex: bool,
}

impl BilevelInstance {
    pub fn new(name: impl Into<String>, upper: Oracle, lower: Oracle, region: FeasibleRegion) -> Result<Self> {
        let d = region.dimension();
        for (label, got) in [("upper", upper.dimension()), ("lower", lower.dimension())] {
            if got != d {
                return Err(Error::Config(format!(
                    "{label} oracle has dimension {got}, region has dimension {d}"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            upper,
            lower,
            region,
            reference: Reference::default(),
            upper_convex: false,
        })
    }

    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.reference = reference;
        self
    }

    pub fn with_convex_upper(mut self, convex: bool) -> Self {
        self.upper_convex = convex;
        self
    }

    pub fn dimension(&self) -> usize {
        self.region.dimension()
    }
}
