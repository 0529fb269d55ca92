//! Reference solutions, metrics, invariant checks, brute-force oracles and the
//! experiment runner built on `bilevel-core`.

pub mod geometry;
pub mod hoelder;
pub mod metrics;
pub mod persist;
pub mod brute;
pub mod checks;
pub mod experiments;
pub mod reference;
pub mod suite;
pub mod verify;

pub use hoelder::{corollary1_eps_g, hoelder_estimate, proposition1_check, HoelderParams, Proposition1Report};
pub use metrics::{fairness_metrics, recovery_rate, true_fw_gap, FairnessMetrics};
pub use reference::{reference_bilevel, reference_lower, BilevelReference, LowerMethod, LowerReference};
