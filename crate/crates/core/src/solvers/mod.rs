//! Iterative methods: standard CG and its lower-level warm start, the
//! cutting-plane bilevel method, and projection-based baselines.

mod baselines;
mod cgbio;
mod lower;
mod mng;

pub use baselines::{a_irg, big_sam, dbgd, dbgd_multiplier, AIrgConfig, BaselineConfig, BigSamConfig, DbgdConfig, MngConfig};
pub use cgbio::{cg_bio, cg_bio_unchecked, cg_upper};
pub use lower::{fw_gap, initialize_lower, initialize_lower_from, standard_cg, LineSearch, LowerStart};
pub use mng::{minimize_over_halfspaces, mng};
