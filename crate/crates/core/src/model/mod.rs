//! Problem model shared by every solver: oracles, regions, cuts, schedules
//! and traces.

mod halfspace;
mod instance;
mod oracle;
mod region;
mod schedule;
mod trace;

pub use halfspace::{cutting_plane, cutting_plane_from, Halfspace};
pub(crate) use halfspace::cutting_plane_parts;
pub use instance::{BilevelInstance, Reference};
pub use oracle::{evaluate, Oracle, QuadraticForm, SmoothOracle};
pub use region::{check_membership, FeasibleRegion, Polytope, RegionKind, DEFAULT_MEMBERSHIP_TOL};
pub use schedule::{step_size, Schedule, SolverConfig};
pub use trace::{SolveOutcome, StopReason, TraceRow};
pub(crate) use trace::TraceRecorder;
