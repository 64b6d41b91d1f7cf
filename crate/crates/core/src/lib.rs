//! Collision-based periodic orbit of the octahedral six-body problem.
//!
//! The crate builds the regularized equations of motion for three symmetric
//! pairs of unit masses on the coordinate axes, integrates them through
//! binary collisions, locates the doubly-symmetric periodic orbit by a
//! two-level shooting search, and reduces its monodromy by the orbit's
//! symmetries to a 3×3 stability block.
//!
//! Pipeline: [`dynamics`] defines Γ and its derivatives, [`integrator`]
//! propagates states and variational frames with event location, [`search`]
//! classifies first-collision regions and runs the shooting search,
//! [`stability`] factorizes the monodromy, and [`sweep`] fans grid work out
//! over a thread pool (feature `parallel`, on by default).

pub mod cutoff;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod search;
pub mod stability;
pub mod sweep;

pub use dynamics::{Axis, PhysState, RegState};
pub use error::{Error, Result};
pub use integrator::{EventDirection, EventKind, EventSpec, IntegratorConfig, Trajectory};
pub use search::{OrbitSolution, SigmaOutcome, SigmaQuery, SigmaVerdict};
pub use stability::{StabilityReport, StabilityVerdict};
