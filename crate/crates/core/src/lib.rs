pub mod bayes;
pub mod bounds;
pub mod error;
pub mod harness;
pub mod index;
pub mod inner;
pub mod lattice;
pub mod policies;
pub mod rng;
pub mod special;

pub use bayes::{ArmPrior, BeliefVector, MeanTrajectory, ModelFamily, Outcome};
pub use bounds::BoundEstimate;
pub use error::{IrsError, Result};
pub use harness::{ExperimentConfig, RegretRow, RegretTable, RowKind};
pub use inner::{Allocation, InnerSolution, PenaltyKind, Plan};
pub use index::IndexVariant;
pub use policies::{EpisodeRecord, Policy, PolicyKind};
pub use rng::RngStream;
