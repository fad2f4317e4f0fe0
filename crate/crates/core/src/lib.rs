//! Neural immune PD tracking control for a geared DC actuating mechanism.
//!
//! The control voltage is split into a "helper" term (PD feedback on the
//! tracking error plus nominal-model feedforward) and a "suppressor" term
//! produced by a small fully recurrent network. The network is trained
//! episode-by-episode with backpropagation through time so that it cancels
//! the equivalent disturbance of the plant (parameter mismatch plus gravity).
//!
//! Module map:
//!
//! * [`plant`] - reduced second-order actuator model and RK4 integration.
//! * [`immune`] - immune control laws, gains, and the immune-PID baseline.
//! * [`suppressor`] - the recurrent network, its cost, BPTT and updates.
//! * [`gradcheck`] - finite-difference oracle for the BPTT gradient.
//! * [`harness`] - trajectories, closed-loop episodes, training, metrics.

pub mod error;
pub mod gradcheck;
pub mod harness;
pub mod immune;
pub mod plant;
pub mod suppressor;

pub use error::{Error, Result};
pub use harness::{
    compare, metrics, run_episode, train, Comparison, Controller, EpisodeConfig, EpisodeLog,
    EpisodeOutcome, EpisodeRow, Metrics, Reference, Scenario, TrainOptions, TrainReport,
    Trajectory,
};
pub use immune::{Gains, ImmunePidBaseline, ImmunePidBaselineParams};
pub use plant::{LumpedParams, NominalParams, PhysicalParams, PlantState};
pub use suppressor::{InputScale, NetState, NetTopology, NetWeights};
