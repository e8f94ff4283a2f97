//! The assessment loop: select an arm, draw one of its unlabeled instances,
//! ask the oracle, update the arm's posterior, log the step.
//!
//! A [`Session`] is strictly sequential. Independent runs of an experiment
//! are parallel and merged by run index.

mod assessment;
mod experiment;
mod oracle;
mod session;
mod stopping;
mod trajectory;

pub use assessment::{Arm, Assessment};
pub use experiment::{run_experiment, run_session, RunOutcome};
pub use oracle::{make_replay_oracle, Oracle, ReplayOracle};
pub use session::{Next, PendingQuery, Session, Submitted};
pub use stopping::{
    check_stopping, point_metrics, predicted_order, StopDecision, StopTruth, MRR_THRESHOLD,
};
pub use trajectory::{
    read_trajectories, write_step, write_trajectories, Snapshot, Step, TerminalReason,
    Trajectory, FULL_SNAPSHOT_EVERY,
};
