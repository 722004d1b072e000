//! Online imitation learning as online convex optimization.
//!
//! The crate provides follow-the-leader, proximal follow-the-regularized-leader
//! (in its naive form and two memory-light reformulations), AdaFTRL, online
//! gradient descent and scalar AdaGrad over linear policies, together with
//! desk-scale environments, regret accounting and numeric checks of the
//! standard regret bounds.

pub mod domain;
pub mod envs;
pub mod error;
pub mod harness;
pub mod loss;
pub mod metrics;
pub mod optimizers;
pub mod param;
pub mod schedule;
pub mod solvers;
pub mod verify;

pub use domain::Domain;
pub use envs::{Behavior, Regime};
pub use error::{Error, Result};
pub use harness::{preset, EnvSpec, ExperimentConfig, RunRecord, RunRow};
pub use loss::{ExactMin, LossKind, LossMeta, RoundLoss};
pub use metrics::{BoundReport, Checkpoints, RegretLedger, Theorem};
pub use optimizers::{Algo, OptimizerState, RoundReport};
pub use param::ParamVector;
pub use schedule::{ScheduleKind, StepSchedule};
pub use solvers::{Objective, SolveReport, SolverConfig, SolverMethod};
pub use verify::{Fault, Suite, SuiteReport};
