//! Time integration of the regularized problems, the monotone limit driver
//! and Dirac-mass extraction.

pub mod cap;
pub mod limit;
pub mod run;
pub mod step;
pub mod theta;

pub use cap::{Nonlinearity, SlopeCap};
pub use limit::{regularization_limit, LimitLevel, LimitResult, LimitSpec, OrderingDefect};
pub use run::{run, run_from, uniform_schedule, RunOptions, RunSpec, Trajectory};
pub use step::{step, Regularization, Source, StepOutcome, Transport};
pub use theta::{extract_theta, ThetaEstimate, ThetaTrace};
