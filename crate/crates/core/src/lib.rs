//! Joint source-channel random-coding error exponents for two correlated
//! sources over a two-user discrete memoryless multiple-access channel,
//! with message-dependent (two-class) codebooks.
//!
//! All exponents are in nats.

pub mod channels;
pub mod correlated;
pub mod exponents;
pub mod gallager;
pub mod model;
pub mod optim;
pub mod oracle;
pub mod solver;
pub mod value;

pub use exponents::{
    assignment_search, assignment_search_with, iid_exponent, lower_bound, optimize_thresholds, Assignment, Evaluator,
    ExponentError, ExponentReport, IidExponent, LowerBound, SearchOptions, ThresholdSolution,
};
pub use model::{
    validate_instance, Class, ClassPair, Config, ErrorType, InputDistributionBank, Instance, JointSource, MacChannel,
    ModelError, Thresholds, User,
};
pub use solver::SolverConfig;
pub use value::{ExponentValue, Ext};
