//! Learning near-optimal contracts against an agent the principal knows
//! nothing about.
//!
//! The principal repeatedly offers wage contracts, sees only the realized
//! outcome, and wants a contract whose expected net profit is within `eps` of
//! the best monotone-smooth contract. The crate provides:
//!
//! - [`domain`]: outcome models, contracts, agents and their validators;
//! - [`agent_response`]: best responses and exact expected profits;
//! - [`contract_space`]: the exponential-ratio discretization and rounding map;
//! - [`bandit`]: median elimination over any [`bandit::RewardSource`];
//! - [`environment`]: the round protocol and the contract arm set;
//! - [`oracle`]: grid-search ground truth and special-case contract shapes;
//! - [`pipeline`]: learn / evaluate / batch as used by the command line.

// `!(x > 0.0)` style checks are there to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent_response;
pub mod bandit;
pub mod contract_space;
pub mod domain;
pub mod environment;
pub mod error;
pub mod generate;
pub mod oracle;
pub mod pipeline;

pub use agent_response::{best_response, exact_profit, EffortChoice};
pub use bandit::{MedianElimination, RewardSource};
pub use contract_space::{enumerate_space, round_to_coarse, CoarseCode, DiscretizedSpace};
pub use domain::{AgentInstance, Contract, Effort, Instance, InstanceFile, OutcomeModel, UtilitySpec};
pub use environment::{Environment, RoundResult, Sampling};
pub use error::{Error, Result, Violation};
pub use pipeline::{LearnParams, RegretReport, RunReport};
