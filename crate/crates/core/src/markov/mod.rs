//! Finite birth–death chains for atomic symmetrizing measures, their exact
//! hitting and exit-time solvers, and Monte Carlo path simulation.

mod chain;
mod sim;
mod timechange;

pub use chain::{discretize, exit_time_exact, hitting_prob_exact, ChainModel};
pub use sim::{
    empirical_checks, exit_side_agreement, run_paths, simulate_chain, simulate_chain_stopped,
    EmpiricalReport, HittingCheck, PathSample, SideAgreement, Terminal, DETAILED_BALANCE_ULPS,
};
pub use timechange::{simulate_time_change, TimeChange};
