//! AC power flow: Newton-Raphson solution, branch flows and bus injections.

mod flows;
mod newton;
mod state;

pub use flows::{
    all_branch_flows, all_injections, branch_flow, branch_flow_partials, bus_injection, injection_at,
    injection_partials, BranchFlow, PowerPartial,
};
pub use newton::{solve_power_flow, PowerFlowOptions, PowerFlowSolution};
pub use state::StateVector;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PowerFlowError {
    #[error("power flow did not converge in {iterations} iterations (mismatch {mismatch:e} p.u.)")]
    NotConverged { iterations: usize, mismatch: f64 },
    #[error("singular power flow Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}
