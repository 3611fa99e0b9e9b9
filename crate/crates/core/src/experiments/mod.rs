//! Convergence protocols: eps-sweeps against entropy references, nu-sweeps
//! along the three arrows of the vanishing-viscosity/local-limit diagram,
//! and exact Riemann references for the traffic flux.

mod riemann;
mod sweep;

pub use riemann::{exact_riemann_cell_averages, exact_riemann_lwr};
pub use sweep::{
    check_domain, run_epsilon_sweep, run_nu_sweep, run_single, run_sweep, MeshRule, Protocol,
    Reference, RowMetrics, Scenario, SweepPlan, SweepResult, SweepRow, SweepVariable,
    DEFAULT_KAPPA, DEFAULT_RECORDS, DEFAULT_REFINEMENT,
};
