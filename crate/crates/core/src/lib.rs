//! A one-dimensional finite-volume laboratory for nonlocal conservation laws
//!
//! ```text
//! u_t + (u V(u * eta_eps))_x = nu u_xx
//! ```
//!
//! together with their viscous regularizations and local limits
//! `u_t + (u V(u))_x = nu u_xx`. The crate provides grids and projections
//! ([`grid`]), kernel discretizations ([`kernels`]), velocity laws
//! ([`models`]), Lax-Friedrichs and Godunov-type fluxes ([`schemes`]), time
//! integration ([`timeloop`]), solution functionals ([`diagnostics`]),
//! parameter sweeps ([`experiments`]) and the config/CSV layer ([`io`]).

// `!(a < b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod models;
pub mod schemes;
pub mod timeloop;

pub use diagnostics::{distance, half_line_mass, total_variation, FieldStats, Metric};
pub use error::{Error, Result};
pub use experiments::{run_epsilon_sweep, run_nu_sweep, run_sweep, SweepPlan, SweepResult};
pub use grid::{build_grid, init_cell_averages, BoundaryRule, CellField, Grid1D, InitialDatum};
pub use io::{ConfigError, RunConfig};
pub use kernels::{
    convolve, kernel_weights, Alignment, ConvolutionMethod, DiscreteKernel, KernelProfile,
};
pub use models::{eval_flux, wave_speed_bound, VelocityModel};
pub use schemes::{
    local_flux, nonlocal_flux, step_explicit, Locality, Problem, SchemeKind, SchemeSpec,
};
pub use timeloop::{evolve, stable_dt, uniform_record_times, RunRecord};
