//! Shared fixtures for the criterion benches.

use nonlocal_core::grid::DatumSpec;
use nonlocal_core::models::VelocityModel;
use nonlocal_core::{
    init_cell_averages, kernel_weights, BoundaryRule, CellField, ConvolutionMethod, Grid1D,
    KernelProfile, Problem, SchemeSpec,
};

/// Square wave between 0.2 and 0.8 on a periodic unit-length domain.
pub fn oscillatory_field(n_cells: usize) -> CellField {
    let grid = Grid1D::new(0.0, 1.0, n_cells).expect("valid grid");
    let datum = DatumSpec::SquareWave {
        origin: 0.0,
        period: 0.25,
        low: 0.2,
        high: 0.8,
    }
    .to_datum()
    .expect("valid datum");
    init_cell_averages(&grid, &datum).expect("projection")
}

/// Traffic problem for the scheme `label` (e.g. `godunov-nonlocal`).
pub fn traffic_problem(
    grid: &Grid1D,
    label: &str,
    epsilon: f64,
    nu: f64,
    method: ConvolutionMethod,
) -> Problem {
    let spec: SchemeSpec = label.parse().expect("known scheme label");
    let spec = spec.with_nu(nu);
    let kernel = kernel_weights(
        KernelProfile::BoxBackward,
        epsilon,
        grid,
        spec.kind.default_alignment(),
    )
    .expect("valid kernel");
    Problem::new(
        VelocityModel::traffic(),
        spec,
        Some(kernel),
        BoundaryRule::Periodic,
    )
    .expect("valid problem")
    .with_convolution(method)
}
