//! Entropy solution of the Riemann problem for `u_t + (u (1 - u))_x = 0`.

use crate::error::{Error, Result};
use crate::grid::{CellField, Grid1D};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Wave {
    Constant(f64),
    Shock {
        left: f64,
        right: f64,
        speed: f64,
    },
    /// Fan between `x / t = 1 - 2 left` and `x / t = 1 - 2 right`.
    Rarefaction {
        left: f64,
        right: f64,
    },
}

fn classify(u_left: f64, u_right: f64) -> Result<Wave> {
    for u in [u_left, u_right] {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::InvalidDatum(format!(
                "traffic Riemann states must lie in [0, 1], got {u}"
            )));
        }
    }
    Ok(if u_left == u_right {
        Wave::Constant(u_left)
    } else if u_left < u_right {
        // concave flux: increasing jumps are admissible shocks
        Wave::Shock {
            left: u_left,
            right: u_right,
            speed: 1.0 - u_left - u_right,
        }
    } else {
        Wave::Rarefaction {
            left: u_left,
            right: u_right,
        }
    })
}

/// Point value of the entropy solution with the jump initially at `x = 0`.
pub fn exact_riemann_lwr(u_left: f64, u_right: f64, t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidPlan(format!(
            "time must be positive, got {t}"
        )));
    }
    Ok(match classify(u_left, u_right)? {
        Wave::Constant(c) => c,
        Wave::Shock { left, right, speed } => {
            if x < speed * t {
                left
            } else {
                right
            }
        }
        Wave::Rarefaction { left, right } => {
            let xi = x / t;
            if xi <= 1.0 - 2.0 * left {
                left
            } else if xi >= 1.0 - 2.0 * right {
                right
            } else {
                0.5 * (1.0 - xi)
            }
        }
    })
}

/// An antiderivative in `x` of the solution at time `t`.
fn antiderivative(wave: Wave, t: f64, x: f64) -> f64 {
    match wave {
        Wave::Constant(c) => c * x,
        Wave::Shock { left, right, speed } => {
            let xs = speed * t;
            left * x.min(xs) + right * (x - xs).max(0.0)
        }
        Wave::Rarefaction { left, right } => {
            let (xl, xr) = ((1.0 - 2.0 * left) * t, (1.0 - 2.0 * right) * t);
            let fan = |y: f64| 0.5 * y - y * y / (4.0 * t);
            let y = x.clamp(xl, xr);
            left * x.min(xl) + (fan(y) - fan(xl)) + right * (x - xr).max(0.0)
        }
    }
}

/// Exact cell averages at time `t` of the Riemann solution with the jump
/// initially at `x0`. At `t = 0` this is the projected step.
pub fn exact_riemann_cell_averages(
    grid: &Grid1D,
    u_left: f64,
    u_right: f64,
    x0: f64,
    t: f64,
) -> Result<CellField> {
    let wave = classify(u_left, u_right)?;
    let values = (0..grid.n_cells())
        .map(|j| {
            let (a, b) = (grid.edge(j) - x0, grid.edge(j + 1) - x0);
            if t > 0.0 {
                (antiderivative(wave, t, b) - antiderivative(wave, t, a)) / (b - a)
            } else {
                let step = |x: f64| u_left * x.min(0.0) + u_right * x.max(0.0);
                (step(b) - step(a)) / (b - a)
            }
        })
        .collect();
    CellField::new(*grid, values)
}
