//! Functionals of discrete solutions: distances, total variation,
//! half-line mass, range and support.
//!
//! Total variation is taken over cell averages, which is the discrete
//! stand-in for the variation of the underlying function.

use crate::error::{Error, Result};
use crate::grid::{BoundaryRule, CellField};
use crate::timeloop::RunRecord;

/// Relative threshold (times `max |u|`) below which a value counts as zero
/// for [`FieldStats::support_right_edge`].
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// `h * sum |a - b|` at the final snapshot.
    L1,
    /// `max |a - b|` at the final snapshot.
    Sup,
    /// Trapezoid-in-time approximation of the `L^2([0, T] x R)` norm.
    L2SpaceTime,
}

fn same_grid(a: &CellField, b: &CellField) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::Mismatch(format!(
            "fields live on different grids ({:?} vs {:?})",
            a.grid(),
            b.grid()
        )));
    }
    Ok(())
}

pub fn l1_distance(a: &CellField, b: &CellField) -> Result<f64> {
    same_grid(a, b)?;
    Ok(a.grid().h()
        * a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>())
}

pub fn sup_distance(a: &CellField, b: &CellField) -> Result<f64> {
    same_grid(a, b)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// `sqrt( sum_r tau_r h sum_j (a - b)^2 )` with trapezoid weights `tau_r`
/// over the record times.
pub fn l2_spacetime_distance(a: &RunRecord, b: &RunRecord) -> Result<f64> {
    if a.times != b.times {
        return Err(Error::Mismatch("runs have different record times".into()));
    }
    let n = a.times.len();
    let mut total = 0.0;
    for r in 0..n {
        let tau = match (r, n) {
            (_, 1) => 0.0,
            (0, _) => 0.5 * (a.times[1] - a.times[0]),
            (r, n) if r + 1 == n => 0.5 * (a.times[r] - a.times[r - 1]),
            (r, _) => 0.5 * (a.times[r + 1] - a.times[r - 1]),
        };
        let (x, y) = (&a.snapshots[r], &b.snapshots[r]);
        same_grid(x, y)?;
        let sq: f64 = x
            .values()
            .iter()
            .zip(y.values())
            .map(|(p, q)| (p - q) * (p - q))
            .sum();
        total += tau * x.grid().h() * sq;
    }
    Ok(total.sqrt())
}

pub fn distance(metric: Metric, a: &RunRecord, b: &RunRecord) -> Result<f64> {
    match metric {
        Metric::L1 => l1_distance(a.last(), b.last()),
        Metric::Sup => sup_distance(a.last(), b.last()),
        Metric::L2SpaceTime => l2_spacetime_distance(a, b),
    }
}

/// `sum_j |u_{j+1} - u_j|` over interior neighbours.
pub fn total_variation(field: &CellField) -> f64 {
    field.values().windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Total variation including the wrap-around jump for periodic fields.
pub fn total_variation_with(field: &CellField, boundary: BoundaryRule) -> f64 {
    let v = field.values();
    let interior = total_variation(field);
    match boundary {
        BoundaryRule::Periodic => interior + (v[0] - v[v.len() - 1]).abs(),
        BoundaryRule::ConstantExtension => interior,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfLineMass {
    pub mass: f64,
    /// The cell edge actually used.
    pub edge: f64,
    /// Whether `x0` had to be moved to the nearest edge.
    pub snapped: bool,
}

/// `h * sum` of the cells whose centers lie left of `x0`, with `x0`
/// snapped to the nearest cell edge.
pub fn half_line_mass(field: &CellField, x0: f64) -> HalfLineMass {
    let g = field.grid();
    let raw = ((x0 - g.x_min()) / g.h()).round();
    let cells = raw.clamp(0.0, g.n_cells() as f64) as usize;
    let edge = g.edge(cells);
    let snapped = if x0 <= g.x_min() || x0 >= g.x_max() {
        false
    } else {
        (edge - x0).abs() > 1e-12 * g.h().max(x0.abs())
    };
    if snapped {
        log::debug!("half-line mass: x0 = {x0} snapped to the cell edge {edge}");
    }
    let mass = g.h() * field.values()[..cells].iter().sum::<f64>();
    HalfLineMass {
        mass,
        edge,
        snapped,
    }
}

/// `h * sum_j weight(x_j) u_j` for a user-supplied weight.
pub fn weighted_mass(field: &CellField, weight: impl Fn(f64) -> f64) -> f64 {
    let g = field.grid();
    g.h()
        * g.centers()
            .zip(field.values())
            .map(|(x, u)| weight(x) * u)
            .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldStats {
    pub min: f64,
    pub max: f64,
    pub total_mass: f64,
    pub tv: f64,
    /// Largest cell center where `|u|` exceeds the support threshold.
    pub support_right_edge: Option<f64>,
}

impl FieldStats {
    pub fn of(field: &CellField) -> Self {
        let abs_max = field.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let threshold = SUPPORT_THRESHOLD * abs_max;
        let g = field.grid();
        let support_right_edge = field
            .values()
            .iter()
            .rposition(|v| abs_max > 0.0 && v.abs() > threshold)
            .map(|j| g.center(j));
        Self {
            min: field.min(),
            max: field.max(),
            total_mass: field.mass(),
            tv: total_variation(field),
            support_right_edge,
        }
    }
}
