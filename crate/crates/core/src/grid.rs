//! Uniform 1-D grids, cell-averaged fields, ghost cells and projection of
//! initial data onto cell averages.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of cells a grid may have.
pub const MIN_CELLS: usize = 4;

/// Subsamples per cell for the midpoint rule applied to smooth profiles.
pub const MIDPOINT_SUBSAMPLES: usize = 8;

/// A uniform partition of `[x_min, x_max]` into `n_cells` cells of width `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    h: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "bounds must be finite, got [{x_min}, {x_max}]"
            )));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "x_min ({x_min}) must be below x_max ({x_max})"
            )));
        }
        if n_cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells, got {n_cells}"
            )));
        }
        let h = (x_max - x_min) / n_cells as f64;
        Ok(Self {
            x_min,
            x_max,
            n_cells,
            h,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Cell width.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x_min + (j as f64 + 0.5) * self.h
    }

    /// Left edge of cell `j`; `edge(n_cells)` is the right boundary.
    pub fn edge(&self, j: usize) -> f64 {
        if j == self.n_cells {
            self.x_max
        } else {
            self.x_min + j as f64 * self.h
        }
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |j| self.center(j))
    }

    /// The same domain split into `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.x_min, self.x_max, self.n_cells * factor)
    }
}

/// Builds a grid; thin wrapper over [`Grid1D::new`].
pub fn build_grid(x_min: f64, x_max: f64, n_cells: usize) -> Result<Grid1D> {
    Grid1D::new(x_min, x_max, n_cells)
}

/// Cell averages of a scalar field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    grid: Grid1D,
    values: Vec<f64>,
}

impl CellField {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::Mismatch(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDatum(format!(
                "non-finite value {} in cell {j}",
                values[j]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid1D, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.n_cells()],
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `h * sum(u_j)`.
    pub fn mass(&self) -> f64 {
        self.grid.h() * self.values.iter().sum::<f64>()
    }

    /// Averages groups of `factor` consecutive cells onto the grid with
    /// `n_cells / factor` cells.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.grid.n_cells().is_multiple_of(factor) {
            return Err(Error::Mismatch(format!(
                "cannot coarsen {} cells by a factor of {factor}",
                self.grid.n_cells()
            )));
        }
        let coarse = Grid1D::new(
            self.grid.x_min(),
            self.grid.x_max(),
            self.grid.n_cells() / factor,
        )?;
        let values = self
            .values
            .chunks_exact(factor)
            .map(|c| c.iter().sum::<f64>() / factor as f64)
            .collect();
        Ok(Self {
            grid: coarse,
            values,
        })
    }
}

/// How ghost cells outside the domain are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryRule {
    Periodic,
    /// Ghost cells copy the nearest interior value.
    #[default]
    ConstantExtension,
}

impl BoundaryRule {
    /// Interior index that supplies the value of (possibly ghost) cell `j`.
    #[inline]
    pub fn source_index(self, j: isize, n: usize) -> usize {
        match self {
            BoundaryRule::Periodic => j.rem_euclid(n as isize) as usize,
            BoundaryRule::ConstantExtension => j.clamp(0, n as isize - 1) as usize,
        }
    }

    /// Fills `out` with `values` padded by `left` ghosts on the left and
    /// `right` ghosts on the right.
    pub fn extend_into(self, values: &[f64], left: usize, right: usize, out: &mut Vec<f64>) {
        let n = values.len();
        out.clear();
        out.reserve(n + left + right);
        for g in (1..=left).rev() {
            out.push(values[self.source_index(-(g as isize), n)]);
        }
        out.extend_from_slice(values);
        for g in 0..right {
            out.push(values[self.source_index((n + g) as isize, n)]);
        }
    }
}

/// A smooth profile sampled by the midpoint rule.
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The initial condition `u(0, x)`.
#[derive(Clone)]
pub enum InitialDatum {
    /// `values[i]` on `[breakpoints[i], breakpoints[i + 1])`, zero outside.
    /// Outer breakpoints may be infinite.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        description: String,
    },
    Smooth {
        profile: Profile,
        description: String,
    },
    /// Alternates `high` and `low` on half periods, starting with `high`
    /// at `origin`.
    SquareWave {
        origin: f64,
        period: f64,
        low: f64,
        high: f64,
        description: String,
    },
}

impl fmt::Debug for InitialDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialDatum::PiecewiseConstant {
                breakpoints,
                values,
                description,
            } => f
                .debug_struct("PiecewiseConstant")
                .field("breakpoints", breakpoints)
                .field("values", values)
                .field("description", description)
                .finish(),
            InitialDatum::Smooth { description, .. } => f
                .debug_struct("Smooth")
                .field("description", description)
                .finish_non_exhaustive(),
            InitialDatum::SquareWave {
                origin,
                period,
                low,
                high,
                description,
            } => f
                .debug_struct("SquareWave")
                .field("origin", origin)
                .field("period", period)
                .field("low", low)
                .field("high", high)
                .field("description", description)
                .finish(),
        }
    }
}

impl InitialDatum {
    /// `left` on `x < at`, `right` on `x >= at`.
    pub fn step(left: f64, right: f64, at: f64) -> Self {
        InitialDatum::PiecewiseConstant {
            breakpoints: vec![f64::NEG_INFINITY, at, f64::INFINITY],
            values: vec![left, right],
            description: format!("step {left} -> {right} at x = {at}"),
        }
    }

    /// `value` on `[a, b)`, zero elsewhere.
    pub fn indicator(a: f64, b: f64, value: f64) -> Self {
        InitialDatum::PiecewiseConstant {
            breakpoints: vec![a, b],
            values: vec![value],
            description: format!("{value} on [{a}, {b})"),
        }
    }

    pub fn smooth(
        description: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        InitialDatum::Smooth {
            profile: Arc::new(f),
            description: description.into(),
        }
    }

    pub fn description(&self) -> &str {
        match self {
            InitialDatum::PiecewiseConstant { description, .. }
            | InitialDatum::Smooth { description, .. }
            | InitialDatum::SquareWave { description, .. } => description,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitialDatum::PiecewiseConstant {
                breakpoints,
                values,
                ..
            } => {
                if breakpoints.len() != values.len() + 1 || values.is_empty() {
                    return Err(Error::InvalidDatum(format!(
                        "{} breakpoints for {} values",
                        breakpoints.len(),
                        values.len()
                    )));
                }
                if breakpoints.iter().any(|b| b.is_nan()) {
                    return Err(Error::InvalidDatum("NaN breakpoint".into()));
                }
                if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidDatum(
                        "breakpoints must be strictly increasing".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidDatum("non-finite value".into()));
                }
                Ok(())
            }
            InitialDatum::Smooth { .. } => Ok(()),
            InitialDatum::SquareWave {
                origin,
                period,
                low,
                high,
                ..
            } => {
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::InvalidDatum(format!(
                        "square-wave period must be positive, got {period}"
                    )));
                }
                if ![*origin, *low, *high].iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidDatum(
                        "non-finite square-wave parameter".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Bounds `[min, max]` of the values taken by the datum, if known
    /// without sampling.
    pub fn value_bounds(&self) -> Option<(f64, f64)> {
        match self {
            InitialDatum::PiecewiseConstant {
                breakpoints,
                values,
                ..
            } => {
                let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                // zero outside the outer breakpoints
                if breakpoints[0].is_finite() || breakpoints[breakpoints.len() - 1].is_finite() {
                    lo = lo.min(0.0);
                    hi = hi.max(0.0);
                }
                Some((lo, hi))
            }
            InitialDatum::SquareWave { low, high, .. } => Some((low.min(*high), low.max(*high))),
            InitialDatum::Smooth { .. } => None,
        }
    }

    /// Checks that every value lies in `[lo, hi]`; smooth profiles are
    /// sampled on `grid`.
    pub fn check_range(&self, lo: f64, hi: f64, grid: &Grid1D) -> Result<()> {
        let (min, max) = match self.value_bounds() {
            Some(b) => b,
            None => {
                let field = init_cell_averages(grid, self)?;
                (field.min(), field.max())
            }
        };
        if min < lo || max > hi {
            return Err(Error::InvalidDatum(format!(
                "values span [{min}, {max}], outside the admissible range [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

/// Serializable initial data, as written in config files and presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatumSpec {
    /// `left` on `x < at`, `right` on `x >= at`.
    Step { left: f64, right: f64, at: f64 },
    /// `values[i]` on `[breakpoints[i], breakpoints[i + 1])`, zero outside.
    Piecewise {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    SquareWave {
        origin: f64,
        period: f64,
        low: f64,
        high: f64,
    },
    /// `base + amplitude (1 - ((x - center) / width)^2)^2` inside
    /// `|x - center| < width`, `base` outside.
    Bump {
        base: f64,
        amplitude: f64,
        center: f64,
        width: f64,
    },
}

impl DatumSpec {
    pub fn to_datum(&self) -> Result<InitialDatum> {
        let datum = match self {
            DatumSpec::Step { left, right, at } => InitialDatum::step(*left, *right, *at),
            DatumSpec::Piecewise {
                breakpoints,
                values,
            } => InitialDatum::PiecewiseConstant {
                breakpoints: breakpoints.clone(),
                values: values.clone(),
                description: format!("piecewise constant, {} pieces", values.len()),
            },
            DatumSpec::SquareWave {
                origin,
                period,
                low,
                high,
            } => InitialDatum::SquareWave {
                origin: *origin,
                period: *period,
                low: *low,
                high: *high,
                description: format!("square wave {low}/{high}, period {period}"),
            },
            &DatumSpec::Bump {
                base,
                amplitude,
                center,
                width,
            } => {
                if !(width.is_finite() && width > 0.0) {
                    return Err(Error::InvalidDatum(format!(
                        "bump width must be positive, got {width}"
                    )));
                }
                InitialDatum::smooth(
                    format!("bump of amplitude {amplitude} and half-width {width} at {center}"),
                    move |x| {
                        let s = (x - center) / width;
                        if s.abs() < 1.0 {
                            let q = 1.0 - s * s;
                            base + amplitude * q * q
                        } else {
                            base
                        }
                    },
                )
            }
        };
        datum.validate()?;
        Ok(datum)
    }

    /// `(left, right, position)` when the datum is a single jump between
    /// two constant states.
    pub fn riemann_states(&self) -> Option<(f64, f64, f64)> {
        match self {
            DatumSpec::Step { left, right, at } => Some((*left, *right, *at)),
            DatumSpec::Piecewise {
                breakpoints,
                values,
            } if values.len() == 2
                && breakpoints[0] == f64::NEG_INFINITY
                && breakpoints[2] == f64::INFINITY =>
            {
                Some((values[0], values[1], breakpoints[1]))
            }
            _ => None,
        }
    }
}

fn square_wave_integral(origin: f64, period: f64, low: f64, high: f64, x: f64) -> f64 {
    // antiderivative from origin
    let s = (x - origin) / period;
    let whole = s.floor();
    let frac = s - whole;
    let per_period = 0.5 * (high + low) * period;
    let partial = if frac < 0.5 {
        high * frac * period
    } else {
        0.5 * high * period + low * (frac - 0.5) * period
    };
    whole * per_period + partial
}

/// Projects `datum` onto cell averages: exact overlap integration for
/// piecewise-constant and square-wave data, midpoint rule with
/// [`MIDPOINT_SUBSAMPLES`] points per cell for smooth profiles.
pub fn init_cell_averages(grid: &Grid1D, datum: &InitialDatum) -> Result<CellField> {
    datum.validate()?;
    let n = grid.n_cells();
    let h = grid.h();
    let mut values = Vec::with_capacity(n);
    match datum {
        InitialDatum::PiecewiseConstant {
            breakpoints,
            values: pieces,
            ..
        } => {
            for j in 0..n {
                let (lo, hi) = (grid.edge(j), grid.edge(j + 1));
                let mut acc = 0.0;
                for (i, &v) in pieces.iter().enumerate() {
                    let overlap = hi.min(breakpoints[i + 1]) - lo.max(breakpoints[i]);
                    if overlap > 0.0 {
                        acc += v * overlap;
                    }
                }
                values.push(acc / (hi - lo));
            }
        }
        InitialDatum::SquareWave {
            origin,
            period,
            low,
            high,
            ..
        } => {
            for j in 0..n {
                let (lo, hi) = (grid.edge(j), grid.edge(j + 1));
                let integral = square_wave_integral(*origin, *period, *low, *high, hi)
                    - square_wave_integral(*origin, *period, *low, *high, lo);
                let avg = integral / (hi - lo);
                values.push(avg.clamp(low.min(*high), low.max(*high)));
            }
        }
        InitialDatum::Smooth { profile, .. } => {
            let sub = h / MIDPOINT_SUBSAMPLES as f64;
            for j in 0..n {
                let lo = grid.edge(j);
                let mut acc = 0.0;
                for s in 0..MIDPOINT_SUBSAMPLES {
                    let v = profile(lo + (s as f64 + 0.5) * sub);
                    if !v.is_finite() {
                        return Err(Error::InvalidDatum(format!(
                            "profile returned {v} in cell {j}"
                        )));
                    }
                    acc += v;
                }
                values.push(acc / MIDPOINT_SUBSAMPLES as f64);
            }
        }
    }
    CellField::new(*grid, values)
}
