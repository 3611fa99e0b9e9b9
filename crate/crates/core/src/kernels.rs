//! Convolution kernels `eta`, their rescalings `eta_eps(x) = eta(x / eps) / eps`,
//! grid discretization and the discrete convolution `w = u * eta_eps`.
//!
//! With the convention `(u * eta)(x) = ∫ u(y) eta(x - y) dy`, a kernel
//! supported on `[-1, 0]` sees only `u` on `[x, x + eps]`: the traffic
//! kernel looks downstream.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryRule, CellField, Grid1D, MIDPOINT_SUBSAMPLES};

/// Weights at either end of the stencil smaller than this are dropped
/// before normalization (they come from cells touching the support in a
/// single point).
const TRIM_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelProfile {
    /// `1` on `[-1, 0]`.
    BoxBackward,
    /// `1` on `[0, 1]`.
    BoxForward,
    /// `(1 - |x|)_+`.
    EvenHat,
    /// `(15/16) (1 - x^2)^2` on `[-1, 1]`.
    SmoothBump,
}

impl KernelProfile {
    pub const ALL: [KernelProfile; 4] = [
        KernelProfile::BoxBackward,
        KernelProfile::BoxForward,
        KernelProfile::EvenHat,
        KernelProfile::SmoothBump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelProfile::BoxBackward => "box-backward",
            KernelProfile::BoxForward => "box-forward",
            KernelProfile::EvenHat => "even-hat",
            KernelProfile::SmoothBump => "smooth-bump",
        }
    }

    pub fn density(self, x: f64) -> f64 {
        match self {
            KernelProfile::BoxBackward => {
                if (-1.0..=0.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            KernelProfile::BoxForward => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            KernelProfile::EvenHat => (1.0 - x.abs()).max(0.0),
            KernelProfile::SmoothBump => {
                if x.abs() <= 1.0 {
                    let q = 1.0 - x * x;
                    15.0 / 16.0 * q * q
                } else {
                    0.0
                }
            }
        }
    }

    /// Support `[lo, hi]` of the unscaled profile.
    pub fn support(self) -> (f64, f64) {
        match self {
            KernelProfile::BoxBackward => (-1.0, 0.0),
            KernelProfile::BoxForward => (0.0, 1.0),
            KernelProfile::EvenHat | KernelProfile::SmoothBump => (-1.0, 1.0),
        }
    }

    pub fn is_box(self) -> bool {
        matches!(self, KernelProfile::BoxBackward | KernelProfile::BoxForward)
    }

    pub fn is_even(self) -> bool {
        matches!(self, KernelProfile::EvenHat | KernelProfile::SmoothBump)
    }

    /// `∫_{-inf}^{x} eta`, for the profiles integrated in closed form.
    fn cumulative(self, x: f64) -> Option<f64> {
        match self {
            KernelProfile::BoxBackward => Some((x + 1.0).clamp(0.0, 1.0)),
            KernelProfile::BoxForward => Some(x.clamp(0.0, 1.0)),
            KernelProfile::EvenHat => Some(if x <= -1.0 {
                0.0
            } else if x <= 0.0 {
                0.5 * (1.0 + x) * (1.0 + x)
            } else if x < 1.0 {
                1.0 - 0.5 * (1.0 - x) * (1.0 - x)
            } else {
                1.0
            }),
            KernelProfile::SmoothBump => None,
        }
    }

    /// `∫_a^b eta(s) ds` for `a <= b`.
    fn integral(self, a: f64, b: f64) -> f64 {
        if let Some(fb) = self.cumulative(b) {
            return fb - self.cumulative(a).unwrap_or_default();
        }
        let (lo, hi) = self.support();
        let (a, b) = (a.max(lo), b.min(hi));
        if b <= a {
            return 0.0;
        }
        let sub = (b - a) / MIDPOINT_SUBSAMPLES as f64;
        (0..MIDPOINT_SUBSAMPLES)
            .map(|i| self.density(a + (i as f64 + 0.5) * sub))
            .sum::<f64>()
            * sub
    }
}

impl fmt::Display for KernelProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelProfile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidKernel(format!("unknown kernel profile `{s}`")))
    }
}

/// Where the discrete convolution is evaluated relative to the cell index `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    /// At the cell center `x_j`.
    CellCentered,
    /// At the right interface `x_{j+1/2}`.
    InterfaceCentered,
}

impl Alignment {
    pub fn name(self) -> &'static str {
        match self {
            Alignment::CellCentered => "cell",
            Alignment::InterfaceCentered => "interface",
        }
    }

    /// Position of cell `j + k` relative to the evaluation point, in units of `h`.
    fn cell_bounds(self, k: isize) -> (f64, f64) {
        let k = k as f64;
        match self {
            Alignment::CellCentered => (k - 0.5, k + 0.5),
            Alignment::InterfaceCentered => (k - 1.0, k),
        }
    }
}

/// Normalized stencil `w_j = sum_k weights[k - offset_min] * u_{j+k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    profile: KernelProfile,
    epsilon: f64,
    alignment: Alignment,
    offset_min: isize,
    weights: Vec<f64>,
}

impl DiscreteKernel {
    /// The Dirac stencil: `w_j = u_j`.
    pub fn identity(profile: KernelProfile, epsilon: f64, alignment: Alignment) -> Self {
        Self {
            profile,
            epsilon,
            alignment,
            offset_min: 0,
            weights: vec![1.0],
        }
    }

    /// A stencil with explicit weights, normalized to unit sum.
    pub fn from_weights(offset_min: isize, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidKernel(
                "weights must be non-empty, finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidKernel("weights sum to zero".into()));
        }
        Ok(Self {
            profile: KernelProfile::SmoothBump,
            epsilon: f64::NAN,
            alignment: Alignment::CellCentered,
            offset_min,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn profile(&self) -> KernelProfile {
        self.profile
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alignment(&self) -> Alignment {
        self.alignment
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn offset_min(&self) -> isize {
        self.offset_min
    }

    pub fn offset_max(&self) -> isize {
        self.offset_min + self.weights.len() as isize - 1
    }

    pub fn offsets(&self) -> impl Iterator<Item = isize> + '_ {
        (0..self.weights.len()).map(move |i| self.offset_min + i as isize)
    }

    pub fn weight(&self, offset: isize) -> f64 {
        let i = offset - self.offset_min;
        if i < 0 {
            return 0.0;
        }
        self.weights.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn is_identity(&self) -> bool {
        self.offset_min == 0 && self.weights.len() == 1
    }

    /// Ghost cells needed on each side to evaluate `w` on cells `-1..=n`.
    pub fn ghost_extent(&self) -> (usize, usize) {
        (
            1 + (-self.offset_min).max(0) as usize,
            1 + self.offset_max().max(0) as usize,
        )
    }
}

/// Discretizes `eta_eps` on `grid`: each weight is the exact integral of
/// `eta_eps` over one cell (midpoint rule for the smooth bump), then the
/// stencil is renormalized to unit sum. Kernels no wider than a cell
/// collapse to the identity stencil.
pub fn kernel_weights(
    profile: KernelProfile,
    epsilon: f64,
    grid: &Grid1D,
    alignment: Alignment,
) -> Result<DiscreteKernel> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidKernel(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    let h = grid.h();
    if epsilon <= h {
        if epsilon < h {
            log::warn!(
                "epsilon = {epsilon} is below the mesh size h = {h}; using the identity stencil"
            );
        }
        return Ok(DiscreteKernel::identity(profile, epsilon, alignment));
    }

    // Cells j+k meet eta_eps(p - y) where (p - y)/eps lies in the support,
    // i.e. y - p in [-eps * s_hi, -eps * s_lo].
    let (s_lo, s_hi) = profile.support();
    let (rel_lo, rel_hi) = (-epsilon * s_hi / h, -epsilon * s_lo / h);
    let shift = match alignment {
        Alignment::CellCentered => 0.5,
        Alignment::InterfaceCentered => 0.0,
    };
    let k_min = (rel_lo - shift).floor() as isize;
    let k_max = (rel_hi + shift).ceil() as isize + 1;

    let mut weights: Vec<(isize, f64)> = (k_min..=k_max)
        .map(|k| {
            let (a, b) = alignment.cell_bounds(k);
            // y in [a h, b h]  <=>  s = -y / eps in [-b h / eps, -a h / eps]
            (k, profile.integral(-b * h / epsilon, -a * h / epsilon))
        })
        .collect();
    while weights.first().is_some_and(|&(_, w)| w <= TRIM_TOLERANCE) {
        weights.remove(0);
    }
    while weights.last().is_some_and(|&(_, w)| w <= TRIM_TOLERANCE) {
        weights.pop();
    }
    if weights.is_empty() {
        return Err(Error::InvalidKernel("discretized kernel is empty".into()));
    }
    let total: f64 = weights.iter().map(|&(_, w)| w).sum();
    Ok(DiscreteKernel {
        profile,
        epsilon,
        alignment,
        offset_min: weights[0].0,
        weights: weights.into_iter().map(|(_, w)| w / total).collect(),
    })
}

/// Summation strategy for the discrete convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionMethod {
    #[default]
    Direct,
    /// Compensated sliding-window sum for box kernels, `O(N)` in the
    /// stencil width. Falls back to direct summation for other profiles.
    SlidingBox,
}

/// Evaluates `out[i] = sum_k w_k ext[base + start + i + k]` for `i < out.len()`,
/// where `ext` is a ghost-extended field and `base` the index of cell 0.
pub(crate) fn convolve_extended(
    ext: &[f64],
    base: usize,
    start: isize,
    kernel: &DiscreteKernel,
    method: ConvolutionMethod,
    out: &mut [f64],
) {
    let first = (base as isize + start + kernel.offset_min) as usize;
    let weights = kernel.weights();
    let width = weights.len();
    let use_window =
        method == ConvolutionMethod::SlidingBox && kernel.profile().is_box() && width > 2;
    if !use_window {
        for (i, w) in out.iter_mut().enumerate() {
            let window = &ext[first + i..first + i + width];
            *w = weights.iter().zip(window).map(|(g, u)| g * u).sum();
        }
        return;
    }

    let inner = &weights[1..width - 1];
    let c = inner.iter().sum::<f64>() / inner.len() as f64;
    let (g_first, g_last) = (weights[0], weights[width - 1]);
    // Neumaier-compensated running sum of the inner window
    let mut sum = 0.0;
    let mut comp = 0.0;
    let add = |sum: &mut f64, comp: &mut f64, v: f64| {
        let t = *sum + v;
        if sum.abs() >= v.abs() {
            *comp += (*sum - t) + v;
        } else {
            *comp += (v - t) + *sum;
        }
        *sum = t;
    };
    for &v in &ext[first + 1..first + width - 1] {
        add(&mut sum, &mut comp, v);
    }
    for (i, w) in out.iter_mut().enumerate() {
        let lo = first + i;
        if i > 0 {
            add(&mut sum, &mut comp, ext[lo + width - 2]);
            add(&mut sum, &mut comp, -ext[lo]);
        }
        *w = g_first * ext[lo] + c * (sum + comp) + g_last * ext[lo + width - 1];
    }
}

/// `w_j = sum_k gamma_k u_{j+k}` for every cell, ghost values from `boundary`.
pub fn convolve(field: &CellField, kernel: &DiscreteKernel, boundary: BoundaryRule) -> Vec<f64> {
    convolve_with(field, kernel, boundary, ConvolutionMethod::Direct)
}

pub fn convolve_with(
    field: &CellField,
    kernel: &DiscreteKernel,
    boundary: BoundaryRule,
    method: ConvolutionMethod,
) -> Vec<f64> {
    let (left, right) = kernel.ghost_extent();
    let mut ext = Vec::new();
    boundary.extend_into(field.values(), left, right, &mut ext);
    let mut out = vec![0.0; field.grid().n_cells()];
    convolve_extended(&ext, left, 0, kernel, method, &mut out);
    out
}
