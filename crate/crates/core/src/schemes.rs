//! Numerical fluxes and the explicit conservative update
//!
//! `u_j <- u_j - (dt/h) (F_{j+1/2} - F_{j-1/2}) + dt nu (u_{j+1} - 2 u_j + u_{j-1}) / h^2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryRule, CellField};
use crate::kernels::{convolve_extended, Alignment, ConvolutionMethod, DiscreteKernel};
use crate::models::{VelocityLaw, VelocityModel};

/// Interior sample points used to extremize non-affine fluxes.
pub const GODUNOV_SAMPLES: usize = 64;

pub const DEFAULT_CFL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Locality {
    Nonlocal,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Three-point Lax-Friedrichs with coefficient `h / dt`.
    #[serde(rename = "lxf")]
    LaxFriedrichs,
    /// Exact Riemann flux (local) or upwinding in the frozen convolved
    /// velocity (nonlocal).
    Godunov,
    /// Upwinding in a frozen velocity. Locally the velocity is `V(u_left)`,
    /// which makes it the nonlocal Godunov flux with the identity stencil;
    /// nonlocally it is the same flux as [`SchemeKind::Godunov`].
    Upwind,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::LaxFriedrichs => "lxf",
            SchemeKind::Godunov => "godunov",
            SchemeKind::Upwind => "upwind",
        }
    }

    /// Kernel alignment used when none is configured explicitly.
    pub fn default_alignment(self) -> Alignment {
        match self {
            SchemeKind::LaxFriedrichs => Alignment::CellCentered,
            SchemeKind::Godunov | SchemeKind::Upwind => Alignment::InterfaceCentered,
        }
    }
}

impl Locality {
    pub fn name(self) -> &'static str {
        match self {
            Locality::Nonlocal => "nonlocal",
            Locality::Local => "local",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub locality: Locality,
    pub kind: SchemeKind,
    pub nu: f64,
    pub cfl: f64,
}

impl SchemeSpec {
    pub fn new(locality: Locality, kind: SchemeKind) -> Self {
        Self {
            locality,
            kind,
            nu: 0.0,
            cfl: DEFAULT_CFL,
        }
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::InvalidScheme(format!(
                "nu must be >= 0, got {}",
                self.nu
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidScheme(format!(
                "cfl number must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        Ok(())
    }

    /// `kind-locality`, e.g. `godunov-nonlocal`.
    pub fn label(&self) -> String {
        format!("{}-{}", self.kind.name(), self.locality.name())
    }

    /// Schemes that transport with a frozen velocity (every nonlocal flux
    /// and local upwinding) share one time-step rule.
    pub fn uses_frozen_velocity(&self) -> bool {
        self.locality == Locality::Nonlocal || self.kind == SchemeKind::Upwind
    }

    /// The local scheme of the same kind and viscosity.
    pub fn local_counterpart(&self) -> Self {
        Self {
            locality: Locality::Local,
            ..*self
        }
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for SchemeSpec {
    type Err = Error;

    /// Parses `kind-locality` labels such as `lxf-nonlocal`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, locality) = s
            .rsplit_once('-')
            .ok_or_else(|| Error::InvalidScheme(format!("expected `kind-locality`, got `{s}`")))?;
        let kind = match kind {
            "lxf" => SchemeKind::LaxFriedrichs,
            "godunov" => SchemeKind::Godunov,
            "upwind" => SchemeKind::Upwind,
            other => {
                return Err(Error::InvalidScheme(format!(
                    "unknown scheme kind `{other}`"
                )))
            }
        };
        let locality = match locality {
            "nonlocal" => Locality::Nonlocal,
            "local" => Locality::Local,
            other => return Err(Error::InvalidScheme(format!("unknown locality `{other}`"))),
        };
        Ok(Self::new(locality, kind))
    }
}

/// Mass carried by a frozen velocity `v`, upwinded.
#[inline]
fn upwind(u_left: f64, u_right: f64, v: f64) -> f64 {
    u_left * v.max(0.0) + u_right * v.min(0.0)
}

/// Exact Godunov flux for `f(u) = u V(u)`: the minimum of `f` over
/// `[u_l, u_r]` when `u_l <= u_r`, the maximum over `[u_r, u_l]` otherwise.
pub fn godunov_flux(model: &VelocityModel, u_left: f64, u_right: f64) -> f64 {
    if u_left == u_right {
        return model.flux(u_left);
    }
    let (lo, hi, take_min) = if u_left < u_right {
        (u_left, u_right, true)
    } else {
        (u_right, u_left, false)
    };
    let pick = |a: f64, b: f64| if take_min { a.min(b) } else { a.max(b) };
    let mut best = pick(model.flux(lo), model.flux(hi));
    match model.law() {
        VelocityLaw::Affine { a, b } => {
            // f = a u + b u^2, stationary at u = -a / (2 b)
            if *b != 0.0 {
                let vertex = -a / (2.0 * b);
                if vertex > lo && vertex < hi {
                    best = pick(best, model.flux(vertex));
                }
            }
        }
        VelocityLaw::Custom { .. } => {
            let du = (hi - lo) / (GODUNOV_SAMPLES + 1) as f64;
            for i in 1..=GODUNOV_SAMPLES {
                best = pick(best, model.flux(lo + i as f64 * du));
            }
        }
    }
    best
}

/// Local numerical flux at an interface. `mesh_ratio` is `dt / h` and is
/// only read by Lax-Friedrichs.
pub fn local_flux(
    kind: SchemeKind,
    model: &VelocityModel,
    u_left: f64,
    u_right: f64,
    mesh_ratio: f64,
) -> f64 {
    match kind {
        SchemeKind::LaxFriedrichs => {
            0.5 * (model.flux(u_left) + model.flux(u_right))
                - (u_right - u_left) / (2.0 * mesh_ratio)
        }
        SchemeKind::Godunov => godunov_flux(model, u_left, u_right),
        SchemeKind::Upwind => upwind(u_left, u_right, model.velocity(u_left)),
    }
}

/// Nonlocal numerical flux at the interface between cells `j` and `j + 1`.
///
/// `w_left` and `w_right` are the convolution values indexed by `j` and
/// `j + 1`. Godunov/upwind reads only `w_left` (which, with the interface
/// alignment, is the convolution at `x_{j+1/2}`); Lax-Friedrichs reads both.
pub fn nonlocal_flux(
    kind: SchemeKind,
    model: &VelocityModel,
    u_left: f64,
    u_right: f64,
    w_left: f64,
    w_right: f64,
    mesh_ratio: f64,
) -> f64 {
    match kind {
        SchemeKind::Godunov | SchemeKind::Upwind => upwind(u_left, u_right, model.velocity(w_left)),
        SchemeKind::LaxFriedrichs => {
            0.5 * (u_left * model.velocity(w_left) + u_right * model.velocity(w_right))
                - (u_right - u_left) / (2.0 * mesh_ratio)
        }
    }
}

/// Everything one explicit step needs besides the field and `dt`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: VelocityModel,
    pub scheme: SchemeSpec,
    /// Required for nonlocal schemes, ignored by local ones.
    pub kernel: Option<DiscreteKernel>,
    pub boundary: BoundaryRule,
    pub convolution: ConvolutionMethod,
}

impl Problem {
    pub fn new(
        model: VelocityModel,
        scheme: SchemeSpec,
        kernel: Option<DiscreteKernel>,
        boundary: BoundaryRule,
    ) -> Result<Self> {
        scheme.validate()?;
        if scheme.locality == Locality::Nonlocal && kernel.is_none() {
            return Err(Error::InvalidScheme(format!(
                "{} needs a convolution kernel",
                scheme.label()
            )));
        }
        Ok(Self {
            model,
            scheme,
            kernel,
            boundary,
            convolution: ConvolutionMethod::Direct,
        })
    }

    pub fn with_convolution(mut self, method: ConvolutionMethod) -> Self {
        self.convolution = method;
        self
    }

    fn active_kernel(&self) -> Option<&DiscreteKernel> {
        match self.scheme.locality {
            Locality::Nonlocal => self.kernel.as_ref(),
            Locality::Local => None,
        }
    }
}

/// Reusable scratch buffers for repeated steps.
#[derive(Debug, Default)]
pub struct Stepper {
    ext: Vec<f64>,
    conv: Vec<f64>,
    fluxes: Vec<f64>,
}

impl Stepper {
    pub fn new() -> Self {
        Self::default()
    }

    /// Advances `values` by `dt` into `out`. The instability error carries
    /// placeholder step/time fields; callers that know them fill them in.
    pub fn step_into(
        &mut self,
        problem: &Problem,
        values: &[f64],
        h: f64,
        dt: f64,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        let n = values.len();
        let kernel = problem.active_kernel();
        let (left, right) = kernel.map_or((1, 1), DiscreteKernel::ghost_extent);
        problem
            .boundary
            .extend_into(values, left, right, &mut self.ext);
        let ext = &self.ext;
        let lambda = dt / h;
        let model = &problem.model;
        let kind = problem.scheme.kind;

        // fluxes[i] sits between cells i-1 and i
        self.fluxes.resize(n + 1, 0.0);
        match kernel {
            Some(k) => {
                // convolution on cells -1..=n
                self.conv.resize(n + 2, 0.0);
                convolve_extended(ext, left, -1, k, problem.convolution, &mut self.conv);
                for (i, f) in self.fluxes.iter_mut().enumerate() {
                    *f = nonlocal_flux(
                        kind,
                        model,
                        ext[left + i - 1],
                        ext[left + i],
                        self.conv[i],
                        self.conv[i + 1],
                        lambda,
                    );
                }
            }
            None => {
                for (i, f) in self.fluxes.iter_mut().enumerate() {
                    *f = local_flux(kind, model, ext[left + i - 1], ext[left + i], lambda);
                }
            }
        }

        out.clear();
        out.extend((0..n).map(|j| values[j] - lambda * (self.fluxes[j + 1] - self.fluxes[j])));

        // diffusion acts on the convected state
        let diffusion = dt * problem.scheme.nu / (h * h);
        if diffusion > 0.0 {
            problem.boundary.extend_into(out, 1, 1, &mut self.ext);
            for (j, v) in out.iter_mut().enumerate() {
                let e = &self.ext[j..j + 3];
                *v += diffusion * (e[2] - 2.0 * e[1] + e[0]);
            }
        }

        let (m, big_m) = model.admissible_range();
        let slack = 10.0 * if big_m > m { big_m - m } else { 1.0 };
        if let Some(j) = out
            .iter()
            .position(|v| !v.is_finite() || *v < m - slack || *v > big_m + slack)
        {
            return Err(Error::Instability {
                step: 0,
                time: f64::NAN,
                detail: format!("cell {j} reached {}", out[j]),
            });
        }
        Ok(())
    }
}

/// One explicit step of size `dt`.
pub fn step_explicit(field: &CellField, problem: &Problem, dt: f64) -> Result<CellField> {
    let mut out = Vec::with_capacity(field.values().len());
    Stepper::new().step_into(problem, field.values(), field.grid().h(), dt, &mut out)?;
    CellField::new(*field.grid(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, init_cell_averages, InitialDatum};
    use crate::kernels::{kernel_weights, KernelProfile};
    use proptest::prelude::*;

    fn traffic() -> VelocityModel {
        VelocityModel::traffic()
    }

    #[test]
    fn godunov_examples() {
        let t = traffic();
        for c in [0.0, 0.3, 0.5, 1.0] {
            assert_eq!(local_flux(SchemeKind::Godunov, &t, c, c, 0.5), t.flux(c));
        }
        assert!((godunov_flux(&t, 0.2, 0.8) - 0.16).abs() < 1e-15);
        assert_eq!(godunov_flux(&t, 1.0, 0.0), 0.25);
        assert_eq!(godunov_flux(&t, 0.0, 1.0), 0.0);
    }

    #[test]
    fn godunov_matches_dense_extremization() {
        let t = traffic();
        let custom = VelocityModel::custom("traffic", |u| 1.0 - u, 1.0, (0.0, 1.0)).unwrap();
        for &(l, r) in &[
            (0.1, 0.9),
            (0.9, 0.1),
            (0.6, 0.7),
            (0.3, 0.45),
            (0.0, 1.0),
            (1.0, 0.0),
        ] {
            let (lo, hi) = if l < r { (l, r) } else { (r, l) };
            let samples = (0..=100_000).map(|i| t.flux(lo + (hi - lo) * i as f64 / 100_000.0));
            let brute = if l < r {
                samples.fold(f64::INFINITY, f64::min)
            } else {
                samples.fold(f64::NEG_INFINITY, f64::max)
            };
            assert!((godunov_flux(&t, l, r) - brute).abs() < 1e-9);
            // the sampled variant is close but approximate
            assert!((godunov_flux(&custom, l, r) - brute).abs() < 1e-3);
        }
    }

    #[test]
    fn lxf_consistency() {
        let t = traffic();
        for lambda in [0.1, 0.5, 3.0] {
            assert_eq!(
                local_flux(SchemeKind::LaxFriedrichs, &t, 0.4, 0.4, lambda),
                t.flux(0.4)
            );
            assert_eq!(
                nonlocal_flux(SchemeKind::LaxFriedrichs, &t, 0.4, 0.4, 0.4, 0.4, lambda),
                t.flux(0.4)
            );
        }
    }

    #[test]
    fn nonlocal_godunov_examples() {
        let t = traffic();
        for ur in [0.0, 0.3, 1.0] {
            assert_eq!(
                nonlocal_flux(SchemeKind::Godunov, &t, 0.5, ur, 0.0, 0.7, 0.5),
                0.5
            );
            assert_eq!(
                nonlocal_flux(SchemeKind::Godunov, &t, 0.5, ur, 1.0, 0.7, 0.5),
                0.0
            );
        }
        for c in [0.0, 0.25, 0.8, 1.0] {
            assert_eq!(
                nonlocal_flux(SchemeKind::Godunov, &t, c, c, c, c, 0.5),
                t.flux(c)
            );
        }
    }

    #[test]
    fn identity_stencil_reduces_to_local_upwind() {
        let t = traffic();
        for &(l, r) in &[(0.2, 0.9), (1.0, 0.0), (0.0, 1.0), (0.5, 0.5)] {
            let nl = nonlocal_flux(SchemeKind::Godunov, &t, l, r, l, r, 0.5);
            assert_eq!(nl, local_flux(SchemeKind::Upwind, &t, l, r, 0.5));
            assert_eq!(nl, l * (1.0 - l));
        }
    }

    #[test]
    fn scheme_labels_round_trip() {
        for kind in [
            SchemeKind::LaxFriedrichs,
            SchemeKind::Godunov,
            SchemeKind::Upwind,
        ] {
            for loc in [Locality::Local, Locality::Nonlocal] {
                let s = SchemeSpec::new(loc, kind);
                assert_eq!(s.label().parse::<SchemeSpec>().unwrap(), s);
            }
        }
        assert!("roe-local".parse::<SchemeSpec>().is_err());
        assert!("godunov".parse::<SchemeSpec>().is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(SchemeSpec::new(Locality::Local, SchemeKind::Godunov)
            .with_nu(-0.1)
            .validate()
            .is_err());
        assert!(SchemeSpec::new(Locality::Local, SchemeKind::Godunov)
            .with_cfl(0.0)
            .validate()
            .is_err());
        assert!(SchemeSpec::new(Locality::Local, SchemeKind::Godunov)
            .with_cfl(1.5)
            .validate()
            .is_err());
        let g = build_grid(0.0, 1.0, 10).unwrap();
        let _ = g;
        assert!(Problem::new(
            traffic(),
            SchemeSpec::new(Locality::Nonlocal, SchemeKind::Godunov),
            None,
            BoundaryRule::Periodic
        )
        .is_err());
    }

    fn all_problems(g: &crate::grid::Grid1D, boundary: BoundaryRule, nu: f64) -> Vec<Problem> {
        let mut out = Vec::new();
        for kind in [
            SchemeKind::LaxFriedrichs,
            SchemeKind::Godunov,
            SchemeKind::Upwind,
        ] {
            for loc in [Locality::Local, Locality::Nonlocal] {
                let spec = SchemeSpec::new(loc, kind).with_nu(nu);
                let k =
                    kernel_weights(KernelProfile::BoxBackward, 0.1, g, kind.default_alignment())
                        .unwrap();
                out.push(Problem::new(traffic(), spec, Some(k), boundary).unwrap());
            }
        }
        out
    }

    #[test]
    fn constant_state_is_fixed() {
        let g = build_grid(-1.0, 1.0, 64).unwrap();
        let u = CellField::constant(g, 0.37);
        for nu in [0.0, 0.01] {
            for bc in [BoundaryRule::Periodic, BoundaryRule::ConstantExtension] {
                for p in all_problems(&g, bc, nu) {
                    let next = step_explicit(&u, &p, 0.25 * g.h() * g.h()).unwrap();
                    for v in next.values() {
                        assert!((v - 0.37).abs() < 1e-15, "{}", p.scheme);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_velocity_freezes_data() {
        let g = build_grid(-1.0, 1.0, 64).unwrap();
        let u = init_cell_averages(&g, &InitialDatum::indicator(-0.3, 0.2, 1.0)).unwrap();
        let zero = VelocityModel::affine(0.0, 0.0, (0.0, 1.0)).unwrap();
        for kind in [SchemeKind::Godunov, SchemeKind::Upwind] {
            for loc in [Locality::Local, Locality::Nonlocal] {
                let k = kernel_weights(
                    KernelProfile::EvenHat,
                    0.2,
                    &g,
                    Alignment::InterfaceCentered,
                )
                .unwrap();
                let p = Problem::new(
                    zero.clone(),
                    SchemeSpec::new(loc, kind),
                    Some(k),
                    BoundaryRule::ConstantExtension,
                )
                .unwrap();
                assert_eq!(step_explicit(&u, &p, 0.01).unwrap(), u);
            }
        }
    }

    #[test]
    fn one_step_conserves_mass_periodic() {
        let g = build_grid(-2.0, 2.0, 800).unwrap();
        let u = init_cell_averages(&g, &InitialDatum::indicator(-1.0, 0.0, 1.0)).unwrap();
        let k = kernel_weights(
            KernelProfile::BoxBackward,
            0.3,
            &g,
            Alignment::InterfaceCentered,
        )
        .unwrap();
        let p = Problem::new(
            traffic(),
            SchemeSpec::new(Locality::Nonlocal, SchemeKind::Godunov),
            Some(k),
            BoundaryRule::Periodic,
        )
        .unwrap();
        let next = step_explicit(&u, &p, 0.5 * g.h()).unwrap();
        assert!((next.mass() - u.mass()).abs() < 1e-13);
    }

    #[test]
    fn viscous_lxf_checkerboard_decays() {
        // the classical LxF update ignores u_j, so the diffusion has to
        // act on the convected state for the alternating mode to decay
        let g = build_grid(0.0, 1.0, 64).unwrap();
        let vals = (0..64)
            .map(|j| 0.5 + if j % 2 == 0 { 0.1 } else { -0.1 })
            .collect();
        let mut u = CellField::new(g, vals).unwrap();
        let nu = 0.01;
        let dt = 0.5 * (g.h() * g.h() / (2.0 * nu)).min(g.h());
        for p in all_problems(&g, BoundaryRule::Periodic, nu) {
            for _ in 0..200 {
                u = step_explicit(&u, &p, dt).unwrap();
            }
            assert!(
                u.max() - u.min() < 0.2,
                "{}: {}",
                p.scheme,
                u.max() - u.min()
            );
        }
    }

    #[test]
    fn instability_is_reported() {
        let g = build_grid(0.0, 1.0, 16).unwrap();
        let u = init_cell_averages(&g, &InitialDatum::indicator(0.25, 0.5, 1.0)).unwrap();
        let p = Problem::new(
            traffic(),
            SchemeSpec::new(Locality::Local, SchemeKind::Godunov).with_nu(1.0),
            None,
            BoundaryRule::Periodic,
        )
        .unwrap();
        // far beyond the parabolic limit
        let mut field = u;
        let mut failed = false;
        for _ in 0..50 {
            match step_explicit(&field, &p, 1.0) {
                Ok(f) => field = f,
                Err(Error::Instability { .. }) => {
                    failed = true;
                    break;
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert!(failed);
    }

    proptest! {
        #[test]
        fn periodic_step_conserves_mass(vals in proptest::collection::vec(0.0f64..1.0, 32..96), nu in prop_oneof![Just(0.0), Just(0.01)]) {
            let g = build_grid(0.0, 1.0, vals.len()).unwrap();
            let u = CellField::new(g, vals).unwrap();
            let dt = 0.5 * g.h() * if nu > 0.0 { (g.h() / (2.0 * nu)).min(1.0) } else { 1.0 };
            for p in all_problems(&g, BoundaryRule::Periodic, nu) {
                let next = step_explicit(&u, &p, dt).unwrap();
                prop_assert!((next.mass() - u.mass()).abs() <= 1e-13);
            }
        }

        #[test]
        // eps > h: with the identity stencil the flux is local upwinding,
        // which has no maximum principle
        fn nonlocal_godunov_keeps_unit_interval(vals in proptest::collection::vec(0.0f64..=1.0, 40..120), eps in 0.03f64..0.5) {
            let g = build_grid(0.0, 1.0, vals.len()).unwrap();
            let u = CellField::new(g, vals).unwrap();
            let k = kernel_weights(KernelProfile::BoxBackward, eps, &g, Alignment::InterfaceCentered).unwrap();
            let p = Problem::new(traffic(), SchemeSpec::new(Locality::Nonlocal, SchemeKind::Godunov), Some(k), BoundaryRule::Periodic).unwrap();
            let next = step_explicit(&u, &p, 0.5 * g.h()).unwrap();
            prop_assert!(next.min() >= -1e-12 && next.max() <= 1.0 + 1e-12);
        }
    }
}
