//! Named scenarios addressable from config files and the command line.

use crate::grid::{BoundaryRule, DatumSpec};
use crate::kernels::KernelProfile;
use crate::models::VelocitySpec;
use crate::schemes::{Locality, SchemeKind, SchemeSpec, DEFAULT_CFL};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPreset {
    pub name: &'static str,
    pub summary: &'static str,
    pub velocity: VelocitySpec,
    pub kernel: KernelProfile,
    pub epsilon: f64,
    pub datum: DatumSpec,
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub boundary: BoundaryRule,
    pub t_final: f64,
    pub scheme: SchemeSpec,
}

const NONLOCAL_GODUNOV: SchemeSpec = SchemeSpec {
    locality: Locality::Nonlocal,
    kind: SchemeKind::Godunov,
    nu: 0.0,
    cfl: DEFAULT_CFL,
};

pub const PRESETS: [ScenarioPreset; 4] = [
    ScenarioPreset {
        name: "traffic-riemann",
        summary: "LWR traffic, V(u) = 1 - u, forward-looking box kernel 1_[-1,0]; \
                  jammed-to-empty step (1 | 0) at x = 0",
        velocity: VelocitySpec::TRAFFIC,
        kernel: KernelProfile::BoxBackward,
        epsilon: 0.2,
        datum: DatumSpec::Step {
            left: 1.0,
            right: 0.0,
            at: 0.0,
        },
        x_min: -2.0,
        x_max: 2.0,
        n_cells: 800,
        boundary: BoundaryRule::ConstantExtension,
        t_final: 1.0,
        scheme: NONLOCAL_GODUNOV,
    },
    ScenarioPreset {
        name: "traffic-oscillatory",
        summary: "LWR traffic with box kernel; periodic square wave 0.2/0.8 of period 0.25, \
                  for probing total-variation growth as eps decreases",
        velocity: VelocitySpec::TRAFFIC,
        kernel: KernelProfile::BoxBackward,
        epsilon: 0.2,
        datum: DatumSpec::SquareWave {
            origin: 0.0,
            period: 0.25,
            low: 0.2,
            high: 0.8,
        },
        x_min: 0.0,
        x_max: 2.0,
        n_cells: 800,
        boundary: BoundaryRule::Periodic,
        t_final: 0.2,
        scheme: NONLOCAL_GODUNOV,
    },
    ScenarioPreset {
        name: "smooth-even",
        summary: "V(u) = 1 - u with the even hat kernel; C^1 bump of amplitude 0.2, \
                  final time before shock formation (smooth-solution convergence)",
        velocity: VelocitySpec::TRAFFIC,
        kernel: KernelProfile::EvenHat,
        epsilon: 0.1,
        datum: DatumSpec::Bump {
            base: 0.0,
            amplitude: 0.2,
            center: 0.0,
            width: 1.0,
        },
        x_min: -2.0,
        x_max: 2.0,
        n_cells: 3200,
        boundary: BoundaryRule::ConstantExtension,
        t_final: 0.1,
        scheme: NONLOCAL_GODUNOV,
    },
    ScenarioPreset {
        name: "viscous-compare",
        summary: "LWR traffic step (1 | 0) with viscosity nu = 0.1, for comparing viscous \
                  nonlocal and viscous local solutions as eps decreases",
        velocity: VelocitySpec::TRAFFIC,
        kernel: KernelProfile::BoxBackward,
        epsilon: 0.2,
        datum: DatumSpec::Step {
            left: 1.0,
            right: 0.0,
            at: 0.0,
        },
        x_min: -3.0,
        x_max: 3.0,
        n_cells: 1200,
        boundary: BoundaryRule::ConstantExtension,
        t_final: 1.0,
        scheme: SchemeSpec {
            nu: 0.1,
            ..NONLOCAL_GODUNOV
        },
    },
];

pub fn preset(name: &str) -> Option<&'static ScenarioPreset> {
    PRESETS.iter().find(|p| p.name == name)
}
