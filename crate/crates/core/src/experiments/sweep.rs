use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::diagnostics::{
    half_line_mass, l1_distance, l2_spacetime_distance, sup_distance, total_variation_with,
};
use crate::error::{Error, Result};
use crate::experiments::riemann::exact_riemann_cell_averages;
use crate::grid::{init_cell_averages, BoundaryRule, CellField, DatumSpec, Grid1D};
use crate::kernels::{kernel_weights, Alignment, ConvolutionMethod, KernelProfile};
use crate::models::{ScenarioPreset, VelocityModel};
use crate::schemes::{Locality, Problem, SchemeKind, SchemeSpec};
use crate::timeloop::{evolve, uniform_record_times, RunRecord};

/// Coupling constant of the coupled mesh rule `eps = kappa h^2`.
pub const DEFAULT_KAPPA: f64 = 1000.0;
/// Refinement factor of the fine-mesh entropy reference.
pub const DEFAULT_REFINEMENT: usize = 8;
/// Record times used for space-time norms.
pub const DEFAULT_RECORDS: usize = 65;

/// Everything about a problem except the discretization parameters.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: VelocityModel,
    pub kernel: KernelProfile,
    pub datum: DatumSpec,
    pub x_min: f64,
    pub x_max: f64,
    pub boundary: BoundaryRule,
    pub t_final: f64,
}

impl Scenario {
    pub fn from_preset(p: &ScenarioPreset) -> Result<Self> {
        Ok(Self {
            model: p.velocity.build()?,
            kernel: p.kernel,
            datum: p.datum.clone(),
            x_min: p.x_min,
            x_max: p.x_max,
            boundary: p.boundary,
            t_final: p.t_final,
        })
    }

    pub fn grid(&self, n_cells: usize) -> Result<Grid1D> {
        Grid1D::new(self.x_min, self.x_max, n_cells)
    }

    pub fn initial_field(&self, grid: &Grid1D) -> Result<CellField> {
        let datum = self.datum.to_datum()?;
        let (lo, hi) = self.model.admissible_range();
        datum.check_range(lo, hi, grid)?;
        init_cell_averages(grid, &datum)
    }
}

/// Warns when waves, the kernel or diffusion can carry information from
/// the non-constant part of the initial field to a constant-extension
/// boundary before `t_final`. Returns the warning text, if any.
pub fn check_domain(
    scenario: &Scenario,
    initial: &CellField,
    epsilon: Option<f64>,
    nu: f64,
) -> Option<String> {
    if scenario.boundary == BoundaryRule::Periodic {
        return None;
    }
    let v = initial.values();
    let g = initial.grid();
    let first = v.windows(2).position(|w| w[0] != w[1])?;
    let last = v.windows(2).rposition(|w| w[0] != w[1])?;
    let (active_lo, active_hi) = (g.edge(first + 1), g.edge(last + 1));
    let (lo, hi) = scenario.model.admissible_range();
    let speed = crate::models::wave_speed_bound(&scenario.model, lo, hi)
        .unwrap_or(0.0)
        .max(scenario.model.velocity_bound(lo, hi));
    let reach = speed * scenario.t_final
        + epsilon.unwrap_or(0.0)
        + 4.0 * (2.0 * nu * scenario.t_final).sqrt();
    if active_lo - reach < g.x_min() || active_hi + reach > g.x_max() {
        let msg = format!(
            "domain [{}, {}] may be too small: activity on [{active_lo}, {active_hi}] can travel {reach} by t = {}",
            g.x_min(),
            g.x_max(),
            scenario.t_final
        );
        log::warn!("{msg}");
        return Some(msg);
    }
    None
}

/// Maps a sweep point to a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshRule {
    FixedH {
        h: f64,
    },
    /// `eps = kappa h^2`.
    Coupled {
        kappa: f64,
    },
    /// `h = eps / cells_per_epsilon`.
    Proportional {
        cells_per_epsilon: f64,
    },
}

impl MeshRule {
    pub fn n_cells(&self, length: f64, epsilon: Option<f64>) -> Result<usize> {
        let h = match (*self, epsilon) {
            (MeshRule::FixedH { h }, _) => h,
            (MeshRule::Coupled { kappa }, Some(eps)) => (eps / kappa).sqrt(),
            (MeshRule::Proportional { cells_per_epsilon }, Some(eps)) => eps / cells_per_epsilon,
            (_, None) => {
                return Err(Error::InvalidPlan(
                    "eps-dependent mesh rule used without an eps".into(),
                ))
            }
        };
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidPlan(format!("mesh rule produced h = {h}")));
        }
        Ok((length / h).round().max(1.0) as usize)
    }
}

/// The solution each row is compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// Exact entropy solution; the datum must be a single jump.
    ExactRiemann,
    /// Local Godunov, `nu = 0`, on a mesh `refinement` times finer,
    /// averaged back onto the row's mesh.
    FineMesh { refinement: usize },
    /// The local scheme of the row's kind at the same `h` and `nu`.
    ViscousLocal,
}

impl Reference {
    /// Exact when the datum allows it, fine mesh otherwise.
    pub fn entropy_for(datum: &DatumSpec) -> Self {
        if datum.riemann_states().is_some() {
            Reference::ExactRiemann
        } else {
            Reference::FineMesh {
                refinement: DEFAULT_REFINEMENT,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    /// Sweep eps for every scheme; compare with `reference`.
    Epsilon { reference: Reference },
    /// Sweep eps at fixed viscosity; compare with the viscous local run.
    ViscousEps { nu: f64 },
    /// Sweep nu for local schemes; compare with the entropy solution.
    LocalNu { reference: Reference },
    /// Sweep nu at fixed eps; compare with the inviscid nonlocal run.
    NonlocalNu { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Epsilon,
    Nu,
}

impl Protocol {
    pub fn variable(&self) -> SweepVariable {
        match self {
            Protocol::Epsilon { .. } | Protocol::ViscousEps { .. } => SweepVariable::Epsilon,
            Protocol::LocalNu { .. } | Protocol::NonlocalNu { .. } => SweepVariable::Nu,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Epsilon { .. } => "epsilon",
            Protocol::ViscousEps { .. } => "viscous-eps",
            Protocol::LocalNu { .. } => "local-nu",
            Protocol::NonlocalNu { .. } => "nonlocal-nu",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub scenario: Scenario,
    pub protocol: Protocol,
    /// Strictly decreasing.
    pub values: Vec<f64>,
    pub mesh_rule: MeshRule,
    pub schemes: Vec<SchemeSpec>,
    /// Kernel alignment; `None` picks each scheme's default.
    pub alignment: Option<Alignment>,
    pub convolution: ConvolutionMethod,
    pub records: usize,
    pub half_line_x0: f64,
}

impl SweepPlan {
    pub fn new(
        scenario: Scenario,
        protocol: Protocol,
        values: Vec<f64>,
        mesh_rule: MeshRule,
        schemes: Vec<SchemeSpec>,
    ) -> Self {
        Self {
            scenario,
            protocol,
            values,
            mesh_rule,
            schemes,
            alignment: None,
            convolution: ConvolutionMethod::Direct,
            records: DEFAULT_RECORDS,
            half_line_x0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidPlan("no sweep values".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::InvalidPlan(
                "sweep values must be strictly decreasing".into(),
            ));
        }
        let min_allowed = match self.protocol.variable() {
            SweepVariable::Epsilon => f64::MIN_POSITIVE,
            SweepVariable::Nu => 0.0,
        };
        if self
            .values
            .iter()
            .any(|v| !v.is_finite() || *v < min_allowed)
        {
            return Err(Error::InvalidPlan(format!(
                "{} values must be finite and {}",
                self.protocol.name(),
                if min_allowed > 0.0 {
                    "positive"
                } else {
                    "non-negative"
                }
            )));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidPlan("no schemes to compare".into()));
        }
        for s in &self.schemes {
            s.validate()?;
        }
        if !(self.scenario.t_final > 0.0) {
            return Err(Error::InvalidPlan("final time must be positive".into()));
        }
        match self.protocol {
            Protocol::Epsilon { reference } | Protocol::LocalNu { reference } => {
                if reference == Reference::ExactRiemann
                    && self.scenario.datum.riemann_states().is_none()
                {
                    return Err(Error::InvalidPlan(
                        "the exact Riemann reference needs a single-jump datum".into(),
                    ));
                }
                if let Reference::FineMesh { refinement } = reference {
                    if refinement < 2 {
                        return Err(Error::InvalidPlan("refinement must be at least 2".into()));
                    }
                }
            }
            Protocol::ViscousEps { nu } => {
                if !(nu > 0.0 && nu.is_finite()) {
                    return Err(Error::InvalidPlan(format!(
                        "viscous-eps mode needs nu > 0, got {nu}"
                    )));
                }
            }
            Protocol::NonlocalNu { epsilon } => {
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(Error::InvalidPlan(format!(
                        "nonlocal-nu mode needs eps > 0, got {epsilon}"
                    )));
                }
            }
        }
        match self.protocol {
            Protocol::LocalNu { .. } => {
                if self
                    .schemes
                    .iter()
                    .any(|s| s.locality == Locality::Nonlocal)
                {
                    return Err(Error::InvalidPlan(
                        "local-nu mode compares local schemes only".into(),
                    ));
                }
                if !matches!(self.mesh_rule, MeshRule::FixedH { .. }) {
                    return Err(Error::InvalidPlan(
                        "local-nu mode needs a fixed-h mesh".into(),
                    ));
                }
            }
            Protocol::ViscousEps { .. } | Protocol::NonlocalNu { .. } => {
                if self.schemes.iter().any(|s| s.locality == Locality::Local) {
                    return Err(Error::InvalidPlan(format!(
                        "{} mode compares nonlocal schemes only",
                        self.protocol.name()
                    )));
                }
            }
            Protocol::Epsilon { .. } => {}
        }
        if self.records < 2 {
            return Err(Error::InvalidPlan("need at least two record times".into()));
        }
        Ok(())
    }

    fn record_times(&self) -> Vec<f64> {
        uniform_record_times(self.scenario.t_final, self.records)
    }

    /// `(epsilon, nu)` of the row for sweep value `v` and scheme `s`.
    fn point(&self, v: f64, s: &SchemeSpec) -> (Option<f64>, f64) {
        match self.protocol {
            Protocol::Epsilon { .. } => (Some(v), s.nu),
            Protocol::ViscousEps { nu } => (Some(v), nu),
            Protocol::LocalNu { .. } => (None, v),
            Protocol::NonlocalNu { epsilon } => (Some(epsilon), v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowMetrics {
    pub l1_error: f64,
    pub l2_error: f64,
    pub sup_error: f64,
    pub tv: f64,
    pub half_line_mass: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: Option<f64>,
    pub nu: f64,
    pub h: f64,
    pub n_cells: usize,
    pub scheme: String,
    /// Diagnostics, or the reason the row failed.
    pub outcome: std::result::Result<RowMetrics, String>,
    pub runtime_s: f64,
}

impl SweepRow {
    pub fn metrics(&self) -> Option<&RowMetrics> {
        self.outcome.as_ref().ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Sorts by descending sweep value, then by scheme label.
    pub fn sort(&mut self) {
        let variable = self.variable;
        let key = |r: &SweepRow| match variable {
            SweepVariable::Epsilon => r.epsilon.unwrap_or(f64::NAN),
            SweepVariable::Nu => r.nu,
        };
        self.rows.sort_by(|a, b| {
            key(b)
                .total_cmp(&key(a))
                .then_with(|| a.scheme.cmp(&b.scheme))
        });
    }

    /// Rows of one scheme, in sweep order.
    pub fn rows_for<'a>(&'a self, scheme: &'a str) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }

    /// The same result with all runtimes zeroed, for comparisons.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        out.rows.iter_mut().for_each(|r| r.runtime_s = 0.0);
        out
    }
}

/// Builds the problem for one scheme on one mesh and evolves it.
#[allow(clippy::too_many_arguments)]
pub fn run_single(
    scenario: &Scenario,
    scheme: SchemeSpec,
    epsilon: Option<f64>,
    grid: &Grid1D,
    alignment: Option<Alignment>,
    convolution: ConvolutionMethod,
    record_times: &[f64],
) -> Result<RunRecord> {
    let initial = scenario.initial_field(grid)?;
    let kernel = match scheme.locality {
        Locality::Nonlocal => {
            let eps = epsilon
                .ok_or_else(|| Error::InvalidPlan(format!("{} needs an eps", scheme.label())))?;
            let align = alignment.unwrap_or(scheme.kind.default_alignment());
            Some(kernel_weights(scenario.kernel, eps, grid, align)?)
        }
        Locality::Local => None,
    };
    let problem = Problem::new(scenario.model.clone(), scheme, kernel, scenario.boundary)?
        .with_convolution(convolution);
    evolve(&initial, &problem, scenario.t_final, record_times)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RefKey {
    Exact {
        n_cells: usize,
    },
    Fine {
        n_cells: usize,
        refinement: usize,
    },
    /// A run of `scheme` (with its own `nu`) at `eps`.
    Run {
        n_cells: usize,
        scheme: SchemeSpec,
        epsilon: Option<u64>,
    },
}

impl RefKey {
    fn n_cells(&self) -> usize {
        match *self {
            RefKey::Exact { n_cells }
            | RefKey::Fine { n_cells, .. }
            | RefKey::Run { n_cells, .. } => n_cells,
        }
    }
}

struct Job {
    epsilon: Option<f64>,
    scheme: SchemeSpec,
    grid: Grid1D,
    reference: RefKey,
}

fn compute_reference(plan: &SweepPlan, key: RefKey, times: &[f64]) -> Result<RunRecord> {
    let scenario = &plan.scenario;
    let grid = scenario.grid(key.n_cells())?;
    match key {
        RefKey::Exact { .. } => {
            let (l, r, x0) = scenario
                .datum
                .riemann_states()
                .ok_or_else(|| Error::InvalidPlan("exact reference needs a single jump".into()))?;
            let snapshots = times
                .iter()
                .map(|&t| exact_riemann_cell_averages(&grid, l, r, x0, t))
                .collect::<Result<Vec<_>>>()?;
            Ok(RunRecord {
                times: times.to_vec(),
                snapshots,
                step_count: 0,
                dt_min: 0.0,
                dt_max: 0.0,
            })
        }
        RefKey::Fine { refinement, .. } => {
            let fine = grid.refined(refinement)?;
            let run = run_single(
                scenario,
                SchemeSpec::new(Locality::Local, SchemeKind::Godunov),
                None,
                &fine,
                None,
                plan.convolution,
                times,
            )?;
            run.map_snapshots(|s| s.coarsen(refinement))
        }
        RefKey::Run {
            scheme, epsilon, ..
        } => run_single(
            scenario,
            scheme,
            epsilon.map(f64::from_bits),
            &grid,
            plan.alignment,
            plan.convolution,
            times,
        ),
    }
}

fn row_metrics(plan: &SweepPlan, run: &RunRecord, reference: &RunRecord) -> Result<RowMetrics> {
    let last = run.last();
    let target = reference.last();
    Ok(RowMetrics {
        l1_error: l1_distance(last, target)?,
        l2_error: l2_spacetime_distance(run, reference)?,
        sup_error: sup_distance(last, target)?,
        tv: total_variation_with(last, plan.scenario.boundary),
        half_line_mass: half_line_mass(last, plan.half_line_x0).mass,
        min: last.min(),
        max: last.max(),
    })
}

fn execute(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let times = plan.record_times();
    let length = plan.scenario.x_max - plan.scenario.x_min;

    let mut jobs = Vec::new();
    for &v in &plan.values {
        for scheme_template in &plan.schemes {
            let (epsilon, nu) = plan.point(v, scheme_template);
            let scheme = scheme_template.with_nu(nu);
            let n_cells = plan.mesh_rule.n_cells(length, epsilon)?;
            let grid = plan.scenario.grid(n_cells)?;
            let entropy = |reference: Reference| match reference {
                Reference::ExactRiemann => RefKey::Exact { n_cells },
                Reference::FineMesh { refinement } => RefKey::Fine {
                    n_cells,
                    refinement,
                },
                Reference::ViscousLocal => RefKey::Run {
                    n_cells,
                    scheme: scheme.local_counterpart(),
                    epsilon: None,
                },
            };
            let reference = match plan.protocol {
                Protocol::Epsilon { reference } | Protocol::LocalNu { reference } => {
                    entropy(reference)
                }
                Protocol::ViscousEps { .. } => entropy(Reference::ViscousLocal),
                Protocol::NonlocalNu { epsilon } => RefKey::Run {
                    n_cells,
                    scheme: scheme.with_nu(0.0),
                    epsilon: Some(epsilon.to_bits()),
                },
            };
            jobs.push(Job {
                epsilon,
                scheme,
                grid,
                reference,
            });
        }
    }

    let mut keys: Vec<RefKey> = Vec::new();
    for job in &jobs {
        if !keys.contains(&job.reference) {
            keys.push(job.reference);
        }
    }
    let references: Vec<std::result::Result<RunRecord, String>> = keys
        .par_iter()
        .map(|&k| compute_reference(plan, k, &times).map_err(|e| format!("reference failed: {e}")))
        .collect();
    let lookup: HashMap<usize, usize> = jobs
        .iter()
        .enumerate()
        .map(|(i, j)| {
            (
                i,
                keys.iter()
                    .position(|k| *k == j.reference)
                    .expect("collected above"),
            )
        })
        .collect();

    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, job)| {
            let started = Instant::now();
            if let Ok(initial) = plan.scenario.initial_field(&job.grid) {
                check_domain(&plan.scenario, &initial, job.epsilon, job.scheme.nu);
            }
            let run = run_single(
                &plan.scenario,
                job.scheme,
                job.epsilon,
                &job.grid,
                plan.alignment,
                plan.convolution,
                &times,
            );
            let runtime_s = started.elapsed().as_secs_f64();
            let outcome = match (&run, &references[lookup[&i]]) {
                (Err(e), _) => Err(e.to_string()),
                (Ok(_), Err(e)) => Err(e.clone()),
                (Ok(run), Ok(reference)) => {
                    row_metrics(plan, run, reference).map_err(|e| e.to_string())
                }
            };
            SweepRow {
                epsilon: job.epsilon,
                nu: job.scheme.nu,
                h: job.grid.h(),
                n_cells: job.grid.n_cells(),
                scheme: job.scheme.label(),
                outcome,
                runtime_s,
            }
        })
        .collect();

    let mut result = SweepResult {
        variable: plan.protocol.variable(),
        rows,
    };
    result.sort();
    Ok(result)
}

/// Runs an eps-sweep; every scheme is evolved to the scenario's final time
/// for every eps and compared with the plan's reference.
pub fn run_epsilon_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    if !matches!(plan.protocol, Protocol::Epsilon { .. }) {
        return Err(Error::InvalidPlan(format!(
            "run_epsilon_sweep cannot run the {} protocol",
            plan.protocol.name()
        )));
    }
    execute(plan)
}

/// Runs one of the viscosity protocols (viscous-eps, local-nu, nonlocal-nu).
pub fn run_nu_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    if matches!(plan.protocol, Protocol::Epsilon { .. }) {
        return Err(Error::InvalidPlan(
            "run_nu_sweep needs a viscosity protocol".into(),
        ));
    }
    execute(plan)
}

pub fn run_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    execute(plan)
}
