//! Time-step selection and evolution to a final time.

use crate::error::{Error, Result};
use crate::grid::{CellField, Grid1D};
use crate::models::{wave_speed_bound, VelocityModel};
use crate::schemes::{Problem, SchemeSpec, Stepper};

/// Wave speeds below this are treated as zero.
pub const SPEED_FLOOR: f64 = 1e-30;

/// Largest stable step for an explicit update:
/// `cfl * min(h / s, h^2 / (2 nu))`.
///
/// For local schemes `s` bounds `|f'|` on `range`. Frozen-velocity schemes
/// (nonlocal fluxes and local upwinding) read `V` at convolved values that
/// may lie anywhere in the model's admissible interval, so for them `s` also
/// bounds `|V|` and the range is widened to the admissible interval. When
/// `s` vanishes and `nu = 0` the step falls back to `cfl * h`.
pub fn stable_dt(
    spec: &SchemeSpec,
    model: &VelocityModel,
    grid: &Grid1D,
    range: (f64, f64),
) -> f64 {
    let h = grid.h();
    let (mut lo, mut hi) = range;
    let speed = if spec.uses_frozen_velocity() {
        let (m, big_m) = model.admissible_range();
        lo = lo.min(m);
        hi = hi.max(big_m);
        wave_speed_bound(model, lo, hi)
            .unwrap_or(f64::INFINITY)
            .max(model.velocity_bound(lo, hi))
    } else {
        wave_speed_bound(model, lo, hi).unwrap_or(f64::INFINITY)
    };
    let hyperbolic = (speed > SPEED_FLOOR).then(|| h / speed);
    let parabolic = (spec.nu > 0.0).then(|| h * h / (2.0 * spec.nu));
    let bound = match (hyperbolic, parabolic) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => h,
    };
    spec.cfl * bound
}

/// Snapshots of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub times: Vec<f64>,
    pub snapshots: Vec<CellField>,
    pub step_count: usize,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl RunRecord {
    pub fn initial(&self) -> &CellField {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &CellField {
        self.snapshots
            .last()
            .expect("a run record holds at least one snapshot")
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("a run record holds at least one time")
    }

    pub fn grid(&self) -> &Grid1D {
        self.initial().grid()
    }

    /// Applies `f` to every snapshot.
    pub fn map_snapshots(&self, f: impl Fn(&CellField) -> Result<CellField>) -> Result<Self> {
        Ok(Self {
            times: self.times.clone(),
            snapshots: self.snapshots.iter().map(f).collect::<Result<_>>()?,
            step_count: self.step_count,
            dt_min: self.dt_min,
            dt_max: self.dt_max,
        })
    }
}

/// `count` equally spaced times from `0` to `t_final` inclusive.
pub fn uniform_record_times(t_final: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|i| {
            if i + 1 == count {
                t_final
            } else {
                t_final * i as f64 / (count - 1) as f64
            }
        })
        .collect()
}

/// Evolves `initial` to `t_final`, recording snapshots at `0`, at every
/// time in `record_times` and at `t_final`. The step before each record
/// time is shortened to land on it exactly.
pub fn evolve(
    initial: &CellField,
    problem: &Problem,
    t_final: f64,
    record_times: &[f64],
) -> Result<RunRecord> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::InvalidPlan(format!(
            "final time must be positive, got {t_final}"
        )));
    }
    if let Some(t) = record_times
        .iter()
        .find(|t| !(**t >= 0.0 && **t <= t_final))
    {
        return Err(Error::InvalidPlan(format!(
            "record time {t} outside [0, {t_final}]"
        )));
    }
    problem.scheme.validate()?;
    let mut targets: Vec<f64> = record_times.iter().copied().filter(|t| *t > 0.0).collect();
    targets.push(t_final);
    targets.sort_by(f64::total_cmp);
    targets.dedup();

    let grid = *initial.grid();
    let h = grid.h();
    let mut times = vec![0.0];
    let mut snapshots = vec![initial.clone()];
    let mut current = initial.values().to_vec();
    let mut next = Vec::with_capacity(current.len());
    let mut stepper = Stepper::new();
    let mut t = 0.0;
    let mut steps = 0;
    let (mut dt_min, mut dt_max) = (f64::INFINITY, 0.0f64);

    for &target in &targets {
        while t < target {
            let range = current
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            let mut dt = stable_dt(&problem.scheme, &problem.model, &grid, range);
            let landing = t + dt >= target;
            if landing {
                dt = target - t;
            }
            stepper
                .step_into(problem, &current, h, dt, &mut next)
                .map_err(|e| match e {
                    Error::Instability { detail, .. } => Error::Instability {
                        step: steps + 1,
                        time: t + dt,
                        detail,
                    },
                    other => other,
                })?;
            std::mem::swap(&mut current, &mut next);
            steps += 1;
            dt_min = dt_min.min(dt);
            dt_max = dt_max.max(dt);
            t = if landing { target } else { t + dt };
        }
        times.push(target);
        snapshots.push(CellField::new(grid, current.clone())?);
    }

    Ok(RunRecord {
        times,
        snapshots,
        step_count: steps,
        dt_min,
        dt_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, init_cell_averages, BoundaryRule, InitialDatum};
    use crate::kernels::{kernel_weights, Alignment, KernelProfile};
    use crate::schemes::{Locality, SchemeKind};

    #[test]
    fn stable_dt_examples() {
        let traffic = VelocityModel::traffic();
        let g = build_grid(0.0, 1.0, 1000).unwrap();
        for loc in [Locality::Local, Locality::Nonlocal] {
            let spec = SchemeSpec::new(loc, SchemeKind::Godunov);
            assert!((stable_dt(&spec, &traffic, &g, (0.0, 1.0)) - 0.0005).abs() < 1e-15);
        }

        let g = build_grid(0.0, 1.0, 100).unwrap();
        let spec = SchemeSpec::new(Locality::Local, SchemeKind::Godunov).with_nu(0.1);
        assert!((stable_dt(&spec, &traffic, &g, (0.0, 1.0)) - 0.00025).abs() < 1e-15);

        let zero = VelocityModel::affine(0.0, 0.0, (0.0, 1.0)).unwrap();
        for loc in [Locality::Local, Locality::Nonlocal] {
            let spec = SchemeSpec::new(loc, SchemeKind::Godunov);
            assert_eq!(stable_dt(&spec, &zero, &g, (0.0, 1.0)), 0.5 * g.h());
        }
    }

    #[test]
    fn record_times_include_endpoints() {
        let t = uniform_record_times(2.0, 65);
        assert_eq!(t.len(), 65);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[64], 2.0);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    fn local_godunov() -> Problem {
        Problem::new(
            VelocityModel::traffic(),
            SchemeSpec::new(Locality::Local, SchemeKind::Godunov),
            None,
            BoundaryRule::ConstantExtension,
        )
        .unwrap()
    }

    #[test]
    fn constant_state_stays_constant() {
        let g = build_grid(-1.0, 1.0, 50).unwrap();
        let u = CellField::constant(g, 0.6);
        let rec = evolve(&u, &local_godunov(), 1.0, &uniform_record_times(1.0, 5)).unwrap();
        assert_eq!(rec.times.len(), 5);
        for s in &rec.snapshots {
            assert!(s.values().iter().all(|v| (v - 0.6).abs() < 1e-15));
        }
    }

    #[test]
    fn stationary_shock() {
        // 0 | 1 has Rankine-Hugoniot speed 1 - 0 - 1 = 0
        let g = build_grid(-2.0, 2.0, 400).unwrap();
        let u = init_cell_averages(&g, &InitialDatum::step(0.0, 1.0, 0.0)).unwrap();
        let rec = evolve(&u, &local_godunov(), 0.5, &[]).unwrap();
        let l1: f64 = rec
            .last()
            .values()
            .iter()
            .zip(u.values())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * g.h();
        assert!(l1 <= 2.0 * g.h());
    }

    #[test]
    fn final_time_is_exact() {
        let g = build_grid(-1.0, 1.0, 30).unwrap();
        let u = init_cell_averages(&g, &InitialDatum::indicator(-0.5, 0.0, 0.8)).unwrap();
        // 0.0123 is not a multiple of the CFL step h/2 = 1/30
        let rec = evolve(&u, &local_godunov(), 0.0123, &[0.005]).unwrap();
        assert_eq!(rec.times, vec![0.0, 0.005, 0.0123]);
        assert_eq!(rec.final_time(), 0.0123);
        assert!(rec.dt_min < rec.dt_max);
    }

    #[test]
    fn rejects_bad_times() {
        let g = build_grid(-1.0, 1.0, 30).unwrap();
        let u = CellField::constant(g, 0.1);
        assert!(evolve(&u, &local_godunov(), 0.0, &[]).is_err());
        assert!(evolve(&u, &local_godunov(), 1.0, &[1.5]).is_err());
    }

    #[test]
    fn runs_are_deterministic_and_conservative() {
        let g = build_grid(-2.0, 2.0, 400).unwrap();
        let u = init_cell_averages(
            &g,
            &InitialDatum::SquareWave {
                origin: -2.0,
                period: 0.25,
                low: 0.1,
                high: 0.9,
                description: String::new(),
            },
        )
        .unwrap();
        let k = kernel_weights(
            KernelProfile::BoxBackward,
            0.2,
            &g,
            Alignment::InterfaceCentered,
        )
        .unwrap();
        let p = Problem::new(
            VelocityModel::traffic(),
            SchemeSpec::new(Locality::Nonlocal, SchemeKind::Godunov),
            Some(k),
            BoundaryRule::Periodic,
        )
        .unwrap();
        let times = uniform_record_times(0.5, 11);
        let a = evolve(&u, &p, 0.5, &times).unwrap();
        let b = evolve(&u, &p, 0.5, &times).unwrap();
        assert_eq!(a, b);
        let max = u.max();
        for s in &a.snapshots {
            assert!((s.mass() - u.mass()).abs() <= 1e-11 * a.step_count as f64 * max);
            assert!(s.min() >= -1e-12 && s.max() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn instability_reports_step() {
        // data far outside the admissible interval trips the range guard
        let g = build_grid(0.0, 1.0, 16).unwrap();
        let u = init_cell_averages(&g, &InitialDatum::indicator(0.25, 0.5, 50.0)).unwrap();
        match evolve(&u, &local_godunov(), 0.5, &[]) {
            Err(Error::Instability { step, time, .. }) => {
                assert_eq!(step, 1);
                assert!(time > 0.0);
            }
            other => panic!("expected instability, got {other:?}"),
        }
    }
}
