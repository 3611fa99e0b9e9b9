use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nonlocal_core::experiments::{
    check_domain, run_single, run_sweep, MeshRule, Protocol, Reference,
};
use nonlocal_core::io::{write_results, write_snapshots, SweepConfig};
use nonlocal_core::models::PRESETS;
use nonlocal_core::{uniform_record_times, ConfigError, Error, RunConfig};

#[derive(Parser)]
#[command(
    name = "nonlocal-lab",
    version,
    about = "Finite-volume lab for nonlocal conservation laws and their local limits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration and write `t,x,u` snapshots.
    Run(RunArgs),
    /// Run the configured parameter sweep and write the results table.
    Sweep(SweepArgs),
    /// List the built-in scenario presets.
    Presets,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from a named preset (ignored when --config is given).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t_final: Option<f64>,
    /// Number of record times, including 0 and the final time.
    #[arg(long)]
    records: Option<usize>,
    /// Output CSV; defaults to the config's `output`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Sweep values (comma separated); creates an eps sweep when the
    /// config has no [sweep] block.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Record wall-clock runtimes in the `runtime_s` column.
    #[arg(long)]
    timing: bool,
}

enum Failure {
    Config(String),
    Instability(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Instability { .. } => Failure::Instability(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Config(_) => 1,
        Failure::Instability(_) => 2,
    }
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let mut config = match (&common.config, &common.preset) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => RunConfig::from_preset(name)?,
        (None, None) => return Err(Failure::Config("give --config or --preset".into())),
    };
    if let Some(eps) = common.epsilon {
        config.epsilon = Some(eps);
        if let Some(SweepConfig {
            protocol: Protocol::NonlocalNu { epsilon },
            ..
        }) = config.sweep.as_mut()
        {
            *epsilon = eps;
        }
    }
    if let Some(nu) = common.nu {
        config.scheme.nu = nu;
        if let Some(s) = config.sweep.as_mut() {
            if let Protocol::ViscousEps { nu: fixed } = &mut s.protocol {
                *fixed = nu;
            }
        }
    }
    if let Some(t) = common.t_final {
        config.t_final = t;
    }
    if let Some(r) = common.records {
        config.records = r;
    }
    if let Some(out) = &common.out {
        config.output = Some(out.clone());
    }
    // overrides go through the same validation as the file
    Ok(RunConfig::parse(&config.to_toml())?)
}

fn write_output(
    path: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> nonlocal_core::Result<()>,
) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p)
                .map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            let mut w = std::io::BufWriter::new(file);
            write(&mut w).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).map_err(|e| Failure::Config(e.to_string()))
        }
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let config = load(&args.common)?;
    let scenario = config.scenario();
    let grid = config.grid();
    check_domain(
        &scenario,
        &scenario.initial_field(&grid)?,
        config.epsilon,
        config.scheme.nu,
    );
    let times = uniform_record_times(config.t_final, config.records);
    let record = run_single(
        &scenario,
        config.scheme,
        config.epsilon,
        &grid,
        config.alignment,
        config.convolution,
        &times,
    )?;
    log::info!(
        "{}: {} cells, {} steps, dt in [{}, {}], final mass {}",
        config.scheme.label(),
        grid.n_cells(),
        record.step_count,
        record.dt_min,
        record.dt_max,
        record.last().mass()
    );
    write_output(config.output.as_deref(), |w| write_snapshots(&record, w))
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut config = load(&args.common)?;
    if let Some(values) = args.values {
        match config.sweep.as_mut() {
            Some(s) => s.values = values,
            None => {
                config.sweep = Some(SweepConfig {
                    protocol: Protocol::Epsilon {
                        reference: Reference::entropy_for(&config.datum),
                    },
                    values,
                    mesh_rule: MeshRule::FixedH {
                        h: config.grid().h(),
                    },
                    schemes: vec![config.scheme],
                    half_line_x0: 0.0,
                    timing: false,
                })
            }
        }
        config = RunConfig::parse(&config.to_toml())?;
    }
    let timing = args.timing || config.sweep.as_ref().is_some_and(|s| s.timing);
    let plan = config.sweep_plan()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    let result = pool.install(|| run_sweep(&plan))?;
    let failed = result.rows.iter().filter(|r| r.outcome.is_err()).count();
    log::info!(
        "{} sweep: {} rows, {failed} failed",
        plan.protocol.name(),
        result.rows.len()
    );
    write_output(config.output.as_deref(), |w| {
        write_results(&result, w, timing)
    })
}

fn presets() {
    for p in PRESETS {
        println!("{:<22} {}", p.name, p.summary);
        println!(
            "{:<22} domain [{}, {}], {} cells, {} boundary, kernel {} eps = {}, T = {}, scheme {}",
            "",
            p.x_min,
            p.x_max,
            p.n_cells,
            match p.boundary {
                nonlocal_core::BoundaryRule::Periodic => "periodic",
                nonlocal_core::BoundaryRule::ConstantExtension => "constant",
            },
            p.kernel,
            p.epsilon,
            p.t_final,
            p.scheme.label()
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Presets => {
            presets();
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(msg) | Failure::Instability(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&f))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instability_maps_to_exit_two() {
        let e = Error::Instability {
            step: 3,
            time: 0.1,
            detail: "cell 2 reached NaN".into(),
        };
        assert_eq!(exit_code(&Failure::from(e)), 2);
        assert_eq!(exit_code(&Failure::from(Error::InvalidPlan("x".into()))), 1);
    }
}
