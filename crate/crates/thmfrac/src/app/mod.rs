//! Application layer shared by the CLI and the acceptance tests: the
//! bundled four-phase demonstration scenario and the orchestration that
//! turns a parsed scenario into output files.

use std::path::{Path, PathBuf};

use crate::io::{
    parse_scenario, write_vtk_snapshot, IoError, Scenario, ScenarioError, TimeseriesWriter,
};
use crate::solver::{run_simulation, SolverError, StepRecord};

/// The bundled demonstration document: a unit square with seven fractures
/// and four phases. Phase I compresses and shears the block through a top
/// boundary displacement, phase II applies a left-to-right pressure
/// gradient, phase III cools the left boundary by 100 °C and phase IV heats
/// it to +100 °C, exploring thermal contraction and expansion of the
/// fracture network. The fracture coordinates are a design artifact chosen
/// to be lattice-representable at any resolution divisible by eight.
pub const DEMO_SCENARIO: &str = r#"
start = -10000.0

[domain]
min = [0.0, 0.0]
max = [1.0, 1.0]
resolution = [32, 32]

[[fracture]]
a = [0.125, 0.625]
b = [0.5, 0.625]

[[fracture]]
a = [0.25, 0.25]
b = [0.625, 0.25]

[[fracture]]
a = [0.625, 0.375]
b = [0.875, 0.625]

[[fracture]]
a = [0.375, 0.375]
b = [0.625, 0.625]

[[fracture]]
a = [0.75, 0.125]
b = [0.75, 0.375]

[[fracture]]
a = [0.625, 0.75]
b = [0.875, 0.75]

[[fracture]]
a = [0.25, 0.5]
b = [0.25, 0.75]

[material]
shear_modulus = 16e9
lame_lambda = 16e9
biot_alpha = 0.8
porosity = 0.01
fluid_compressibility = 4e-10
permeability = 1e-14
viscosity = 1e-3
friction = 0.5
t_ref = 273.15

[[phase]]
name = "loading"
end = 0.0
dt = 2500.0
[phase.bottom.mechanics]
type = "displacement"
value = [0.0, 0.0]
[phase.top.mechanics]
type = "displacement"
value = [0.002, -0.005]

[[phase]]
name = "injection"
end = 0.02
dt = 0.005
[phase.bottom.mechanics]
type = "displacement"
value = [0.0, 0.0]
[phase.top.mechanics]
type = "displacement"
value = [0.002, -0.005]
[phase.left.flow]
type = "dirichlet"
value = 4e6
[phase.right.flow]
type = "dirichlet"
value = 0.0

[[phase]]
name = "cooling"
end = 2.5
dt = 0.31
[phase.bottom.mechanics]
type = "displacement"
value = [0.0, 0.0]
[phase.top.mechanics]
type = "displacement"
value = [0.002, -0.005]
[phase.left.flow]
type = "dirichlet"
value = 4e6
[phase.right.flow]
type = "dirichlet"
value = 0.0
[phase.left.heat]
type = "dirichlet"
value = 173.15

[[phase]]
name = "heating"
end = 5.0
dt = 0.3125
[phase.bottom.mechanics]
type = "displacement"
value = [0.0, 0.0]
[phase.top.mechanics]
type = "displacement"
value = [0.002, -0.005]
[phase.left.flow]
type = "dirichlet"
value = 4e6
[phase.right.flow]
type = "dirichlet"
value = 0.0
[phase.left.heat]
type = "dirichlet"
value = 373.15

[output]
directory = "demo_out"
name = "demo"
"#;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl AppError {
    /// Process exit code: 2 for anything wrong with the input or the
    /// environment, 3 when the nonlinear solver gives up.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Solver(
                SolverError::NonConvergence { .. } | SolverError::StepFailed { .. },
            ) => 3,
            _ => 2,
        }
    }
}

/// CLI overrides applied on top of a scenario document.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Square resolution override (N×N).
    pub resolution: Option<usize>,
    pub out_dir: Option<PathBuf>,
    /// Multiplies every phase's nominal dt.
    pub dt_scale: Option<f64>,
    pub max_newton: Option<usize>,
    /// Print one diagnostics line per accepted step.
    pub verbose: bool,
}

#[derive(Debug)]
pub struct RunSummary {
    pub records: Vec<StepRecord>,
    pub out_dir: PathBuf,
    pub csv_path: PathBuf,
}

fn apply_options(sc: &mut Scenario, opts: &RunOptions) {
    if let Some(r) = opts.resolution {
        sc.domain.resolution = [r, r];
    }
    if let Some(dir) = &opts.out_dir {
        sc.output.directory = Some(dir.display().to_string());
    }
    if let Some(s) = opts.dt_scale {
        for ph in &mut sc.phases {
            ph.dt *= s;
        }
    }
    if let Some(n) = opts.max_newton {
        sc.solver.max_newton = Some(n);
    }
}

/// Executes a parsed scenario: creates the output directory, echoes the
/// normalized document, writes VTK snapshots at the configured cadence and
/// the fracture time series, and streams per-step diagnostics when asked.
pub fn execute(mut sc: Scenario, base_dir: &Path, opts: &RunOptions) -> Result<RunSummary, AppError> {
    apply_options(&mut sc, opts);
    let grid = sc.build_grid(base_dir)?;
    let out_dir = PathBuf::from(sc.output.directory.clone().unwrap());
    std::fs::create_dir_all(&out_dir).map_err(|e| IoError::new(&out_dir, e))?;
    let name = sc.output.name.clone().unwrap();
    let cadence = sc.output.cadence.unwrap();

    let echo = out_dir.join(format!("{name}_normalized.toml"));
    std::fs::write(&echo, sc.normalized_dump()).map_err(|e| IoError::new(&echo, e))?;

    let csv_path = out_dir.join(format!("{name}_fractures.csv"));
    let mut csv = TimeseriesWriter::create(&csv_path)?;

    let phases = sc.phases(&grid);
    let controls = sc.solver_controls(&grid);
    let initial = sc.initial_state(&grid);
    let verbose = opts.verbose;
    let mut records: Vec<StepRecord> = Vec::new();
    let result = run_simulation(
        &grid,
        sc.material_params(),
        sc.start,
        &phases,
        &controls,
        initial,
        |record, state, asm| {
            csv.append(record).map_err(|e| e.to_string())?;
            if record.step % cadence == 0 {
                write_vtk_snapshot(&grid, state, asm, record, &out_dir, &name)
                    .map_err(|e| e.to_string())?;
            }
            if verbose {
                println!(
                    "step {:4}  t {:+.4e}  dt {:.3e}  newton {:2}  open/stick/slide {}/{}/{}",
                    record.step,
                    record.time,
                    record.dt,
                    record.newton_iterations,
                    record.regime_counts[0],
                    record.regime_counts[1],
                    record.regime_counts[2],
                );
            }
            records.push(record.clone());
            Ok(())
        },
    );
    csv.finish()?;
    result?;
    Ok(RunSummary {
        records,
        out_dir,
        csv_path,
    })
}

pub fn run_scenario_file(path: &Path, opts: &RunOptions) -> Result<RunSummary, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Io(IoError::new(path, e)))?;
    let sc = parse_scenario(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    execute(sc, base, opts)
}

pub fn run_demo(opts: &RunOptions) -> Result<RunSummary, AppError> {
    let sc = parse_scenario(DEMO_SCENARIO).expect("bundled demo scenario parses");
    execute(sc, Path::new("."), opts)
}
