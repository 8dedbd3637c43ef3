//! Input and output: scenario documents, VTK field snapshots, fracture
//! time-series CSV.

mod scenario;
mod timeseries;
mod vtk;

pub use scenario::{
    parse_scenario, DomainSection, FractureSection, MaterialSection, MechBcSpec, MeshSection,
    OutputSection, PhaseSection, ScalarBcSpec, Scenario, ScenarioError, SideBc, SolverSection,
};
pub use timeseries::{write_fracture_timeseries, TimeseriesWriter, TIMESERIES_HEADER};
pub use vtk::write_vtk_snapshot;

use std::path::{Path, PathBuf};

/// An I/O failure annotated with the path involved.
#[derive(Debug, thiserror::Error)]
#[error("{}: {source}", path.display())]
pub struct IoError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

impl IoError {
    pub fn new(path: &Path, source: std::io::Error) -> Self {
        Self {
            path: path.to_path_buf(),
            source,
        }
    }
}
