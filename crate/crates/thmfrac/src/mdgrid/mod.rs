//! Mixed-dimensional geometry: a 2D matrix grid that is topologically slit
//! along fractures, 1D fracture-branch grids whose cells coincide with the
//! duplicated matrix faces, 0D intersection grids, and the two-sided
//! interfaces with their projection operators.

mod grid;
mod interface;
mod msh;
mod network;
mod perturb;
mod split;
mod structured;

pub use grid::{BoxSide, FaceTag, Side, SubdomainGrid};
pub use interface::{FractureIntersectionInterface, MatrixFractureInterface};
pub use msh::import_msh;
pub use network::{DomainBox, FractureNetwork, Segment};
pub use perturb::perturb_nodes;
pub use split::{assemble_mixed_grid, FractureEdge, TriMesh};
pub use structured::{build_equilateral, build_structured, build_structured_perturbed};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("segment {index} cannot be represented on the lattice: {reason}")]
    SegmentNotRepresentable { index: usize, reason: String },
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("fracture faces cannot be two-coloured consistently: {0}")]
    OrientationError(String),
    #[error("mesh parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("non-conforming mesh: {0}")]
    NonConformingMesh(String),
}

/// The full mixed-dimensional grid hierarchy.
///
/// Subdomain ordering is deterministic: the single 2D matrix grid first,
/// then 1D branches in construction order, then 0D intersections ordered by
/// their originating mesh node. Interfaces follow the same scheme:
/// matrix-fracture interfaces per branch, then fracture-intersection
/// interfaces ordered by (intersection, branch).
#[derive(Debug, Clone)]
pub struct MixedDimGrid<F> {
    pub matrix: SubdomainGrid<F>,
    pub fractures: Vec<SubdomainGrid<F>>,
    pub intersections: Vec<SubdomainGrid<F>>,
    pub mf_interfaces: Vec<MatrixFractureInterface<F>>,
    pub fx_interfaces: Vec<FractureIntersectionInterface>,
    pub domain: DomainBox<F>,
}

impl<F: Scalar> MixedDimGrid<F> {
    pub fn num_fractures(&self) -> usize {
        self.fractures.len()
    }

    pub fn num_intersections(&self) -> usize {
        self.intersections.len()
    }

    /// Subdomains in the deterministic global ordering, keyed by (dim, index).
    pub fn subdomains(&self) -> impl Iterator<Item = ((usize, usize), &SubdomainGrid<F>)> {
        std::iter::once(((2, 0), &self.matrix))
            .chain(
                self.fractures
                    .iter()
                    .enumerate()
                    .map(|(i, g)| ((1, i), g)),
            )
            .chain(
                self.intersections
                    .iter()
                    .enumerate()
                    .map(|(i, g)| ((0, i), g)),
            )
    }

    pub fn subdomain(&self, dim: usize, index: usize) -> &SubdomainGrid<F> {
        match dim {
            2 => &self.matrix,
            1 => &self.fractures[index],
            0 => &self.intersections[index],
            _ => panic!("invalid dimension {dim}"),
        }
    }

    /// Total fracture cells over all branches.
    pub fn num_fracture_cells(&self) -> usize {
        self.fractures.iter().map(|g| g.num_cells()).sum()
    }
}
