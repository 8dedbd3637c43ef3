//! Boundary-condition bookkeeping per external face.
//!
//! Transmissibility assembly only looks at the condition *kinds*; the values
//! enter when the cached operators are applied. Internal fracture faces and
//! branch end faces are one-sided and always carry Neumann-type conditions
//! whose values are supplied by the interface equations at apply time.

use nalgebra::Vector2;

use crate::mdgrid::SubdomainGrid;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

/// Scalar-field conditions (flow or heat), indexed by face id. Interior
/// faces keep the default no-flow entry, which is never read.
#[derive(Debug, Clone)]
pub struct ScalarBc<F> {
    pub kind: Vec<BcKind>,
    /// Dirichlet: the boundary value of the field. Neumann: the total
    /// outward flux through the face.
    pub value: Vec<F>,
}

impl<F: Scalar> ScalarBc<F> {
    pub fn no_flow(grid: &SubdomainGrid<F>) -> Self {
        Self {
            kind: vec![BcKind::Neumann; grid.num_faces()],
            value: vec![F::zero(); grid.num_faces()],
        }
    }

    pub fn set(&mut self, face: usize, kind: BcKind, value: F) {
        self.kind[face] = kind;
        self.value[face] = value;
    }
}

/// Mechanics conditions: kind per Cartesian component so that roller
/// supports (normal displacement fixed, tangential traction free) are
/// expressible on axis-aligned boundaries.
#[derive(Debug, Clone)]
pub struct MechBc<F> {
    pub kind: Vec<[BcKind; 2]>,
    /// Dirichlet components: prescribed displacement. Neumann components:
    /// total traction force on the face.
    pub value: Vec<Vector2<F>>,
}

impl<F: Scalar> MechBc<F> {
    pub fn traction_free(grid: &SubdomainGrid<F>) -> Self {
        Self {
            kind: vec![[BcKind::Neumann; 2]; grid.num_faces()],
            value: vec![Vector2::zeros(); grid.num_faces()],
        }
    }

    pub fn set(&mut self, face: usize, kind: [BcKind; 2], value: Vector2<F>) {
        self.kind[face] = kind;
        self.value[face] = value;
    }
}
