//! Two-sided matrix-fracture interfaces and the point interfaces between
//! fracture branches and 0D intersections.
//!
//! Grids on both sides of an interface are matching, so the projection
//! operators are selection/prolongation maps: Ξ (subdomain to interface)
//! composed with Π (interface to subdomain) is the identity on interface
//! cells.

use nalgebra::Vector2;

use super::Side;
use crate::linalg::CsrMatrix;
use crate::scalar::Scalar;

/// Interface between the 2D matrix and one 1D fracture branch. Carries both
/// sides: interface cell `i` on the plus side pairs matrix face
/// `faces_plus[i]` with fracture cell `i`, and likewise for the minus side.
/// Interface cells are indexed `0..n` for the plus side followed by `n..2n`
/// for the minus side.
#[derive(Debug, Clone)]
pub struct MatrixFractureInterface<F> {
    pub branch: usize,
    pub faces_plus: Vec<usize>,
    pub faces_minus: Vec<usize>,
    /// Unit normal pointing from the minus side to the plus side.
    pub ref_normal: Vector2<F>,
    /// Unit tangent along the branch path direction.
    pub ref_tangent: Vector2<F>,
}

impl<F: Scalar> MatrixFractureInterface<F> {
    /// Fracture cells on one side.
    pub fn num_pairs(&self) -> usize {
        self.faces_plus.len()
    }

    /// Interface cells over both sides.
    pub fn num_cells(&self) -> usize {
        2 * self.num_pairs()
    }

    pub fn interface_cell(&self, side: Side, pair: usize) -> usize {
        match side {
            Side::Plus => pair,
            Side::Minus => self.num_pairs() + pair,
        }
    }

    pub fn side_of(&self, interface_cell: usize) -> (Side, usize) {
        let n = self.num_pairs();
        if interface_cell < n {
            (Side::Plus, interface_cell)
        } else {
            (Side::Minus, interface_cell - n)
        }
    }

    pub fn matrix_face(&self, interface_cell: usize) -> usize {
        let (side, pair) = self.side_of(interface_cell);
        match side {
            Side::Plus => self.faces_plus[pair],
            Side::Minus => self.faces_minus[pair],
        }
    }

    pub fn faces(&self, side: Side) -> &[usize] {
        match side {
            Side::Plus => &self.faces_plus,
            Side::Minus => &self.faces_minus,
        }
    }

    /// Ξ from matrix faces to the interface cells of one side: an
    /// (n x n_faces) selection.
    pub fn xi_from_matrix(&self, side: Side, num_matrix_faces: usize) -> CsrMatrix<F> {
        let faces = self.faces(side);
        CsrMatrix::from_triplets(
            self.num_pairs(),
            num_matrix_faces,
            faces.iter().enumerate().map(|(i, &f)| (i, f, F::one())),
        )
    }

    /// Π from the interface cells of one side to matrix faces.
    pub fn pi_to_matrix(&self, side: Side, num_matrix_faces: usize) -> CsrMatrix<F> {
        let faces = self.faces(side);
        CsrMatrix::from_triplets(
            num_matrix_faces,
            self.num_pairs(),
            faces.iter().enumerate().map(|(i, &f)| (f, i, F::one())),
        )
    }

    /// Ξ from fracture cells to the interface cells of one side; the grids
    /// match, so this is the identity.
    pub fn xi_from_fracture(&self) -> CsrMatrix<F> {
        CsrMatrix::from_triplets(
            self.num_pairs(),
            self.num_pairs(),
            (0..self.num_pairs()).map(|i| (i, i, F::one())),
        )
    }

    /// Π from the interface cells of one side to fracture cells (identity).
    pub fn pi_to_fracture(&self) -> CsrMatrix<F> {
        self.xi_from_fracture()
    }
}

/// Point interface between the end of a 1D branch and a 0D intersection.
#[derive(Debug, Clone, Copy)]
pub struct FractureIntersectionInterface {
    /// 0D subdomain index.
    pub isx: usize,
    /// 1D branch index.
    pub branch: usize,
    /// End face of the branch grid coupled to the intersection.
    pub branch_face: usize,
    /// Branch cell adjacent to that face.
    pub branch_cell: usize,
}
