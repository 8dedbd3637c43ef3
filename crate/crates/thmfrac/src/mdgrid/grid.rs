//! Subdomain grids of dimension 0, 1 and 2 sharing one cell/face layout.
//!
//! Conventions:
//! - the stored face normal is area-weighted and points out of
//!   `face_cells[f][0]` (into `face_cells[f][1]` when present);
//! - `cell_faces` carries the sign turning the stored normal into the
//!   outward normal of that cell;
//! - 1D cells are ordered along the branch path, faces `0..=n_cells` sit
//!   between consecutive cells with the end faces first/last;
//! - 0D grids have a single cell of unit measure and no faces.

use nalgebra::Vector2;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoxSide {
    Left,
    Right,
    Bottom,
    Top,
}

impl BoxSide {
    pub const ALL: [BoxSide; 4] = [BoxSide::Left, BoxSide::Right, BoxSide::Bottom, BoxSide::Top];

    pub fn name(&self) -> &'static str {
        match self {
            BoxSide::Left => "left",
            BoxSide::Right => "right",
            BoxSide::Bottom => "bottom",
            BoxSide::Top => "top",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceTag {
    /// Interior face between two cells of the same subdomain.
    Interior,
    /// External boundary face, labelled by the nearest box side.
    Boundary(BoxSide),
    /// Duplicated matrix face along a fracture (2D grids only).
    Fracture {
        branch: usize,
        cell: usize,
        side: Side,
    },
    /// End face of a 1D branch not touching an intersection (no-flow).
    Tip,
    /// End face of a 1D branch coupled to the 0D subdomain `isx`.
    IntersectionEnd { isx: usize },
}

#[derive(Debug, Clone)]
pub struct SubdomainGrid<F> {
    pub dim: usize,
    pub nodes: Vec<Vector2<F>>,
    /// Node ids per cell: 3 for triangles, 2 for 1D segments, 1 for points.
    pub cell_nodes: Vec<Vec<usize>>,
    pub cell_centers: Vec<Vector2<F>>,
    /// m^2 for 2D cells, m for 1D cells, 1 for 0D cells.
    pub cell_volumes: Vec<F>,
    pub face_nodes: Vec<Vec<usize>>,
    pub face_centers: Vec<Vector2<F>>,
    /// Area-weighted normals; unit "area" for the point faces of 1D grids.
    pub face_normals: Vec<Vector2<F>>,
    pub face_cells: Vec<[Option<usize>; 2]>,
    /// Per cell: (face id, sign) with sign `+1` when the stored normal is
    /// outward for this cell.
    pub cell_faces: Vec<Vec<(usize, i8)>>,
    pub face_tags: Vec<FaceTag>,
}

impl<F: Scalar> SubdomainGrid<F> {
    pub fn num_cells(&self) -> usize {
        self.cell_centers.len()
    }

    pub fn num_faces(&self) -> usize {
        self.face_centers.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_cells[f][1].is_none()
    }

    /// Outward area-weighted normal of face `f` seen from cell `c`.
    pub fn outward_normal(&self, f: usize, c: usize) -> Vector2<F> {
        let sign = if self.face_cells[f][0] == Some(c) {
            F::one()
        } else {
            -F::one()
        };
        self.face_normals[f] * sign
    }

    /// Face "area": length in 2D, one in 1D.
    pub fn face_area(&self, f: usize) -> F {
        self.face_normals[f].norm()
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_faces()).filter(|&f| self.is_boundary_face(f))
    }

    /// Sum of signed face normals per cell; zero for closed cells.
    pub fn cell_normal_defect(&self, c: usize) -> Vector2<F> {
        let mut acc = Vector2::zeros();
        for &(f, s) in &self.cell_faces[c] {
            let sign = if s > 0 { F::one() } else { -F::one() };
            acc += self.face_normals[f] * sign;
        }
        acc
    }

    pub fn cell_perimeter(&self, c: usize) -> F {
        self.cell_faces[c]
            .iter()
            .map(|&(f, _)| self.face_area(f))
            .sum()
    }

    /// Characteristic mesh size: mean square root of the cell measure (2D)
    /// or mean cell length (1D).
    pub fn mean_cell_size(&self) -> F {
        let n = F::from_usize(self.num_cells()).unwrap();
        let total: F = self
            .cell_volumes
            .iter()
            .map(|&v| if self.dim == 2 { v.sqrt() } else { v })
            .sum();
        total / n
    }
}
