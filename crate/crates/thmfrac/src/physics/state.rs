//! Flat state vector of the coupled system with a deterministic block
//! layout, plus the derived aperture/specific-volume caches.
//!
//! Ordering: matrix u, matrix p, matrix T; per branch p, T, λ (normal and
//! tangential multiplier in the interface frame); per intersection p, T;
//! per matrix-fracture interface u_j, v_j, w_j, s_j over interface cells
//! (plus side first). Residual rows use the same indices as the unknowns
//! they close.

use nalgebra::Vector2;

use crate::mdgrid::{MixedDimGrid, Side};
use crate::scalar::Scalar;

/// Named block of the global vector, for convergence reporting.
#[derive(Debug, Clone)]
pub struct Block {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

/// Index map from (subdomain/interface, entity, component) to positions in
/// the flat vector.
#[derive(Debug, Clone)]
pub struct Layout {
    pub n_matrix_cells: usize,
    frac_cells: Vec<usize>,
    n_isx: usize,
    iface_cells: Vec<usize>,
    frac_offset: Vec<usize>,
    isx_offset: usize,
    iface_offset: Vec<usize>,
    total: usize,
    blocks: Vec<Block>,
}

impl Layout {
    pub fn new<F: Scalar>(grid: &MixedDimGrid<F>) -> Self {
        let n_matrix_cells = grid.matrix.num_cells();
        let frac_cells: Vec<usize> = grid.fractures.iter().map(|g| g.num_cells()).collect();
        let iface_cells: Vec<usize> = grid.mf_interfaces.iter().map(|j| j.num_cells()).collect();
        let mut blocks = Vec::new();
        let mut at = 0usize;
        let mut push = |name: String, len: usize, at: &mut usize| -> usize {
            let start = *at;
            blocks.push(Block { name, start, len });
            *at += len;
            start
        };
        push("matrix/u".into(), 2 * n_matrix_cells, &mut at);
        push("matrix/p".into(), n_matrix_cells, &mut at);
        push("matrix/T".into(), n_matrix_cells, &mut at);
        let mut frac_offset = Vec::new();
        for (b, &n) in frac_cells.iter().enumerate() {
            frac_offset.push(push(format!("fracture{b}/p"), n, &mut at));
            push(format!("fracture{b}/T"), n, &mut at);
            push(format!("fracture{b}/lambda"), 2 * n, &mut at);
        }
        let n_isx = grid.intersections.len();
        let isx_offset = push("intersections/p".into(), n_isx, &mut at);
        push("intersections/T".into(), n_isx, &mut at);
        let mut iface_offset = Vec::new();
        for (j, &n) in iface_cells.iter().enumerate() {
            iface_offset.push(push(format!("interface{j}/u"), 2 * n, &mut at));
            push(format!("interface{j}/v"), n, &mut at);
            push(format!("interface{j}/w"), n, &mut at);
            push(format!("interface{j}/s"), n, &mut at);
        }
        Self {
            n_matrix_cells,
            frac_cells,
            n_isx,
            iface_cells,
            frac_offset,
            isx_offset,
            iface_offset,
            total: at,
            blocks,
        }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn matrix_u(&self, cell: usize, comp: usize) -> usize {
        2 * cell + comp
    }

    pub fn matrix_p(&self, cell: usize) -> usize {
        2 * self.n_matrix_cells + cell
    }

    pub fn matrix_t(&self, cell: usize) -> usize {
        3 * self.n_matrix_cells + cell
    }

    pub fn frac_p(&self, branch: usize, cell: usize) -> usize {
        self.frac_offset[branch] + cell
    }

    pub fn frac_t(&self, branch: usize, cell: usize) -> usize {
        self.frac_offset[branch] + self.frac_cells[branch] + cell
    }

    pub fn frac_lambda(&self, branch: usize, cell: usize, comp: usize) -> usize {
        self.frac_offset[branch] + 2 * self.frac_cells[branch] + 2 * cell + comp
    }

    pub fn isx_p(&self, i: usize) -> usize {
        self.isx_offset + i
    }

    pub fn isx_t(&self, i: usize) -> usize {
        self.isx_offset + self.n_isx + i
    }

    pub fn iface_u(&self, j: usize, interface_cell: usize, comp: usize) -> usize {
        self.iface_offset[j] + 2 * interface_cell + comp
    }

    pub fn iface_v(&self, j: usize, interface_cell: usize) -> usize {
        self.iface_offset[j] + 2 * self.iface_cells[j] + interface_cell
    }

    pub fn iface_w(&self, j: usize, interface_cell: usize) -> usize {
        self.iface_offset[j] + 3 * self.iface_cells[j] + interface_cell
    }

    pub fn iface_s(&self, j: usize, interface_cell: usize) -> usize {
        self.iface_offset[j] + 4 * self.iface_cells[j] + interface_cell
    }

    /// Block containing dof `i`.
    pub fn block_of(&self, i: usize) -> &Block {
        let pos = self
            .blocks
            .partition_point(|b| b.start + b.len <= i)
            .min(self.blocks.len() - 1);
        &self.blocks[pos]
    }
}

/// One snapshot of all unknowns.
#[derive(Debug, Clone)]
pub struct State<F> {
    pub layout: Layout,
    pub vec: Vec<F>,
}

impl<F: Scalar> State<F> {
    /// All-zero state; the vector holds absolute temperatures, so callers
    /// seed T₀ where needed.
    pub fn zeros(grid: &MixedDimGrid<F>) -> Self {
        let layout = Layout::new(grid);
        let vec = vec![F::zero(); layout.len()];
        Self { layout, vec }
    }

    pub fn matrix_u_vec(&self, cell: usize) -> Vector2<F> {
        Vector2::new(
            self.vec[self.layout.matrix_u(cell, 0)],
            self.vec[self.layout.matrix_u(cell, 1)],
        )
    }

    pub fn iface_u_vec(&self, j: usize, interface_cell: usize) -> Vector2<F> {
        Vector2::new(
            self.vec[self.layout.iface_u(j, interface_cell, 0)],
            self.vec[self.layout.iface_u(j, interface_cell, 1)],
        )
    }

    /// Displacement jump [[u]] = u⁻ − u⁺ of fracture cell `pair` on branch
    /// `j` in global coordinates (the convention that makes the normal jump
    /// non-positive in contact and the tangential multiplier anti-parallel
    /// to slip).
    pub fn jump(&self, iface: &crate::mdgrid::MatrixFractureInterface<F>, pair: usize) -> Vector2<F> {
        let j = iface.branch;
        let plus = self.iface_u_vec(j, iface.interface_cell(Side::Plus, pair));
        let minus = self.iface_u_vec(j, iface.interface_cell(Side::Minus, pair));
        minus - plus
    }
}
