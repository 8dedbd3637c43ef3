//! Multi-point flux approximation, O-variant: one interaction region per
//! mesh node, cellwise gradient unknowns, flux and potential continuity on
//! the half-faces meeting at the node. Continuity points sit at the face
//! centres. On 1D grids the construction degenerates to two-point
//! differences, which are exact there.

use nalgebra::DMatrix;

use super::bc::{BcKind, ScalarBc};
use super::{check_len, map_local_error, FvmError};
use crate::linalg::{solve_dense, CsrMatrix};
use crate::mdgrid::SubdomainGrid;
use crate::scalar::{lit, Scalar};

/// Cached diffusion operator for one subdomain. Face fluxes are oriented
/// along the stored face normal (out of `face_cells[0]`):
/// `q = flux_cells · p + flux_bnd · g` where `g` holds boundary values at
/// one-sided face slots (Dirichlet value of the field, or total outward
/// Neumann flux). `trace_* ` reconstructs the field value at one-sided face
/// centres, used for interface traces.
#[derive(Debug, Clone)]
pub struct ScalarDiscretization<F> {
    pub flux_cells: CsrMatrix<F>,
    pub flux_bnd: CsrMatrix<F>,
    pub trace_cells: CsrMatrix<F>,
    pub trace_bnd: CsrMatrix<F>,
}

impl<F: Scalar> ScalarDiscretization<F> {
    pub fn fluxes(&self, p: &[F], bnd: &[F]) -> Result<Vec<F>, FvmError> {
        check_len("cell field", p, self.flux_cells.ncols())?;
        check_len("boundary values", bnd, self.flux_bnd.ncols())?;
        let mut q = self.flux_cells.mul_vec(p);
        self.flux_bnd.mul_add(F::one(), bnd, &mut q);
        Ok(q)
    }

    pub fn traces(&self, p: &[F], bnd: &[F]) -> Result<Vec<F>, FvmError> {
        check_len("cell field", p, self.trace_cells.ncols())?;
        check_len("boundary values", bnd, self.trace_bnd.ncols())?;
        let mut t = self.trace_cells.mul_vec(p);
        self.trace_bnd.mul_add(F::one(), bnd, &mut t);
        Ok(t)
    }
}

pub fn mpfa_discretize<F: Scalar>(
    grid: &SubdomainGrid<F>,
    conductivity: &[F],
    bc: &ScalarBc<F>,
) -> Result<ScalarDiscretization<F>, FvmError> {
    check_len("conductivity", conductivity, grid.num_cells())?;
    check_len("bc kinds", &bc.kind, grid.num_faces())?;
    match grid.dim {
        2 => mpfa_2d(grid, conductivity, bc, F::zero()),
        1 => Ok(two_point_1d(grid, conductivity, bc)),
        _ => Ok(ScalarDiscretization {
            flux_cells: CsrMatrix::zeros(0, grid.num_cells()),
            flux_bnd: CsrMatrix::zeros(0, 0),
            trace_cells: CsrMatrix::zeros(0, grid.num_cells()),
            trace_bnd: CsrMatrix::zeros(0, 0),
        }),
    }
}

fn mpfa_2d<F: Scalar>(
    grid: &SubdomainGrid<F>,
    conductivity: &[F],
    bc: &ScalarBc<F>,
    eta: F,
) -> Result<ScalarDiscretization<F>, FvmError> {
    let (nc, nf) = (grid.num_cells(), grid.num_faces());
    let mut node_cells: Vec<Vec<usize>> = vec![Vec::new(); grid.num_nodes()];
    for (c, ns) in grid.cell_nodes.iter().enumerate() {
        for &v in ns {
            node_cells[v].push(c);
        }
    }
    let mut node_faces: Vec<Vec<usize>> = vec![Vec::new(); grid.num_nodes()];
    for (f, ns) in grid.face_nodes.iter().enumerate() {
        for &v in ns {
            node_faces[v].push(f);
        }
    }

    let half = lit::<F>(0.5);
    let mut flux_cells = Vec::new();
    let mut flux_bnd = Vec::new();
    let mut trace_cells = Vec::new();
    let mut trace_bnd = Vec::new();

    for v in 0..grid.num_nodes() {
        let cells = &node_cells[v];
        let faces = &node_faces[v];
        if cells.is_empty() {
            continue;
        }
        let k = cells.len();
        let local = |c: usize| cells.iter().position(|&x| x == c).unwrap();
        // right-hand-side columns: cell potentials, then one boundary slot
        // per one-sided face at this node
        let bnd_faces: Vec<usize> = faces
            .iter()
            .copied()
            .filter(|&f| grid.is_boundary_face(f))
            .collect();
        let ncols = k + bnd_faces.len();
        let bnd_col = |f: usize| k + bnd_faces.iter().position(|&x| x == f).unwrap();

        let mut a = DMatrix::<F>::zeros(2 * k, 2 * k);
        let mut r = DMatrix::<F>::zeros(2 * k, ncols);
        let mut row = 0usize;
        for &f in faces {
            let n_sub = grid.face_normals[f] * half;
            let x_fc = grid.face_centers[f];
            let x_cp = x_fc + (grid.nodes[v] - x_fc) * eta;
            let ca = grid.face_cells[f][0].unwrap();
            let la = local(ca);
            let da = x_cp - grid.cell_centers[ca];
            match grid.face_cells[f][1] {
                Some(cb) => {
                    let lb = local(cb);
                    let db = x_cp - grid.cell_centers[cb];
                    // flux continuity across the half-face
                    a[(row, 2 * la)] -= conductivity[ca] * n_sub.x;
                    a[(row, 2 * la + 1)] -= conductivity[ca] * n_sub.y;
                    a[(row, 2 * lb)] += conductivity[cb] * n_sub.x;
                    a[(row, 2 * lb + 1)] += conductivity[cb] * n_sub.y;
                    row += 1;
                    // potential continuity at the continuity point
                    a[(row, 2 * la)] += da.x;
                    a[(row, 2 * la + 1)] += da.y;
                    a[(row, 2 * lb)] -= db.x;
                    a[(row, 2 * lb + 1)] -= db.y;
                    r[(row, la)] -= F::one();
                    r[(row, lb)] += F::one();
                    row += 1;
                }
                None => match bc.kind[f] {
                    BcKind::Dirichlet => {
                        a[(row, 2 * la)] += da.x;
                        a[(row, 2 * la + 1)] += da.y;
                        r[(row, la)] -= F::one();
                        r[(row, bnd_col(f))] += F::one();
                        row += 1;
                    }
                    BcKind::Neumann => {
                        a[(row, 2 * la)] -= conductivity[ca] * n_sub.x;
                        a[(row, 2 * la + 1)] -= conductivity[ca] * n_sub.y;
                        r[(row, bnd_col(f))] += half;
                        row += 1;
                    }
                },
            }
        }
        debug_assert_eq!(row, 2 * k);
        let g = solve_dense(a, r).map_err(|e| map_local_error(v, e))?;

        // half-face fluxes, always evaluated from the `face_cells[0]` side;
        // prescribed Neumann faces bypass the gradients so that interface
        // sources enter with exact unit weight
        for &f in faces {
            let ca = grid.face_cells[f][0].unwrap();
            let la = local(ca);
            let n_sub = grid.face_normals[f] * half;
            let one_sided = grid.is_boundary_face(f);
            if one_sided && bc.kind[f] == BcKind::Neumann {
                flux_bnd.push((f, f, half));
            } else {
                for col in 0..ncols {
                    let coef = -conductivity[ca]
                        * (n_sub.x * g[(2 * la, col)] + n_sub.y * g[(2 * la + 1, col)]);
                    if coef != F::zero() {
                        if col < k {
                            flux_cells.push((f, cells[col], coef));
                        } else {
                            flux_bnd.push((f, bnd_faces[col - k], coef));
                        }
                    }
                }
            }
            // face-centre value reconstruction on one-sided faces
            if one_sided {
                match bc.kind[f] {
                    BcKind::Dirichlet => trace_bnd.push((f, f, half)),
                    BcKind::Neumann => {
                        let x_fc = grid.face_centers[f];
                        let d_fc = x_fc - grid.cell_centers[ca];
                        trace_cells.push((f, ca, half));
                        for col in 0..ncols {
                            let coef = half
                                * (d_fc.x * g[(2 * la, col)] + d_fc.y * g[(2 * la + 1, col)]);
                            if coef != F::zero() {
                                if col < k {
                                    trace_cells.push((f, cells[col], coef));
                                } else {
                                    trace_bnd.push((f, bnd_faces[col - k], coef));
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(ScalarDiscretization {
        flux_cells: CsrMatrix::from_triplets(nf, nc, flux_cells),
        flux_bnd: CsrMatrix::from_triplets(nf, nf, flux_bnd),
        trace_cells: CsrMatrix::from_triplets(nf, nc, trace_cells),
        trace_bnd: CsrMatrix::from_triplets(nf, nf, trace_bnd),
    })
}

/// Two-point differences on a 1D line grid; exact for piecewise-linear
/// fields, so this is also the MPFA limit there.
fn two_point_1d<F: Scalar>(
    grid: &SubdomainGrid<F>,
    conductivity: &[F],
    bc: &ScalarBc<F>,
) -> ScalarDiscretization<F> {
    let (nc, nf) = (grid.num_cells(), grid.num_faces());
    let mut flux_cells = Vec::new();
    let mut flux_bnd = Vec::new();
    let mut trace_cells = Vec::new();
    let mut trace_bnd = Vec::new();
    for f in 0..nf {
        let ca = grid.face_cells[f][0].unwrap();
        let da = (grid.face_centers[f] - grid.cell_centers[ca]).norm();
        match grid.face_cells[f][1] {
            Some(cb) => {
                let db = (grid.face_centers[f] - grid.cell_centers[cb]).norm();
                let t = F::one() / (da / conductivity[ca] + db / conductivity[cb]);
                flux_cells.push((f, ca, t));
                flux_cells.push((f, cb, -t));
            }
            None => match bc.kind[f] {
                BcKind::Dirichlet => {
                    let t = conductivity[ca] / da;
                    flux_cells.push((f, ca, t));
                    flux_bnd.push((f, f, -t));
                    trace_bnd.push((f, f, F::one()));
                }
                BcKind::Neumann => {
                    flux_bnd.push((f, f, F::one()));
                    // p_face = p_cell - q * d / k from the two-point profile
                    trace_cells.push((f, ca, F::one()));
                    trace_bnd.push((f, f, -da / conductivity[ca]));
                }
            },
        }
    }
    ScalarDiscretization {
        flux_cells: CsrMatrix::from_triplets(nf, nc, flux_cells),
        flux_bnd: CsrMatrix::from_triplets(nf, nf, flux_bnd),
        trace_cells: CsrMatrix::from_triplets(nf, nc, trace_cells),
        trace_bnd: CsrMatrix::from_triplets(nf, nf, trace_bnd),
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::Vector2;

    use super::*;
    use crate::mdgrid::{build_equilateral, build_structured, DomainBox, FractureNetwork};

    fn dirichlet_field<F: Scalar>(
        grid: &SubdomainGrid<F>,
        field: impl Fn(Vector2<F>) -> F,
    ) -> ScalarBc<F> {
        let mut bc = ScalarBc::no_flow(grid);
        for f in grid.boundary_faces() {
            bc.set(f, BcKind::Dirichlet, field(grid.face_centers[f]));
        }
        bc
    }

    fn bnd_values<F: Scalar>(grid: &SubdomainGrid<F>, bc: &ScalarBc<F>) -> Vec<F> {
        let mut g = vec![F::zero(); grid.num_faces()];
        for f in grid.boundary_faces() {
            g[f] = bc.value[f];
        }
        g
    }

    #[test]
    fn linear_patch_test() {
        let net = FractureNetwork::empty(DomainBox::unit());
        let g = build_structured(DomainBox::unit(), (4, 4), &net).unwrap();
        let grid = &g.matrix;
        let bc = dirichlet_field(grid, |x| x.x);
        let k = vec![1.0f64; grid.num_cells()];
        let disc = mpfa_discretize(grid, &k, &bc).unwrap();
        let p: Vec<f64> = grid.cell_centers.iter().map(|x| x.x).collect();
        let q = disc.fluxes(&p, &bnd_values(grid, &bc)).unwrap();
        for f in 0..grid.num_faces() {
            let expected = -grid.face_normals[f].x;
            assert!(
                (q[f] - expected).abs() < 1e-12,
                "face {f}: {} vs {}",
                q[f],
                expected
            );
        }
    }

    #[test]
    fn constant_field_no_flow() {
        let net = FractureNetwork::empty(DomainBox::unit());
        let g = build_structured(DomainBox::unit(), (3, 5), &net).unwrap();
        let grid = &g.matrix;
        let bc = ScalarBc::no_flow(grid);
        let k = vec![2.5f64; grid.num_cells()];
        let disc = mpfa_discretize(grid, &k, &bc).unwrap();
        let p = vec![7.0f64; grid.num_cells()];
        let q = disc.fluxes(&p, &vec![0.0; grid.num_faces()]).unwrap();
        for f in 0..grid.num_faces() {
            assert!(q[f].abs() < 1e-12);
        }
    }

    #[test]
    fn matches_two_point_on_k_orthogonal_grid() {
        // equilateral triangles: centroids are circumcentres, so the
        // multi-point operator collapses to k·|f|/d
        let g = build_equilateral(0.25f64, 5, 4).unwrap();
        let grid = &g.matrix;
        let bc = dirichlet_field(grid, |x| x.x + 2.0 * x.y);
        let kappa = 1.7f64;
        let k = vec![kappa; grid.num_cells()];
        let disc = mpfa_discretize(grid, &k, &bc).unwrap();
        for f in 0..grid.num_faces() {
            if grid.is_boundary_face(f) {
                continue;
            }
            let (ca, cb) = (grid.face_cells[f][0].unwrap(), grid.face_cells[f][1].unwrap());
            let d = (grid.cell_centers[cb] - grid.cell_centers[ca]).norm();
            let t_tp = kappa * grid.face_area(f) / d;
            assert!(
                (disc.flux_cells.get(f, ca) - t_tp).abs() <= 1e-10 * t_tp,
                "face {f}: {} vs {}",
                disc.flux_cells.get(f, ca),
                t_tp
            );
            assert!((disc.flux_cells.get(f, cb) + t_tp).abs() <= 1e-10 * t_tp);
        }
    }

    #[test]
    fn one_dimensional_grids_use_two_point_differences() {
        use crate::mdgrid::Segment;
        let net = FractureNetwork::new(
            DomainBox::unit(),
            vec![Segment::new(Vector2::new(0.0, 0.5), Vector2::new(1.0, 0.5))],
        );
        let g = build_structured(DomainBox::unit(), (4, 4), &net).unwrap();
        let grid = &g.fractures[0];
        let bc = ScalarBc::no_flow(grid);
        let k = vec![3.0f64; grid.num_cells()];
        let disc = mpfa_discretize(grid, &k, &bc).unwrap();
        // interior face between cells of length 0.25: t = k / 0.25
        for f in 0..grid.num_faces() {
            if let [Some(ca), Some(cb)] = grid.face_cells[f] {
                assert!((disc.flux_cells.get(f, ca) - 12.0).abs() < 1e-12);
                assert!((disc.flux_cells.get(f, cb) + 12.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dirichlet_trace_returns_boundary_value() {
        let net = FractureNetwork::empty(DomainBox::unit());
        let g = build_structured(DomainBox::unit(), (2, 2), &net).unwrap();
        let grid = &g.matrix;
        let bc = dirichlet_field(grid, |x| 3.0 * x.x - x.y);
        let k = vec![1.0f64; grid.num_cells()];
        let disc = mpfa_discretize(grid, &k, &bc).unwrap();
        let p: Vec<f64> = grid.cell_centers.iter().map(|x| 3.0 * x.x - x.y).collect();
        let tr = disc.traces(&p, &bnd_values(grid, &bc)).unwrap();
        for f in grid.boundary_faces() {
            assert!((tr[f] - bc.value[f]).abs() < 1e-12);
        }
    }

    #[test]
    fn neumann_trace_is_exact_for_linear_fields() {
        let net = FractureNetwork::<f64>::empty(DomainBox::unit());
        let g = build_structured(DomainBox::unit(), (3, 3), &net).unwrap();
        let grid = &g.matrix;
        // p = x: no-flow through top/bottom, prescribed flux left/right
        let mut bc = ScalarBc::no_flow(grid);
        for f in grid.boundary_faces() {
            let n = grid.face_normals[f];
            if n.x.abs() > 1e-12 {
                bc.set(f, BcKind::Neumann, -n.x);
            }
        }
        // pin the field with one Dirichlet face so the gradient is unique
        let pinned = grid
            .boundary_faces()
            .find(|&f| grid.face_normals[f].x.abs() > 1e-12)
            .unwrap();
        bc.set(pinned, BcKind::Dirichlet, grid.face_centers[pinned].x);
        let k = vec![1.0f64; grid.num_cells()];
        let disc = mpfa_discretize(grid, &k, &bc).unwrap();
        let p: Vec<f64> = grid.cell_centers.iter().map(|x| x.x).collect();
        let tr = disc.traces(&p, &bnd_values(grid, &bc)).unwrap();
        for f in grid.boundary_faces() {
            assert!(
                (tr[f] - grid.face_centers[f].x).abs() < 1e-11,
                "face {f}: {} vs {}",
                tr[f],
                grid.face_centers[f].x
            );
        }
    }
}
