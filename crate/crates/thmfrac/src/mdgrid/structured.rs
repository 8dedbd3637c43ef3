//! Built-in lattice mesher: an n-by-m rectangle lattice split into
//! triangles, with fracture segments snapped onto lattice edges. Horizontal,
//! vertical and diagonal (slope +-1) segments are supported; the diagonal
//! direction of each rectangle is chosen to follow the fractures crossing
//! it, defaulting to slope +1.

use std::collections::HashMap;

use nalgebra::Vector2;

use super::network::{DomainBox, FractureNetwork};
use super::split::{assemble_mixed_grid, FractureEdge, TriMesh};
use super::{GridError, MixedDimGrid};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Diag {
    /// Diagonal from (i, j) to (i+1, j+1), slope +1.
    Up,
    /// Diagonal from (i+1, j) to (i, j+1), slope -1.
    Down,
}

pub fn build_structured<F: Scalar>(
    domain: DomainBox<F>,
    resolution: (usize, usize),
    network: &FractureNetwork<F>,
) -> Result<MixedDimGrid<F>, GridError> {
    build_structured_perturbed(domain, resolution, network, None)
}

/// Same as [`build_structured`], optionally jiggling interior non-fracture
/// nodes by `amplitude` (relative to the cell size) with a deterministic
/// hash keyed by `seed`. Used by the verification suites.
pub fn build_structured_perturbed<F: Scalar>(
    domain: DomainBox<F>,
    resolution: (usize, usize),
    network: &FractureNetwork<F>,
    perturbation: Option<(F, u64)>,
) -> Result<MixedDimGrid<F>, GridError> {
    let (nx, ny) = resolution;
    assert!(nx >= 1 && ny >= 1, "resolution must be at least 1x1");
    network.validate()?;
    let ext = domain.extent();
    let hx = ext.x / F::from_usize(nx).unwrap();
    let hy = ext.y / F::from_usize(ny).unwrap();
    let node_id = |i: usize, j: usize| j * (nx + 1) + i;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push(Vector2::new(
                domain.min.x + hx * F::from_usize(i).unwrap(),
                domain.min.y + hy * F::from_usize(j).unwrap(),
            ));
        }
    }

    // snap segments to lattice nodes and enumerate fracture edges
    let snap_tol = (hx * hx + hy * hy).sqrt() * lit::<F>(0.5);
    let mut diag_demand: HashMap<(usize, usize), (Diag, usize)> = HashMap::new();
    let mut fracture_edges: Vec<FractureEdge> = Vec::new();
    for (s, seg) in network.segments.iter().enumerate() {
        let snap = |p: &Vector2<F>| -> Result<(usize, usize), GridError> {
            let fi = (p.x - domain.min.x) / hx;
            let fj = (p.y - domain.min.y) / hy;
            let i = fi.round().to_subset().map(|v: f64| v as i64).unwrap_or(-1);
            let j = fj.round().to_subset().map(|v: f64| v as i64).unwrap_or(-1);
            if i < 0 || j < 0 || i as usize > nx || j as usize > ny {
                return Err(GridError::SegmentNotRepresentable {
                    index: s,
                    reason: "endpoint snaps outside the lattice".into(),
                });
            }
            let (i, j) = (i as usize, j as usize);
            let q = nodes[node_id(i, j)];
            if (p - q).norm() > snap_tol {
                return Err(GridError::SegmentNotRepresentable {
                    index: s,
                    reason: "endpoint further than half a cell diagonal from a lattice node"
                        .into(),
                });
            }
            Ok((i, j))
        };
        let (i0, j0) = snap(&seg.start)?;
        let (i1, j1) = snap(&seg.end)?;
        let di = i1 as i64 - i0 as i64;
        let dj = j1 as i64 - j0 as i64;
        if di == 0 && dj == 0 {
            return Err(GridError::DegenerateGeometry(format!(
                "segment {s} collapses to a point after snapping"
            )));
        }
        let (sx, sy, steps) = if dj == 0 {
            (di.signum(), 0, di.unsigned_abs())
        } else if di == 0 {
            (0, dj.signum(), dj.unsigned_abs())
        } else if di.abs() == dj.abs() {
            (di.signum(), dj.signum(), di.unsigned_abs())
        } else {
            return Err(GridError::SegmentNotRepresentable {
                index: s,
                reason: "segment is not horizontal, vertical or diagonal on the lattice".into(),
            });
        };
        for k in 0..steps {
            let ia = (i0 as i64 + sx * k as i64) as usize;
            let ja = (j0 as i64 + sy * k as i64) as usize;
            let ib = (ia as i64 + sx) as usize;
            let jb = (ja as i64 + sy) as usize;
            fracture_edges.push(FractureEdge {
                a: node_id(ia, ja),
                b: node_id(ib, jb),
                tag: s,
            });
            if sx != 0 && sy != 0 {
                let rect = (ia.min(ib), ja.min(jb));
                let want = if sx == sy { Diag::Up } else { Diag::Down };
                if let Some(&(have, other)) = diag_demand.get(&rect) {
                    if have != want {
                        return Err(GridError::SegmentNotRepresentable {
                            index: s,
                            reason: format!(
                                "conflicting diagonal directions with segment {other} in one cell"
                            ),
                        });
                    }
                } else {
                    diag_demand.insert(rect, (want, s));
                }
            }
        }
    }

    // triangles, row-major over rectangles
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let diag = diag_demand.get(&(i, j)).map(|&(d, _)| d).unwrap_or(Diag::Up);
            let (n00, n10, n01, n11) = (
                node_id(i, j),
                node_id(i + 1, j),
                node_id(i, j + 1),
                node_id(i + 1, j + 1),
            );
            match diag {
                Diag::Up => {
                    tris.push([n00, n10, n11]);
                    tris.push([n00, n11, n01]);
                }
                Diag::Down => {
                    tris.push([n00, n10, n01]);
                    tris.push([n10, n11, n01]);
                }
            }
        }
    }

    if let Some((amplitude, seed)) = perturbation {
        super::perturb::perturb_lattice_nodes(
            &mut nodes,
            nx,
            ny,
            Vector2::new(hx, hy),
            &fracture_edges,
            amplitude,
            seed,
        );
    }

    assemble_mixed_grid(TriMesh { nodes, tris }, fracture_edges, domain)
}

/// Grid of equilateral triangles with edge length `h`, `nx` triangles per
/// strip and `ny` strips, rows offset by half an edge. Cell centroids
/// coincide with circumcentres, so the connection between neighbouring
/// centroids is perpendicular to the shared face: the grid is K-orthogonal
/// for isotropic conductivity and serves as the reference grid for the
/// two-point-flux comparison. No fractures; the jagged strip ends are plain
/// boundary faces.
pub fn build_equilateral<F: Scalar>(
    h: F,
    nx: usize,
    ny: usize,
) -> Result<MixedDimGrid<F>, GridError> {
    assert!(nx >= 2 && ny >= 1);
    let height = h * lit::<F>(3.0f64.sqrt() / 2.0);
    let half = lit::<F>(0.5);
    let mut nodes = Vec::new();
    let mut row_start = Vec::new();
    for j in 0..=ny {
        row_start.push(nodes.len());
        let offset = if j % 2 == 1 { half * h } else { F::zero() };
        let count = if j % 2 == 1 { nx } else { nx + 1 };
        for i in 0..count {
            nodes.push(Vector2::new(
                offset + h * F::from_usize(i).unwrap(),
                height * F::from_usize(j).unwrap(),
            ));
        }
    }
    let mut tris = Vec::new();
    for j in 0..ny {
        let (lo, up) = (row_start[j], row_start[j + 1]);
        if j % 2 == 0 {
            // full row below (nx+1 nodes), offset row above (nx nodes)
            for i in 0..nx {
                tris.push([lo + i, lo + i + 1, up + i]);
            }
            for i in 0..nx - 1 {
                tris.push([lo + i + 1, up + i + 1, up + i]);
            }
        } else {
            // offset row below (nx nodes), full row above (nx+1 nodes)
            for i in 0..nx - 1 {
                tris.push([lo + i, lo + i + 1, up + i + 1]);
            }
            for i in 0..nx {
                tris.push([lo + i, up + i + 1, up + i]);
            }
        }
    }
    let mut min = nodes[0];
    let mut max = nodes[0];
    for p in &nodes {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    assemble_mixed_grid(TriMesh { nodes, tris }, Vec::new(), DomainBox::new(min, max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdgrid::network::Segment;

    fn unit_box() -> DomainBox<f64> {
        DomainBox::unit()
    }

    #[test]
    fn fracture_free_two_by_two() {
        let net = FractureNetwork::empty(unit_box());
        let g = build_structured(unit_box(), (2, 2), &net).unwrap();
        assert_eq!(g.matrix.num_cells(), 8);
        assert_eq!(g.fractures.len(), 0);
        assert_eq!(g.mf_interfaces.len(), 0);
        assert_eq!(g.intersections.len(), 0);
    }

    #[test]
    fn single_horizontal_fracture() {
        let net = FractureNetwork::new(
            unit_box(),
            vec![Segment::new(
                Vector2::new(0.25, 0.5),
                Vector2::new(0.75, 0.5),
            )],
        );
        let g = build_structured(unit_box(), (4, 4), &net).unwrap();
        assert_eq!(g.fractures.len(), 1);
        assert_eq!(g.fractures[0].num_cells(), 2);
        assert_eq!(g.mf_interfaces.len(), 1);
        assert_eq!(g.mf_interfaces[0].num_pairs(), 2);
        assert_eq!(g.mf_interfaces[0].num_cells(), 4);
        let dup_faces = g
            .matrix
            .face_tags
            .iter()
            .filter(|t| matches!(t, crate::mdgrid::FaceTag::Fracture { .. }))
            .count();
        assert_eq!(dup_faces, 4);
        assert_eq!(g.intersections.len(), 0);
    }

    #[test]
    fn crossing_fractures_make_four_branches_and_one_intersection() {
        let net = FractureNetwork::new(
            unit_box(),
            vec![
                Segment::new(Vector2::new(0.25, 0.5), Vector2::new(0.75, 0.5)),
                Segment::new(Vector2::new(0.5, 0.25), Vector2::new(0.5, 0.75)),
            ],
        );
        let g = build_structured(unit_box(), (4, 4), &net).unwrap();
        assert_eq!(g.fractures.len(), 4);
        assert_eq!(g.intersections.len(), 1);
        assert_eq!(g.fx_interfaces.len(), 4);
        for f in &g.fractures {
            assert_eq!(f.num_cells(), 1);
        }
    }

    #[test]
    fn diagonal_fracture_flips_cells() {
        let net = FractureNetwork::new(
            unit_box(),
            vec![Segment::new(
                Vector2::new(0.25, 0.75),
                Vector2::new(0.75, 0.25),
            )],
        );
        let g = build_structured(unit_box(), (4, 4), &net).unwrap();
        assert_eq!(g.fractures.len(), 1);
        assert_eq!(g.fractures[0].num_cells(), 2);
    }

    #[test]
    fn off_lattice_segment_rejected() {
        let net = FractureNetwork::new(
            unit_box(),
            vec![Segment::new(
                Vector2::new(0.25, 0.5),
                Vector2::new(0.75, 0.625),
            )],
        );
        let err = build_structured(unit_box(), (4, 4), &net).unwrap_err();
        assert!(matches!(err, GridError::SegmentNotRepresentable { .. }));
    }

    #[test]
    fn closed_cells_and_positive_volumes() {
        let net = FractureNetwork::new(
            unit_box(),
            vec![Segment::new(
                Vector2::new(0.25, 0.5),
                Vector2::new(0.75, 0.5),
            )],
        );
        let g = build_structured(unit_box(), (4, 4), &net).unwrap();
        for (_, sub) in g.subdomains() {
            for c in 0..sub.num_cells() {
                assert!(sub.cell_volumes[c] > 0.0);
                if sub.dim > 0 {
                    let defect = sub.cell_normal_defect(c).norm();
                    assert!(defect <= 1e-12 * sub.cell_perimeter(c));
                }
            }
        }
    }
}
