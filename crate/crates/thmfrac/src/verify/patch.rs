//! Discretization consistency suites: linear/piecewise-linear reproduction
//! for the scalar operator, constant-stress and rigid-body reproduction for
//! the vector operator, and the two-point reduction on a K-orthogonal grid.

use nalgebra::{Matrix2, Vector2};

use crate::fvm::{
    mpfa_discretize, mpsa_biot_discretize, BcKind, MechBc, MechCoefficients, ScalarBc,
};
use crate::mdgrid::{
    build_equilateral, build_structured, build_structured_perturbed, DomainBox, FractureNetwork,
    SubdomainGrid,
};
use crate::Real;

use super::CheckResult;

fn dirichlet_scalar(
    grid: &SubdomainGrid<Real>,
    field: impl Fn(Vector2<Real>) -> Real,
) -> (ScalarBc<Real>, Vec<Real>) {
    let mut bc = ScalarBc::no_flow(grid);
    let mut bnd = vec![0.0; grid.num_faces()];
    for f in grid.boundary_faces() {
        let v = field(grid.face_centers[f]);
        bc.set(f, BcKind::Dirichlet, v);
        bnd[f] = v;
    }
    (bc, bnd)
}

fn dirichlet_vector(
    grid: &SubdomainGrid<Real>,
    field: impl Fn(Vector2<Real>) -> Vector2<Real>,
) -> (MechBc<Real>, Vec<Real>) {
    let mut bc = MechBc::traction_free(grid);
    let mut bnd = vec![0.0; 2 * grid.num_faces()];
    for f in grid.boundary_faces() {
        let g = field(grid.face_centers[f]);
        bc.set(f, [BcKind::Dirichlet; 2], g);
        bnd[2 * f] = g.x;
        bnd[2 * f + 1] = g.y;
    }
    (bc, bnd)
}

/// Worst relative flux error of the MPFA operator on a linear field with a
/// cellwise-constant conductivity. Two configurations: a uniform
/// conductivity on a 16×16 perturbed triangulation, and a two-band
/// conductivity with the matching kinked pressure field on the unperturbed
/// grid (the band interface must be a mesh line).
pub fn mpfa_patch_test() -> CheckResult {
    let tol = 1e-10;
    let net = FractureNetwork::empty(DomainBox::unit());
    let mut worst = 0.0f64;

    let grid = build_structured_perturbed(DomainBox::unit(), (16, 16), &net, Some((0.25, 11)))
        .unwrap()
        .matrix;
    let grad = Vector2::new(2.0, -3.0);
    let (bc, bnd) = dirichlet_scalar(&grid, |x| 1.0 + grad.dot(&x));
    let k = vec![0.7; grid.num_cells()];
    let disc = mpfa_discretize(&grid, &k, &bc).unwrap();
    let p: Vec<Real> = grid.cell_centers.iter().map(|x| 1.0 + grad.dot(x)).collect();
    let q = disc.fluxes(&p, &bnd).unwrap();
    let scale = (0..grid.num_faces())
        .map(|f| (0.7 * grad.dot(&grid.face_normals[f])).abs())
        .fold(0.0f64, f64::max);
    for f in 0..grid.num_faces() {
        let exact = -0.7 * grad.dot(&grid.face_normals[f]);
        worst = worst.max((q[f] - exact).abs() / scale);
    }

    // two conductivity bands split at x = 0.5 with flux-matched gradients
    // 1·1 = 4·0.25, so q = −n_x through every face
    let grid = build_structured(DomainBox::unit(), (16, 16), &net).unwrap().matrix;
    let field = |x: Vector2<Real>| {
        if x.x <= 0.5 {
            x.x
        } else {
            0.5 + 0.25 * (x.x - 0.5)
        }
    };
    let (bc, bnd) = dirichlet_scalar(&grid, field);
    let k: Vec<Real> = grid
        .cell_centers
        .iter()
        .map(|x| if x.x < 0.5 { 1.0 } else { 4.0 })
        .collect();
    let disc = mpfa_discretize(&grid, &k, &bc).unwrap();
    let p: Vec<Real> = grid.cell_centers.iter().map(|x| field(*x)).collect();
    let q = disc.fluxes(&p, &bnd).unwrap();
    let scale = (0..grid.num_faces())
        .map(|f| grid.face_normals[f].x.abs())
        .fold(0.0f64, f64::max);
    for f in 0..grid.num_faces() {
        let exact = -grid.face_normals[f].x;
        worst = worst.max((q[f] - exact).abs() / scale);
    }

    CheckResult::new(
        "mpfa patch",
        worst <= tol,
        format!("worst relative flux error {worst:.3e} (bound {tol:.0e})"),
    )
}

/// Constant-stress reproduction (≤ 1e−9 relative) and rigid-body motions
/// (≤ 1e−10) of the MPSA operator on a 16×16 perturbed triangulation.
pub fn mpsa_patch_test() -> CheckResult {
    let net = FractureNetwork::empty(DomainBox::unit());
    let grid = build_structured_perturbed(DomainBox::unit(), (16, 16), &net, Some((0.25, 17)))
        .unwrap()
        .matrix;
    let (mu, lambda) = (10.0, 5.0);
    let coeff = MechCoefficients {
        mu,
        lambda,
        alpha: 0.0,
        thermal: 0.0,
    };
    let zero = vec![0.0; grid.num_cells()];

    let a = Matrix2::new(2e-3, 5e-4, 1e-3, -3e-3);
    let field = |x: Vector2<Real>| a * x;
    let (bc, bnd) = dirichlet_vector(&grid, field);
    let disc = mpsa_biot_discretize(&grid, coeff, &bc).unwrap();
    let u: Vec<Real> = grid
        .cell_centers
        .iter()
        .flat_map(|x| {
            let v = field(*x);
            [v.x, v.y]
        })
        .collect();
    let t = disc.tractions(&u, &bnd, &zero, &zero).unwrap();
    let sigma = (a + a.transpose()) * mu + Matrix2::identity() * (lambda * a.trace());
    let scale = (0..grid.num_faces())
        .map(|f| (sigma * grid.face_normals[f]).norm())
        .fold(0.0f64, f64::max);
    let mut worst_patch = 0.0f64;
    for f in 0..grid.num_faces() {
        let exact = sigma * grid.face_normals[f];
        let err = (Vector2::new(t[2 * f], t[2 * f + 1]) - exact).norm();
        worst_patch = worst_patch.max(err / scale);
    }

    // translation + rotation must transmit no traction at all; the scale is
    // the traction a strain of the same magnitude would carry
    let omega = 1e-3;
    let rigid = |x: Vector2<Real>| Vector2::new(2e-3 - omega * x.y, omega * x.x - 1e-3);
    let (bc, bnd) = dirichlet_vector(&grid, rigid);
    let disc = mpsa_biot_discretize(&grid, coeff, &bc).unwrap();
    let u: Vec<Real> = grid
        .cell_centers
        .iter()
        .flat_map(|x| {
            let v = rigid(*x);
            [v.x, v.y]
        })
        .collect();
    let t = disc.tractions(&u, &bnd, &zero, &zero).unwrap();
    let max_area = (0..grid.num_faces())
        .map(|f| grid.face_normals[f].norm())
        .fold(0.0f64, f64::max);
    let rigid_scale = 2.0 * mu * omega * max_area;
    let mut worst_rigid = 0.0f64;
    for f in 0..grid.num_faces() {
        worst_rigid = worst_rigid.max(t[2 * f].hypot(t[2 * f + 1]) / rigid_scale);
    }

    let passed = worst_patch <= 1e-9 && worst_rigid <= 1e-10;
    CheckResult::new(
        "mpsa patch",
        passed,
        format!(
            "linear field {worst_patch:.3e} (bound 1e-9), rigid body {worst_rigid:.3e} (bound 1e-10)"
        ),
    )
}

/// On equilateral triangles the cell centroids are circumcentres, so the
/// multi-point transmissibilities must collapse to the two-point value
/// k·|f|/d on interior faces.
pub fn two_point_equivalence() -> CheckResult {
    let g = build_equilateral(0.2_f64, 7, 6).unwrap();
    let grid = &g.matrix;
    let (bc, _) = dirichlet_scalar(grid, |x| x.x + 2.0 * x.y);
    let kappa = 1.7;
    let k = vec![kappa; grid.num_cells()];
    let disc = mpfa_discretize(grid, &k, &bc).unwrap();
    let mut worst = 0.0f64;
    for f in 0..grid.num_faces() {
        let [Some(ca), Some(cb)] = grid.face_cells[f] else {
            continue;
        };
        let d = (grid.cell_centers[cb] - grid.cell_centers[ca]).norm();
        let t_tp = kappa * grid.face_normals[f].norm() / d;
        worst = worst.max((disc.flux_cells.get(f, ca) - t_tp).abs() / t_tp);
        worst = worst.max((disc.flux_cells.get(f, cb) + t_tp).abs() / t_tp);
    }
    CheckResult::new(
        "two-point equivalence",
        worst <= 1e-10,
        format!("worst relative transmissibility error {worst:.3e} (bound 1e-10)"),
    )
}
