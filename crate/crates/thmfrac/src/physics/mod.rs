//! Governing equations of the coupled thermo-hydro-mechanical system:
//! parameters, the global state layout, and the residual/Jacobian assembly
//! over matrix, fractures, intersections and interfaces.

mod assemble;
mod params;
mod state;

pub use assemble::{
    aperture, interface_fluid_flux, intersection_aperture, intersection_volume, Assembler,
    ConservationReport, Frozen, PhaseBc, PhysicsError, PrevStep, Upstream,
};
pub use params::{MaterialParams, ParamError};
pub use state::{Block, Layout, State};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fvm::{BcKind, MechBc, ScalarBc};
    use crate::mdgrid::{build_structured, DomainBox, FractureNetwork, MixedDimGrid, Segment};
    use nalgebra::{DMatrix, Vector2};

    fn test_params() -> MaterialParams<f64> {
        MaterialParams {
            shear_modulus: 10e9,
            lame_lambda: 10e9,
            biot_alpha: 0.8,
            bulk_modulus: 20e9,
            beta_s: 3e-5,
            beta_f: 4e-4,
            porosity: 0.05,
            fluid_compressibility: 4e-10,
            permeability: 1e-14,
            viscosity: 1e-3,
            rho_f: 1000.0,
            c_f: 4200.0,
            rho_c: 2.5e6,
            conductivity: 2.0,
            conductivity_frac: 2.0,
            t_ref: 300.0,
            friction: 0.5,
            kappa_j: 1e-6,
            theta_j: 10.0,
            a_residual: 1e-5,
            a_zero: 1e-4,
            contact_c: 0.0,
        }
    }

    fn fractured_grid() -> MixedDimGrid<f64> {
        let domain = DomainBox::unit();
        let net = FractureNetwork::new(
            domain,
            vec![Segment::new(
                Vector2::new(0.25, 0.5),
                Vector2::new(0.75, 0.5),
            )],
        );
        build_structured(domain, (4, 4), &net).unwrap()
    }

    fn default_bc(grid: &MixedDimGrid<f64>) -> PhaseBc<f64> {
        PhaseBc {
            flow: ScalarBc::no_flow(&grid.matrix),
            heat: ScalarBc::no_flow(&grid.matrix),
            mech: MechBc::traction_free(&grid.matrix),
        }
    }

    #[test]
    fn interface_flux_law_example() {
        // κ_j = 2, unit face, trace 3, fracture pressure 1 → 4 into the
        // fracture
        assert_eq!(interface_fluid_flux(2.0, 1.0, 3.0, 1.0), 4.0);
    }

    #[test]
    fn aperture_formula() {
        // closed state sits at the baseline, an opening of 1e-3 on a 1e-4
        // baseline gives 1.1e-3, and closure is floored at the residual
        assert_eq!(aperture(1e-5, 1e-4, 0.0), 1e-4);
        assert_eq!(aperture(1e-5, 1e-4, 1e-3), 1.1e-3);
        assert_eq!(aperture(1e-5, 1e-4, -5e-4), 1e-5);
    }

    #[test]
    fn intersection_rules() {
        let adj = [2e-4f64, 4e-4];
        assert!((intersection_aperture(&adj) - 3e-4).abs() < 1e-19);
        assert!((intersection_volume(&adj) - 8e-8).abs() < 1e-22);
    }

    #[test]
    fn equilibrium_state_has_zero_residual() {
        let grid = fractured_grid();
        let pr = test_params();
        let asm = Assembler::new(&grid, pr, default_bc(&grid)).unwrap();
        let mut state = State::zeros(&grid);
        // uniform reference temperature everywhere
        for c in 0..grid.matrix.num_cells() {
            state.vec[state.layout.matrix_t(c)] = pr.t_ref;
        }
        for (b, g) in grid.fractures.iter().enumerate() {
            for c in 0..g.num_cells() {
                state.vec[state.layout.frac_t(b, c)] = pr.t_ref;
            }
        }
        for i in 0..grid.intersections.len() {
            state.vec[state.layout.isx_t(i)] = pr.t_ref;
        }
        let prev = PrevStep {
            divu: asm.divergence(&state).unwrap(),
            state: state.clone(),
        };
        let frozen = asm.freeze(&state, &prev.state, None).unwrap();
        let (r, _) = asm.assemble(&state, &prev, 1.0, &frozen).unwrap();
        let worst = r.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        assert!(worst < 1e-9, "residual {worst:.3e}");
    }

    #[test]
    fn two_cell_fracture_mass_balance_by_hand() {
        // one fracture, uniform fracture opening of 1e-4 applied over one
        // step of Δt = 10 s with everything else at rest: each fracture cell
        // of length ℓ must show a mass residual of ℓ·Δa/Δt minus the (zero)
        // interface inflow
        let grid = fractured_grid();
        let pr = test_params();
        let asm = Assembler::new(&grid, pr, default_bc(&grid)).unwrap();
        let mut base = State::zeros(&grid);
        for c in 0..grid.matrix.num_cells() {
            base.vec[base.layout.matrix_t(c)] = pr.t_ref;
        }
        for (b, g) in grid.fractures.iter().enumerate() {
            for c in 0..g.num_cells() {
                base.vec[base.layout.frac_t(b, c)] = pr.t_ref;
            }
        }
        let prev = PrevStep {
            divu: asm.divergence(&base).unwrap(),
            state: base.clone(),
        };
        let mut state = base;
        let iface = &grid.mf_interfaces[0];
        let opening = 1e-4;
        for pair in 0..iface.num_pairs() {
            let pc = iface.interface_cell(crate::mdgrid::Side::Plus, pair);
            for d in 0..2 {
                state.vec[state.layout.iface_u(0, pc, d)] =
                    opening * iface.ref_normal[d];
            }
        }
        let frozen = asm.freeze(&state, &prev.state, None).unwrap();
        let dt = 10.0;
        let (r, _) = asm.assemble(&state, &prev, dt, &frozen).unwrap();
        let g = &grid.fractures[0];
        for c in 0..g.num_cells() {
            let expected = g.cell_volumes[c] * opening / dt;
            let got = r[state.layout.frac_p(0, c)];
            assert!(
                (got - expected).abs() < 1e-12 * expected.abs(),
                "cell {c}: {got:.6e} vs {expected:.6e}"
            );
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let grid = fractured_grid();
        let pr = test_params();
        let mut bc = default_bc(&grid);
        // mixed external conditions so every operator block is exercised
        for f in grid.matrix.boundary_faces() {
            let x = grid.matrix.face_centers[f];
            if x.x < 1e-9 {
                bc.flow.set(f, BcKind::Dirichlet, 2e5);
                bc.heat.set(f, BcKind::Dirichlet, pr.t_ref - 20.0);
            }
            if x.x > 1.0 - 1e-9 {
                bc.flow.set(f, BcKind::Dirichlet, 1e5);
            }
            if x.y < 1e-9 {
                bc.mech
                    .set(f, [BcKind::Dirichlet; 2], Vector2::zeros());
            }
        }
        let asm = Assembler::new(&grid, pr, bc).unwrap();
        let lay = asm.layout.clone();
        let n = lay.len();

        // smooth, non-trivial state: everything open and off the aperture
        // floor so the frozen system is differentiable
        let mut state = State::zeros(&grid);
        for c in 0..grid.matrix.num_cells() {
            let x = grid.matrix.cell_centers[c];
            state.vec[lay.matrix_p(c)] = 1.5e5 + 3e4 * (1.7 * x.x - 0.4 * x.y);
            state.vec[lay.matrix_t(c)] = pr.t_ref + 8.0 * (x.x + 0.5 * x.y);
            state.vec[lay.matrix_u(c, 0)] = 1e-5 * (x.x * x.y + 0.2);
            state.vec[lay.matrix_u(c, 1)] = -2e-5 * (x.x - 0.3 * x.y);
        }
        for (b, g) in grid.fractures.iter().enumerate() {
            for c in 0..g.num_cells() {
                let x = g.cell_centers[c];
                state.vec[lay.frac_p(b, c)] = 1.4e5 + 2e4 * x.x;
                state.vec[lay.frac_t(b, c)] = pr.t_ref + 5.0 * x.x;
                state.vec[lay.frac_lambda(b, c, 0)] = -3e5 - 1e5 * x.x;
                state.vec[lay.frac_lambda(b, c, 1)] = 4e4;
            }
        }
        for (j, iface) in grid.mf_interfaces.iter().enumerate() {
            for ic in 0..iface.num_cells() {
                let f = iface.matrix_face(ic);
                let x = grid.matrix.face_centers[f];
                let (side, _) = iface.side_of(ic);
                let sgn = if side == crate::mdgrid::Side::Plus { 1.0 } else { -1.0 };
                for d in 0..2 {
                    state.vec[lay.iface_u(j, ic, d)] =
                        sgn * 3e-5 * iface.ref_normal[d] + 1e-5 * x.x;
                }
                state.vec[lay.iface_v(j, ic)] = 1e-7 * (0.5 + x.x);
                state.vec[lay.iface_w(j, ic)] = 2.0 * (0.3 - x.x);
                state.vec[lay.iface_s(j, ic)] = 1e-4;
            }
        }
        let mut prev_state = state.clone();
        // previous step slightly different so time derivatives are active
        for v in prev_state.vec.iter_mut() {
            *v *= 0.97;
        }
        let prev = PrevStep {
            divu: asm.divergence(&prev_state).unwrap(),
            state: prev_state,
        };
        let dt = 50.0;
        let frozen = asm.freeze(&state, &prev.state, None).unwrap();
        let (r0, trip) = asm.assemble(&state, &prev, dt, &frozen).unwrap();
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for (i, j, v) in trip {
            jac[(i, j)] += v;
        }

        let jmax = jac.amax();
        let mut worst = 0.0f64;
        let _ = &r0;
        for col in 0..n {
            let eps = 1e-7 * (1.0 + state.vec[col].abs());
            let mut pert = state.clone();
            pert.vec[col] += eps;
            let (r_plus, _) = asm.assemble(&pert, &prev, dt, &frozen).unwrap();
            pert.vec[col] = state.vec[col] - eps;
            let (r_minus, _) = asm.assemble(&pert, &prev, dt, &frozen).unwrap();
            for row in 0..n {
                let fd = (r_plus[row] - r_minus[row]) / (2.0 * eps);
                let err = (fd - jac[(row, col)]).abs()
                    / (jac[(row, col)].abs() + 1e-8 * jmax + 1e-300);
                if err > worst && (fd.abs() + jac[(row, col)].abs()) > 1e-10 * jmax {
                    worst = err;
                }
            }
        }
        assert!(worst < 1e-5, "worst relative Jacobian error {worst:.3e}");
    }
}
