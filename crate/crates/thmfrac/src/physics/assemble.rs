//! Residual and Jacobian assembly of the fully coupled system on one
//! mixed-dimensional grid.
//!
//! The 2D matrix carries momentum, mass and energy balances discretised with
//! the cached multi-point operators; fracture branches carry mass and energy
//! balances with aperture-dependent two-point transmissibilities assembled
//! inline (so that the aperture chain rule ends up in the Jacobian);
//! intersections carry point balances. Interface cells carry the flux laws
//! and the traction balance, fracture cells additionally the contact rows.
//!
//! Sign conventions: interface fluid/heat fluxes v, w, s are positive from
//! the matrix into the fracture; 1D end fluxes are positive out of the
//! branch; the interface reference normal points from the minus to the plus
//! side and the displacement jump is [[u]] = u⁻ − u⁺.

use nalgebra::Vector2;
use thiserror::Error;

use super::params::MaterialParams;
use super::state::{Layout, State};
use crate::contact::{self, CellContact, ContactError, FrozenContact, Regime};
use crate::fvm::{
    mpfa_discretize, mpsa_biot_discretize, BcKind, FvmError, MechBc, MechCoefficients, ScalarBc,
    ScalarDiscretization, VectorDiscretization,
};
use crate::mdgrid::{FaceTag, MixedDimGrid, Side};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum PhysicsError {
    #[error(transparent)]
    Fvm(#[from] FvmError),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error("non-finite residual in block {block} (row {row})")]
    NonFiniteResidual { block: String, row: usize },
}

/// Boundary conditions of one loading phase on the external matrix
/// boundary. Internal (fracture) faces are overridden by the assembler.
#[derive(Debug, Clone)]
pub struct PhaseBc<F> {
    pub flow: ScalarBc<F>,
    pub heat: ScalarBc<F>,
    pub mech: MechBc<F>,
}

/// Upstream source of an advected face value under a frozen carrier flux.
#[derive(Debug, Clone, Copy)]
pub enum Upstream<F> {
    /// A cell of the same subdomain.
    Cell(usize),
    /// The temperature of intersection `i` (1D end faces only).
    Isx(usize),
    /// A fixed boundary value.
    Given(F),
    /// No advection through this face (fracture faces of the matrix use the
    /// interface unknowns instead).
    None,
}

/// Per-iteration frozen data: upwind directions, interface upstream switches
/// and the contact row coefficients. Residual and Jacobian are smooth (and
/// mutually consistent) while this is held fixed.
#[derive(Debug, Clone)]
pub struct Frozen<F> {
    pub matrix_up: Vec<Upstream<F>>,
    pub frac_up: Vec<Vec<Upstream<F>>>,
    /// Per interface cell: advected interface heat takes the matrix-side
    /// trace (true) or the fracture temperature (false).
    pub s_matrix_side: Vec<Vec<bool>>,
    pub contact: Vec<Vec<FrozenContact<F>>>,
}

impl<F> Frozen<F> {
    pub fn regimes(&self) -> Vec<Vec<Regime>> {
        self.contact
            .iter()
            .map(|b| b.iter().map(|c| c.regime).collect())
            .collect()
    }
}

/// Global mass/energy balance defect of one accepted step, with the scales
/// the defects should be compared against.
#[derive(Debug, Clone, Copy)]
pub struct ConservationReport {
    pub mass_defect: f64,
    pub mass_scale: f64,
    pub energy_defect: f64,
    pub energy_scale: f64,
}

/// Converged data of the previous time step needed by the time derivatives:
/// the state itself and the integrated matrix divergence evaluated with the
/// operator that produced it.
#[derive(Debug, Clone)]
pub struct PrevStep<F> {
    pub state: State<F>,
    pub divu: Vec<F>,
}

/// Aperture of one fracture cell with its dependence on the interface
/// displacement unknowns.
#[derive(Debug, Clone)]
struct Aperture<F> {
    a: F,
    a_prev: F,
    /// d a / d(interface displacement dof); empty when the cell sits on the
    /// residual aperture floor.
    chain: Vec<(usize, F)>,
}

/// A face flux value with its sparse derivative.
#[derive(Debug, Clone)]
struct FluxVal<F> {
    q: F,
    dq: Vec<(usize, F)>,
}

/// One subdomain's worth of physics assembly, bound to a grid, a parameter
/// set and the boundary conditions of the current phase.
pub struct Assembler<'g, F> {
    pub grid: &'g MixedDimGrid<F>,
    pub params: MaterialParams<F>,
    pub layout: Layout,
    bc: PhaseBc<F>,
    flow: ScalarDiscretization<F>,
    heat: ScalarDiscretization<F>,
    mech: VectorDiscretization<F>,
    /// matrix face -> (interface, interface cell) for fracture faces.
    face_iface: Vec<Option<(usize, usize)>>,
    /// per intersection: (branch, end face, adjacent cell) of every
    /// adjoining branch end.
    isx_ends: Vec<Vec<(usize, usize, usize)>>,
    pub contact_c: F,
    traction_scale: F,
}

impl<'g, F: Scalar> Assembler<'g, F> {
    pub fn new(
        grid: &'g MixedDimGrid<F>,
        params: MaterialParams<F>,
        mut bc: PhaseBc<F>,
    ) -> Result<Self, PhysicsError> {
        let m = &grid.matrix;
        let mut face_iface = vec![None; m.num_faces()];
        for (j, iface) in grid.mf_interfaces.iter().enumerate() {
            for ic in 0..iface.num_cells() {
                face_iface[iface.matrix_face(ic)] = Some((j, ic));
            }
        }
        // internal faces: flux laws supply Neumann data for the scalars, the
        // interface displacement is a Dirichlet value for momentum
        for (f, slot) in face_iface.iter().enumerate() {
            if slot.is_some() {
                bc.flow.set(f, BcKind::Neumann, F::zero());
                bc.heat.set(f, BcKind::Neumann, F::zero());
                bc.mech
                    .set(f, [BcKind::Dirichlet; 2], Vector2::zeros());
            }
        }
        let nc = m.num_cells();
        let flow = mpfa_discretize(m, &vec![params.mobility(); nc], &bc.flow)?;
        let heat = mpfa_discretize(m, &vec![params.conductivity; nc], &bc.heat)?;
        let mech = mpsa_biot_discretize(
            m,
            MechCoefficients {
                mu: params.shear_modulus,
                lambda: params.lame_lambda,
                alpha: params.biot_alpha,
                thermal: params.thermal_stress(),
            },
            &bc.mech,
        )?;
        let mut isx_ends = vec![Vec::new(); grid.intersections.len()];
        for fx in &grid.fx_interfaces {
            isx_ends[fx.isx].push((fx.branch, fx.branch_face, fx.branch_cell));
        }
        let contact_c = params.contact_c_for(grid.matrix.mean_cell_size());
        Ok(Self {
            grid,
            params,
            layout: Layout::new(grid),
            bc,
            flow,
            heat,
            mech,
            face_iface,
            isx_ends,
            contact_c,
            traction_scale: params.shear_modulus,
        })
    }

    pub fn bc(&self) -> &PhaseBc<F> {
        &self.bc
    }

    fn flow_bnd_dof(&self, f: usize) -> Option<usize> {
        self.face_iface[f].map(|(j, ic)| self.layout.iface_v(j, ic))
    }

    fn heat_bnd_dof(&self, f: usize) -> Option<usize> {
        self.face_iface[f].map(|(j, ic)| self.layout.iface_w(j, ic))
    }

    fn mech_bnd_dof(&self, col: usize) -> Option<usize> {
        let (f, comp) = (col / 2, col % 2);
        self.face_iface[f].map(|(j, ic)| self.layout.iface_u(j, ic, comp))
    }

    /// Boundary value vectors of the matrix operators for a given state:
    /// external faces take the phase values, fracture faces the interface
    /// unknowns.
    fn boundary_vectors(&self, state: &State<F>) -> (Vec<F>, Vec<F>, Vec<F>) {
        let m = &self.grid.matrix;
        let nf = m.num_faces();
        let lay = &state.layout;
        let mut flow_bnd = self.bc.flow.value.clone();
        let mut heat_bnd = self.bc.heat.value.clone();
        let mut mech_bnd = vec![F::zero(); 2 * nf];
        for f in 0..nf {
            match self.face_iface[f] {
                Some((j, ic)) => {
                    flow_bnd[f] = state.vec[lay.iface_v(j, ic)];
                    heat_bnd[f] = state.vec[lay.iface_w(j, ic)];
                    mech_bnd[2 * f] = state.vec[lay.iface_u(j, ic, 0)];
                    mech_bnd[2 * f + 1] = state.vec[lay.iface_u(j, ic, 1)];
                }
                None => {
                    mech_bnd[2 * f] = self.bc.mech.value[f].x;
                    mech_bnd[2 * f + 1] = self.bc.mech.value[f].y;
                }
            }
        }
        (flow_bnd, heat_bnd, mech_bnd)
    }

    fn matrix_fields(&self, state: &State<F>) -> (Vec<F>, Vec<F>, Vec<F>, Vec<F>) {
        let lay = &state.layout;
        let nc = self.grid.matrix.num_cells();
        let u: Vec<F> = (0..2 * nc).map(|i| state.vec[i]).collect();
        let p: Vec<F> = (0..nc).map(|c| state.vec[lay.matrix_p(c)]).collect();
        let t: Vec<F> = (0..nc).map(|c| state.vec[lay.matrix_t(c)]).collect();
        let t_rel: Vec<F> = t.iter().map(|&x| x - self.params.t_ref).collect();
        (u, p, t, t_rel)
    }

    /// Integrated ∫div u per matrix cell for the given state, used both in
    /// assembly and to cache the previous-step value.
    pub fn divergence(&self, state: &State<F>) -> Result<Vec<F>, PhysicsError> {
        let (u, p, _, t_rel) = self.matrix_fields(state);
        let (_, _, mech_bnd) = self.boundary_vectors(state);
        Ok(self.mech.divergence(&u, &mech_bnd, &p, &t_rel)?)
    }

    /// Current apertures with their derivative chains, per branch cell.
    fn apertures(&self, state: &State<F>, prev: &State<F>) -> Vec<Vec<Aperture<F>>> {
        let lay = &self.layout;
        self.grid
            .mf_interfaces
            .iter()
            .enumerate()
            .map(|(j, iface)| {
                let n = iface.num_pairs();
                let nrm = iface.ref_normal;
                (0..n)
                    .map(|pair| {
                        let opening = |s: &State<F>| {
                            let up = s.iface_u_vec(j, iface.interface_cell(Side::Plus, pair));
                            let um = s.iface_u_vec(j, iface.interface_cell(Side::Minus, pair));
                            (up - um).dot(&nrm)
                        };
                        let raw = self.params.a_zero + opening(state);
                        let floored = raw <= self.params.a_residual;
                        let a = aperture(self.params.a_residual, self.params.a_zero, opening(state));
                        let a_prev =
                            aperture(self.params.a_residual, self.params.a_zero, opening(prev));
                        debug_assert_eq!(a, if floored { self.params.a_residual } else { raw });
                        let mut chain = Vec::new();
                        if !floored {
                            let pc = iface.interface_cell(Side::Plus, pair);
                            let mc = iface.interface_cell(Side::Minus, pair);
                            for d in 0..2 {
                                chain.push((lay.iface_u(j, pc, d), nrm[d]));
                                chain.push((lay.iface_u(j, mc, d), -nrm[d]));
                            }
                        }
                        Aperture { a, a_prev, chain }
                    })
                    .collect()
            })
            .collect()
    }

    /// Two-point fluxes on branch `b` with aperture-dependent conductivity
    /// `k(cell)` and its aperture derivative, for the field picked out by
    /// `field_dof` (fracture p or T) and the matching intersection dof.
    fn branch_two_point(
        &self,
        b: usize,
        state: &State<F>,
        aps: &[Aperture<F>],
        k_of: impl Fn(F) -> F,
        dk_of: impl Fn(F) -> F,
        field_dof: impl Fn(usize) -> usize,
        isx_dof: impl Fn(usize) -> usize,
    ) -> Vec<FluxVal<F>> {
        let g = &self.grid.fractures[b];
        let mut out = Vec::with_capacity(g.num_faces());
        let half_dist = |f: usize, c: usize| (g.face_centers[f] - g.cell_centers[c]).norm();
        for f in 0..g.num_faces() {
            let mut fv = FluxVal {
                q: F::zero(),
                dq: Vec::new(),
            };
            match g.face_tags[f] {
                FaceTag::Interior => {
                    let cl = g.face_cells[f][0].unwrap();
                    let cr = g.face_cells[f][1].unwrap();
                    let (dl, dr) = (half_dist(f, cl), half_dist(f, cr));
                    let (kl, kr) = (k_of(aps[cl].a), k_of(aps[cr].a));
                    let t = F::one() / (dl / kl + dr / kr);
                    let dp = state.vec[field_dof(cl)] - state.vec[field_dof(cr)];
                    fv.q = t * dp;
                    fv.dq.push((field_dof(cl), t));
                    fv.dq.push((field_dof(cr), -t));
                    let dt_dkl = t * t * dl / (kl * kl);
                    let dt_dkr = t * t * dr / (kr * kr);
                    for &(dof, da) in &aps[cl].chain {
                        fv.dq.push((dof, dt_dkl * dk_of(aps[cl].a) * da * dp));
                    }
                    for &(dof, da) in &aps[cr].chain {
                        fv.dq.push((dof, dt_dkr * dk_of(aps[cr].a) * da * dp));
                    }
                }
                FaceTag::IntersectionEnd { isx } => {
                    let ca = g.face_cells[f][0].unwrap();
                    let d = half_dist(f, ca);
                    let k = k_of(aps[ca].a);
                    let t = k / d;
                    let dp = state.vec[field_dof(ca)] - state.vec[isx_dof(isx)];
                    fv.q = t * dp;
                    fv.dq.push((field_dof(ca), t));
                    fv.dq.push((isx_dof(isx), -t));
                    for &(dof, da) in &aps[ca].chain {
                        fv.dq.push((dof, dk_of(aps[ca].a) / d * da * dp));
                    }
                }
                _ => {}
            }
            out.push(fv);
        }
        out
    }

    fn frac_fluxes(&self, state: &State<F>, aps: &[Vec<Aperture<F>>]) -> Vec<Vec<FluxVal<F>>> {
        let lay = self.layout.clone();
        (0..self.grid.fractures.len())
            .map(|b| {
                self.branch_two_point(
                    b,
                    state,
                    &aps[b],
                    |a| self.params.cubic_law(a),
                    |a| self.params.cubic_law_da(a),
                    |c| lay.frac_p(b, c),
                    |i| lay.isx_p(i),
                )
            })
            .collect()
    }

    fn frac_conduction(&self, state: &State<F>, aps: &[Vec<Aperture<F>>]) -> Vec<Vec<FluxVal<F>>> {
        let lay = self.layout.clone();
        let th = self.params.conductivity_frac;
        (0..self.grid.fractures.len())
            .map(|b| {
                self.branch_two_point(
                    b,
                    state,
                    &aps[b],
                    |a| a * th,
                    |_| th,
                    |c| lay.frac_t(b, c),
                    |i| lay.isx_t(i),
                )
            })
            .collect()
    }

    /// Freeze upwind directions, interface upstream switches and contact row
    /// coefficients at the current iterate.
    /// Freeze the per-iteration data at the current iterate. `last` is the
    /// frozen data of the previous Newton iteration (if any) and is used to
    /// break slide-direction two-cycles; pass `None` outside the loop.
    pub fn freeze(
        &self,
        state: &State<F>,
        prev: &State<F>,
        last: Option<&Frozen<F>>,
    ) -> Result<Frozen<F>, PhysicsError> {
        let m = &self.grid.matrix;
        let lay = &self.layout;
        let (flow_bnd, _, _) = self.boundary_vectors(state);
        let (_, p, _, _) = self.matrix_fields(state);
        let q_m = self.flow.fluxes(&p, &flow_bnd)?;
        let mut matrix_up = Vec::with_capacity(m.num_faces());
        for f in 0..m.num_faces() {
            if self.face_iface[f].is_some() {
                matrix_up.push(Upstream::None);
                continue;
            }
            let up = match m.face_cells[f] {
                [Some(c0), Some(c1)] => {
                    if q_m[f] >= F::zero() {
                        Upstream::Cell(c0)
                    } else {
                        Upstream::Cell(c1)
                    }
                }
                [Some(c0), None] => {
                    if q_m[f] >= F::zero() || self.bc.heat.kind[f] != BcKind::Dirichlet {
                        Upstream::Cell(c0)
                    } else {
                        Upstream::Given(self.bc.heat.value[f])
                    }
                }
                _ => Upstream::None,
            };
            matrix_up.push(up);
        }

        let aps = self.apertures(state, prev);
        let qf = self.frac_fluxes(state, &aps);
        let mut frac_up = Vec::new();
        for (b, g) in self.grid.fractures.iter().enumerate() {
            let mut ups = Vec::with_capacity(g.num_faces());
            for f in 0..g.num_faces() {
                let up = match g.face_tags[f] {
                    FaceTag::Interior => {
                        if qf[b][f].q >= F::zero() {
                            Upstream::Cell(g.face_cells[f][0].unwrap())
                        } else {
                            Upstream::Cell(g.face_cells[f][1].unwrap())
                        }
                    }
                    FaceTag::IntersectionEnd { isx } => {
                        if qf[b][f].q >= F::zero() {
                            Upstream::Cell(g.face_cells[f][0].unwrap())
                        } else {
                            Upstream::Isx(isx)
                        }
                    }
                    _ => Upstream::None,
                };
                ups.push(up);
            }
            frac_up.push(ups);
        }

        let mut s_matrix_side = Vec::new();
        for (j, iface) in self.grid.mf_interfaces.iter().enumerate() {
            s_matrix_side.push(
                (0..iface.num_cells())
                    .map(|ic| state.vec[lay.iface_v(j, ic)] >= F::zero())
                    .collect(),
            );
        }

        let mut frozen_contact = Vec::new();
        for (b, iface) in self.grid.mf_interfaces.iter().enumerate() {
            let mut cells = Vec::with_capacity(iface.num_pairs());
            for pair in 0..iface.num_pairs() {
                let x = self.cell_contact(state, prev, b, pair);
                let fz_cell = contact::freeze_cell_hinted(
                    &x,
                    self.params.friction,
                    self.contact_c,
                    self.traction_scale,
                    last.map(|fz| &fz.contact[b][pair]),
                )?;
                if std::env::var("THMFRAC_DEBUG_CONTACT").is_ok() {
                    let b_val = contact::friction_bound(
                        self.params.friction,
                        self.contact_c,
                        x.lambda_n,
                        x.jump_n,
                    );
                    eprintln!(
                        "  cell {b}/{pair}: ln {:+.4e} lt {:+.4e} bound {:+.4e} jn {:+.3e} dt {:+.3e} -> {:?} coef {:+.3e} rhs {:+.3e} dir {:+.0e} (c {:.3e})",
                        x.lambda_n.to_subset().unwrap_or(f64::NAN),
                        x.lambda_t.to_subset().unwrap_or(f64::NAN),
                        b_val.to_subset().unwrap_or(f64::NAN),
                        x.jump_n.to_subset().unwrap_or(f64::NAN),
                        x.djump_t.to_subset().unwrap_or(f64::NAN),
                        fz_cell.regime,
                        fz_cell.stick_coef.to_subset().unwrap_or(f64::NAN),
                        fz_cell.stick_rhs.to_subset().unwrap_or(f64::NAN),
                        fz_cell.slide_dir.to_subset().unwrap_or(f64::NAN),
                        self.contact_c.to_subset().unwrap_or(f64::NAN),
                    );
                }
                cells.push(fz_cell);
            }
            frozen_contact.push(cells);
        }
        Ok(Frozen {
            matrix_up,
            frac_up,
            s_matrix_side,
            contact: frozen_contact,
        })
    }

    fn cell_contact(&self, state: &State<F>, prev: &State<F>, b: usize, pair: usize) -> CellContact<F> {
        let iface = &self.grid.mf_interfaces[b];
        let lay = &self.layout;
        let jump = state.jump(iface, pair);
        let jump_prev = prev.jump(iface, pair);
        CellContact {
            lambda_n: state.vec[lay.frac_lambda(b, pair, 0)],
            lambda_t: state.vec[lay.frac_lambda(b, pair, 1)],
            jump_n: jump.dot(&iface.ref_normal),
            djump_t: (jump - jump_prev).dot(&iface.ref_tangent),
        }
    }

    /// Assemble the residual and Jacobian triplets at `state` with the given
    /// frozen data. Rows follow the unknown layout.
    #[allow(clippy::too_many_lines)]
    pub fn assemble(
        &self,
        state: &State<F>,
        prev: &PrevStep<F>,
        dt: F,
        frozen: &Frozen<F>,
    ) -> Result<(Vec<F>, Vec<(usize, usize, F)>), PhysicsError> {
        let m = &self.grid.matrix;
        let lay = &self.layout;
        let pr = &self.params;
        let n = lay.len();
        let mut r = vec![F::zero(); n];
        let mut jac: Vec<(usize, usize, F)> = Vec::new();

        let (flow_bnd, heat_bnd, mech_bnd) = self.boundary_vectors(state);
        let (u, p, t, t_rel) = self.matrix_fields(state);
        let q_m = self.flow.fluxes(&p, &flow_bnd)?;
        let cond_m = self.heat.fluxes(&t, &heat_bnd)?;
        let trac = self.mech.tractions(&u, &mech_bnd, &p, &t_rel)?;
        let divu = self.mech.divergence(&u, &mech_bnd, &p, &t_rel)?;
        let tr_p = self.flow.traces(&p, &flow_bnd)?;
        let tr_t = self.heat.traces(&t, &heat_bnd)?;
        let aps = self.apertures(state, &prev.state);
        let qf = self.frac_fluxes(state, &aps);
        let condf = self.frac_conduction(state, &aps);

        let rho_cf = pr.rho_cf();
        let inv_dt = F::one() / dt;

        // matrix momentum: sum of outward total tractions per cell
        for c in 0..m.num_cells() {
            for d in 0..2 {
                let row = lay.matrix_u(c, d);
                for &(f, sg) in &m.cell_faces[c] {
                    let s = F::from_i8(sg).unwrap();
                    r[row] += s * trac[2 * f + d];
                    self.scatter_stress_row(&mut jac, row, 2 * f + d, s);
                }
            }
        }

        // matrix mass
        let stor = pr.storativity();
        for c in 0..m.num_cells() {
            let row = lay.matrix_p(c);
            let vol = m.cell_volumes[c];
            let dp = state.vec[lay.matrix_p(c)] - prev.state.vec[lay.matrix_p(c)];
            let dtm = state.vec[lay.matrix_t(c)] - prev.state.vec[lay.matrix_t(c)];
            r[row] += inv_dt
                * (stor * vol * dp + pr.biot_alpha * (divu[c] - prev.divu[c])
                    - pr.porosity * pr.beta_f * vol * dtm);
            jac.push((row, lay.matrix_p(c), inv_dt * stor * vol));
            jac.push((row, lay.matrix_t(c), -inv_dt * pr.porosity * pr.beta_f * vol));
            self.scatter_divu_row(&mut jac, row, c, inv_dt * pr.biot_alpha);
            for &(f, sg) in &m.cell_faces[c] {
                let s = F::from_i8(sg).unwrap();
                r[row] += s * q_m[f];
                self.scatter_scalar_row(&mut jac, row, &self.flow, f, s, |c2| lay.matrix_p(c2), |fb| {
                    self.flow_bnd_dof(fb)
                });
            }
        }

        // matrix energy
        let thermo = pr.thermal_stress() * pr.t_ref;
        for c in 0..m.num_cells() {
            let row = lay.matrix_t(c);
            let vol = m.cell_volumes[c];
            let dp = state.vec[lay.matrix_p(c)] - prev.state.vec[lay.matrix_p(c)];
            let dtm = state.vec[lay.matrix_t(c)] - prev.state.vec[lay.matrix_t(c)];
            r[row] += inv_dt
                * (pr.rho_c * vol * dtm + thermo * (divu[c] - prev.divu[c])
                    - pr.porosity * pr.beta_f * pr.t_ref * vol * dp);
            jac.push((row, lay.matrix_t(c), inv_dt * pr.rho_c * vol));
            jac.push((
                row,
                lay.matrix_p(c),
                -inv_dt * pr.porosity * pr.beta_f * pr.t_ref * vol,
            ));
            self.scatter_divu_row(&mut jac, row, c, inv_dt * thermo);
            for &(f, sg) in &m.cell_faces[c] {
                let s = F::from_i8(sg).unwrap();
                // conduction (fracture faces pass the interface value w)
                r[row] += s * cond_m[f];
                self.scatter_scalar_row(&mut jac, row, &self.heat, f, s, |c2| lay.matrix_t(c2), |fb| {
                    self.heat_bnd_dof(fb)
                });
                // advection
                if let Some((j, ic)) = self.face_iface[f] {
                    r[row] += s * state.vec[lay.iface_s(j, ic)];
                    jac.push((row, lay.iface_s(j, ic), s));
                    continue;
                }
                let (t_up, t_dof) = match frozen.matrix_up[f] {
                    Upstream::Cell(cu) => (t[cu], Some(lay.matrix_t(cu))),
                    Upstream::Given(g) => (g, None),
                    _ => continue,
                };
                r[row] += s * rho_cf * q_m[f] * t_up;
                if let Some(dof) = t_dof {
                    jac.push((row, dof, s * rho_cf * q_m[f]));
                }
                self.scatter_scalar_row(
                    &mut jac,
                    row,
                    &self.flow,
                    f,
                    s * rho_cf * t_up,
                    |c2| lay.matrix_p(c2),
                    |fb| self.flow_bnd_dof(fb),
                );
            }
        }

        // fracture branches: mass and energy with specific-volume weights
        for (b, g) in self.grid.fractures.iter().enumerate() {
            let iface = &self.grid.mf_interfaces[b];
            for c in 0..g.num_cells() {
                let vol = g.cell_volumes[c];
                let ap = &aps[b][c];
                let dp = state.vec[lay.frac_p(b, c)] - prev.state.vec[lay.frac_p(b, c)];
                let dtm = state.vec[lay.frac_t(b, c)] - prev.state.vec[lay.frac_t(b, c)];
                let vplus = lay.iface_v(b, iface.interface_cell(Side::Plus, c));
                let vminus = lay.iface_v(b, iface.interface_cell(Side::Minus, c));

                // mass
                let row = lay.frac_p(b, c);
                r[row] += vol
                    * inv_dt
                    * (ap.a * pr.fluid_compressibility * dp + (ap.a - ap.a_prev)
                        - ap.a * pr.beta_f * dtm);
                jac.push((row, lay.frac_p(b, c), vol * inv_dt * ap.a * pr.fluid_compressibility));
                jac.push((row, lay.frac_t(b, c), -vol * inv_dt * ap.a * pr.beta_f));
                let acc_da =
                    vol * inv_dt * (pr.fluid_compressibility * dp + F::one() - pr.beta_f * dtm);
                for &(dof, da) in &ap.chain {
                    jac.push((row, dof, acc_da * da));
                }
                for &(f, sg) in &g.cell_faces[c] {
                    let s = F::from_i8(sg).unwrap();
                    r[row] += s * qf[b][f].q;
                    for &(dof, dv) in &qf[b][f].dq {
                        jac.push((row, dof, s * dv));
                    }
                }
                r[row] -= state.vec[vplus] + state.vec[vminus];
                jac.push((row, vplus, -F::one()));
                jac.push((row, vminus, -F::one()));

                // energy
                let row = lay.frac_t(b, c);
                r[row] += vol * inv_dt * (ap.a * pr.rho_c * dtm - ap.a * pr.beta_f * pr.t_ref * dp);
                jac.push((row, lay.frac_t(b, c), vol * inv_dt * ap.a * pr.rho_c));
                jac.push((row, lay.frac_p(b, c), -vol * inv_dt * ap.a * pr.beta_f * pr.t_ref));
                let acc_da = vol * inv_dt * (pr.rho_c * dtm - pr.beta_f * pr.t_ref * dp);
                for &(dof, da) in &ap.chain {
                    jac.push((row, dof, acc_da * da));
                }
                for &(f, sg) in &g.cell_faces[c] {
                    let s = F::from_i8(sg).unwrap();
                    r[row] += s * condf[b][f].q;
                    for &(dof, dv) in &condf[b][f].dq {
                        jac.push((row, dof, s * dv));
                    }
                    let (t_up, t_dof) = match frozen.frac_up[b][f] {
                        Upstream::Cell(cu) => (state.vec[lay.frac_t(b, cu)], Some(lay.frac_t(b, cu))),
                        Upstream::Isx(i) => (state.vec[lay.isx_t(i)], Some(lay.isx_t(i))),
                        _ => continue,
                    };
                    r[row] += s * rho_cf * qf[b][f].q * t_up;
                    if let Some(dof) = t_dof {
                        jac.push((row, dof, s * rho_cf * qf[b][f].q));
                    }
                    for &(dof, dv) in &qf[b][f].dq {
                        jac.push((row, dof, s * rho_cf * t_up * dv));
                    }
                }
                let wplus = lay.iface_w(b, iface.interface_cell(Side::Plus, c));
                let wminus = lay.iface_w(b, iface.interface_cell(Side::Minus, c));
                let splus = lay.iface_s(b, iface.interface_cell(Side::Plus, c));
                let sminus = lay.iface_s(b, iface.interface_cell(Side::Minus, c));
                r[row] -= state.vec[wplus] + state.vec[wminus] + state.vec[splus] + state.vec[sminus];
                for dof in [wplus, wminus, splus, sminus] {
                    jac.push((row, dof, -F::one()));
                }
            }
        }

        // intersections: point balances fed by the branch end fluxes
        for i in 0..self.grid.intersections.len() {
            let ends = &self.isx_ends[i];
            // specific volume: product of the adjacent branch-cell apertures
            let vx: F = ends
                .iter()
                .map(|&(b, _, c)| aps[b][c].a)
                .fold(F::one(), |acc, a| acc * a);
            let vx_prev: F = ends
                .iter()
                .map(|&(b, _, c)| aps[b][c].a_prev)
                .fold(F::one(), |acc, a| acc * a);
            let dp = state.vec[lay.isx_p(i)] - prev.state.vec[lay.isx_p(i)];
            let dtm = state.vec[lay.isx_t(i)] - prev.state.vec[lay.isx_t(i)];

            let row = lay.isx_p(i);
            r[row] += inv_dt * (vx * pr.fluid_compressibility * dp + (vx - vx_prev) - vx * pr.beta_f * dtm);
            jac.push((row, lay.isx_p(i), inv_dt * vx * pr.fluid_compressibility));
            jac.push((row, lay.isx_t(i), -inv_dt * vx * pr.beta_f));
            let acc_dvx = inv_dt * (pr.fluid_compressibility * dp + F::one() - pr.beta_f * dtm);
            for (e, &(b, _, c)) in ends.iter().enumerate() {
                // product rule over the adjacent apertures
                let others: F = ends
                    .iter()
                    .enumerate()
                    .filter(|&(e2, _)| e2 != e)
                    .map(|(_, &(b2, _, c2))| aps[b2][c2].a)
                    .fold(F::one(), |acc, a| acc * a);
                for &(dof, da) in &aps[b][c].chain {
                    jac.push((row, dof, acc_dvx * others * da));
                }
            }
            for &(b, f, _) in ends {
                r[row] -= qf[b][f].q;
                for &(dof, dv) in &qf[b][f].dq {
                    jac.push((row, dof, -dv));
                }
            }

            let row = lay.isx_t(i);
            r[row] += inv_dt * (vx * pr.rho_c * dtm - vx * pr.beta_f * pr.t_ref * dp);
            jac.push((row, lay.isx_t(i), inv_dt * vx * pr.rho_c));
            jac.push((row, lay.isx_p(i), -inv_dt * vx * pr.beta_f * pr.t_ref));
            let acc_dvx = inv_dt * (pr.rho_c * dtm - pr.beta_f * pr.t_ref * dp);
            for (e, &(b, _, c)) in ends.iter().enumerate() {
                let others: F = ends
                    .iter()
                    .enumerate()
                    .filter(|&(e2, _)| e2 != e)
                    .map(|(_, &(b2, _, c2))| aps[b2][c2].a)
                    .fold(F::one(), |acc, a| acc * a);
                for &(dof, da) in &aps[b][c].chain {
                    jac.push((row, dof, acc_dvx * others * da));
                }
            }
            for &(b, f, c) in ends {
                r[row] -= condf[b][f].q;
                for &(dof, dv) in &condf[b][f].dq {
                    jac.push((row, dof, -dv));
                }
                let (t_up, t_dof) = match frozen.frac_up[b][f] {
                    Upstream::Cell(cu) => (state.vec[lay.frac_t(b, cu)], Some(lay.frac_t(b, cu))),
                    Upstream::Isx(ix) => (state.vec[lay.isx_t(ix)], Some(lay.isx_t(ix))),
                    _ => (state.vec[lay.frac_t(b, c)], Some(lay.frac_t(b, c))),
                };
                r[row] -= rho_cf * qf[b][f].q * t_up;
                if let Some(dof) = t_dof {
                    jac.push((row, dof, -rho_cf * qf[b][f].q));
                }
                for &(dof, dv) in &qf[b][f].dq {
                    jac.push((row, dof, -rho_cf * t_up * dv));
                }
            }
        }

        // interface flux laws and traction balance
        for (j, iface) in self.grid.mf_interfaces.iter().enumerate() {
            let b = iface.branch;
            let nrm = iface.ref_normal;
            let tan = iface.ref_tangent;
            for ic in 0..iface.num_cells() {
                let (side, pair) = iface.side_of(ic);
                let f = iface.matrix_face(ic);
                let area = m.face_area(f);
                let p_l = lay.frac_p(b, pair);
                let t_l = lay.frac_t(b, pair);

                // fluid: v = κ_j A (tr p_h − p_l), positive into the fracture
                let row = lay.iface_v(j, ic);
                let kj = pr.kappa_j * area;
                r[row] += state.vec[row] - kj * (tr_p[f] - state.vec[p_l]);
                jac.push((row, row, F::one()));
                jac.push((row, p_l, kj));
                self.scatter_trace_row(&mut jac, row, &self.flow, f, -kj, |c2| lay.matrix_p(c2), |fb| {
                    self.flow_bnd_dof(fb)
                });

                // heat conduction: w = θ_j A (tr T_h − T_l)
                let row = lay.iface_w(j, ic);
                let tj = pr.theta_j * area;
                r[row] += state.vec[row] - tj * (tr_t[f] - state.vec[t_l]);
                jac.push((row, row, F::one()));
                jac.push((row, t_l, tj));
                self.scatter_trace_row(&mut jac, row, &self.heat, f, -tj, |c2| lay.matrix_t(c2), |fb| {
                    self.heat_bnd_dof(fb)
                });

                // advected interface heat: s = ρ_f C_f v T_upstream with the
                // upstream side frozen per iteration
                let row = lay.iface_s(j, ic);
                let v = state.vec[lay.iface_v(j, ic)];
                r[row] += state.vec[row];
                jac.push((row, row, F::one()));
                if frozen.s_matrix_side[j][ic] {
                    r[row] -= rho_cf * v * tr_t[f];
                    jac.push((row, lay.iface_v(j, ic), -rho_cf * tr_t[f]));
                    self.scatter_trace_row(
                        &mut jac,
                        row,
                        &self.heat,
                        f,
                        -rho_cf * v,
                        |c2| lay.matrix_t(c2),
                        |fb| self.heat_bnd_dof(fb),
                    );
                } else {
                    r[row] -= rho_cf * v * state.vec[t_l];
                    jac.push((row, lay.iface_v(j, ic), -rho_cf * state.vec[t_l]));
                    jac.push((row, t_l, -rho_cf * v));
                }

                // traction balance: the reconstructed matrix traction equals
                // the contact traction minus the fluid pressure force
                let lam_n = lay.frac_lambda(b, pair, 0);
                let lam_t = lay.frac_lambda(b, pair, 1);
                let side_sign = match side {
                    Side::Plus => F::one(),
                    Side::Minus => -F::one(),
                };
                for d in 0..2 {
                    let row = lay.iface_u(j, ic, d);
                    let lam_vec = state.vec[lam_n] * nrm[d] + state.vec[lam_t] * tan[d]
                        - state.vec[p_l] * nrm[d];
                    r[row] += trac[2 * f + d] + side_sign * area * lam_vec;
                    self.scatter_stress_row(&mut jac, row, 2 * f + d, F::one());
                    jac.push((row, lam_n, side_sign * area * nrm[d]));
                    jac.push((row, lam_t, side_sign * area * tan[d]));
                    jac.push((row, p_l, -side_sign * area * nrm[d]));
                }
            }

            // contact rows, one pair per fracture cell
            for pair in 0..iface.num_pairs() {
                let x = self.cell_contact(state, &prev.state, b, pair);
                let rows = contact::contact_rows(
                    &frozen.contact[b][pair],
                    &x,
                    pr.friction,
                    self.contact_c,
                );
                let pc = iface.interface_cell(Side::Plus, pair);
                let mc = iface.interface_cell(Side::Minus, pair);
                for (comp, lr) in rows.iter().enumerate() {
                    let row = lay.frac_lambda(b, pair, comp);
                    r[row] += lr.residual;
                    if lr.d_lambda_n != F::zero() {
                        jac.push((row, lay.frac_lambda(b, pair, 0), lr.d_lambda_n));
                    }
                    if lr.d_lambda_t != F::zero() {
                        jac.push((row, lay.frac_lambda(b, pair, 1), lr.d_lambda_t));
                    }
                    // jump = u⁻ − u⁺: chain the local jump derivatives
                    for d in 0..2 {
                        let g = lr.d_jump_n * nrm[d] + lr.d_djump_t * tan[d];
                        if g != F::zero() {
                            jac.push((row, lay.iface_u(j, mc, d), g));
                            jac.push((row, lay.iface_u(j, pc, d), -g));
                        }
                    }
                }
            }
        }

        for (row, v) in r.iter().enumerate() {
            if !v.is_finite() {
                return Err(PhysicsError::NonFiniteResidual {
                    block: lay.block_of(row).name.clone(),
                    row,
                });
            }
        }
        Ok((r, jac))
    }

    fn scatter_stress_row(&self, jac: &mut Vec<(usize, usize, F)>, row: usize, srow: usize, s: F) {
        let lay = &self.layout;
        for (col, v) in self.mech.stress_cells.row(srow) {
            jac.push((row, lay.matrix_u(col / 2, col % 2), s * v));
        }
        for (col, v) in self.mech.stress_bnd.row(srow) {
            if let Some(dof) = self.mech_bnd_dof(col) {
                jac.push((row, dof, s * v));
            }
        }
        for (col, v) in self.mech.stress_p.row(srow) {
            jac.push((row, lay.matrix_p(col), s * v));
        }
        for (col, v) in self.mech.stress_t.row(srow) {
            jac.push((row, lay.matrix_t(col), s * v));
        }
    }

    fn scatter_divu_row(&self, jac: &mut Vec<(usize, usize, F)>, row: usize, c: usize, s: F) {
        let lay = &self.layout;
        for (col, v) in self.mech.divu_cells.row(c) {
            jac.push((row, lay.matrix_u(col / 2, col % 2), s * v));
        }
        for (col, v) in self.mech.divu_bnd.row(c) {
            if let Some(dof) = self.mech_bnd_dof(col) {
                jac.push((row, dof, s * v));
            }
        }
        for (col, v) in self.mech.stab_p.row(c) {
            jac.push((row, lay.matrix_p(col), s * v));
        }
        for (col, v) in self.mech.stab_t.row(c) {
            jac.push((row, lay.matrix_t(col), s * v));
        }
    }

    fn scatter_scalar_row(
        &self,
        jac: &mut Vec<(usize, usize, F)>,
        row: usize,
        disc: &ScalarDiscretization<F>,
        f: usize,
        s: F,
        cell_dof: impl Fn(usize) -> usize,
        bnd_dof: impl Fn(usize) -> Option<usize>,
    ) {
        for (col, v) in disc.flux_cells.row(f) {
            jac.push((row, cell_dof(col), s * v));
        }
        for (col, v) in disc.flux_bnd.row(f) {
            if let Some(dof) = bnd_dof(col) {
                jac.push((row, dof, s * v));
            }
        }
    }

    fn scatter_trace_row(
        &self,
        jac: &mut Vec<(usize, usize, F)>,
        row: usize,
        disc: &ScalarDiscretization<F>,
        f: usize,
        s: F,
        cell_dof: impl Fn(usize) -> usize,
        bnd_dof: impl Fn(usize) -> Option<usize>,
    ) {
        for (col, v) in disc.trace_cells.row(f) {
            jac.push((row, cell_dof(col), s * v));
        }
        for (col, v) in disc.trace_bnd.row(f) {
            if let Some(dof) = bnd_dof(col) {
                jac.push((row, dof, s * v));
            }
        }
    }

    /// Apertures per branch cell for output and diagnostics.
    pub fn aperture_field(&self, state: &State<F>) -> Vec<Vec<F>> {
        self.apertures(state, state)
            .into_iter()
            .map(|b| b.into_iter().map(|a| a.a).collect())
            .collect()
    }

    /// Global conservation audit of one accepted step: total accumulation
    /// plus net external boundary outflow, for mass and energy. Both should
    /// vanish to solver tolerance; internal and interface exchanges must
    /// cancel exactly for that to happen.
    pub fn conservation(
        &self,
        state: &State<F>,
        prev: &PrevStep<F>,
        dt: F,
        frozen: &Frozen<F>,
    ) -> Result<ConservationReport, PhysicsError> {
        let m = &self.grid.matrix;
        let lay = &self.layout;
        let pr = &self.params;
        let (flow_bnd, heat_bnd, mech_bnd) = self.boundary_vectors(state);
        let (u, p, t, t_rel) = self.matrix_fields(state);
        let q_m = self.flow.fluxes(&p, &flow_bnd)?;
        let cond_m = self.heat.fluxes(&t, &heat_bnd)?;
        let divu = self.mech.divergence(&u, &mech_bnd, &p, &t_rel)?;
        let aps = self.apertures(state, &prev.state);
        let inv_dt = F::one() / dt;
        let rho_cf = pr.rho_cf();

        let mut mass = F::zero();
        let mut mass_scale = F::zero();
        let mut energy = F::zero();
        let mut energy_scale = F::zero();
        let add = |acc: &mut F, scale: &mut F, v: F| {
            *acc += v;
            *scale += v.abs();
        };

        let stor = pr.storativity();
        let thermo = pr.thermal_stress() * pr.t_ref;
        for c in 0..m.num_cells() {
            let vol = m.cell_volumes[c];
            let dp = state.vec[lay.matrix_p(c)] - prev.state.vec[lay.matrix_p(c)];
            let dtm = state.vec[lay.matrix_t(c)] - prev.state.vec[lay.matrix_t(c)];
            add(
                &mut mass,
                &mut mass_scale,
                inv_dt
                    * (stor * vol * dp + pr.biot_alpha * (divu[c] - prev.divu[c])
                        - pr.porosity * pr.beta_f * vol * dtm),
            );
            add(
                &mut energy,
                &mut energy_scale,
                inv_dt
                    * (pr.rho_c * vol * dtm + thermo * (divu[c] - prev.divu[c])
                        - pr.porosity * pr.beta_f * pr.t_ref * vol * dp),
            );
        }
        for f in m.boundary_faces() {
            if self.face_iface[f].is_some() {
                continue;
            }
            add(&mut mass, &mut mass_scale, q_m[f]);
            add(&mut energy, &mut energy_scale, cond_m[f]);
            let t_up = match frozen.matrix_up[f] {
                Upstream::Cell(cu) => t[cu],
                Upstream::Given(g) => g,
                _ => continue,
            };
            add(&mut energy, &mut energy_scale, rho_cf * q_m[f] * t_up);
        }
        for (b, g) in self.grid.fractures.iter().enumerate() {
            for c in 0..g.num_cells() {
                let vol = g.cell_volumes[c];
                let ap = &aps[b][c];
                let dp = state.vec[lay.frac_p(b, c)] - prev.state.vec[lay.frac_p(b, c)];
                let dtm = state.vec[lay.frac_t(b, c)] - prev.state.vec[lay.frac_t(b, c)];
                add(
                    &mut mass,
                    &mut mass_scale,
                    vol * inv_dt
                        * (ap.a * pr.fluid_compressibility * dp + (ap.a - ap.a_prev)
                            - ap.a * pr.beta_f * dtm),
                );
                add(
                    &mut energy,
                    &mut energy_scale,
                    vol * inv_dt * (ap.a * pr.rho_c * dtm - ap.a * pr.beta_f * pr.t_ref * dp),
                );
            }
        }
        for (i, ends) in self.isx_ends.iter().enumerate() {
            let vx: F = ends.iter().map(|&(b, _, c)| aps[b][c].a).fold(F::one(), |a, x| a * x);
            let vx_prev: F = ends
                .iter()
                .map(|&(b, _, c)| aps[b][c].a_prev)
                .fold(F::one(), |a, x| a * x);
            let dp = state.vec[lay.isx_p(i)] - prev.state.vec[lay.isx_p(i)];
            let dtm = state.vec[lay.isx_t(i)] - prev.state.vec[lay.isx_t(i)];
            add(
                &mut mass,
                &mut mass_scale,
                inv_dt * (vx * pr.fluid_compressibility * dp + (vx - vx_prev) - vx * pr.beta_f * dtm),
            );
            add(
                &mut energy,
                &mut energy_scale,
                inv_dt * (vx * pr.rho_c * dtm - vx * pr.beta_f * pr.t_ref * dp),
            );
        }
        // interface and 1D/0D end exchanges are internal and must cancel
        // between the balances above; a small total therefore certifies
        // conservation across the dimensional hierarchy too
        Ok(ConservationReport {
            mass_defect: mass.to_subset().unwrap_or(f64::NAN),
            mass_scale: mass_scale.to_subset().unwrap_or(f64::NAN).max(1e-300),
            energy_defect: energy.to_subset().unwrap_or(f64::NAN),
            energy_scale: energy_scale.to_subset().unwrap_or(f64::NAN).max(1e-300),
        })
    }
}

/// Spot check of the interface fluid flux law used in unit tests: the
/// discrete law v = κ_j·A·(tr p_h − p_l) evaluated directly.
pub fn interface_fluid_flux<F: Scalar>(kappa_j: F, area: F, trace_p: F, p_low: F) -> F {
    kappa_j * area * (trace_p - p_low)
}

/// Hydraulic aperture from the normal opening (positive when the walls
/// separate), floored at the residual aperture.
pub fn aperture<F: Scalar>(a_residual: F, a_zero: F, opening: F) -> F {
    (a_zero + opening).max(a_residual)
}

/// Representative aperture of an intersection: mean of the adjoining
/// branch-cell apertures.
pub fn intersection_aperture<F: Scalar>(adjacent: &[F]) -> F {
    let n = F::from_usize(adjacent.len()).unwrap();
    adjacent.iter().copied().sum::<F>() / n
}

/// Specific volume of an intersection: product of the adjoining apertures.
pub fn intersection_volume<F: Scalar>(adjacent: &[F]) -> F {
    adjacent.iter().copied().fold(F::one(), |acc, a| acc * a)
}
