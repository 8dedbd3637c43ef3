//! Monolithic semismooth Newton solver and the implicit-Euler time loop.
//!
//! Each Newton iteration re-classifies the contact regimes, rebuilds the
//! frozen upwind/upstream data and the aperture-dependent transmissibilities
//! (by full re-assembly), assembles the block system and performs one sparse
//! direct solve. Convergence requires both the scaled residual and the
//! scaled Newton increment of every variable block to sit at or below the
//! tolerance; a linear problem therefore converges after a single applied
//! update.

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::mdgrid::MixedDimGrid;
use crate::physics::{
    Assembler, ConservationReport, Frozen, MaterialParams, PhaseBc, PhysicsError, PrevStep, State,
};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("Newton did not converge in {iterations} iterations (worst block {block}: residual {residual:.3e}, increment {increment:.3e})")]
    NonConvergence {
        iterations: usize,
        block: String,
        residual: f64,
        increment: f64,
    },
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(#[from] LinalgError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("step {step} failed after {cuts} time-step cuts: {source}")]
    StepFailed {
        step: usize,
        cuts: usize,
        source: Box<SolverError>,
    },
    #[error("output sink failed: {0}")]
    Output(String),
}

/// Characteristic magnitudes used to scale increments and residuals per
/// variable block.
#[derive(Debug, Clone, Copy)]
pub struct VarScales<F> {
    pub displacement: F,
    pub pressure: F,
    pub temperature: F,
    pub traction: F,
    pub fluid_flux: F,
    pub heat_flux: F,
}

impl<F: Scalar> VarScales<F> {
    /// Derives scales from the parameters and the problem magnitudes: the
    /// displacement scale is the domain size × 1e−6, pressure and
    /// temperature come from the phase schedule, the rest follow from the
    /// constitutive links.
    pub fn derive(
        params: &MaterialParams<F>,
        domain_size: F,
        mesh_size: F,
        pressure: F,
        temperature: F,
    ) -> Self {
        let displacement = domain_size * lit::<F>(1e-6);
        let traction = (params.shear_modulus * lit::<F>(1e-6)).max(pressure);
        let fluid_flux = params.kappa_j * mesh_size * pressure;
        let heat_flux = (params.theta_j * mesh_size * temperature)
            .max(params.rho_cf() * fluid_flux * temperature);
        Self {
            displacement,
            pressure,
            temperature,
            traction,
            fluid_flux,
            heat_flux,
        }
    }

    /// Scale of the unknowns in a given layout block.
    fn increment_scale(&self, name: &str) -> F {
        if name.ends_with("/u") {
            self.displacement
        } else if name.ends_with("/p") {
            self.pressure
        } else if name.ends_with("/T") {
            self.temperature
        } else if name.ends_with("/lambda") {
            self.traction
        } else if name.ends_with("/v") {
            self.fluid_flux
        } else {
            // w and s blocks
            self.heat_flux
        }
    }

    /// Floor for the residual scale of a block, in equation units, used when
    /// the initial residual of a quiet block is negligible.
    fn residual_floor(&self, name: &str, mesh_size: F, kappa_mobility: F, conductivity: F) -> F {
        if name.ends_with("/u") || name.ends_with("/lambda") {
            self.traction * mesh_size
        } else if name.ends_with("/p") {
            kappa_mobility * self.pressure
        } else if name.ends_with("/T") {
            conductivity * self.temperature
        } else if name.ends_with("/v") {
            self.fluid_flux
        } else {
            self.heat_flux
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverControls<F> {
    /// Relative tolerance applied to both the scaled residual and the
    /// scaled increment (≤ comparison).
    pub tolerance: F,
    pub max_newton: usize,
    /// Nominal time step of the active phase.
    pub dt: F,
    /// Number of times dt may be halved on nonconvergence before aborting.
    pub max_dt_cuts: usize,
    pub scales: VarScales<F>,
}

impl<F: Scalar> SolverControls<F> {
    pub fn validate(&self) -> bool {
        self.tolerance > F::zero() && self.max_newton >= 1 && self.dt > F::zero()
    }
}

/// Per-block convergence report of one Newton iteration.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// Name of the block with the largest scaled violation.
    pub worst_block: String,
    pub worst_residual: f64,
    pub worst_increment: f64,
}

/// The assembled monolithic system of one Newton iteration.
pub struct BlockSystem<F> {
    pub residual: Vec<F>,
    pub triplets: Vec<(usize, usize, F)>,
}

/// Scaled residual and increment check over all layout blocks. Both norms
/// use the infinity norm; a block passes when its scaled numbers are at or
/// below the tolerance.
pub fn check_convergence<F: Scalar>(
    asm: &Assembler<'_, F>,
    residual: &[F],
    increment: &[F],
    res_scale: &[F],
    controls: &SolverControls<F>,
) -> ConvergenceReport {
    let mut converged = true;
    let mut worst = (String::new(), 0.0f64, 0.0f64, f64::MIN);
    for (bi, block) in asm.layout.blocks().iter().enumerate() {
        if block.len == 0 {
            continue;
        }
        let range = block.start..block.start + block.len;
        let rmax = residual[range.clone()]
            .iter()
            .fold(F::zero(), |m, &x| m.max(x.abs()));
        let imax = increment[range]
            .iter()
            .fold(F::zero(), |m, &x| m.max(x.abs()));
        let rs = rmax / res_scale[bi];
        let is = imax / controls.scales.increment_scale(&block.name);
        // a residual several orders below tolerance means the linear solve
        // is dominated by rounding noise and the increment carries no
        // information; accept the block on the residual alone there
        let deep = rs <= controls.tolerance * lit::<F>(1e-4);
        if !deep && (rs > controls.tolerance || is > controls.tolerance) {
            converged = false;
        }
        let badness = if deep {
            rs.to_subset().unwrap_or(f64::INFINITY)
        } else {
            rs.to_subset()
                .unwrap_or(f64::INFINITY)
                .max(is.to_subset().unwrap_or(f64::INFINITY))
        };
        if badness > worst.3 {
            worst = (
                block.name.clone(),
                rs.to_subset().unwrap_or(f64::NAN),
                is.to_subset().unwrap_or(f64::NAN),
                badness,
            );
        }
    }
    ConvergenceReport {
        converged,
        worst_block: worst.0,
        worst_residual: worst.1,
        worst_increment: worst.2,
    }
}

/// Direct sparse solve with row/column equilibration. The monolithic
/// system mixes momentum rows (∼G) with mass rows (∼S·V/Δt), a spread of
/// well over ten orders of magnitude; scaling every row and column to unit
/// maximum before the factorisation keeps the LU numerically meaningful.
fn equilibrated_solve<F: Scalar>(
    n: usize,
    triplets: &[(usize, usize, F)],
    rhs: &mut [F],
) -> Result<(), LinalgError> {
    let mut row_scale = vec![F::zero(); n];
    for &(i, _, v) in triplets {
        row_scale[i] = row_scale[i].max(v.abs());
    }
    for s in row_scale.iter_mut() {
        if *s == F::zero() {
            *s = F::one();
        }
    }
    let mut col_scale = vec![F::zero(); n];
    for &(i, j, v) in triplets {
        col_scale[j] = col_scale[j].max((v / row_scale[i]).abs());
    }
    for s in col_scale.iter_mut() {
        if *s == F::zero() {
            *s = F::one();
        }
    }
    let scaled: Vec<(usize, usize, F)> = triplets
        .iter()
        .map(|&(i, j, v)| (i, j, v / (row_scale[i] * col_scale[j])))
        .collect();
    for (b, s) in rhs.iter_mut().zip(&row_scale) {
        *b /= *s;
    }
    F::sparse_lu_solve(n, &scaled, rhs)?;
    for (x, s) in rhs.iter_mut().zip(&col_scale) {
        *x /= *s;
    }
    Ok(())
}

/// Outcome of one converged time step.
pub struct StepSolution<F> {
    pub state: State<F>,
    pub iterations: usize,
    pub frozen: Frozen<F>,
}

/// Solve one implicit-Euler step with the semismooth Newton loop. The
/// returned frozen data holds the converged regime classification.
pub fn newton_solve_timestep<F: Scalar>(
    asm: &Assembler<'_, F>,
    prev: &PrevStep<F>,
    dt: F,
    controls: &SolverControls<F>,
) -> Result<StepSolution<F>, SolverError> {
    let n = asm.layout.len();
    let mut state = prev.state.clone();
    let mesh = asm.grid.matrix.mean_cell_size();
    let kmob = asm.params.mobility();
    let cond = asm.params.conductivity;
    let mut res_scale: Vec<F> = asm
        .layout
        .blocks()
        .iter()
        .map(|b| {
            controls
                .scales
                .residual_floor(&b.name, mesh, kmob, cond)
        })
        .collect();

    let mut last_report: Option<ConvergenceReport> = None;
    let mut last_frozen: Option<Frozen<F>> = None;
    for it in 0..=controls.max_newton {
        let frozen = asm.freeze(&state, &prev.state, last_frozen.as_ref())?;
        let (residual, triplets) = asm.assemble(&state, prev, dt, &frozen)?;
        if it == 0 {
            // anchor the residual scales at the initial imbalance of the
            // step so the criterion measures relative reduction
            for (bi, block) in asm.layout.blocks().iter().enumerate() {
                let rng = block.start..block.start + block.len;
                let r0 = residual[rng].iter().fold(F::zero(), |m, &x| m.max(x.abs()));
                res_scale[bi] = res_scale[bi].max(r0);
            }
        }
        // a diverging iterate eventually produces overflowed entries; report
        // that as nonconvergence so the caller's time-step cut can engage
        // instead of aborting on an unfactorable matrix
        if residual.iter().any(|r| !r.is_finite()) || triplets.iter().any(|t| !t.2.is_finite()) {
            return Err(SolverError::NonConvergence {
                iterations: it,
                block: "non-finite iterate".into(),
                residual: f64::INFINITY,
                increment: f64::INFINITY,
            });
        }
        let mut delta: Vec<F> = residual.iter().map(|&r| -r).collect();
        equilibrated_solve(n, &triplets, &mut delta)?;
        if std::env::var("THMFRAC_DEBUG_LINSOLVE").is_ok() {
            let mut ax = vec![F::zero(); n];
            for &(i, j, v) in &triplets {
                ax[i] += v * delta[j];
            }
            let mut worst_lin = 0.0f64;
            let mut worst_row = 0usize;
            for i in 0..n {
                let bi = asm
                    .layout
                    .blocks()
                    .iter()
                    .position(|b| i >= b.start && i < b.start + b.len)
                    .unwrap();
                let s = res_scale[bi].to_subset().unwrap_or(1.0f64).max(1e-300);
                let r = (ax[i] + residual[i]).abs().to_subset().unwrap_or(f64::NAN) / s;
                if r > worst_lin {
                    worst_lin = r;
                    worst_row = i;
                }
            }
            eprintln!(
                "  linear residual worst scaled {worst_lin:.3e} at row {worst_row} ({}) res {:.3e} ax {:.3e}",
                asm.layout.block_of(worst_row).name,
                residual[worst_row].to_subset().unwrap_or(f64::NAN),
                ax[worst_row].to_subset().unwrap_or(f64::NAN),
            );
        }
        let report = check_convergence(asm, &residual, &delta, &res_scale, controls);
        if std::env::var("THMFRAC_DEBUG_NEWTON").is_ok() {
            let mut rc = [0usize; 3];
            for fr in frozen.regimes() {
                for rg in fr {
                    rc[rg.code() as usize] += 1;
                }
            }
            eprintln!(
                "it {it}: worst {} res {:.3e} inc {:.3e} regimes O{} St{} Sl{}",
                report.worst_block,
                report.worst_residual,
                report.worst_increment,
                rc[0],
                rc[1],
                rc[2]
            );
        }
        if report.converged {
            return Ok(StepSolution {
                state,
                iterations: it,
                frozen,
            });
        }
        if it == controls.max_newton {
            last_report = Some(report);
            break;
        }
        for (x, d) in state.vec.iter_mut().zip(&delta) {
            *x += *d;
        }
        last_frozen = Some(frozen);
    }
    let report = last_report.expect("loop sets a report before breaking");
    Err(SolverError::NonConvergence {
        iterations: controls.max_newton,
        block: report.worst_block,
        residual: report.worst_residual,
        increment: report.worst_increment,
    })
}

/// One loading phase of a simulation: boundary conditions held fixed from
/// the previous phase boundary until `t_end`, marched with the nominal `dt`.
pub struct Phase<F> {
    pub name: String,
    pub t_end: F,
    pub dt: F,
    pub bc: PhaseBc<F>,
}

/// Diagnostics of one accepted time step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub phase: usize,
    pub time: f64,
    pub dt: f64,
    pub newton_iterations: usize,
    /// Open / Stick / Slide cell counts over all fractures.
    pub regime_counts: [usize; 3],
    /// Per fracture: Euclidean norms of the normal and tangential jumps
    /// over the fracture cells, and the per-cell regime codes.
    pub fractures: Vec<FractureRecord>,
    /// Total fracture void volume Σ a·ℓ (m² per unit thickness).
    pub total_aperture_volume: f64,
    pub conservation: ConservationReport,
}

#[derive(Debug, Clone)]
pub struct FractureRecord {
    pub jump_n_norm: f64,
    pub jump_t_norm: f64,
    pub regimes: Vec<u8>,
}

/// Full simulation driver: phases in order, dt cut/retry on nonconvergence,
/// one record per accepted step handed to `on_step` together with the state.
pub fn run_simulation<F: Scalar>(
    grid: &MixedDimGrid<F>,
    params: MaterialParams<F>,
    t_start: F,
    phases: &[Phase<F>],
    controls: &SolverControls<F>,
    initial: State<F>,
    mut on_step: impl FnMut(&StepRecord, &State<F>, &Assembler<'_, F>) -> Result<(), String>,
) -> Result<(State<F>, Vec<StepRecord>), SolverError> {
    let mut records = Vec::new();
    let mut time = t_start;
    let mut step = 0usize;
    let mut prev_state = initial;
    let mut prev_divu: Option<Vec<F>> = None;

    for (pi, phase) in phases.iter().enumerate() {
        let asm = Assembler::new(grid, params, phase.bc.clone())?;
        // the divergence cache must be evaluated with the operators of the
        // phase that accepted the state; re-derive at phase start so the
        // first step of a phase is consistent with its own operators
        let divu = match prev_divu.take() {
            Some(d) => d,
            None => asm.divergence(&prev_state)?,
        };
        let mut prev = PrevStep {
            state: prev_state,
            divu,
        };
        while time < phase.t_end - phase.dt * lit::<F>(1e-9) {
            let nominal = phase.dt.min(phase.t_end - time);
            let mut dt = nominal;
            let mut cuts = 0usize;
            let solution = loop {
                match newton_solve_timestep(&asm, &prev, dt, controls) {
                    Ok(sol) => break sol,
                    Err(e @ SolverError::NonConvergence { .. }) => {
                        if cuts >= controls.max_dt_cuts {
                            return Err(SolverError::StepFailed {
                                step,
                                cuts,
                                source: Box::new(e),
                            });
                        }
                        cuts += 1;
                        dt = dt * lit::<F>(0.5);
                    }
                    Err(e) => return Err(e),
                }
            };
            time += dt;
            step += 1;

            let conservation = asm.conservation(&solution.state, &prev, dt, &solution.frozen)?;
            let record = build_record(
                grid,
                &asm,
                &solution,
                step,
                pi,
                time.to_subset().unwrap_or(f64::NAN),
                dt.to_subset().unwrap_or(f64::NAN),
                conservation,
            );
            on_step(&record, &solution.state, &asm).map_err(SolverError::Output)?;
            records.push(record);

            prev = PrevStep {
                divu: asm.divergence(&solution.state)?,
                state: solution.state,
            };
        }
        prev_divu = Some(prev.divu);
        prev_state = prev.state;
    }
    Ok((prev_state, records))
}

#[allow(clippy::too_many_arguments)]
fn build_record<F: Scalar>(
    grid: &MixedDimGrid<F>,
    asm: &Assembler<'_, F>,
    solution: &StepSolution<F>,
    step: usize,
    phase: usize,
    time: f64,
    dt: f64,
    conservation: ConservationReport,
) -> StepRecord {
    let regimes = solution.frozen.regimes();
    let mut counts = [0usize; 3];
    let mut fractures = Vec::new();
    for (b, iface) in grid.mf_interfaces.iter().enumerate() {
        let mut nn = 0.0f64;
        let mut tt = 0.0f64;
        let mut codes = Vec::with_capacity(iface.num_pairs());
        for pair in 0..iface.num_pairs() {
            let jump = solution.state.jump(iface, pair);
            let jn: f64 = jump
                .dot(&iface.ref_normal)
                .to_subset()
                .unwrap_or(f64::NAN);
            let jt: f64 = jump
                .dot(&iface.ref_tangent)
                .to_subset()
                .unwrap_or(f64::NAN);
            nn += jn * jn;
            tt += jt * jt;
            let regime = regimes[b][pair];
            counts[regime.code() as usize] += 1;
            codes.push(regime.code());
        }
        fractures.push(FractureRecord {
            jump_n_norm: nn.sqrt(),
            jump_t_norm: tt.sqrt(),
            regimes: codes,
        });
    }
    let apertures = asm.aperture_field(&solution.state);
    let mut volume = 0.0f64;
    for (b, g) in grid.fractures.iter().enumerate() {
        for c in 0..g.num_cells() {
            let a: f64 = apertures[b][c].to_subset().unwrap_or(0.0);
            let l: f64 = g.cell_volumes[c].to_subset().unwrap_or(0.0);
            volume += a * l;
        }
    }
    StepRecord {
        step,
        phase,
        time,
        dt,
        newton_iterations: solution.iterations,
        regime_counts: counts,
        fractures,
        total_aperture_volume: volume,
        conservation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fvm::{BcKind, MechBc, ScalarBc};
    use crate::mdgrid::{build_structured, DomainBox, FractureNetwork, Segment};
    use nalgebra::Vector2;

    fn params(alpha: f64) -> MaterialParams<f64> {
        MaterialParams {
            shear_modulus: 16e9,
            lame_lambda: 16e9,
            biot_alpha: alpha,
            bulk_modulus: 26.7e9,
            beta_s: if alpha > 0.0 { 3e-5 } else { 0.0 },
            beta_f: if alpha > 0.0 { 4e-4 } else { 0.0 },
            porosity: 0.01,
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

    fn controls(pr: &MaterialParams<f64>) -> SolverControls<f64> {
        SolverControls {
            tolerance: 1e-8,
            max_newton: 50,
            dt: 1.0,
            max_dt_cuts: 4,
            scales: VarScales::derive(pr, 1.0, 0.25, 1e6, 100.0),
        }
    }

    fn reference_state(grid: &crate::mdgrid::MixedDimGrid<f64>, t0: f64) -> State<f64> {
        let mut state = State::zeros(grid);
        for c in 0..grid.matrix.num_cells() {
            state.vec[state.layout.matrix_t(c)] = t0;
        }
        for (b, g) in grid.fractures.iter().enumerate() {
            for c in 0..g.num_cells() {
                state.vec[state.layout.frac_t(b, c)] = t0;
            }
        }
        for i in 0..grid.intersections.len() {
            state.vec[state.layout.isx_t(i)] = t0;
        }
        state
    }

    #[test]
    fn pure_elasticity_converges_in_one_iteration() {
        let domain = DomainBox::unit();
        let net = FractureNetwork::empty(domain);
        let grid = build_structured(domain, (4, 4), &net).unwrap();
        let pr = params(0.0);
        let mut bc = PhaseBc {
            flow: ScalarBc::no_flow(&grid.matrix),
            heat: ScalarBc::no_flow(&grid.matrix),
            mech: MechBc::traction_free(&grid.matrix),
        };
        for f in grid.matrix.boundary_faces() {
            let y = grid.matrix.face_centers[f].y;
            if y < 1e-9 {
                bc.mech.set(f, [BcKind::Dirichlet; 2], Vector2::zeros());
            } else if y > 1.0 - 1e-9 {
                bc.mech
                    .set(f, [BcKind::Dirichlet; 2], Vector2::new(1e-4, -2e-4));
            }
        }
        let asm = Assembler::new(&grid, pr, bc).unwrap();
        let state = reference_state(&grid, pr.t_ref);
        let prev = PrevStep {
            divu: asm.divergence(&state).unwrap(),
            state,
        };
        let ctl = controls(&pr);
        let sol = newton_solve_timestep(&asm, &prev, 10.0, &ctl).unwrap();
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn zero_bc_scenario_is_a_fixed_point() {
        let domain = DomainBox::unit();
        let net = FractureNetwork::new(
            domain,
            vec![Segment::new(Vector2::new(0.25, 0.5), Vector2::new(0.75, 0.5))],
        );
        let grid = build_structured(domain, (4, 4), &net).unwrap();
        let pr = params(0.8);
        let bc = PhaseBc {
            flow: ScalarBc::no_flow(&grid.matrix),
            heat: ScalarBc::no_flow(&grid.matrix),
            mech: MechBc::traction_free(&grid.matrix),
        };
        let ctl = controls(&pr);
        let phases = vec![Phase {
            name: "rest".into(),
            t_end: 3.0,
            dt: 1.0,
            bc,
        }];
        let initial = reference_state(&grid, pr.t_ref);
        let reference = initial.clone();
        let (final_state, records) = run_simulation(
            &grid,
            pr,
            0.0,
            &phases,
            &ctl,
            initial,
            |_, _, _| Ok(()),
        )
        .unwrap();
        assert_eq!(records.len(), 3);
        for rec in &records {
            assert_eq!(rec.newton_iterations, 0);
        }
        for (a, b) in final_state.vec.iter().zip(&reference.vec) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn coupled_pressure_phase_completes_and_conserves() {
        let domain = DomainBox::unit();
        let net = FractureNetwork::new(
            domain,
            vec![Segment::new(Vector2::new(0.25, 0.5), Vector2::new(0.75, 0.5))],
        );
        let grid = build_structured(domain, (4, 4), &net).unwrap();
        let pr = params(0.8);
        let mut bc = PhaseBc {
            flow: ScalarBc::no_flow(&grid.matrix),
            heat: ScalarBc::no_flow(&grid.matrix),
            mech: MechBc::traction_free(&grid.matrix),
        };
        for f in grid.matrix.boundary_faces() {
            let x = grid.matrix.face_centers[f].x;
            if x < 1e-9 {
                bc.flow.set(f, BcKind::Dirichlet, 1e6);
            } else if x > 1.0 - 1e-9 {
                bc.flow.set(f, BcKind::Dirichlet, 0.0);
            }
            let y = grid.matrix.face_centers[f].y;
            if y < 1e-9 {
                bc.mech.set(f, [BcKind::Dirichlet; 2], Vector2::zeros());
            }
        }
        let ctl = controls(&pr);
        let phases = vec![Phase {
            name: "inject".into(),
            t_end: 0.02,
            dt: 0.005,
            bc,
        }];
        let initial = reference_state(&grid, pr.t_ref);
        let (_, records) =
            run_simulation(&grid, pr, 0.0, &phases, &ctl, initial, |_, _, _| Ok(()))
                .unwrap();
        assert_eq!(records.len(), 4);
        for rec in &records {
            assert!(rec.newton_iterations <= 50);
            let rel = rec.conservation.mass_defect.abs() / rec.conservation.mass_scale;
            assert!(rel < 1e-8, "step {}: mass defect {rel:.3e}", rec.step);
            let rel = rec.conservation.energy_defect.abs() / rec.conservation.energy_scale;
            assert!(rel < 1e-8, "step {}: energy defect {rel:.3e}", rec.step);
        }
    }

    #[test]
    fn converged_steady_state_is_dt_invariant() {
        // drive to a steady mechanical state, then verify a much larger dt
        // leaves it untouched
        let domain = DomainBox::unit();
        let net = FractureNetwork::empty(domain);
        let grid = build_structured(domain, (3, 3), &net).unwrap();
        let pr = params(0.0);
        let mut bc = PhaseBc {
            flow: ScalarBc::no_flow(&grid.matrix),
            heat: ScalarBc::no_flow(&grid.matrix),
            mech: MechBc::traction_free(&grid.matrix),
        };
        for f in grid.matrix.boundary_faces() {
            let y = grid.matrix.face_centers[f].y;
            if y < 1e-9 {
                bc.mech.set(f, [BcKind::Dirichlet; 2], Vector2::zeros());
            } else if y > 1.0 - 1e-9 {
                bc.mech.set(f, [BcKind::Dirichlet; 2], Vector2::new(0.0, -1e-4));
            }
        }
        let asm = Assembler::new(&grid, pr, bc).unwrap();
        let state = reference_state(&grid, pr.t_ref);
        let prev = PrevStep {
            divu: asm.divergence(&state).unwrap(),
            state,
        };
        let ctl = controls(&pr);
        let sol = newton_solve_timestep(&asm, &prev, 1.0, &ctl).unwrap();
        let prev2 = PrevStep {
            divu: asm.divergence(&sol.state).unwrap(),
            state: sol.state.clone(),
        };
        let sol2 = newton_solve_timestep(&asm, &prev2, 1e6, &ctl).unwrap();
        assert_eq!(sol2.iterations, 0);
        for (a, b) in sol2.state.vec.iter().zip(&sol.state.vec) {
            assert_eq!(a, b);
        }
    }
}
