//! Transient analytic benchmarks on fracture-free grids: Terzaghi
//! consolidation against the Fourier series oracle and half-space
//! conduction against the complementary error function.

use nalgebra::Vector2;

use crate::fvm::{BcKind, MechBc, ScalarBc};
use crate::mdgrid::{build_structured, DomainBox, FaceTag, FractureNetwork, MixedDimGrid};
use crate::physics::{MaterialParams, PhaseBc, State};
use crate::solver::{run_simulation, Phase, SolverControls, VarScales};
use crate::Real;

use super::CheckResult;

/// Abramowitz–Stegun 7.1.26 rational approximation, |error| < 1.5e-7 —
/// ample for a 2% benchmark tolerance.
fn erfc(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.3275911 * x.abs());
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let e = poly * (-x * x).exp();
    if x >= 0.0 {
        e
    } else {
        2.0 - e
    }
}

fn uniform_temperature_state(grid: &MixedDimGrid<Real>, t0: Real) -> State<Real> {
    let mut state = State::zeros(grid);
    for c in 0..grid.matrix.num_cells() {
        state.vec[state.layout.matrix_t(c)] = t0;
    }
    state
}

/// Volume-weighted relative L2 distance between a cell field and an exact
/// profile.
fn relative_l2(
    grid: &MixedDimGrid<Real>,
    numeric: impl Fn(usize) -> f64,
    exact: impl Fn(Vector2<Real>) -> f64,
) -> f64 {
    let mut err = 0.0;
    let mut norm = 0.0;
    for c in 0..grid.matrix.num_cells() {
        let vol = grid.matrix.cell_volumes[c];
        let ex = exact(grid.matrix.cell_centers[c]);
        err += (numeric(c) - ex).powi(2) * vol;
        norm += ex * ex * vol;
    }
    (err / norm).sqrt()
}

/// Collects the states closest to each target time during a run.
struct Sampler {
    targets: Vec<f64>,
    best: Vec<Option<(f64, State<Real>)>>,
}

impl Sampler {
    fn new(targets: &[f64]) -> Self {
        Self {
            targets: targets.to_vec(),
            best: vec![None; targets.len()],
        }
    }

    fn offer(&mut self, time: f64, state: &State<Real>) {
        for (i, &t) in self.targets.iter().enumerate() {
            let better = match &self.best[i] {
                Some((held, _)) => (time - t).abs() < (held - t).abs(),
                None => true,
            };
            if better {
                self.best[i] = Some((time, state.clone()));
            }
        }
    }
}

/// One-dimensional consolidation of a loaded column drained at the top.
/// The simulated pressure is compared with the series solution at three
/// dimensionless times T_v ∈ {0.1, 0.3, 0.7}.
pub fn terzaghi_benchmark() -> CheckResult {
    let params = MaterialParams::<Real> {
        shear_modulus: 1e9,
        lame_lambda: 1e9,
        biot_alpha: 1.0,
        bulk_modulus: 1e9 + 2e9 / 3.0,
        beta_s: 1e-20,
        beta_f: 1e-20,
        porosity: 0.1,
        fluid_compressibility: 1e-10,
        permeability: 1e-14,
        viscosity: 1e-3,
        rho_f: 1000.0,
        c_f: 4200.0,
        rho_c: 2.5e6,
        conductivity: 2.0,
        conductivity_frac: 2.0,
        t_ref: 293.15,
        friction: 0.5,
        kappa_j: 1e-6,
        theta_j: 10.0,
        a_residual: 1e-5,
        a_zero: 1e-4,
        contact_c: 0.0,
    };
    let height = 1.0;
    let sigma0 = 1e6;
    let m1 = params.lame_lambda + 2.0 * params.shear_modulus;
    let s = params.storativity();
    let alpha = params.biot_alpha;
    let c_v = params.mobility() / (s + alpha * alpha / m1);
    let p0 = alpha * sigma0 / (s * m1 + alpha * alpha);

    let domain = DomainBox::new(Vector2::new(0.0, 0.0), Vector2::new(0.25, height));
    let net = FractureNetwork::empty(domain);
    let grid = build_structured(domain, (2, 64), &net).unwrap();

    let mut bc = PhaseBc {
        flow: ScalarBc::no_flow(&grid.matrix),
        heat: ScalarBc::no_flow(&grid.matrix),
        mech: MechBc::traction_free(&grid.matrix),
    };
    for f in grid.matrix.boundary_faces() {
        let FaceTag::Boundary(side) = grid.matrix.face_tags[f] else {
            continue;
        };
        use crate::mdgrid::BoxSide::*;
        let area = grid.matrix.face_normals[f].norm();
        match side {
            Left | Right => bc
                .mech
                .set(f, [BcKind::Dirichlet, BcKind::Neumann], Vector2::zeros()),
            Bottom => bc
                .mech
                .set(f, [BcKind::Neumann, BcKind::Dirichlet], Vector2::zeros()),
            Top => {
                bc.mech.set(
                    f,
                    [BcKind::Neumann; 2],
                    Vector2::new(0.0, -sigma0 * area),
                );
                bc.flow.set(f, BcKind::Dirichlet, 0.0);
            }
        }
    }

    let t_scale = height * height / c_v;
    let targets: Vec<f64> = [0.1, 0.3, 0.7].iter().map(|tv| tv * t_scale).collect();
    let phases = vec![
        // resolve the near-undrained loading transient with fine steps
        Phase {
            name: "very early".into(),
            t_end: 0.01 * t_scale,
            dt: 1e-4 * t_scale,
            bc: bc.clone(),
        },
        Phase {
            name: "early".into(),
            t_end: 0.1 * t_scale,
            dt: 1e-3 * t_scale,
            bc: bc.clone(),
        },
        Phase {
            name: "late".into(),
            t_end: 0.72 * t_scale,
            dt: 5e-3 * t_scale,
            bc,
        },
    ];
    let controls = SolverControls {
        tolerance: 1e-8,
        max_newton: 50,
        dt: phases[0].dt,
        max_dt_cuts: 4,
        scales: VarScales::derive(&params, height, 0.1, p0, 1.0),
    };
    let initial = uniform_temperature_state(&grid, params.t_ref);
    let mut sampler = Sampler::new(&targets);
    let result = run_simulation(
        &grid,
        params,
        0.0,
        &phases,
        &controls,
        initial,
        |record, state, _| {
            sampler.offer(record.time, state);
            Ok(())
        },
    );
    if let Err(e) = result {
        return CheckResult::new("terzaghi", false, format!("solver failed: {e}"));
    }

    let series = |y: f64, t: f64| {
        let xt = (height - y) / height;
        let mut p = 0.0;
        for m in 0..200 {
            let mm = std::f64::consts::PI * (2.0 * m as f64 + 1.0) / 2.0;
            p += (2.0 / mm) * (mm * xt).sin() * (-mm * mm * c_v * t / (height * height)).exp();
        }
        p0 * p
    };
    let mut worst = 0.0f64;
    for best in &sampler.best {
        let (time, state) = best.as_ref().unwrap();
        let err = relative_l2(
            &grid,
            |c| state.vec[state.layout.matrix_p(c)],
            |x| series(x.y, *time),
        );
        worst = worst.max(err);
    }
    CheckResult::new(
        "terzaghi",
        worst <= 0.02,
        format!("worst relative L2 pressure error {worst:.3e} (bound 2e-2)"),
    )
}

/// Half-space cooling: the left boundary temperature is raised by ΔT at
/// t = 0 and the interior profile is compared with erfc(x/2√(Dt)) before
/// the front reaches the far boundary.
pub fn conduction_benchmark() -> CheckResult {
    let params = MaterialParams::<Real> {
        shear_modulus: 1e9,
        lame_lambda: 1e9,
        biot_alpha: 0.0,
        bulk_modulus: 1e9 + 2e9 / 3.0,
        beta_s: 1e-20,
        beta_f: 1e-20,
        porosity: 0.1,
        fluid_compressibility: 1e-10,
        permeability: 1e-14,
        viscosity: 1e-3,
        rho_f: 1000.0,
        c_f: 4200.0,
        rho_c: 2e3,
        conductivity: 2.0,
        conductivity_frac: 2.0,
        t_ref: 293.15,
        friction: 0.5,
        kappa_j: 1e-6,
        theta_j: 10.0,
        a_residual: 1e-5,
        a_zero: 1e-4,
        contact_c: 0.0,
    };
    let diffusivity = params.conductivity / params.rho_c;
    let dt_jump = 50.0;
    let t_boundary = params.t_ref + dt_jump;

    let domain = DomainBox::new(Vector2::new(0.0, 0.0), Vector2::new(1.0, 0.1));
    let net = FractureNetwork::empty(domain);
    let grid = build_structured(domain, (50, 2), &net).unwrap();

    let mut bc = PhaseBc {
        flow: ScalarBc::no_flow(&grid.matrix),
        heat: ScalarBc::no_flow(&grid.matrix),
        mech: MechBc::traction_free(&grid.matrix),
    };
    for f in grid.matrix.boundary_faces() {
        let FaceTag::Boundary(side) = grid.matrix.face_tags[f] else {
            continue;
        };
        bc.mech.set(f, [BcKind::Dirichlet; 2], Vector2::zeros());
        if side == crate::mdgrid::BoxSide::Left {
            bc.heat.set(f, BcKind::Dirichlet, t_boundary);
        }
    }

    let targets = [4.0, 9.0];
    let phases = vec![Phase {
        name: "cooling".into(),
        t_end: 9.0,
        dt: 0.05,
        bc,
    }];
    let controls = SolverControls {
        tolerance: 1e-8,
        max_newton: 50,
        dt: 0.05,
        max_dt_cuts: 4,
        scales: VarScales::derive(&params, 1.0, 0.02, 1e5, dt_jump),
    };
    let initial = uniform_temperature_state(&grid, params.t_ref);
    let mut sampler = Sampler::new(&targets);
    let result = run_simulation(
        &grid,
        params,
        0.0,
        &phases,
        &controls,
        initial,
        |record, state, _| {
            sampler.offer(record.time, state);
            Ok(())
        },
    );
    if let Err(e) = result {
        return CheckResult::new("conduction", false, format!("solver failed: {e}"));
    }

    let t_ref = params.t_ref;
    let mut worst = 0.0f64;
    for best in &sampler.best {
        let (time, state) = best.as_ref().unwrap();
        let front = 2.0 * (diffusivity * time).sqrt();
        let err = relative_l2(
            &grid,
            |c| state.vec[state.layout.matrix_t(c)] - t_ref,
            |x| dt_jump * erfc(x.x / front),
        );
        worst = worst.max(err);
    }
    CheckResult::new(
        "conduction",
        worst <= 0.02,
        format!("worst relative L2 temperature error {worst:.3e} (bound 2e-2)"),
    )
}
