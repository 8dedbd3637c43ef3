//! Discrete conservation audit: every accepted step of every shipped
//! scenario must balance mass and energy (accumulation against boundary and
//! interface fluxes) to 1e-8 relative.

use std::path::Path;

use crate::io::parse_scenario;
use crate::solver::{run_simulation, StepRecord};

use super::CheckResult;

pub const SHIPPED_SCENARIOS: [(&str, &str); 2] = [
    (
        "single_fracture",
        include_str!("../../../../scenarios/single_fracture.toml"),
    ),
    (
        "crossing_fractures",
        include_str!("../../../../scenarios/crossing_fractures.toml"),
    ),
];

/// Worst relative defect over a record list; `None` when empty.
pub fn worst_defect(records: &[StepRecord]) -> f64 {
    records
        .iter()
        .map(|r| {
            let mass = r.conservation.mass_defect.abs() / r.conservation.mass_scale;
            let energy = r.conservation.energy_defect.abs() / r.conservation.energy_scale;
            mass.max(energy)
        })
        .fold(0.0, f64::max)
}

pub fn conservation_audit() -> CheckResult {
    let mut worst = 0.0f64;
    let mut steps = 0usize;
    for (name, text) in SHIPPED_SCENARIOS {
        let sc = match parse_scenario(text) {
            Ok(sc) => sc,
            Err(e) => {
                return CheckResult::new("conservation", false, format!("{name}: {e}"));
            }
        };
        let grid = sc.build_grid(Path::new(".")).unwrap();
        let result = run_simulation(
            &grid,
            sc.material_params(),
            sc.start,
            &sc.phases(&grid),
            &sc.solver_controls(&grid),
            sc.initial_state(&grid),
            |_, _, _| Ok(()),
        );
        match result {
            Ok((_, records)) => {
                steps += records.len();
                worst = worst.max(worst_defect(&records));
            }
            Err(e) => {
                return CheckResult::new("conservation", false, format!("{name}: {e}"));
            }
        }
    }
    CheckResult::new(
        "conservation",
        worst <= 1e-8,
        format!("worst relative defect {worst:.3e} over {steps} steps (bound 1e-8)"),
    )
}
