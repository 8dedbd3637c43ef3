//! Legacy VTK ASCII output, one unstructured-grid file per subdomain per
//! step, named `{name}_{dim}_{index}_{step:05}.vtk`. All numbers are
//! written with a fixed format so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::mdgrid::{MixedDimGrid, SubdomainGrid};
use crate::physics::{Assembler, State};
use crate::solver::StepRecord;
use crate::Real;

use super::IoError;

fn num(v: f64) -> String {
    format!("{v:.9e}")
}

fn header(out: &mut String, title: &str) {
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str(title);
    out.push('\n');
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
}

fn geometry(out: &mut String, grid: &SubdomainGrid<Real>, cell_type: impl Fn(usize) -> u8) {
    let _ = writeln!(out, "POINTS {} double", grid.num_nodes());
    for p in &grid.nodes {
        let _ = writeln!(out, "{} {} {}", num(p.x), num(p.y), num(0.0));
    }
    let size: usize = grid.cell_nodes.iter().map(|c| c.len() + 1).sum();
    let _ = writeln!(out, "CELLS {} {}", grid.num_cells(), size);
    for c in &grid.cell_nodes {
        let _ = write!(out, "{}", c.len());
        for &n in c {
            let _ = write!(out, " {n}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "CELL_TYPES {}", grid.num_cells());
    for c in &grid.cell_nodes {
        let _ = writeln!(out, "{}", cell_type(c.len()));
    }
    let _ = writeln!(out, "CELL_DATA {}", grid.num_cells());
}

fn scalars(out: &mut String, name: &str, values: impl Iterator<Item = f64>) {
    let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
    for v in values {
        out.push_str(&num(v));
        out.push('\n');
    }
}

fn write(path: &Path, contents: &str) -> Result<(), IoError> {
    std::fs::write(path, contents).map_err(|e| IoError::new(path, e))
}

/// Writes one snapshot of the full mixed-dimensional state: the 2D matrix
/// file with p, T, |u| and the displacement vector; per fracture a 1D file
/// with p, T, aperture, regime code (0 = Open, 1 = Stick, 2 = Slide) and
/// the tangential jump magnitude; per intersection a 0D file with p, T.
/// Fracture regimes come from the step record so files and diagnostics
/// cannot disagree.
pub fn write_vtk_snapshot(
    grid: &MixedDimGrid<Real>,
    state: &State<Real>,
    asm: &Assembler<'_, Real>,
    record: &StepRecord,
    dir: &Path,
    name: &str,
) -> Result<(), IoError> {
    let step = record.step;
    let mut out = String::new();
    header(&mut out, "matrix");
    geometry(&mut out, &grid.matrix, |n| if n == 4 { 9 } else { 5 });
    let nc = grid.matrix.num_cells();
    scalars(&mut out, "p", (0..nc).map(|c| state.vec[state.layout.matrix_p(c)]));
    scalars(&mut out, "T", (0..nc).map(|c| state.vec[state.layout.matrix_t(c)]));
    scalars(
        &mut out,
        "u_magnitude",
        (0..nc).map(|c| state.matrix_u_vec(c).norm()),
    );
    out.push_str("VECTORS u double\n");
    for c in 0..nc {
        let u = state.matrix_u_vec(c);
        let _ = writeln!(out, "{} {} {}", num(u.x), num(u.y), num(0.0));
    }
    write(&dir.join(format!("{name}_2_0_{step:05}.vtk")), &out)?;

    let apertures = asm.aperture_field(state);
    for (j, iface) in grid.mf_interfaces.iter().enumerate() {
        let b = iface.branch;
        let g = &grid.fractures[b];
        let mut out = String::new();
        header(&mut out, "fracture");
        geometry(&mut out, g, |_| 3);
        let nc = g.num_cells();
        scalars(&mut out, "p", (0..nc).map(|c| state.vec[state.layout.frac_p(b, c)]));
        scalars(&mut out, "T", (0..nc).map(|c| state.vec[state.layout.frac_t(b, c)]));
        scalars(&mut out, "aperture", (0..nc).map(|c| apertures[b][c]));
        scalars(
            &mut out,
            "regime",
            (0..nc).map(|c| f64::from(record.fractures[j].regimes[c])),
        );
        scalars(
            &mut out,
            "jump_t",
            (0..nc).map(|c| state.jump(iface, c).dot(&iface.ref_tangent).abs()),
        );
        write(&dir.join(format!("{name}_1_{b}_{step:05}.vtk")), &out)?;
    }

    for (i, g) in grid.intersections.iter().enumerate() {
        let mut out = String::new();
        header(&mut out, "intersection");
        geometry(&mut out, g, |_| 1);
        scalars(&mut out, "p", std::iter::once(state.vec[state.layout.isx_p(i)]));
        scalars(&mut out, "T", std::iter::once(state.vec[state.layout.isx_t(i)]));
        write(&dir.join(format!("{name}_0_{i}_{step:05}.vtk")), &out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_scenario;
    use crate::physics::ConservationReport;

    #[test]
    fn zero_state_snapshot_is_valid_and_all_zero() {
        let sc = parse_scenario(
            r#"
[domain]
min = [0.0, 0.0]
max = [1.0, 1.0]
resolution = [2, 2]

[material]
shear_modulus = 16e9
lame_lambda = 16e9
biot_alpha = 0.8
porosity = 0.01
fluid_compressibility = 4e-10
permeability = 1e-14
viscosity = 1e-3
friction = 0.5

[[phase]]
name = "rest"
end = 1.0
dt = 1.0
"#,
        )
        .unwrap();
        let grid = sc.build_grid(Path::new(".")).unwrap();
        let phases = sc.phases(&grid);
        let asm = Assembler::new(&grid, sc.material_params(), phases[0].bc.clone()).unwrap();
        let state = State::zeros(&grid);
        let record = StepRecord {
            step: 0,
            phase: 0,
            time: 0.0,
            dt: 1.0,
            newton_iterations: 0,
            regime_counts: [0; 3],
            fractures: vec![],
            total_aperture_volume: 0.0,
            conservation: ConservationReport {
                mass_defect: 0.0,
                mass_scale: 1.0,
                energy_defect: 0.0,
                energy_scale: 1.0,
            },
        };
        let dir = tempfile::tempdir().unwrap();
        write_vtk_snapshot(&grid, &state, &asm, &record, dir.path(), "zero").unwrap();
        let text = std::fs::read_to_string(dir.path().join("zero_2_0_00000.vtk")).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("DATASET UNSTRUCTURED_GRID"));
        assert!(text.contains(&format!("CELL_DATA {}", grid.matrix.num_cells())));
        for field in ["SCALARS p double 1", "SCALARS T double 1", "VECTORS u double"] {
            assert!(text.contains(field), "missing {field}");
        }
        // every data value of the zero state is exactly zero
        let data = text.split("CELL_DATA").nth(1).unwrap();
        for token in data.split_whitespace() {
            if token.contains('e') && token.parse::<f64>().is_ok() {
                assert_eq!(token, "0.000000000e0");
            }
        }
    }
}
