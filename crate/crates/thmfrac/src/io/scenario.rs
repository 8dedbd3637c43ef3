//! Scenario documents: a TOML description of domain, fracture network,
//! material parameters, phase schedule with per-side boundary conditions,
//! solver controls and output options.
//!
//! Parsing is a three-stage pipeline: deserialize ([`ScenarioError::Parse`]
//! with the TOML line/column), validate ([`ScenarioError::Validation`]
//! naming the offending field), then normalize (fill every optional field
//! with its documented default). A normalized scenario serializes back to a
//! complete document via [`Scenario::normalized_dump`], so a run can be
//! reproduced from the echoed file alone; `parse(dump(parse(x)))` equals
//! `parse(x)`.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::fvm::{BcKind, MechBc, ScalarBc};
use crate::mdgrid::{
    build_structured, import_msh, BoxSide, DomainBox, FaceTag, FractureNetwork, MixedDimGrid,
    Segment,
};
use crate::physics::{MaterialParams, ParamError, PhaseBc, State};
use crate::solver::{Phase, SolverControls, VarScales};
use crate::Real;

use super::IoError;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    /// Malformed document; the message carries the TOML line/column.
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("mesh import failed: {0}")]
    Grid(#[from] crate::mdgrid::GridError),
    #[error(transparent)]
    Io(#[from] IoError),
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

/// A fully described simulation run. Option-valued fields are `None` only
/// between deserialization and normalization; [`parse_scenario`] always
/// returns a normalized document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Start time of the first phase (s).
    #[serde(default)]
    pub start: f64,
    pub domain: DomainSection,
    /// External mesh import; mutually exclusive with inline `[[fracture]]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshSection>,
    #[serde(default, rename = "fracture", skip_serializing_if = "Vec::is_empty")]
    pub fractures: Vec<FractureSection>,
    pub material: MaterialSection,
    #[serde(rename = "phase")]
    pub phases: Vec<PhaseSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub resolution: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    /// MSH 2.2 ASCII file, relative to the scenario file.
    pub path: String,
    /// Physical tags of the 1D elements that are fractures.
    pub fracture_tags: Vec<usize>,
}

/// One inline fracture segment from `a` to `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractureSection {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

/// Material parameters. The first block is required; the rest defaults as
/// documented per field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub shear_modulus: Option<f64>,
    pub lame_lambda: Option<f64>,
    pub biot_alpha: Option<f64>,
    pub porosity: Option<f64>,
    pub fluid_compressibility: Option<f64>,
    pub permeability: Option<f64>,
    pub viscosity: Option<f64>,
    pub friction: Option<f64>,
    /// Default: λ + 2μ/3.
    pub bulk_modulus: Option<f64>,
    /// Default 3e-5 1/K.
    pub beta_s: Option<f64>,
    /// Default 4e-4 1/K.
    pub beta_f: Option<f64>,
    /// Default 1000 kg/m³.
    pub rho_f: Option<f64>,
    /// Default 4200 J/(kg·K).
    pub c_f: Option<f64>,
    /// Default 2.5e6 J/(m³·K).
    pub rho_c: Option<f64>,
    /// Default 2.0 W/(m·K).
    pub conductivity: Option<f64>,
    /// Default: same as `conductivity`.
    pub conductivity_frac: Option<f64>,
    /// Default 293.15 K.
    pub t_ref: Option<f64>,
    /// Default 1e-6.
    pub kappa_j: Option<f64>,
    /// Default 10.0.
    pub theta_j: Option<f64>,
    /// Default 1e-5 m.
    pub a_residual: Option<f64>,
    /// Default 1e-4 m.
    pub a_zero: Option<f64>,
    /// Default 0 = derive 100·G/h from the grid.
    pub contact_c: Option<f64>,
}

/// Scalar-field boundary condition on one side: a prescribed field value or
/// an outward flux density (per unit boundary length).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ScalarBcSpec {
    Dirichlet { value: f64 },
    Neumann { value: f64 },
}

/// Mechanics boundary condition on one side: a prescribed displacement or a
/// traction density (force per unit boundary length).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MechBcSpec {
    Displacement { value: [f64; 2] },
    Traction { value: [f64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideBc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mechanics: Option<MechBcSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<ScalarBcSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat: Option<ScalarBcSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    pub name: String,
    /// End time (s); phases are contiguous, each starts where the previous
    /// one (or `start`) ended.
    pub end: f64,
    /// Nominal time step (s); the last step of the phase is shortened.
    pub dt: f64,
    #[serde(default)]
    pub left: SideBc,
    #[serde(default)]
    pub right: SideBc,
    #[serde(default)]
    pub bottom: SideBc,
    #[serde(default)]
    pub top: SideBc,
}

impl PhaseSection {
    fn side(&self, s: BoxSide) -> &SideBc {
        match s {
            BoxSide::Left => &self.left,
            BoxSide::Right => &self.right,
            BoxSide::Bottom => &self.bottom,
            BoxSide::Top => &self.top,
        }
    }

    fn side_mut(&mut self, s: BoxSide) -> &mut SideBc {
        match s {
            BoxSide::Left => &mut self.left,
            BoxSide::Right => &mut self.right,
            BoxSide::Bottom => &mut self.bottom,
            BoxSide::Top => &mut self.top,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Default 1e-8.
    pub tolerance: Option<f64>,
    /// Default 50.
    pub max_newton: Option<usize>,
    /// Default 4.
    pub max_dt_cuts: Option<usize>,
    /// Convergence scaling of pressure; default: the largest prescribed
    /// boundary pressure across phases, or 1e6 Pa if none.
    pub pressure_scale: Option<f64>,
    /// Convergence scaling of temperature; default: the largest prescribed
    /// deviation from `t_ref` across phases, or 10 K if none.
    pub temperature_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Default "out".
    pub directory: Option<String>,
    /// Write VTK snapshots every `cadence` accepted steps; default 1.
    pub cadence: Option<usize>,
    /// File-name stem; default "run".
    pub name: Option<String>,
}

/// Parses, validates and normalizes a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut sc: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    sc.validate_raw()?;
    sc.normalize();
    sc.material_params()
        .validate()
        .map_err(|e| match e {
            ParamError::NotPositive(name) => {
                invalid(&format!("material.{name}"), "must be positive")
            }
            ParamError::BiotOutOfRange(v) => {
                invalid("material.biot_alpha", format!("{v} is outside [0, 1]"))
            }
        })?;
    Ok(sc)
}

impl Scenario {
    /// Structural checks on the raw (pre-normalization) document.
    fn validate_raw(&self) -> Result<(), ScenarioError> {
        if self.domain.max[0] <= self.domain.min[0] || self.domain.max[1] <= self.domain.min[1] {
            return Err(invalid("domain.max", "must exceed domain.min componentwise"));
        }
        if self.domain.resolution[0] < 1 || self.domain.resolution[1] < 1 {
            return Err(invalid("domain.resolution", "must be at least 1x1"));
        }
        if self.mesh.is_some() && !self.fractures.is_empty() {
            return Err(invalid(
                "mesh",
                "an external mesh and inline [[fracture]] segments are mutually exclusive",
            ));
        }
        let required: [(&str, &Option<f64>); 8] = [
            ("material.shear_modulus", &self.material.shear_modulus),
            ("material.lame_lambda", &self.material.lame_lambda),
            ("material.biot_alpha", &self.material.biot_alpha),
            ("material.porosity", &self.material.porosity),
            (
                "material.fluid_compressibility",
                &self.material.fluid_compressibility,
            ),
            ("material.permeability", &self.material.permeability),
            ("material.viscosity", &self.material.viscosity),
            ("material.friction", &self.material.friction),
        ];
        for (field, value) in required {
            if value.is_none() {
                return Err(invalid(field, "missing required field"));
            }
        }
        if self.phases.is_empty() {
            return Err(invalid("phase", "at least one phase is required"));
        }
        let mut t = self.start;
        for (i, ph) in self.phases.iter().enumerate() {
            if ph.end <= t {
                return Err(invalid(
                    &format!("phase[{i}].end"),
                    format!("{} does not lie after the phase start {}", ph.end, t),
                ));
            }
            if !(ph.dt > 0.0) {
                return Err(invalid(&format!("phase[{i}].dt"), "must be positive"));
            }
            t = ph.end;
        }
        if self.output.cadence == Some(0) {
            return Err(invalid("output.cadence", "must be at least 1"));
        }
        Ok(())
    }

    /// Fills every optional field with its default. Idempotent.
    fn normalize(&mut self) {
        let m = &mut self.material;
        let mu = m.shear_modulus.unwrap_or(0.0);
        let lam = m.lame_lambda.unwrap_or(0.0);
        m.bulk_modulus.get_or_insert(lam + 2.0 * mu / 3.0);
        m.beta_s.get_or_insert(3e-5);
        m.beta_f.get_or_insert(4e-4);
        m.rho_f.get_or_insert(1000.0);
        m.c_f.get_or_insert(4200.0);
        m.rho_c.get_or_insert(2.5e6);
        let cond = *m.conductivity.get_or_insert(2.0);
        m.conductivity_frac.get_or_insert(cond);
        m.t_ref.get_or_insert(293.15);
        m.kappa_j.get_or_insert(1e-6);
        m.theta_j.get_or_insert(10.0);
        m.a_residual.get_or_insert(1e-5);
        m.a_zero.get_or_insert(1e-4);
        m.contact_c.get_or_insert(0.0);

        let t_ref = self.material.t_ref.unwrap();
        let mut p_scale = 0.0f64;
        let mut t_scale = 0.0f64;
        for ph in &mut self.phases {
            for side in BoxSide::ALL {
                let bc = ph.side_mut(side);
                bc.mechanics
                    .get_or_insert(MechBcSpec::Traction { value: [0.0, 0.0] });
                bc.flow.get_or_insert(ScalarBcSpec::Neumann { value: 0.0 });
                bc.heat.get_or_insert(ScalarBcSpec::Neumann { value: 0.0 });
                if let Some(ScalarBcSpec::Dirichlet { value }) = bc.flow {
                    p_scale = p_scale.max(value.abs());
                }
                if let Some(ScalarBcSpec::Dirichlet { value }) = bc.heat {
                    t_scale = t_scale.max((value - t_ref).abs());
                }
            }
        }
        let s = &mut self.solver;
        s.tolerance.get_or_insert(1e-8);
        s.max_newton.get_or_insert(50);
        s.max_dt_cuts.get_or_insert(4);
        s.pressure_scale
            .get_or_insert(if p_scale > 0.0 { p_scale } else { 1e6 });
        s.temperature_scale
            .get_or_insert(if t_scale > 0.0 { t_scale } else { 10.0 });
        let o = &mut self.output;
        o.directory.get_or_insert_with(|| "out".to_string());
        o.cadence.get_or_insert(1);
        o.name.get_or_insert_with(|| "run".to_string());
    }

    /// The complete document with all defaults made explicit.
    pub fn normalized_dump(&self) -> String {
        toml::to_string_pretty(self).expect("normalized scenario serializes")
    }

    pub fn domain_box(&self) -> DomainBox<Real> {
        DomainBox::new(
            Vector2::new(self.domain.min[0], self.domain.min[1]),
            Vector2::new(self.domain.max[0], self.domain.max[1]),
        )
    }

    /// Builds the mixed-dimensional grid; `base_dir` anchors a relative
    /// mesh path.
    pub fn build_grid(&self, base_dir: &Path) -> Result<MixedDimGrid<Real>, ScenarioError> {
        if let Some(mesh) = &self.mesh {
            let path = base_dir.join(&mesh.path);
            let text = std::fs::read_to_string(&path).map_err(|e| IoError::new(&path, e))?;
            Ok(import_msh(&text, &mesh.fracture_tags)?)
        } else {
            let domain = self.domain_box();
            let segments = self
                .fractures
                .iter()
                .map(|f| {
                    Segment::new(
                        Vector2::new(f.a[0], f.a[1]),
                        Vector2::new(f.b[0], f.b[1]),
                    )
                })
                .collect();
            let net = FractureNetwork::new(domain, segments);
            Ok(build_structured(
                domain,
                (self.domain.resolution[0], self.domain.resolution[1]),
                &net,
            )?)
        }
    }

    /// Only valid on a normalized scenario.
    pub fn material_params(&self) -> MaterialParams<Real> {
        let m = &self.material;
        MaterialParams {
            shear_modulus: m.shear_modulus.unwrap(),
            lame_lambda: m.lame_lambda.unwrap(),
            biot_alpha: m.biot_alpha.unwrap(),
            bulk_modulus: m.bulk_modulus.unwrap(),
            beta_s: m.beta_s.unwrap(),
            beta_f: m.beta_f.unwrap(),
            porosity: m.porosity.unwrap(),
            fluid_compressibility: m.fluid_compressibility.unwrap(),
            permeability: m.permeability.unwrap(),
            viscosity: m.viscosity.unwrap(),
            rho_f: m.rho_f.unwrap(),
            c_f: m.c_f.unwrap(),
            rho_c: m.rho_c.unwrap(),
            conductivity: m.conductivity.unwrap(),
            conductivity_frac: m.conductivity_frac.unwrap(),
            t_ref: m.t_ref.unwrap(),
            friction: m.friction.unwrap(),
            kappa_j: m.kappa_j.unwrap(),
            theta_j: m.theta_j.unwrap(),
            a_residual: m.a_residual.unwrap(),
            a_zero: m.a_zero.unwrap(),
            contact_c: m.contact_c.unwrap(),
        }
    }

    /// Translates the per-side specifications into per-face conditions on
    /// the matrix boundary. Neumann values are densities and are weighted by
    /// the face length here.
    pub fn phases(&self, grid: &MixedDimGrid<Real>) -> Vec<Phase<Real>> {
        self.phases
            .iter()
            .map(|ph| {
                let mut bc = PhaseBc {
                    flow: ScalarBc::no_flow(&grid.matrix),
                    heat: ScalarBc::no_flow(&grid.matrix),
                    mech: MechBc::traction_free(&grid.matrix),
                };
                for f in grid.matrix.boundary_faces() {
                    let FaceTag::Boundary(side) = grid.matrix.face_tags[f] else {
                        continue;
                    };
                    let area = grid.matrix.face_normals[f].norm();
                    let spec = ph.side(side);
                    match spec.flow.unwrap() {
                        ScalarBcSpec::Dirichlet { value } => {
                            bc.flow.set(f, BcKind::Dirichlet, value)
                        }
                        ScalarBcSpec::Neumann { value } => {
                            bc.flow.set(f, BcKind::Neumann, value * area)
                        }
                    }
                    match spec.heat.unwrap() {
                        ScalarBcSpec::Dirichlet { value } => {
                            bc.heat.set(f, BcKind::Dirichlet, value)
                        }
                        ScalarBcSpec::Neumann { value } => {
                            bc.heat.set(f, BcKind::Neumann, value * area)
                        }
                    }
                    match spec.mechanics.unwrap() {
                        MechBcSpec::Displacement { value } => bc.mech.set(
                            f,
                            [BcKind::Dirichlet; 2],
                            Vector2::new(value[0], value[1]),
                        ),
                        MechBcSpec::Traction { value } => bc.mech.set(
                            f,
                            [BcKind::Neumann; 2],
                            Vector2::new(value[0] * area, value[1] * area),
                        ),
                    }
                }
                Phase {
                    name: ph.name.clone(),
                    t_end: ph.end,
                    dt: ph.dt,
                    bc,
                }
            })
            .collect()
    }

    pub fn solver_controls(&self, grid: &MixedDimGrid<Real>) -> SolverControls<Real> {
        let ext = self.domain_box().extent();
        let domain_size = ext.x.max(ext.y);
        let n = grid.matrix.num_cells();
        let mean_vol: f64 =
            grid.matrix.cell_volumes.iter().sum::<f64>() / n as f64;
        // a structured triangle of legs hx, hy has volume hx·hy/2
        let mesh_size = (2.0 * mean_vol).sqrt();
        SolverControls {
            tolerance: self.solver.tolerance.unwrap(),
            max_newton: self.solver.max_newton.unwrap(),
            dt: self.phases[0].dt,
            max_dt_cuts: self.solver.max_dt_cuts.unwrap(),
            scales: VarScales::derive(
                &self.material_params(),
                domain_size,
                mesh_size,
                self.solver.pressure_scale.unwrap(),
                self.solver.temperature_scale.unwrap(),
            ),
        }
    }

    /// Zero displacement and pressure, reference temperature everywhere.
    pub fn initial_state(&self, grid: &MixedDimGrid<Real>) -> State<Real> {
        let t0 = self.material.t_ref.unwrap();
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
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[domain]
min = [0.0, 0.0]
max = [1.0, 1.0]
resolution = [4, 4]

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
dt = 0.5
"#;

    #[test]
    fn minimal_document_fills_defaults() {
        let sc = parse_scenario(MINIMAL).unwrap();
        assert_eq!(sc.start, 0.0);
        assert_eq!(sc.solver.tolerance, Some(1e-8));
        assert_eq!(sc.solver.max_newton, Some(50));
        assert_eq!(sc.solver.max_dt_cuts, Some(4));
        assert_eq!(sc.output.cadence, Some(1));
        assert_eq!(sc.output.directory.as_deref(), Some("out"));
        let m = &sc.material;
        assert_eq!(m.bulk_modulus, Some(16e9 + 2.0 * 16e9 / 3.0));
        assert_eq!(m.conductivity_frac, m.conductivity);
        assert_eq!(m.contact_c, Some(0.0));
        // no prescribed boundary values: fall back to the generic scales
        assert_eq!(sc.solver.pressure_scale, Some(1e6));
        assert_eq!(sc.solver.temperature_scale, Some(10.0));
        // the echoed dump spells the defaults out
        let dump = sc.normalized_dump();
        assert!(dump.contains("tolerance = 0.00000001"), "{dump}");
        assert!(dump.contains("kappa_j"), "{dump}");
        let side = &sc.phases[0].left;
        assert_eq!(side.flow, Some(ScalarBcSpec::Neumann { value: 0.0 }));
        assert_eq!(
            side.mechanics,
            Some(MechBcSpec::Traction { value: [0.0, 0.0] })
        );
    }

    #[test]
    fn missing_friction_names_the_field() {
        let doc = MINIMAL.replace("friction = 0.5\n", "");
        match parse_scenario(&doc) {
            Err(ScenarioError::Validation { field, .. }) => {
                assert_eq!(field, "material.friction")
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn negative_permeability_is_rejected() {
        let doc = MINIMAL.replace("permeability = 1e-14", "permeability = -1e-14");
        match parse_scenario(&doc) {
            Err(ScenarioError::Validation { field, .. }) => {
                assert_eq!(field, "material.permeability")
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn non_increasing_phases_are_rejected() {
        let doc = format!(
            "{MINIMAL}\n[[phase]]\nname = \"backwards\"\nend = 0.5\ndt = 0.1\n"
        );
        match parse_scenario(&doc) {
            Err(ScenarioError::Validation { field, .. }) => {
                assert_eq!(field, "phase[1].end")
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_scenario("[domain\n").unwrap_err();
        match err {
            ScenarioError::Parse(msg) => assert!(msg.contains("line 1"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn mesh_and_inline_fractures_are_exclusive() {
        let doc = format!(
            "{MINIMAL}\n[mesh]\npath = \"m.msh\"\nfracture_tags = [7]\n\n[[fracture]]\na = [0.2, 0.5]\nb = [0.8, 0.5]\n"
        );
        assert!(matches!(
            parse_scenario(&doc),
            Err(ScenarioError::Validation { .. })
        ));
    }

    const RICH: &str = r#"
start = -100.0

[domain]
min = [0.0, 0.0]
max = [2.0, 1.0]
resolution = [8, 4]

[[fracture]]
a = [0.5, 0.5]
b = [1.5, 0.5]

[material]
shear_modulus = 16e9
lame_lambda = 16e9
biot_alpha = 0.8
porosity = 0.01
fluid_compressibility = 4e-10
permeability = 1e-14
viscosity = 1e-3
friction = 0.5
t_ref = 300.0

[[phase]]
name = "load"
end = 0.0
dt = 50.0
[phase.top.mechanics]
type = "displacement"
value = [0.002, -0.005]
[phase.bottom.mechanics]
type = "displacement"
value = [0.0, 0.0]

[[phase]]
name = "inject"
end = 1.0
dt = 0.25
[phase.left.flow]
type = "dirichlet"
value = 2e6
[phase.left.heat]
type = "dirichlet"
value = 250.0

[output]
directory = "results"
name = "demo"
"#;

    #[test]
    fn round_trip_is_stable() {
        let first = parse_scenario(RICH).unwrap();
        let second = parse_scenario(&first.normalized_dump()).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn scales_derive_from_phase_schedule() {
        let sc = parse_scenario(RICH).unwrap();
        assert_eq!(sc.solver.pressure_scale, Some(2e6));
        assert_eq!(sc.solver.temperature_scale, Some(50.0));
    }

    #[test]
    fn phase_bcs_land_on_the_right_faces() {
        let sc = parse_scenario(RICH).unwrap();
        let grid = sc.build_grid(Path::new(".")).unwrap();
        let phases = sc.phases(&grid);
        assert_eq!(phases.len(), 2);
        assert_eq!(phases[0].t_end, 0.0);
        let inject = &phases[1];
        for f in grid.matrix.boundary_faces() {
            let FaceTag::Boundary(side) = grid.matrix.face_tags[f] else {
                continue;
            };
            match side {
                BoxSide::Left => {
                    assert_eq!(inject.bc.flow.kind[f], BcKind::Dirichlet);
                    assert_eq!(inject.bc.flow.value[f], 2e6);
                    assert_eq!(inject.bc.heat.kind[f], BcKind::Dirichlet);
                }
                _ => {
                    assert_eq!(inject.bc.flow.kind[f], BcKind::Neumann);
                    assert_eq!(inject.bc.flow.value[f], 0.0);
                }
            }
        }
        let state = sc.initial_state(&grid);
        assert_eq!(state.vec[state.layout.matrix_t(0)], 300.0);
        let controls = sc.solver_controls(&grid);
        assert!(controls.validate());
    }
}
