//! `thmfrac` is a two-dimensional mixed-dimensional finite-volume simulator
//! for coupled thermo-hydro-mechanical processes in porous media with
//! explicit fractures. The rock matrix is a 2D subdomain, fractures are 1D
//! subdomains whose cells coincide with (duplicated) matrix faces, and
//! fracture intersections are 0D subdomains; matrix and fractures exchange
//! fluid, heat and momentum across two-sided interfaces. Fracture
//! deformation is governed by Coulomb friction and solved with a semismooth
//! Newton active-set method inside a fully implicit time loop.
//!
//! Module map:
//! - [`mdgrid`]: mixed-dimensional geometry (meshing, fracture splitting,
//!   interfaces with projection operators, MSH import)
//! - [`fvm`]: cell-centred discretisation operators (MPFA, MPSA with
//!   poro-thermo-mechanical coupling, two-point 1D operators, upwinding,
//!   face reconstruction)
//! - [`physics`]: residual/Jacobian assembly of the governing equations and
//!   aperture bookkeeping
//! - [`contact`]: friction bound, active-set classification, contact
//!   constraint rows and the interface traction balance
//! - [`solver`]: degrees of freedom, the global block system, the Newton
//!   loop and the time loop
//! - [`io`]: scenario files, VTK snapshots, fracture time series
//! - [`verify`]: built-in verification suites (patch tests, analytic
//!   benchmarks, contact KKT checks)

pub mod app;
pub mod contact;
pub mod fvm;
pub mod io;
pub mod linalg;
pub mod mdgrid;
pub mod physics;
pub mod scalar;
pub mod solver;
pub mod verify;

pub use scalar::{lit, Scalar};

/// Default scalar type of the shipped simulator and CLI.
pub type Real = f64;

pub type MixedDimGrid = mdgrid::MixedDimGrid<Real>;
pub type State = physics::State<Real>;
pub type MaterialParams = physics::MaterialParams<Real>;
