//! Cell-centred finite-volume operators: multi-point flux approximation
//! (MPFA) for diffusion, a multi-point stress approximation (MPSA) with
//! poro-thermo-mechanical coupling for momentum, two-point differences on
//! 1D grids, and first-order upwinding for advection. Operators are
//! assembled once per geometry change and then applied as sparse maps.

mod bc;
mod mpfa;
mod mpsa;
mod upwind;

pub use bc::{BcKind, MechBc, ScalarBc};
pub use mpfa::{mpfa_discretize, ScalarDiscretization};
pub use mpsa::{mpsa_biot_discretize, MechCoefficients, VectorDiscretization};
pub use upwind::{upwind_discretize, UpwindMap};

use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Error)]
pub enum FvmError {
    #[error("interaction region at node {node} is numerically singular (cond {cond:.3e})")]
    SingularLocalSystem { node: usize, cond: f64 },
    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

pub(crate) fn map_local_error(node: usize, err: LinalgError) -> FvmError {
    let cond = match err {
        LinalgError::SingularLocalSystem { cond } => cond,
        _ => f64::INFINITY,
    };
    FvmError::SingularLocalSystem { node, cond }
}

pub(crate) fn check_len<T>(what: &'static str, slice: &[T], expected: usize) -> Result<(), FvmError> {
    if slice.len() != expected {
        return Err(FvmError::ShapeMismatch {
            what,
            expected,
            got: slice.len(),
        });
    }
    Ok(())
}
